#include <iostream>

#include "clear/cli/app.hpp"

int main(int argc, char** argv) { return clear::run_cli(argc, argv, std::cout, std::cerr); }
