#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace clear {

/// Caller broke a documented precondition (shape mismatch, bad argument, ...).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A NaN or Inf appeared during a forward or backward pass.
class NumericFault : public std::runtime_error {
 public:
  NumericFault(std::string op, const std::string& detail)
      : std::runtime_error("numeric fault in '" + op + "': " + detail), op_(std::move(op)) {}

  const std::string& op() const noexcept { return op_; }

 private:
  std::string op_;
};

/// Malformed binary input; carries the byte offset where parsing stopped.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

#define CLEAR_REQUIRE(cond, msg)                 \
  do {                                           \
    if (!(cond)) throw ::clear::ContractViolation(msg); \
  } while (0)

}  // namespace clear
