#pragma once

#include <string>
#include <vector>

#include "clear/data/mixture.hpp"
#include "clear/losses/config.hpp"

namespace clear {

enum class SimDirection { max, min };

SimDirection parse_direction(const std::string& s);
std::string to_string(SimDirection d);

/// {1, 1.3, ..., 4}: eleven standard deviations.
std::vector<double> default_sigma_schedule();

struct SimulationOptions {
  SimDirection direction = SimDirection::max;
  GaussianMixtureSpec mixture;        // sigma and seed are overwritten per step
  std::vector<double> sigmas;         // empty: default schedule, traversed per direction
  int steps_per_level = 100;
  int k = 3;
  Metric metric = Metric::l2;
  double tau = 1.0;
  std::uint64_t seed = 0;
};

struct SimulationRow {
  int step = 0;
  int level = 0;
  double sigma = 0;
  double loss = 0;  // SNN for max, PS-SNN for min
  double mi = 0;    // clipped KNN estimate
  bool level_start = false;
};

struct SimulationTrace {
  SimDirection direction = SimDirection::max;
  std::vector<SimulationRow> rows;

  /// step,level,sigma,loss,mi,level_start
  std::string to_csv() const;
  /// Spearman correlation of step against MI.
  double trend() const;
};

/// Fresh mixture sample every step. max runs the schedule from the largest sigma down,
/// min from the smallest up, unless `sigmas` is given explicitly (then used as is).
SimulationTrace run_mi_simulation(const SimulationOptions& opt);

}  // namespace clear
