#include "clear/training/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "clear/errors.hpp"
#include "clear/losses/losses.hpp"
#include "clear/mi/mi.hpp"
#include "clear/training/metrics.hpp"

namespace clear {

SimDirection parse_direction(const std::string& s) {
  if (s == "max") return SimDirection::max;
  if (s == "min") return SimDirection::min;
  throw ContractViolation("unknown simulation direction '" + s + "' (expected max or min)");
}

std::string to_string(SimDirection d) { return d == SimDirection::max ? "max" : "min"; }

std::vector<double> default_sigma_schedule() {
  std::vector<double> s;
  for (int i = 0; i <= 10; ++i) s.push_back(1.0 + 0.3 * i);
  return s;
}

std::string SimulationTrace::to_csv() const {
  std::ostringstream os;
  os << "step,level,sigma,loss,mi,level_start\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g,%.17g,%d\n", r.step, r.level, r.sigma, r.loss, r.mi,
                  r.level_start ? 1 : 0);
    os << buf;
  }
  return os.str();
}

double SimulationTrace::trend() const {
  std::vector<double> steps, mi;
  for (const auto& r : rows) {
    steps.push_back(r.step);
    mi.push_back(r.mi);
  }
  return spearman(steps, mi);
}

SimulationTrace run_mi_simulation(const SimulationOptions& opt) {
  CLEAR_REQUIRE(opt.steps_per_level >= 1, "simulation: steps per level must be >= 1");
  std::vector<double> sigmas = opt.sigmas;
  if (sigmas.empty()) {
    sigmas = default_sigma_schedule();
    if (opt.direction == SimDirection::max) std::reverse(sigmas.begin(), sigmas.end());
  }
  SimulationTrace trace;
  trace.direction = opt.direction;
  GaussianMixtureSpec spec = opt.mixture;
  int step = 0;
  for (std::size_t level = 0; level < sigmas.size(); ++level) {
    spec.sigma = sigmas[level];
    for (int s = 0; s < opt.steps_per_level; ++s, ++step) {
      spec.seed = Rng(opt.seed, static_cast<std::uint64_t>(step) + 1).next_u64();
      const MixtureSample sample = sample_gaussian_mixture(spec);
      // distribution metrics see each point as N(z, sigma^2 I)
      const Tensor z = Tensor::constant(sample.points);
      const LatentView view{z, z, Tensor::constant(Matrix::Constant(z.rows(), z.cols(), 2 * std::log(spec.sigma)))};
      const Tensor loss = opt.direction == SimDirection::max
                              ? snn_loss(view, sample.labels, opt.tau, opt.metric)
                              : ps_snn_loss(view, sample.labels, opt.tau, opt.metric);
      SimulationRow row;
      row.step = step;
      row.level = static_cast<int>(level);
      row.sigma = spec.sigma;
      row.loss = loss.item();
      row.mi = knn_mi(sample.points, sample.labels, opt.k).value;
      row.level_start = s == 0;
      trace.rows.push_back(row);
    }
  }
  return trace;
}

}  // namespace clear
