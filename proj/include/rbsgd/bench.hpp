#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rbsgd/problem.hpp"
#include "rbsgd/solvers.hpp"

namespace rbsgd {

struct EnsembleConfig {
  SgdConfig sgd;        // sgd.seed is the master seed; run r uses stream r
  RunOptions run;       // run_id is ignored; the stop mode is forced to budget
  std::size_t runs = 1;
  unsigned workers = 0;  // 0 selects std::thread::hardware_concurrency
  bool keep_trajectories = false;
};

struct EnsembleStats {
  std::vector<std::uint64_t> k;
  std::vector<double> mean_err;  // of ||x_k - x*(delta_inf)||
  std::vector<double> std_err;   // sample standard deviation, 0 for one run
  std::vector<double> mean_violation;
  std::size_t runs = 0;
  std::uint64_t config_hash = 0;
  /// Per run, the first checked k within tol of the reference (if any).
  std::vector<std::optional<std::uint64_t>> k_tau;
  std::vector<Trajectory> trajectories;  // filled when keep_trajectories

  std::size_t reached_tolerance() const;
  /// Mean error at exactly iteration k; throws if k is not on the grid.
  double mean_err_at(std::uint64_t k) const;
};

class EnsembleError : public std::runtime_error {
 public:
  EnsembleError(const std::string& what, std::uint64_t run_id) : std::runtime_error(what), run_id_(run_id) {}
  std::uint64_t run_id() const { return run_id_; }

 private:
  std::uint64_t run_id_;
};

/// FNV-1a over a canonical text rendering of the configuration.
std::uint64_t config_hash(const EnsembleConfig& config);

/// Runs `runs` SGD trajectories in parallel and aggregates them in run order,
/// so the result does not depend on the worker count. Anchors: x_star drives
/// the error statistics, x_ref (optional) the per-run k_tau.
EnsembleStats run_ensemble(const Problem& p, const EnsembleConfig& config, const Anchors& anchors);

enum class Algorithm { sgd, gd, pgd };

const char* to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& name);

struct TimingRecord {
  std::string algorithm;
  Index m = 0;
  std::uint64_t seed = 0;
  std::uint64_t k_tau = 0;  // stop iteration; equals the budget when unconverged
  double wall_seconds = 0.0;
  bool converged = false;
};

struct TimingConfig {
  SgdConfig sgd;
  double gd_gamma = 1e-2;
  double pgd_gamma = 1e-2;
  ProjectionOptions projection;
  double tol = 0.01;
  std::uint64_t stride = 1;
  std::uint64_t sgd_budget = 1'000'000;
  std::uint64_t gd_budget = 100'000;
  std::uint64_t pgd_budget = 100'000;
  std::uint64_t warmup_iterations = 100;  // discarded run before each measurement
};

/// Single-threaded wall time until ||x_k - x_ref|| <= tol. GD uses the SGD
/// barrier schedule. Stop-rule checks count towards the time; recording does not.
TimingRecord time_to_tolerance(const Problem& p, Algorithm algorithm, const TimingConfig& config, const Vector& x_ref);

struct SweepConfig {
  GeneratorSpec base;  // m and seed are overridden per cell
  std::vector<Index> m_list;
  std::vector<std::uint64_t> seeds;
  std::vector<Algorithm> algorithms;
  TimingConfig timing;
  double reference_delta = 1e-9;
  double reference_grad_tol = 1e-10;
};

/// For every (m, seed): generate the problem, solve the reference point, and
/// time every algorithm on it. Rows are ordered m, then seed, then algorithm.
std::vector<TimingRecord> sweep_constraints(const SweepConfig& config);

}  // namespace rbsgd
