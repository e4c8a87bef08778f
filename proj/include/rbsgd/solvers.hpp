#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rbsgd/problem.hpp"
#include "rbsgd/random.hpp"
#include "rbsgd/schedules.hpp"

namespace rbsgd {

struct Schedules {
  Sequence gamma = PowerLawSchedule{0.3, 0.8};
  BarrierSchedule barrier{1e-6, PowerLawSchedule{5.0, 0.3}};
};

enum class StopMode { budget, tolerance };

/// Budget always applies. In tolerance mode the run also halts at the first
/// checked k with ||x_k - x_ref|| <= tol; the check runs every `stride` steps.
struct StopRule {
  StopMode mode = StopMode::budget;
  double tol = 0.01;
  std::uint64_t stride = 1;
};

/// Which completed-iteration counts are recorded. k = 0 (the initial point)
/// and the terminal iterate are always recorded.
struct RecordGrid {
  enum class Kind { geometric, stride, endpoints, list };
  Kind kind = Kind::geometric;
  std::uint64_t every = 1;
  std::vector<std::uint64_t> points;  // sorted, for Kind::list

  static RecordGrid Geometric() { return {}; }
  static RecordGrid Every(std::uint64_t stride) { return {Kind::stride, stride, {}}; }
  static RecordGrid Endpoints() { return {Kind::endpoints, 1, {}}; }
  static RecordGrid At(std::vector<std::uint64_t> ks);

  bool contains(std::uint64_t k) const;
};

struct RunRecord {
  std::uint64_t k = 0;  // iterations completed
  double err_to_xstar = 0.0;
  double err_to_xc = 0.0;
  double max_violation = 0.0;
  double objective = 0.0;  // f(x_k)
  std::int64_t wall_ns = 0;
};

enum class Termination { budget, tolerance };

const char* to_string(Termination t);

struct Trajectory {
  std::uint64_t run_id = 0;
  std::vector<RunRecord> records;
  std::vector<Vector> snapshots;  // aligned with records when requested
  Termination reason = Termination::budget;
  std::uint64_t k_final = 0;
  /// First checked k with ||x_k - x_ref|| <= tol, tracked in both stop modes.
  std::optional<std::uint64_t> k_tau;
  Vector x_final;
};

/// Reference points for error telemetry. Empty vectors are absent; errors
/// against an absent anchor are recorded as NaN.
struct Anchors {
  Vector x_star;  // x*(delta_inf)
  Vector x_ref;   // constrained-optimum proxy, drives the tolerance rule
};

struct RunOptions {
  std::uint64_t budget = 0;
  StopRule stop;
  RecordGrid record;
  std::optional<Vector> x0;  // origin by default
  bool wall_clock = true;    // false writes wall_ns = 0 for byte-stable output
  bool keep_snapshots = false;
  std::uint64_t run_id = 0;
};

struct Batch {
  Index objective = 1;
  Index constraints = 1;
};

struct SgdConfig {
  Schedules schedules;
  Batch batch;
  std::uint64_t seed = 0;  // with run_id, selects the Philox stream
  bool force = false;      // run even if the schedules fail validation
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, std::uint64_t k) : std::runtime_error(what), k_(k) {}
  std::uint64_t k() const { return k_; }

 private:
  std::uint64_t k_;
};

class ScheduleRejected : public std::invalid_argument {
 public:
  explicit ScheduleRejected(ValidityReport report);
  const ValidityReport& report() const { return report_; }

 private:
  ValidityReport report_;
};

class ProjectionError : public std::runtime_error {
 public:
  ProjectionError(const std::string& what, Vector best, double violation)
      : std::runtime_error(what), best_(std::move(best)), violation_(violation) {}
  const Vector& best() const { return best_; }
  double violation() const { return violation_; }

 private:
  Vector best_;
  double violation_;
};

inline constexpr double kDivergenceNorm = 1e12;

struct SolverState {
  Vector x;
  std::uint64_t k = 1;  // index of the next update
  Philox rng{0, 0};
};

/// x_{k+1} = x_k - gamma_k (grad f_i(x_k) + a_j B'(g_j(x_k), delta_k)) with
/// i ~ U{0..n-1}, j ~ U{0..m-1} drawn in that order. With a batch the two
/// terms are replaced by averages of independent draws (with replacement).
void sgd_step(SolverState& state, const Problem& p, const Schedules& s, const Batch& batch = {});

/// (1/m) sum_j a_j B'(g_j(x), delta), as one matrix-vector product.
Vector mean_barrier_gradient(const Problem& p, const Vector& x, double delta);

/// Full gradient of f(x) + (1/m) sum_j B(g_j(x), delta).
Vector barrier_problem_gradient(const Problem& p, const Vector& x, double delta);

/// x - gamma * barrier_problem_gradient(x, delta_k), then k += 1.
void gd_step(Vector& x, const Problem& p, double gamma, double delta);

Trajectory run_sgd(const Problem& p, const SgdConfig& config, const RunOptions& options,
                   const Anchors& anchors = {});

/// Deterministic full-gradient descent with constant step on the adapted
/// barrier problem. Aborts when ||x|| exceeds 1e12.
Trajectory run_gd(const Problem& p, double gamma, const BarrierSchedule& barrier, const RunOptions& options,
                  const Anchors& anchors = {});

struct ProjectionOptions {
  double tol = 1e-9;
  std::size_t max_sweeps = 100'000;
};

/// Euclidean projection onto {x : a_j^T x + b_j <= 0 for all j} by Dykstra's
/// cyclic halfspace projections. Returns `x` unchanged if it is feasible.
/// Stops after a sweep with max violation <= tol that moved the iterate by at
/// most tol. Throws ProjectionError with the best
/// iterate when `max_sweeps` runs out.
Vector dykstra_project(const Vector& x, const AffineConstraintSet& c, double tol, std::size_t max_sweeps);

/// x_{k+1} = project(x_k - gamma grad f(x_k)).
Trajectory run_pgd(const Problem& p, double gamma, const ProjectionOptions& projection, const RunOptions& options,
                   const Anchors& anchors = {});

}  // namespace rbsgd
