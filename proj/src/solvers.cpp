#include "rbsgd/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "rbsgd/barrier.hpp"

namespace rbsgd {
namespace {

using Clock = std::chrono::steady_clock;

double distance_or_nan(const Vector& x, const Vector& anchor) {
  if (anchor.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  return (x - anchor).norm();
}

void check_iterate(const Vector& x, std::uint64_t k) {
  const double norm = x.norm();
  if (!std::isfinite(norm)) throw SolverError(fmt::format("non-finite iterate at k = {}", k), k);
  if (norm > kDivergenceNorm) throw SolverError(fmt::format("divergence: ||x|| = {:.3e} at k = {}", norm, k), k);
}

// Shared loop for all three algorithms. `advance(x, k)` applies update k
// (schedules indexed from 1) in place.
template <class Advance>
Trajectory drive(const Problem& p, const RunOptions& opt, const Anchors& anchors, Advance&& advance) {
  if (opt.stop.mode == StopMode::tolerance && anchors.x_ref.size() == 0)
    throw std::invalid_argument("tolerance stop rule needs a reference point");
  if (opt.stop.stride == 0) throw std::invalid_argument("stop-rule stride must be >= 1");

  Trajectory traj;
  traj.run_id = opt.run_id;
  Vector x = opt.x0 ? *opt.x0 : Vector::Zero(p.dim());
  if (x.size() != p.dim()) throw std::invalid_argument("x0 dimension mismatch");

  const auto start = Clock::now();
  std::int64_t paused_ns = 0;
  auto record = [&](std::uint64_t k) {
    // Telemetry is excluded from the reported wall time.
    const auto t0 = Clock::now();
    RunRecord r;
    r.k = k;
    r.err_to_xstar = distance_or_nan(x, anchors.x_star);
    r.err_to_xc = distance_or_nan(x, anchors.x_ref);
    r.max_violation = max_violation(p, x);
    r.objective = objective_value(p, x);
    if (opt.wall_clock) {
      r.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(t0 - start).count() - paused_ns;
    }
    traj.records.push_back(r);
    if (opt.keep_snapshots) traj.snapshots.push_back(x);
    paused_ns += std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count();
  };
  auto reached = [&](std::uint64_t k) {
    if (anchors.x_ref.size() == 0 || k % opt.stop.stride != 0) return false;
    if ((x - anchors.x_ref).norm() > opt.stop.tol) return false;
    if (!traj.k_tau) traj.k_tau = k;
    return true;
  };

  record(0);
  std::uint64_t k = 0;
  bool halted = reached(0) && opt.stop.mode == StopMode::tolerance;
  while (!halted && k < opt.budget) {
    advance(x, k + 1);
    ++k;
    check_iterate(x, k);
    halted = reached(k) && opt.stop.mode == StopMode::tolerance;
    if (!halted && k < opt.budget && opt.record.contains(k)) record(k);
  }
  if (k > 0) record(k);
  traj.reason = halted ? Termination::tolerance : Termination::budget;
  traj.k_final = k;
  traj.x_final = std::move(x);
  return traj;
}

}  // namespace

RecordGrid RecordGrid::At(std::vector<std::uint64_t> ks) {
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  return {Kind::list, 1, std::move(ks)};
}

bool RecordGrid::contains(std::uint64_t k) const {
  if (k == 0) return true;
  switch (kind) {
    case Kind::geometric:
      return (k & (k - 1)) == 0;
    case Kind::stride:
      return every > 0 && k % every == 0;
    case Kind::endpoints:
      return false;
    case Kind::list:
      return std::binary_search(points.begin(), points.end(), k);
  }
  return false;
}

const char* to_string(Termination t) { return t == Termination::budget ? "budget" : "tolerance"; }

ScheduleRejected::ScheduleRejected(ValidityReport report)
    : std::invalid_argument("schedules rejected: " + report.describe() + " (use force to override)"),
      report_(report) {}

void sgd_step(SolverState& state, const Problem& p, const Schedules& s, const Batch& batch) {
  const auto& normals = p.constraints.normals;
  const auto& offsets = p.constraints.offsets;
  const auto n = static_cast<std::uint64_t>(p.components());
  const auto m = static_cast<std::uint64_t>(p.constraint_count());
  const double gamma = s.gamma(state.k);
  const double delta = s.barrier.delta(state.k);

  Vector direction = Vector::Zero(p.dim());
  if (batch.objective == 1 && batch.constraints == 1) {
    const auto i = static_cast<Index>(state.rng.Below(n));
    const auto j = static_cast<Index>(state.rng.Below(m));
    accumulate_grad_component(p, i, state.x, 1.0, direction);
    const double slope = barrier_slope(normals.row(j).dot(state.x) + offsets[j], delta);
    direction += slope * normals.row(j).transpose();
  } else {
    if (batch.objective < 1 || batch.constraints < 1) throw std::invalid_argument("batch sizes must be >= 1");
    const double wi = 1.0 / static_cast<double>(batch.objective);
    for (Index b = 0; b < batch.objective; ++b) {
      accumulate_grad_component(p, static_cast<Index>(state.rng.Below(n)), state.x, wi, direction);
    }
    const double wj = 1.0 / static_cast<double>(batch.constraints);
    for (Index b = 0; b < batch.constraints; ++b) {
      const auto j = static_cast<Index>(state.rng.Below(m));
      const double slope = barrier_slope(normals.row(j).dot(state.x) + offsets[j], delta);
      direction += (wj * slope) * normals.row(j).transpose();
    }
  }
  if (!direction.allFinite()) throw SolverError(fmt::format("non-finite gradient at k = {}", state.k), state.k);
  state.x.noalias() -= gamma * direction;
  ++state.k;
}

Vector mean_barrier_gradient(const Problem& p, const Vector& x, double delta) {
  const auto& normals = p.constraints.normals;
  const auto& offsets = p.constraints.offsets;
  // One pass over the rows: each a_j is read once for g_j and once, from cache, for the sum.
  Vector sum = Vector::Zero(p.dim());
  for (Index j = 0; j < normals.rows(); ++j) {
    const auto row = normals.row(j);
    sum.noalias() += barrier_slope(row.dot(x) + offsets[j], delta) * row.transpose();
  }
  return sum / static_cast<double>(p.constraint_count());
}

Vector barrier_problem_gradient(const Problem& p, const Vector& x, double delta) {
  Vector grad = objective_gradient(p, x);
  grad += mean_barrier_gradient(p, x, delta);
  return grad;
}

void gd_step(Vector& x, const Problem& p, double gamma, double delta) {
  const Vector direction = barrier_problem_gradient(p, x, delta);
  if (!direction.allFinite()) throw SolverError("non-finite gradient", 0);
  x.noalias() -= gamma * direction;
}

Trajectory run_sgd(const Problem& p, const SgdConfig& config, const RunOptions& options, const Anchors& anchors) {
  config.schedules.barrier.validate();
  const ValidityReport report = validate(config.schedules.gamma, config.schedules.barrier.epsilon);
  if (!report.valid() && !config.force) throw ScheduleRejected(report);

  SolverState state;
  state.rng = Philox(config.seed, options.run_id);
  return drive(p, options, anchors, [&](Vector& x, std::uint64_t k) {
    state.x.swap(x);
    state.k = k;
    sgd_step(state, p, config.schedules, config.batch);
    state.x.swap(x);
  });
}

Trajectory run_gd(const Problem& p, double gamma, const BarrierSchedule& barrier, const RunOptions& options,
                  const Anchors& anchors) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gradient descent needs gamma > 0");
  barrier.validate();
  return drive(p, options, anchors, [&](Vector& x, std::uint64_t k) {
    try {
      gd_step(x, p, gamma, barrier.delta(k));
    } catch (const SolverError&) {
      throw SolverError(fmt::format("non-finite gradient at k = {}", k), k);
    }
  });
}

Vector dykstra_project(const Vector& x, const AffineConstraintSet& c, double tol, std::size_t max_sweeps) {
  if (x.size() != c.dim()) throw std::invalid_argument("projection: dimension mismatch");
  if (!(tol > 0.0)) throw std::invalid_argument("projection tolerance must be positive");
  if (max_violation(c, x) <= 0.0) return x;

  const Index m = c.count();
  const Vector row_norm2 = c.normals.rowwise().squaredNorm();
  // Dykstra increments for halfspaces are multiples of the normals: p_j = lambda_j a_j.
  Vector lambda = Vector::Zero(m);
  Vector y = x;
  Vector previous = x;
  Vector best = x;
  double best_violation = std::numeric_limits<double>::infinity();
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    for (Index j = 0; j < m; ++j) {
      const auto a = c.normals.row(j).transpose();
      if (lambda[j] != 0.0) y += lambda[j] * a;
      const double g = a.dot(y) + c.offsets[j];
      if (g > 0.0) {
        lambda[j] = g / row_norm2[j];
        y -= lambda[j] * a;
      } else {
        lambda[j] = 0.0;
      }
    }
    const double violation = max_violation(c, y);
    if (violation < best_violation) {
      best_violation = violation;
      best = y;
    }
    const double change = (y - previous).norm();
    if (violation <= tol && change <= tol) return y;
    previous = y;
  }
  throw ProjectionError(fmt::format("Dykstra projection did not reach tol {:.3e} in {} sweeps (violation {:.3e})", tol,
                                    max_sweeps, best_violation),
                        std::move(best), best_violation);
}

Trajectory run_pgd(const Problem& p, double gamma, const ProjectionOptions& projection, const RunOptions& options,
                   const Anchors& anchors) {
  if (!(gamma > 0.0)) throw std::invalid_argument("projected gradient descent needs gamma > 0");
  RunOptions opt = options;
  if (opt.x0) opt.x0 = dykstra_project(*opt.x0, p.constraints, projection.tol, projection.max_sweeps);
  return drive(p, opt, anchors, [&](Vector& x, std::uint64_t) {
    Vector trial = x - gamma * objective_gradient(p, x);
    x = dykstra_project(trial, p.constraints, projection.tol, projection.max_sweeps);
  });
}

}  // namespace rbsgd
