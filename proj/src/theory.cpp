#include "rbsgd/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include <fmt/format.h>

#include "rbsgd/barrier.hpp"
#include "rbsgd/central.hpp"
#include "rbsgd/random.hpp"

namespace rbsgd {
namespace {

// Component gradients stacked as rows (n x d).
RowMatrix component_gradients(const Problem& p, const Vector& x) {
  RowMatrix g(p.components(), p.dim());
  for (Index i = 0; i < p.components(); ++i) g.row(i) = grad_component(p, i, x).transpose();
  return g;
}

// Mean over all (i, j) of ||grad f_i(x) + a_j B'(g_j(x), delta)||^2. Each pair
// norm is expanded as ||g_i||^2 + 2 s_j a_j^T g_i + s_j^2 ||a_j||^2, with the
// cross terms taken from one m x n product.
double pair_gradient_sq_mean(const Problem& p, const Vector& x, double delta) {
  const auto& A = p.constraints.normals;
  const RowMatrix grads = component_gradients(p, x);
  const Eigen::MatrixXd cross = A * grads.transpose();
  const Vector values = constraint_values(p, x);
  const Vector row_norm2 = A.rowwise().squaredNorm();
  const Vector grad_norm2 = grads.rowwise().squaredNorm();
  double total = 0.0;
  for (Index j = 0; j < A.rows(); ++j) {
    const double s = barrier_slope(values[j], delta);
    double row = 0.0;
    for (Index i = 0; i < grads.rows(); ++i) row += grad_norm2[i] + 2.0 * s * cross(j, i) + s * s * row_norm2[j];
    total += row;
  }
  return total / (static_cast<double>(A.rows()) * static_cast<double>(grads.rows()));
}

void require_matching_delta(const TheoryConstants& c, const BarrierSchedule& b) {
  if (b.delta_inf != c.delta_inf)
    throw std::invalid_argument(
        fmt::format("schedule delta_inf {} differs from the constants' delta_inf {}", b.delta_inf, c.delta_inf));
}

struct Gap {
  double eps;
  double delta_k;
};

Gap gap_at(const TheoryConstants& c, const BarrierSchedule& b, std::uint64_t k) {
  require_matching_delta(c, b);
  return {b.gap(k), b.delta(k)};
}

// |B'(z, delta_inf) - B'(z, delta_k)|, straight from the definition of C.
double gap_slope(double z, double delta_k, double delta_inf) {
  return std::abs(barrier_slope(z, delta_inf) - barrier_slope(z, delta_k));
}

// Calls body(t) for t in [0, count) on a fixed pool; each t writes its own slot.
template <class Body>
void parallel_for(std::size_t count, unsigned workers, Body&& body) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(count, 1)));
  if (workers <= 1) {
    for (std::size_t t = 0; t < count; ++t) body(t);
    return;
  }
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&, w]() {
      for (std::size_t t = w; t < count; t += workers) body(t);
    });
}

Vector sample_in_ball(Philox& rng, const Vector& center, double radius) {
  Vector dir(center.size());
  double norm = 0.0;
  do {
    for (Index c = 0; c < dir.size(); ++c) dir[c] = rng.Normal();
    norm = dir.norm();
  } while (!(norm > 0.0));
  const double r = radius * std::pow(rng.Uniform01(), 1.0 / static_cast<double>(center.size()));
  return center + (r / norm) * dir;
}

std::uint64_t sample_log_uniform(Philox& rng, std::uint64_t k_max) {
  const double u = rng.Uniform01() * std::log(static_cast<double>(k_max));
  return std::clamp<std::uint64_t>(static_cast<std::uint64_t>(std::exp(u)), 1, k_max);
}

}  // namespace

TheoryConstants compute_constants(const Problem& p, double delta_inf, const Vector& x_star) {
  if (!(delta_inf > 0.0)) throw std::domain_error("delta_inf must be positive");
  if (x_star.size() != p.dim()) throw std::invalid_argument("anchor dimension mismatch");
  const auto& A = p.constraints.normals;
  const double m = static_cast<double>(p.constraint_count());
  const Vector values = constraint_values(p, x_star);

  TheoryConstants c;
  c.delta_inf = delta_inf;
  c.x_star = x_star;
  double max_a2 = 0.0;
  for (Index j = 0; j < A.rows(); ++j) {
    const double a2 = A.row(j).squaredNorm();
    const double a = std::sqrt(a2);
    const double g = std::abs(values[j]);
    c.a_bar += a;
    c.a_bbar += a2;
    c.a_hat += a2 * a2;
    c.b_bar += a * g;
    c.b_bbar += a2 * g * g;
    max_a2 = std::max(max_a2, a2);
  }
  c.a_bar /= m;
  c.a_bbar /= m;
  c.a_hat /= m;
  c.b_bar /= m;
  c.b_bbar /= m;
  c.c_hat = 1.0 / delta_inf;
  c.mu = p.objective.mu;
  c.lipschitz = p.objective.lipschitz;
  c.L_hat = c.lipschitz + max_a2 / delta_inf;
  c.sigma_phi = pair_gradient_sq_mean(p, x_star, delta_inf);
  c.phi_star = barrier_objective(p, x_star, delta_inf);
  return c;
}

TheoryConstants compute_constants(const Problem& p, double delta_inf, double grad_tol) {
  const CentralPoint cp = solve_central_point(p, delta_inf, grad_tol);
  return compute_constants(p, delta_inf, cp.x);
}

bool within_slack(double lhs, double rhs) { return lhs <= rhs + kBoundSlack * std::max(1.0, std::abs(rhs)); }

BoundCheck make_check(std::string bound, std::uint64_t k, double lhs, double rhs, bool gated) {
  BoundCheck b;
  b.bound = std::move(bound);
  b.k = k;
  b.lhs = lhs;
  b.rhs = rhs;
  b.holds = within_slack(lhs, rhs);
  b.gated = gated;
  return b;
}

XiR xi_r(const TheoryConstants& c, const Schedules& s, std::uint64_t k) {
  const Gap g = gap_at(c, s.barrier, k);
  const double gamma = s.gamma(k);
  const double eps = g.eps;
  const double dk = g.delta_k;
  const double di = c.delta_inf;
  const double ratio = eps / (dk * di);
  XiR out;
  out.xi = 2.0 * ratio * (3.0 * gamma * eps * c.a_hat / (dk * di) + c.a_bbar + c.b_bar) + 2.0 * c.c_hat * eps * c.a_bar;
  out.r = c.c_hat * c.a_bar / 2.0 + c.b_bar / (2.0 * dk * di) + 6.0 * gamma * c.c_hat * c.c_hat * eps * c.a_bbar +
          6.0 * gamma * c.b_bbar * eps / (dk * dk * di * di);
  return out;
}

bool contraction_holds(const TheoryConstants& c, const Schedules& s, std::uint64_t k) {
  const double gamma = s.gamma(k);
  return c.mu - xi_r(c, s, k).xi > 0.0 && gamma * (1.0 - 4.0 * gamma * c.L_hat) >= 0.0;
}

std::uint64_t find_k0(const TheoryConstants& c, const Schedules& s, std::uint64_t k_max) {
  constexpr std::uint64_t kWindow = 100;
  if (k_max < 1) throw std::invalid_argument("k_max must be >= 1");
  k_max = std::min(k_max, std::numeric_limits<std::uint64_t>::max() - kWindow - 1);
  auto window_holds = [&](std::uint64_t k) {
    for (std::uint64_t t = 0; t <= kWindow; ++t)
      if (!contraction_holds(c, s, k + t)) return false;
    return true;
  };
  auto not_found = [&]() {
    return K0NotFound(fmt::format(
        "no k0 <= {}: at k_max, mu - xi_k = {:.3e} and gamma_k (1 - 4 gamma_k L_hat) = {:.3e}; increase the budget",
        k_max, c.mu - xi_r(c, s, k_max).xi, s.gamma(k_max) * (1.0 - 4.0 * s.gamma(k_max) * c.L_hat)));
  };

  if (s.gamma.monotone() && s.barrier.epsilon.monotone()) {
    // Non-increasing gamma and eps make both predicates monotone: once true, true for good.
    std::uint64_t candidate = 1;
    if (!contraction_holds(c, s, 1)) {
      if (!contraction_holds(c, s, k_max)) throw not_found();
      std::uint64_t lo = 1;
      std::uint64_t hi = k_max;
      while (hi - lo > 1) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        if (contraction_holds(c, s, mid)) hi = mid; else lo = mid;
      }
      candidate = hi;
    }
    for (; candidate <= k_max; ++candidate)
      if (window_holds(candidate)) return candidate;
    throw not_found();
  }

  std::uint64_t run = 0;
  for (std::uint64_t k = 1; k <= k_max + kWindow; ++k) {
    run = contraction_holds(c, s, k) ? run + 1 : 0;
    if (run == kWindow + 1) return k - kWindow;
  }
  throw not_found();
}

BoundCheck check_bound_C_norm(const Problem& p, const TheoryConstants& c, const BarrierSchedule& b, const Vector& x,
                              std::uint64_t k) {
  const Gap g = gap_at(c, b, k);
  const double di = c.delta_inf;
  const double xt = (x - c.x_star).norm();
  const Vector values = constraint_values(p, x);
  double lhs = 0.0;
  for (Index j = 0; j < values.size(); ++j)
    lhs += p.constraints.normals.row(j).norm() * gap_slope(values[j], g.delta_k, di) * xt;
  lhs /= static_cast<double>(values.size());
  const double ratio = g.eps / (g.delta_k * di);
  const double rhs = xt * xt * (c.a_bbar * ratio + c.c_hat * g.eps * c.a_bar + c.b_bar * ratio) +
                     c.c_hat * g.eps * c.a_bar / 4.0 + c.b_bar * ratio / 4.0;
  return make_check("C_norm", k, lhs, rhs);
}

BoundCheck check_bound_C_sq(const Problem& p, const TheoryConstants& c, const BarrierSchedule& b, const Vector& x,
                            std::uint64_t k) {
  const Gap g = gap_at(c, b, k);
  const double di = c.delta_inf;
  const double xt2 = (x - c.x_star).squaredNorm();
  const Vector values = constraint_values(p, x);
  double lhs = 0.0;
  for (Index j = 0; j < values.size(); ++j) {
    const double s = gap_slope(values[j], g.delta_k, di);
    lhs += p.constraints.normals.row(j).squaredNorm() * s * s;
  }
  lhs /= static_cast<double>(values.size());
  const double e2 = g.eps * g.eps;
  const double denom = g.delta_k * g.delta_k * di * di;
  const double rhs = 3.0 * c.a_hat * e2 * xt2 / denom + 3.0 * c.c_hat * c.c_hat * e2 * c.a_bbar +
                     3.0 * c.b_bbar * e2 / denom;
  return make_check("C_sq", k, lhs, rhs);
}

BoundCheck check_bound_phi_sq(const Problem& p, const TheoryConstants& c, const Vector& x) {
  const double lhs = pair_gradient_sq_mean(p, x, c.delta_inf);
  const double phi0 = barrier_objective(p, x, c.delta_inf) - c.phi_star;
  const double rhs = 4.0 * c.L_hat * phi0 + 2.0 * c.sigma_phi;
  return make_check("phi_sq", 0, lhs, rhs);
}

BoundCheck check_descent(const Problem& p, const TheoryConstants& c, const Schedules& s, const Vector& x,
                         std::uint64_t k, std::uint64_t k0) {
  require_matching_delta(c, s.barrier);
  const double gamma = s.gamma(k);
  const double eps = s.barrier.gap(k);
  const double dk = s.barrier.delta(k);
  const Vector xt = x - c.x_star;
  const Vector values = constraint_values(p, x);
  const auto& A = p.constraints.normals;

  double lhs = 0.0;
  for (Index i = 0; i < p.components(); ++i) {
    const Vector base = xt - gamma * grad_component(p, i, x);
    for (Index j = 0; j < A.rows(); ++j) {
      const double step = gamma * barrier_slope(values[j], dk);
      lhs += (base - step * A.row(j).transpose()).squaredNorm();
    }
  }
  lhs /= static_cast<double>(p.components()) * static_cast<double>(A.rows());

  const XiR q = xi_r(c, s, k);
  const double phi0 = barrier_objective(p, x, c.delta_inf) - c.phi_star;
  const double rhs = (1.0 - gamma * (c.mu - q.xi)) * xt.squaredNorm() -
                     2.0 * gamma * (1.0 - 4.0 * gamma * c.L_hat) * phi0 + gamma * eps * q.r +
                     4.0 * gamma * gamma * c.sigma_phi;
  return make_check(k >= k0 ? "descent" : "descent_pre_k0", k, lhs, rhs, k >= k0);
}

std::pair<BoundCheck, BoundCheck> check_unbiasedness(const Problem& p, const Vector& x, double delta) {
  constexpr double kTol = 1e-12;
  auto build = [&](const char* name, double lhs, double scale) {
    BoundCheck b;
    b.bound = name;
    b.lhs = lhs;
    b.rhs = kTol * std::max(1.0, scale);
    b.holds = b.lhs <= b.rhs;
    return b;
  };

  const Index n = p.components();
  Vector sum_f = Vector::Zero(p.dim());
  double scale_f = 0.0;
  for (Index i = n - 1; i >= 0; --i) {
    const Vector g = grad_component(p, i, x);
    sum_f += g;
    scale_f += g.norm();
  }
  const double diff_f = (sum_f / static_cast<double>(n) - objective_gradient(p, x)).norm();

  const Index m = p.constraint_count();
  const Vector values = constraint_values(p, x);
  Vector sum_b = Vector::Zero(p.dim());
  double scale_b = 0.0;
  for (Index j = m - 1; j >= 0; --j) {
    const double s = barrier_slope(values[j], delta);
    sum_b += s * p.constraints.normals.row(j).transpose();
    scale_b += std::abs(s) * p.constraints.normals.row(j).norm();
  }
  const double diff_b = (sum_b / static_cast<double>(m) - mean_barrier_gradient(p, x, delta)).norm();

  return {build("unbiased_f", diff_f, scale_f / static_cast<double>(n)),
          build("unbiased_barrier", diff_b, scale_b / static_cast<double>(m))};
}

BoundCheck check_bound_D(const Problem& p, const TheoryConstants& c, const BarrierSchedule& b, const Vector& x,
                         Index j, std::uint64_t k) {
  const Gap g = gap_at(c, b, k);
  const double di = c.delta_inf;
  const auto a = p.constraints.normals.row(j);
  const double a_norm = a.norm();
  const double lhs = a_norm * gap_slope(eval_constraint(p, j, x), g.delta_k, di);
  const double anchor = std::abs(eval_constraint(p, j, c.x_star));
  const double rhs =
      a_norm * g.eps / (g.delta_k * di) * (c.c_hat * g.delta_k * di + a_norm * (x - c.x_star).norm() + anchor);
  return make_check("D_pointwise", k, lhs, rhs);
}

BoundCheck check_c0(const TheoryConstants& c, const BarrierSchedule& b, std::uint64_t k, int grid_points) {
  const Gap g = gap_at(c, b, k);
  const double di = c.delta_inf;
  double peak = 0.0;
  if (g.delta_k > di) {
    auto probe = [&](double z) { peak = std::max(peak, std::abs(adaptation_slope(z, g.delta_k, di))); };
    // |z| from delta_inf to 1e3 delta_k, log-spaced, plus the known critical points.
    const double lo = std::log(di);
    const double hi = std::log(1e3 * g.delta_k);
    for (int t = 0; t < grid_points; ++t) probe(-std::exp(lo + (hi - lo) * t / std::max(1, grid_points - 1)));
    probe(-di);
    probe(-g.delta_k);
    probe(-std::sqrt(g.delta_k * di));
  }
  return make_check("c0", k, peak, c.c_hat * g.eps);
}

std::vector<BoundCheck> sample_appendix_checks(const Problem& p, const TheoryConstants& c, const BarrierSchedule& b,
                                               const BoundSampling& plan) {
  if (plan.k_max < 1) throw std::invalid_argument("k_max must be >= 1");
  struct Sample {
    Vector x;
    std::uint64_t k;
    Index j;
  };
  Philox rng(plan.seed, kStreamVerification);
  std::vector<Sample> samples(plan.samples);
  for (auto& s : samples) {
    s.x = sample_in_ball(rng, c.x_star, plan.radius);
    s.k = sample_log_uniform(rng, plan.k_max);
    s.j = static_cast<Index>(rng.Below(static_cast<std::uint64_t>(p.constraint_count())));
  }
  std::vector<BoundCheck> rows(4 * samples.size());
  parallel_for(samples.size(), plan.workers, [&](std::size_t t) {
    const Sample& s = samples[t];
    rows[4 * t] = check_bound_C_norm(p, c, b, s.x, s.k);
    rows[4 * t + 1] = check_bound_C_sq(p, c, b, s.x, s.k);
    rows[4 * t + 2] = check_bound_phi_sq(p, c, s.x);
    rows[4 * t + 2].k = s.k;
    rows[4 * t + 3] = check_bound_D(p, c, b, s.x, s.j, s.k);
  });
  return rows;
}

std::vector<BoundCheck> sample_unbiasedness_checks(const Problem& p, const TheoryConstants& c, double delta,
                                                   std::size_t points, double radius, std::uint64_t seed) {
  Philox rng(seed, kStreamVerification + 1);
  std::vector<BoundCheck> rows;
  rows.reserve(2 * points);
  for (std::size_t t = 0; t < points; ++t) {
    const Vector x = sample_in_ball(rng, c.x_star, radius);
    auto [f, barrier] = check_unbiasedness(p, x, delta);
    rows.push_back(std::move(f));
    rows.push_back(std::move(barrier));
  }
  return rows;
}

std::vector<BoundCheck> sample_descent_checks(const Problem& p, const TheoryConstants& c, const Schedules& s,
                                              std::uint64_t k_start, std::uint64_t k0,
                                              const DescentSampling& plan) {
  if (k_start < 1) throw std::invalid_argument("k_start must be >= 1");
  if (plan.states_per_run < 1) throw std::invalid_argument("states_per_run must be >= 1");
  std::vector<std::uint64_t> completed;
  for (std::size_t t = 0; t < plan.states_per_run; ++t) {
    const std::uint64_t offset =
        plan.states_per_run == 1 ? 0 : plan.span * t / (plan.states_per_run - 1);
    completed.push_back(k_start - 1 + offset);
  }
  SgdConfig sgd;
  sgd.schedules = s;
  sgd.seed = plan.seed;
  RunOptions options;
  options.budget = completed.back();
  options.record = RecordGrid::At(completed);
  options.keep_snapshots = true;
  options.wall_clock = false;

  std::vector<BoundCheck> rows;
  for (std::size_t r = 0; r < plan.runs; ++r) {
    options.run_id = r;
    const Trajectory traj = run_sgd(p, sgd, options);
    for (std::size_t t = 0; t < traj.records.size(); ++t) {
      const std::uint64_t done = traj.records[t].k;
      if (!std::binary_search(options.record.points.begin(), options.record.points.end(), done)) continue;
      rows.push_back(check_descent(p, c, s, traj.snapshots[t], done + 1, k0));
    }
  }
  return rows;
}

}  // namespace rbsgd
