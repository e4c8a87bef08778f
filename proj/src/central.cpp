#include "rbsgd/central.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <fmt/format.h>

#include "rbsgd/barrier.hpp"

namespace rbsgd {
namespace {

struct Local {
  double value;
  Vector grad;
};

Local evaluate(const Problem& p, const Vector& x, double delta) {
  const Vector g = constraint_values(p, x);
  Vector slopes(g.size());
  double barrier_sum = 0.0;
  for (Index j = 0; j < g.size(); ++j) {
    const BarrierEval e = barrier_eval(g[j], delta);
    barrier_sum += e.value;
    slopes[j] = e.slope;
  }
  const double inv_m = 1.0 / static_cast<double>(p.constraint_count());
  Vector grad = objective_gradient(p, x);
  grad += inv_m * (p.constraints.normals.transpose() * slopes);
  return {objective_value(p, x) + inv_m * barrier_sum, std::move(grad)};
}

Eigen::MatrixXd hessian(const Problem& p, const Vector& x, double delta) {
  const Vector g = constraint_values(p, x);
  const double inv_m = 1.0 / static_cast<double>(p.constraint_count());
  Vector weights(g.size());
  for (Index j = 0; j < g.size(); ++j) weights[j] = std::sqrt(inv_m * barrier_curvature(g[j], delta));
  const RowMatrix scaled = weights.asDiagonal() * p.constraints.normals;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(p.dim(), p.dim());
  h.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
  h = h.selfadjointView<Eigen::Lower>();
  h.diagonal() += objective_hessian_diag(p, x);
  return h;
}

// Rounding in g_j = a_j^T x + b_j, amplified by the barrier curvature: a
// rough lower limit on the attainable gradient norm.
double gradient_floor(const Problem& p, const Vector& x, double delta) {
  const auto& A = p.constraints.normals;
  const Vector g = constraint_values(p, x);
  double sum = 0.0;
  for (Index j = 0; j < A.rows(); ++j) {
    const double scale = A.row(j).cwiseAbs().dot(x.cwiseAbs()) + std::abs(p.constraints.offsets[j]);
    sum += A.row(j).norm() * barrier_curvature(g[j], delta) * scale;
  }
  return std::numeric_limits<double>::epsilon() * sum / static_cast<double>(A.rows());
}

}  // namespace

double barrier_objective(const Problem& p, const Vector& x, double delta) {
  if (!(delta > 0.0)) throw std::domain_error("delta must be positive");
  return evaluate(p, x, delta).value;
}

Vector barrier_objective_gradient(const Problem& p, const Vector& x, double delta) {
  if (!(delta > 0.0)) throw std::domain_error("delta must be positive");
  return evaluate(p, x, delta).grad;
}

CentralPoint solve_central_point(const Problem& p, double delta, double grad_tol, const CentralOptions& options) {
  if (!(delta > 0.0)) throw std::domain_error("delta must be positive");
  if (!(grad_tol > 0.0)) throw std::invalid_argument("grad_tol must be positive");

  Vector x = options.x0 ? *options.x0 : Vector::Zero(p.dim());
  if (x.size() != p.dim()) throw std::invalid_argument("x0 dimension mismatch");
  Local cur = evaluate(p, x, delta);
  double gnorm = cur.grad.norm();

  for (int it = 0; it < options.max_iterations; ++it) {
    if (gnorm <= grad_tol) return {x, delta, gnorm, it};

    const Eigen::LLT<Eigen::MatrixXd> llt(hessian(p, x, delta));
    if (llt.info() != Eigen::Success)
      throw CentralPointError("Hessian factorisation failed", gnorm, x);
    const Vector step = -llt.solve(cur.grad);
    const double decrement = cur.grad.dot(step);

    double t = 1.0;
    bool accepted = false;
    Vector trial;
    Local next;
    // Armijo on Phi only while the predicted decrease is above rounding in Phi.
    const bool resolvable = -decrement > 1e-12 * std::max(1.0, std::abs(cur.value));
    for (int bt = 0; resolvable && bt < 60; ++bt, t *= 0.5) {
      trial = x + t * step;
      next = evaluate(p, trial, delta);
      if (next.value <= cur.value + 1e-4 * t * decrement) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // Near the optimum Phi differences fall below rounding; fall back to the
      // gradient norm as merit.
      t = 1.0;
      for (int bt = 0; bt < 60; ++bt, t *= 0.5) {
        trial = x + t * step;
        next = evaluate(p, trial, delta);
        if (next.grad.norm() < gnorm) {
          accepted = true;
          break;
        }
      }
    }
    if (!accepted)
      throw CentralPointError(fmt::format("central point stalled at gradient norm {:.3e} (target {:.3e}, rounding "
                                          "floor about {:.1e} at this delta)",
                                          gnorm, grad_tol, gradient_floor(p, x, delta)),
                              gnorm, x);
    x = std::move(trial);
    cur = std::move(next);
    gnorm = cur.grad.norm();
  }
  if (gnorm <= grad_tol) return {x, delta, gnorm, options.max_iterations};
  throw CentralPointError(fmt::format("central point iteration cap {} reached at gradient norm {:.3e} (rounding "
                                      "floor about {:.1e} at this delta)",
                                      options.max_iterations, gnorm, gradient_floor(p, x, delta)),
                          gnorm, x);
}

}  // namespace rbsgd
