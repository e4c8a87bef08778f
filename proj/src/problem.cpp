#include "rbsgd/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <fmt/format.h>

#include "rbsgd/random.hpp"

namespace rbsgd {
namespace {

inline double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// t + log(1 + exp(-t)), the component term, evaluated without overflow.
inline double softplus(double t) {
  if (t > 0.0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

void check_component(const Problem& p, Index i) {
  if (i < 0 || i >= p.components())
    throw std::out_of_range(fmt::format("component index {} outside [0, {})", i, p.components()));
}

void check_constraint(const Problem& p, Index j) {
  if (j < 0 || j >= p.constraint_count())
    throw std::out_of_range(fmt::format("constraint index {} outside [0, {})", j, p.constraint_count()));
}

void check_dim(const Problem& p, const Vector& x) {
  if (x.size() != p.dim())
    throw std::invalid_argument(fmt::format("point has dimension {}, problem has {}", x.size(), p.dim()));
}

// Root of (1/n) sum_i alpha_i sigma(alpha_i x) + 2 (x - beta) = 0.
double coordinate_minimizer(const RowMatrix& alphas, Index c, double beta) {
  const Index n = alphas.rows();
  auto slope = [&](double x) {
    double s = 0.0;
    for (Index i = 0; i < n; ++i) s += alphas(i, c) * sigmoid(alphas(i, c) * x);
    return s / static_cast<double>(n) + 2.0 * (x - beta);
  };
  // The sigmoid term lies in (0, max alpha), so the root is bracketed.
  const double amax = alphas.col(c).maxCoeff();
  double lo = beta - 0.5 * amax - 1.0;
  double hi = beta + 1.0;
  double x = beta - 0.25 * alphas.col(c).mean();
  for (int iter = 0; iter < 200; ++iter) {
    const double s = slope(x);
    if (s == 0.0) return x;
    if (s > 0.0) hi = x; else lo = x;
    double curv = 2.0;
    for (Index i = 0; i < n; ++i) {
      const double a = alphas(i, c);
      const double sg = sigmoid(a * x);
      curv += a * a * sg * (1.0 - sg) / static_cast<double>(n);
    }
    double next = x - s / curv;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == x || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x)))
      return next;
    x = next;
  }
  return x;
}

}  // namespace

void AffineConstraintSet::validate() const {
  if (count() < 1) throw std::invalid_argument("m >= 1 required");
  if (dim() < 1) throw std::invalid_argument("d >= 1 required");
  if (offsets.size() != count()) throw std::invalid_argument("offsets must have one entry per constraint");
  if (!normals.allFinite() || !offsets.allFinite()) throw std::invalid_argument("constraint data must be finite");
}

void FiniteSumObjective::validate() const {
  if (components() < 1) throw std::invalid_argument("n >= 1 required");
  if (dim() < 1) throw std::invalid_argument("d >= 1 required");
  if (!alphas.allFinite() || (alphas.array() <= 0.0).any())
    throw std::invalid_argument("all alpha entries must be positive and finite");
  if (!std::isfinite(beta)) throw std::invalid_argument("beta must be finite");
  if (!(mu > 0.0 && mu <= lipschitz)) throw std::invalid_argument("need 0 < mu <= L");
}

void GeneratorSpec::validate() const {
  if (d < 1) throw std::invalid_argument("d >= 1 required");
  if (m < 1) throw std::invalid_argument("m >= 1 required");
  if (n < 1) throw std::invalid_argument("n >= 1 required");
  if (!(radius2 > 0.0)) throw std::invalid_argument("radius2 must be positive");
  if (!(q_range.first > 0.0 && q_range.first <= q_range.second))
    throw std::invalid_argument("q_range must satisfy 0 < lo <= hi");
  if (!(alpha_range.first > 0.0 && alpha_range.first <= alpha_range.second))
    throw std::invalid_argument("alpha_range must satisfy 0 < lo <= hi");
  if (!(target_norm > 0.0)) throw std::invalid_argument("target_norm must be positive");
}

SmoothnessConstants smoothness_constants(const RowMatrix& alphas) {
  const double amax = alphas.cwiseAbs().maxCoeff();
  return {2.0, 2.0 + 0.25 * amax * amax};
}

SmoothnessConstants smoothness_constants(const Problem& p) { return smoothness_constants(p.objective.alphas); }

Problem make_problem(RowMatrix alphas, double beta, RowMatrix normals, Vector offsets, std::string label) {
  Problem p;
  p.objective.alphas = std::move(alphas);
  p.objective.beta = beta;
  const auto sc = smoothness_constants(p.objective.alphas);
  p.objective.mu = sc.mu;
  p.objective.lipschitz = sc.lipschitz;
  p.constraints.normals = std::move(normals);
  p.constraints.offsets = std::move(offsets);
  p.label = std::move(label);
  p.objective.validate();
  p.constraints.validate();
  if (p.objective.dim() != p.constraints.dim())
    throw std::invalid_argument("objective and constraints disagree on d");
  p.spec.d = p.dim();
  p.spec.m = p.constraint_count();
  p.spec.n = p.components();
  return p;
}

double eval_component(const Problem& p, Index i, const Vector& x) {
  check_component(p, i);
  check_dim(p, x);
  const double beta = p.objective.beta;
  double sum = 0.0;
  for (Index c = 0; c < x.size(); ++c) {
    const double diff = x[c] - beta;
    sum += softplus(p.objective.alphas(i, c) * x[c]) + diff * diff;
  }
  return sum;
}

void accumulate_grad_component(const Problem& p, Index i, const Vector& x, double scale, Eigen::Ref<Vector> out) {
  const double beta = p.objective.beta;
  const auto row = p.objective.alphas.row(i);
  for (Index c = 0; c < x.size(); ++c) {
    const double a = row[c];
    out[c] += scale * (a * sigmoid(a * x[c]) + 2.0 * (x[c] - beta));
  }
}

Vector grad_component(const Problem& p, Index i, const Vector& x) {
  check_component(p, i);
  check_dim(p, x);
  Vector g = Vector::Zero(x.size());
  accumulate_grad_component(p, i, x, 1.0, g);
  return g;
}

double objective_value(const Problem& p, const Vector& x) {
  check_dim(p, x);
  double sum = 0.0;
  for (Index i = 0; i < p.components(); ++i) sum += eval_component(p, i, x);
  return sum / static_cast<double>(p.components());
}

Vector objective_gradient(const Problem& p, const Vector& x) {
  check_dim(p, x);
  Vector g = Vector::Zero(x.size());
  for (Index i = 0; i < p.components(); ++i) accumulate_grad_component(p, i, x, 1.0, g);
  return g / static_cast<double>(p.components());
}

Vector objective_hessian_diag(const Problem& p, const Vector& x) {
  check_dim(p, x);
  Vector h = Vector::Constant(x.size(), 2.0);
  const double inv_n = 1.0 / static_cast<double>(p.components());
  for (Index i = 0; i < p.components(); ++i) {
    for (Index c = 0; c < x.size(); ++c) {
      const double a = p.objective.alphas(i, c);
      const double s = sigmoid(a * x[c]);
      h[c] += inv_n * a * a * s * (1.0 - s);
    }
  }
  return h;
}

Vector unconstrained_minimizer(const RowMatrix& alphas, double beta) {
  Vector x(alphas.cols());
  for (Index c = 0; c < alphas.cols(); ++c) x[c] = coordinate_minimizer(alphas, c, beta);
  return x;
}

double eval_constraint(const Problem& p, Index j, const Vector& x) {
  check_constraint(p, j);
  check_dim(p, x);
  return p.constraints.normals.row(j).dot(x) + p.constraints.offsets[j];
}

Vector constraint_values(const Problem& p, const Vector& x) {
  check_dim(p, x);
  return p.constraints.normals * x + p.constraints.offsets;
}

double max_violation(const AffineConstraintSet& c, const Vector& x) {
  const Vector g = c.normals * x + c.offsets;
  return std::max(0.0, g.maxCoeff());
}

double max_violation(const Problem& p, const Vector& x) {
  check_dim(p, x);
  return max_violation(p.constraints, x);
}

Problem generate_ellipsoid_problem(const GeneratorSpec& spec) {
  spec.validate();
  const Index d = spec.d;

  Philox scaling_rng = Philox(spec.seed, kStreamScaling);
  Vector q(d);
  for (Index c = 0; c < d; ++c) q[c] = scaling_rng.Uniform(spec.q_range.first, spec.q_range.second);

  Philox alpha_rng = Philox(spec.seed, kStreamAlphas);
  RowMatrix alphas(spec.n, d);
  for (Index i = 0; i < spec.n; ++i)
    for (Index c = 0; c < d; ++c) alphas(i, c) = alpha_rng.Uniform(spec.alpha_range.first, spec.alpha_range.second);
  if ((alphas.array() <= 0.0).any()) throw GenerationError("alpha sample not positive");

  Philox constraint_rng = Philox(spec.seed, kStreamConstraints);
  RowMatrix normals(spec.m, d);
  Vector direction(d);
  for (Index j = 0; j < spec.m; ++j) {
    double quad = 0.0;
    do {
      for (Index c = 0; c < d; ++c) direction[c] = constraint_rng.Normal();
      quad = direction.cwiseProduct(direction).dot(q);
    } while (!(quad > 0.0));
    const double scale = std::sqrt(spec.radius2 / quad);
    // y_j = scale * direction lies on the boundary; a_j = Q y_j.
    for (Index c = 0; c < d; ++c) normals(j, c) = q[c] * (scale * direction[c]);
  }
  Vector offsets = Vector::Constant(spec.m, -spec.radius2);

  // For beta >= max_c mean_i(alpha_ic)/4 every coordinate of the minimiser is
  // non-negative and increasing in beta, so the norm is monotone there.
  double lo = 0.0;
  for (Index c = 0; c < d; ++c) lo = std::max(lo, 0.25 * alphas.col(c).mean());
  auto norm_at = [&](double beta) { return unconstrained_minimizer(alphas, beta).norm(); };
  if (norm_at(lo) > spec.target_norm)
    throw GenerationError(fmt::format("target_norm {} is below the smallest reachable norm {}", spec.target_norm,
                                      norm_at(lo)));
  double hi = lo + 1.0;
  int expansions = 0;
  while (norm_at(hi) < spec.target_norm) {
    hi = lo + 2.0 * (hi - lo);
    if (++expansions > 200) throw GenerationError("target_norm unreachable: bracket expansion exhausted");
  }
  int steps = 0;
  while (hi - lo > 1e-13 * std::max(1.0, std::abs(hi))) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (norm_at(mid) < spec.target_norm) lo = mid; else hi = mid;
    if (++steps > 400) break;
  }
  const double beta = 0.5 * (lo + hi);
  const double achieved = norm_at(beta);
  if (std::abs(achieved - spec.target_norm) > 0.01 * spec.target_norm)
    throw GenerationError(fmt::format("target_norm unreachable within bisection budget (got {})", achieved));

  Problem p = make_problem(std::move(alphas), beta, std::move(normals), std::move(offsets),
                           fmt::format("ellipsoid d={} m={} n={} seed={}", spec.d, spec.m, spec.n, spec.seed));
  p.spec = spec;
  p.q_diag = std::move(q);
  return p;
}

}  // namespace rbsgd
