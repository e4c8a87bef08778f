#pragma once

// Linearly constrained finite-sum problem
//
//   min_x f(x) = (1/n) sum_i f_i(x)   s.t.  g_j(x) = a_j^T x + b_j <= 0,
//
// with the softplus-plus-quadratic components
//
//   f_i(x) = sum_c ( alpha_ic x_c + log(1 + exp(-alpha_ic x_c)) + (x_c - beta)^2 ).
//
// Indices are zero-based throughout the C++ API.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Core>

namespace rbsgd {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct AffineConstraintSet {
  RowMatrix normals;  // m x d, row j is a_j^T
  Vector offsets;     // b_j

  Index count() const { return normals.rows(); }
  Index dim() const { return normals.cols(); }
  void validate() const;
};

struct FiniteSumObjective {
  RowMatrix alphas;  // n x d, all entries positive
  double beta = 0.0;
  double mu = 2.0;         // strong-convexity modulus of f
  double lipschitz = 2.0;  // gradient Lipschitz bound of every f_i

  Index components() const { return alphas.rows(); }
  Index dim() const { return alphas.cols(); }
  void validate() const;
};

/// Parameters of the ellipsoid outer-approximation benchmark.
struct GeneratorSpec {
  Index d = 50;
  Index m = 10'000;
  Index n = 10;
  std::uint64_t seed = 1;
  double radius2 = 100.0;
  std::pair<double, double> q_range{1.0, 1.5};
  std::pair<double, double> alpha_range{0.5, 2.0};
  double target_norm = 15.0;

  void validate() const;
};

struct Problem {
  FiniteSumObjective objective;
  AffineConstraintSet constraints;
  std::string label;
  // Provenance of generated problems; q_diag is empty for hand-built ones.
  GeneratorSpec spec;
  Vector q_diag;

  Index dim() const { return objective.dim(); }
  Index components() const { return objective.components(); }
  Index constraint_count() const { return constraints.count(); }
};

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Builds a problem from explicit data, filling mu and lipschitz analytically.
Problem make_problem(RowMatrix alphas, double beta, RowMatrix normals, Vector offsets,
                     std::string label = "custom");

// --- objective ---------------------------------------------------------------

double eval_component(const Problem& p, Index i, const Vector& x);
Vector grad_component(const Problem& p, Index i, const Vector& x);
/// out += scale * grad f_i(x), no allocation.
void accumulate_grad_component(const Problem& p, Index i, const Vector& x, double scale,
                               Eigen::Ref<Vector> out);

double objective_value(const Problem& p, const Vector& x);
Vector objective_gradient(const Problem& p, const Vector& x);
/// Diagonal of the Hessian of f (the Hessian is diagonal for this family).
Vector objective_hessian_diag(const Problem& p, const Vector& x);

struct SmoothnessConstants {
  double mu;
  double lipschitz;
};

/// mu = 2, L = 2 + max(alpha^2) / 4: each component Hessian is
/// diag(alpha^2 sigma'(alpha x) + 2) with 0 < sigma' <= 1/4.
SmoothnessConstants smoothness_constants(const Problem& p);
SmoothnessConstants smoothness_constants(const RowMatrix& alphas);

/// Unconstrained minimiser of f. The problem separates per coordinate; each
/// scalar equation is solved by safeguarded Newton to full precision.
Vector unconstrained_minimizer(const RowMatrix& alphas, double beta);

// --- constraints -------------------------------------------------------------

double eval_constraint(const Problem& p, Index j, const Vector& x);
Vector constraint_values(const Problem& p, const Vector& x);
/// max_j max(0, g_j(x)).
double max_violation(const Problem& p, const Vector& x);
double max_violation(const AffineConstraintSet& c, const Vector& x);

// --- generator ---------------------------------------------------------------

/// Q = diag(q), q_c ~ U(q_range); m points y_j on {y : y^T Q y = radius2} with
/// normally distributed directions; rows a_j = Q y_j, offsets -radius2;
/// alpha ~ U(alpha_range); beta bisected so that ||argmin f|| = target_norm.
/// Q and alpha depend only on the seed, not on m.
Problem generate_ellipsoid_problem(const GeneratorSpec& spec);

}  // namespace rbsgd
