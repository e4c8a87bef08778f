#pragma once

#include <optional>
#include <stdexcept>

#include "rbsgd/problem.hpp"

namespace rbsgd {

/// Phi(x; delta) = f(x) + (1/m) sum_j B(g_j(x), delta).
double barrier_objective(const Problem& p, const Vector& x, double delta);
Vector barrier_objective_gradient(const Problem& p, const Vector& x, double delta);

struct CentralOptions {
  int max_iterations = 200;
  std::optional<Vector> x0;  // origin by default
};

struct CentralPoint {
  Vector x;
  double delta = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
};

class CentralPointError : public std::runtime_error {
 public:
  CentralPointError(const std::string& what, double grad_norm, Vector best)
      : std::runtime_error(what), grad_norm_(grad_norm), best_(std::move(best)) {}
  double grad_norm() const { return grad_norm_; }
  const Vector& best() const { return best_; }

 private:
  double grad_norm_;
  Vector best_;
};

/// Minimiser x*(delta) of Phi(.; delta), by damped Newton with Armijo
/// backtracking. The Hessian diag(f'') + (1/m) A^T diag(B'') A is positive
/// definite, so each direction is a descent direction. Once backtracking can
/// no longer resolve a decrease in Phi, steps are accepted when they reduce the
/// gradient norm instead.
CentralPoint solve_central_point(const Problem& p, double delta, double grad_tol, const CentralOptions& options = {});

}  // namespace rbsgd
