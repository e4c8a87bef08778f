#pragma once

// Shared fixtures and independent oracles for the test suites.

#include <cmath>
#include <functional>

#include "rbsgd/problem.hpp"
#include "rbsgd/random.hpp"

namespace rbsgd::test {

/// Central finite difference of a scalar function of a vector.
inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h = 1e-6) {
  Vector g(x.size());
  for (Index c = 0; c < x.size(); ++c) {
    const double step = h * std::max(1.0, std::abs(x[c]));
    Vector xp = x;
    Vector xm = x;
    xp[c] += step;
    xm[c] -= step;
    g[c] = (f(xp) - f(xm)) / (2.0 * step);
  }
  return g;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

inline Vector random_vector(Philox& rng, Index d, double lo, double hi) {
  Vector v(d);
  for (Index c = 0; c < d; ++c) v[c] = rng.Uniform(lo, hi);
  return v;
}

/// Random problem with positive alphas and a strictly feasible origin.
inline Problem random_problem(std::uint64_t seed, Index d, Index n, Index m) {
  Philox rng(seed, 7);
  RowMatrix alphas(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index c = 0; c < d; ++c) alphas(i, c) = rng.Uniform(0.5, 2.0);
  RowMatrix normals(m, d);
  for (Index j = 0; j < m; ++j)
    for (Index c = 0; c < d; ++c) normals(j, c) = rng.Normal();
  Vector offsets(m);
  for (Index j = 0; j < m; ++j) offsets[j] = -rng.Uniform(0.5, 2.0);
  return make_problem(std::move(alphas), rng.Uniform(0.5, 2.0), std::move(normals), std::move(offsets), "random");
}

/// The small descent instance: d = 5, n = 3, m = 8 from the ellipsoid generator.
inline GeneratorSpec small_spec(std::uint64_t seed = 1) {
  GeneratorSpec s;
  s.d = 5;
  s.n = 3;
  s.m = 8;
  s.seed = seed;
  s.radius2 = 1.0;
  s.target_norm = 2.0;
  return s;
}

}  // namespace rbsgd::test
