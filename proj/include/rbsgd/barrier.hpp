#pragma once

// Relaxed logarithmic barrier B(z, delta): -delta*log(-z) for z < -delta and a
// quadratic extension beyond, joined C^2 at z = -delta. The quadratic branch is
// used at z == -delta exactly.
//
// All functions throw std::domain_error for delta <= 0.

namespace rbsgd {

struct BarrierEval {
  double value;
  double slope;      // dB/dz
  double curvature;  // d2B/dz2, always in [0, 1/delta]
};

double barrier_value(double z, double delta);
double barrier_slope(double z, double delta);
double barrier_curvature(double z, double delta);
BarrierEval barrier_eval(double z, double delta);

/// Slope of the adaptation gap C(z) = B(z, delta_inf) - B(z, delta_k), written
/// piecewise over (-inf, -delta_k), [-delta_k, -delta_inf), [-delta_inf, inf).
/// Requires delta_k >= delta_inf > 0.
double adaptation_slope(double z, double delta_k, double delta_inf);

/// max |adaptation_slope| over the middle interval [-delta_k, -delta_inf),
/// attained at z = -sqrt(delta_k * delta_inf): 2 - 2 sqrt(delta_inf / delta_k).
double adaptation_slope_peak(double delta_k, double delta_inf);

}  // namespace rbsgd
