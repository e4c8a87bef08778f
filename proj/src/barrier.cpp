#include "rbsgd/barrier.hpp"

#include <cmath>
#include <stdexcept>

namespace rbsgd {
namespace {

inline void require_positive(double delta) {
  if (!(delta > 0.0)) throw std::domain_error("barrier parameter delta must be positive");
}

inline void require_ordered(double delta_k, double delta_inf) {
  require_positive(delta_inf);
  if (!(delta_k >= delta_inf)) throw std::domain_error("adaptation requires delta_k >= delta_inf");
}

}  // namespace

double barrier_value(double z, double delta) {
  require_positive(delta);
  if (z < -delta) return -delta * std::log(-z);
  const double shifted = z + 2.0 * delta;
  return 0.5 * (shifted * shifted / delta - delta) - delta * std::log(delta);
}

double barrier_slope(double z, double delta) {
  require_positive(delta);
  if (z < -delta) return -delta / z;
  return (z + 2.0 * delta) / delta;
}

double barrier_curvature(double z, double delta) {
  require_positive(delta);
  if (z < -delta) return delta / (z * z);
  return 1.0 / delta;
}

BarrierEval barrier_eval(double z, double delta) {
  return {barrier_value(z, delta), barrier_slope(z, delta), barrier_curvature(z, delta)};
}

double adaptation_slope(double z, double delta_k, double delta_inf) {
  require_ordered(delta_k, delta_inf);
  if (z < -delta_k) return (delta_k - delta_inf) / z;
  if (z < -delta_inf) return -delta_inf / z - (z + 2.0 * delta_k) / delta_k;
  return z * (delta_k - delta_inf) / (delta_k * delta_inf);
}

double adaptation_slope_peak(double delta_k, double delta_inf) {
  require_ordered(delta_k, delta_inf);
  return 2.0 - 2.0 * std::sqrt(delta_inf / delta_k);
}

}  // namespace rbsgd
