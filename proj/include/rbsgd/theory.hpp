#pragma once

// Constants of the convergence argument and exact-enumeration checks of the
// inequalities it rests on. Every conditional expectation over the sampled
// indices (i, j) is a finite average, computed here by full enumeration.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rbsgd/problem.hpp"
#include "rbsgd/solvers.hpp"

namespace rbsgd {

struct TheoryConstants {
  double a_bar = 0.0;   // mean ||a_j||
  double a_bbar = 0.0;  // mean ||a_j||^2
  double a_hat = 0.0;   // mean ||a_j||^4
  double b_bar = 0.0;   // mean ||a_j|| |g_j(x*)|
  double b_bbar = 0.0;  // mean ||a_j||^2 |g_j(x*)|^2
  double c_hat = 0.0;   // 1 / delta_inf
  double L_hat = 0.0;   // L + max ||a_j||^2 / delta_inf
  double sigma_phi = 0.0;
  double mu = 0.0;
  double lipschitz = 0.0;
  double delta_inf = 0.0;
  double phi_star = 0.0;  // Phi(x*; delta_inf)
  Vector x_star;
};

/// Solves for x*(delta_inf) to grad_tol and evaluates the constants there.
TheoryConstants compute_constants(const Problem& p, double delta_inf, double grad_tol = 1e-10);
/// Same, at a caller-supplied anchor.
TheoryConstants compute_constants(const Problem& p, double delta_inf, const Vector& x_star);

inline constexpr double kBoundSlack = 1e-9;

struct BoundCheck {
  std::string bound;
  std::uint64_t k = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
  bool gated = true;  // informational rows never fail a verification

  double margin() const { return rhs - lhs; }
};

/// lhs <= rhs + 1e-9 max(1, |rhs|).
bool within_slack(double lhs, double rhs);
BoundCheck make_check(std::string bound, std::uint64_t k, double lhs, double rhs, bool gated = true);

struct XiR {
  double xi;
  double r;
};

XiR xi_r(const TheoryConstants& c, const Schedules& s, std::uint64_t k);

/// Both contraction predicates at k: mu - xi_k > 0 and gamma_k (1 - 4 gamma_k L_hat) >= 0.
bool contraction_holds(const TheoryConstants& c, const Schedules& s, std::uint64_t k);

class K0NotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Smallest k <= k_max at which both contraction predicates hold on k..k+100.
/// Power-law schedules make both predicates monotone in k, so the search
/// bisects; custom sequences are scanned linearly.
std::uint64_t find_k0(const TheoryConstants& c, const Schedules& s, std::uint64_t k_max);

/// Mean over j of ||grad C_j(x, delta_k)|| ||x - x*|| against its bound.
BoundCheck check_bound_C_norm(const Problem& p, const TheoryConstants& c, const BarrierSchedule& b, const Vector& x,
                              std::uint64_t k);
/// Mean over j of ||grad C_j(x, delta_k)||^2 against its bound.
BoundCheck check_bound_C_sq(const Problem& p, const TheoryConstants& c, const BarrierSchedule& b, const Vector& x,
                            std::uint64_t k);
/// Mean over all (i, j) of ||grad Phi_ij(x)||^2 <= 4 L_hat (Phi(x) - Phi(x*)) + 2 sigma_phi.
BoundCheck check_bound_phi_sq(const Problem& p, const TheoryConstants& c, const Vector& x);

/// Exact E||x_{k+1} - x*||^2 over all (i, j) for one SGD step from x, against
/// (1 - gamma(mu - xi))||x - x*||^2 - 2 gamma (1 - 4 gamma L_hat) Phi_0(x)
/// + gamma eps r + 4 gamma^2 sigma_phi. Gated only when k >= k0; earlier rows
/// are named "descent_pre_k0".
BoundCheck check_descent(const Problem& p, const TheoryConstants& c, const Schedules& s, const Vector& x,
                         std::uint64_t k, std::uint64_t k0);

/// Two checks: the component-averaged objective gradient and the
/// constraint-averaged barrier gradient, each summed term by term in reverse
/// order and compared with the library's full gradients. The threshold is
/// 1e-12 relative to the mean term magnitude.
std::pair<BoundCheck, BoundCheck> check_unbiasedness(const Problem& p, const Vector& x, double delta);

/// ||grad C_j(x, delta_k)|| <= ||a_j|| eps/(delta_k delta_inf)
///   (c_hat delta_k delta_inf + ||a_j|| ||x - x*|| + |g_j(x*)|).
BoundCheck check_bound_D(const Problem& p, const TheoryConstants& c, const BarrierSchedule& b, const Vector& x,
                         Index j, std::uint64_t k);

/// sup over z <= -delta_inf of |adaptation_slope(z)| against c_hat eps_k,
/// probed on a log-spaced grid plus the interior maximiser.
BoundCheck check_c0(const TheoryConstants& c, const BarrierSchedule& b, std::uint64_t k, int grid_points = 2000);

// --- sampling plans --------------------------------------------------------

struct BoundSampling {
  std::size_t samples = 10'000;
  double radius = 30.0;  // x uniform in the ball of this radius around x*
  std::uint64_t k_max = 1'000'000;  // k log-uniform on [1, k_max]
  std::uint64_t seed = 1;
  unsigned workers = 0;  // 0 selects hardware concurrency
};

/// For each sampled (x, k): C_norm, C_sq and phi_sq rows, in sample order,
/// plus one D_pointwise row per sample for a sampled constraint j.
std::vector<BoundCheck> sample_appendix_checks(const Problem& p, const TheoryConstants& c, const BarrierSchedule& b,
                                               const BoundSampling& plan);

/// Unbiasedness rows at `points` random x (same ball as above).
std::vector<BoundCheck> sample_unbiasedness_checks(const Problem& p, const TheoryConstants& c, double delta,
                                                   std::size_t points, double radius, std::uint64_t seed);

struct DescentSampling {
  std::size_t runs = 10;
  std::size_t states_per_run = 100;
  std::uint64_t span = 10'000;  // states spread over updates k0 .. k0 + span
  std::uint64_t seed = 1;
};

/// Runs SGD trajectories from the origin, snapshots states at completed
/// iteration counts k - 1 for k in [k_start, k_start + span], and checks the
/// one-step descent inequality at each (x_{k-1}, k). Rows with k < k0 are
/// informational.
std::vector<BoundCheck> sample_descent_checks(const Problem& p, const TheoryConstants& c, const Schedules& s,
                                              std::uint64_t k_start, std::uint64_t k0, const DescentSampling& plan);

}  // namespace rbsgd
