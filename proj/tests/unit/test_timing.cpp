// Wall-clock scaling of the per-iteration cost. Run serially.
#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "rbsgd/solvers.hpp"

using namespace rbsgd;

namespace {

Problem instance(Index m) {
  GeneratorSpec spec;  // d = 50, n = 10
  spec.m = m;
  return generate_ellipsoid_problem(spec);
}

// Median-of-three seconds per iteration.
template <class Run>
double per_iteration(std::uint64_t iterations, Run&& run) {
  double samples[3];
  for (double& s : samples) {
    const auto t0 = std::chrono::steady_clock::now();
    run(iterations);
    s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / static_cast<double>(iterations);
  }
  std::sort(std::begin(samples), std::end(samples));
  return samples[1];
}

RunOptions endpoints(std::uint64_t budget) {
  RunOptions o;
  o.budget = budget;
  o.record = RecordGrid::Endpoints();
  o.wall_clock = false;
  return o;
}

double gd_cost(const Problem& p, std::uint64_t iterations) {
  const BarrierSchedule b{1e-6, PowerLawSchedule{5.0, 0.3}};
  run_gd(p, 1e-3, b, endpoints(10));
  return per_iteration(iterations, [&](std::uint64_t k) { run_gd(p, 1e-3, b, endpoints(k)); });
}

double sgd_cost(const Problem& p, std::uint64_t iterations) {
  SgdConfig c;
  run_sgd(p, c, endpoints(1000));
  return per_iteration(iterations, [&](std::uint64_t k) { run_sgd(p, c, endpoints(k)); });
}

}  // namespace

TEST_CASE("GD per-iteration cost at m = 1e4 is at least 1e3 times the m = 10 cost, within 3x of linear") {
  const Problem small = instance(10);
  const Problem large = instance(10'000);
  const double t_small = gd_cost(small, 20'000);
  const double t_large = gd_cost(large, 400);
  const double ratio = t_large / t_small;
  std::printf("GD per iteration: m=10 %.3e s, m=1e4 %.3e s, ratio %.1f\n", t_small, t_large, ratio);
  CHECK(ratio >= 1e3);
  CHECK(ratio <= 3.0 * 1e3);
}

TEST_CASE("GD cost grows with m by at least two orders of magnitude from 1e2 to 1e5") {
  const double t2 = gd_cost(instance(100), 5000);
  const double t5 = gd_cost(instance(100'000), 20);
  std::printf("GD per iteration: m=1e2 %.3e s, m=1e5 %.3e s, ratio %.1f\n", t2, t5, t5 / t2);
  CHECK(t5 / t2 >= 100.0);
}

TEST_CASE("SGD per-iteration cost is flat in m") {
  double lo = 1e300, hi = 0.0;
  for (Index m : {Index{100}, Index{10'000}, Index{100'000}}) {
    const double t = sgd_cost(instance(m), 200'000);
    std::printf("SGD per iteration: m=%ld %.3e s\n", static_cast<long>(m), t);
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  CHECK(hi / lo < 3.0);
}

TEST_CASE("at m = 10 a GD iteration costs more than an SGD iteration") {
  const Problem p = instance(10);
  const double gd = gd_cost(p, 20'000);
  const double sgd = sgd_cost(p, 200'000);
  std::printf("m=10: GD %.3e s, SGD %.3e s\n", gd, sgd);
  CHECK(gd > sgd);
}
