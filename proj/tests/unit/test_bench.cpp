#include <doctest.h>

#include <cmath>
#include <sstream>

#include "rbsgd/bench.hpp"
#include "rbsgd/central.hpp"
#include "rbsgd/csv.hpp"
#include "support.hpp"

using namespace rbsgd;
using rbsgd::test::random_problem;

namespace {

struct Fixture {
  Problem p = random_problem(21, 5, 4, 30);
  Anchors anchors;
  Fixture() {
    anchors.x_star = solve_central_point(p, 1e-6, 1e-10).x;
    anchors.x_ref = solve_central_point(p, 1e-8, 1e-8).x;
  }
  EnsembleConfig config(std::size_t runs, unsigned workers) const {
    EnsembleConfig ec;
    ec.sgd.seed = 5;
    ec.run.budget = 2000;
    ec.run.record = RecordGrid::Every(250);
    ec.run.wall_clock = false;
    ec.runs = runs;
    ec.workers = workers;
    return ec;
  }
};

}  // namespace

TEST_CASE("single-run ensemble has zero spread") {
  const Fixture f;
  const EnsembleStats s = run_ensemble(f.p, f.config(1, 1), f.anchors);
  REQUIRE(s.k.size() == 9);
  for (double v : s.std_err) CHECK(v == 0.0);
  CHECK(s.runs == 1);
}

TEST_CASE("ensemble statistics match the member trajectories") {
  const Fixture f;
  EnsembleConfig ec = f.config(6, 2);
  ec.keep_trajectories = true;
  const EnsembleStats s = run_ensemble(f.p, ec, f.anchors);
  REQUIRE(s.trajectories.size() == 6);
  for (std::size_t t = 0; t < s.k.size(); ++t) {
    double sum = 0.0, sq = 0.0;
    for (const auto& traj : s.trajectories) {
      REQUIRE(traj.records[t].k == s.k[t]);
      sum += traj.records[t].err_to_xstar;
    }
    const double mean = sum / 6.0;
    for (const auto& traj : s.trajectories) sq += std::pow(traj.records[t].err_to_xstar - mean, 2);
    CHECK(s.mean_err[t] == doctest::Approx(mean).epsilon(1e-13));
    CHECK(s.std_err[t] == doctest::Approx(std::sqrt(sq / 5.0)).epsilon(1e-12));
  }
  CHECK(s.mean_err_at(2000) == s.mean_err.back());
  CHECK_THROWS_AS(s.mean_err_at(1999), std::out_of_range);
}

TEST_CASE("ensembles are deterministic and worker-count invariant") {
  const Fixture f;
  const EnsembleStats a = run_ensemble(f.p, f.config(8, 1), f.anchors);
  const EnsembleStats b = run_ensemble(f.p, f.config(8, 4), f.anchors);
  CHECK(a.mean_err == b.mean_err);
  CHECK(a.std_err == b.std_err);
  CHECK(a.k_tau == b.k_tau);
  CHECK(a.config_hash == b.config_hash);
  EnsembleConfig other = f.config(8, 1);
  other.sgd.seed = 6;
  CHECK(config_hash(other) != a.config_hash);
}

TEST_CASE("ensemble failures name the run") {
  const Fixture f;
  EnsembleConfig ec = f.config(3, 1);
  ec.sgd.schedules.gamma = PowerLawSchedule{1e9, 0.0};
  ec.sgd.force = true;
  try {
    run_ensemble(f.p, ec, f.anchors);
    FAIL("expected EnsembleError");
  } catch (const EnsembleError& e) {
    CHECK(e.run_id() == 0);
    CHECK(std::string(e.what()).find("run_id 0") != std::string::npos);
  }
}

TEST_CASE("trajectory CSV round-trips") {
  const Fixture f;
  EnsembleConfig ec = f.config(2, 1);
  ec.keep_trajectories = true;
  ec.run.wall_clock = true;
  const EnsembleStats s = run_ensemble(f.p, ec, f.anchors);
  std::stringstream buffer;
  write_trajectories(buffer, s.trajectories);
  CHECK(buffer.str().rfind(std::string(kTrajectoryHeader) + "\n", 0) == 0);
  const auto rows = read_trajectories(buffer);
  REQUIRE(rows.size() == 2 * s.trajectories[0].records.size());
  std::size_t r = 0;
  for (const auto& traj : s.trajectories)
    for (const auto& rec : traj.records) {
      CHECK(rows[r].run_id == traj.run_id);
      CHECK(rows[r].record.k == rec.k);
      CHECK(rows[r].record.err_to_xstar == rec.err_to_xstar);
      CHECK(rows[r].record.objective == rec.objective);
      CHECK(rows[r].record.wall_ns == rec.wall_ns);
      ++r;
    }

  std::stringstream ens;
  write_ensemble(ens, s);
  const auto erows = read_ensemble(ens);
  REQUIRE(erows.size() == s.k.size());
  CHECK(erows.back().mean_err == s.mean_err.back());
  CHECK(erows.back().runs == 2);
}

TEST_CASE("NaN and extreme doubles survive CSV") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1e-300) == "1e-300");
  Trajectory t;
  RunRecord rec;
  rec.err_to_xstar = std::nan("");
  rec.err_to_xc = 5e-324;
  rec.objective = -1.7976931348623157e308;
  t.records.push_back(rec);
  std::stringstream buffer;
  write_trajectories(buffer, {t});
  const auto rows = read_trajectories(buffer);
  CHECK(std::isnan(rows[0].record.err_to_xstar));
  CHECK(rows[0].record.err_to_xc == 5e-324);
  CHECK(rows[0].record.objective == -1.7976931348623157e308);
}

TEST_CASE("timing and bounds CSV round-trip") {
  std::vector<TimingRecord> timing{{"sgd", 100, 1, 5000, 0.0123, true}, {"gd", 100, 1, 100000, 1.5, false}};
  std::stringstream tb;
  write_timing(tb, timing);
  const auto back = read_timing(tb);
  REQUIRE(back.size() == 2);
  CHECK(back[1].algorithm == "gd");
  CHECK(back[1].wall_seconds == 1.5);
  CHECK_FALSE(back[1].converged);

  std::vector<BoundCheck> bounds{make_check("C_norm", 3, 1.0, 2.0), make_check("descent_pre_k0", 4, 3.0, 2.0, false)};
  std::stringstream bb;
  write_bounds(bb, bounds);
  CHECK(bb.str().find("C_norm,3,1,2,1,true") != std::string::npos);
  const auto rows = read_bounds(bb);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].gated);
  CHECK_FALSE(rows[1].gated);
  CHECK_FALSE(rows[1].holds);

  std::stringstream wrong("a,b\n1,2\n");
  CHECK_THROWS_AS(read_bounds(wrong), CsvError);
}

TEST_CASE("barrier table") {
  const auto rows = barrier_table({1.0, 1e-2}, -3.0, 1.0, 5);
  REQUIRE(rows.size() == 10);
  CHECK(rows[0].z == -3.0);
  CHECK(rows[4].z == 1.0);
  CHECK(rows[5].delta == 1e-2);
  CHECK(rows[2].value == 0.0);                     // z = -1 = -delta
  CHECK(rows[3].value == doctest::Approx(1.5));  // z = 0, quadratic branch
  std::stringstream out;
  write_barrier_table(out, rows);
  CHECK(out.str().rfind(std::string(kBarrierHeader) + "\n", 0) == 0);
  CHECK_THROWS_AS(barrier_table({1.0}, 1.0, -1.0, 5), std::invalid_argument);
}

TEST_CASE("algorithm names") {
  CHECK(parse_algorithm("pgd") == Algorithm::pgd);
  CHECK(std::string(to_string(Algorithm::gd)) == "gd");
  CHECK_THROWS_AS(parse_algorithm("adam"), std::invalid_argument);
}

TEST_CASE("time to tolerance and the constraint sweep") {
  SweepConfig sweep;
  sweep.base.d = 5;
  sweep.base.n = 3;
  sweep.base.radius2 = 1.0;
  sweep.base.target_norm = 2.0;
  sweep.m_list = {10, 40};
  sweep.seeds = {1, 2};
  sweep.algorithms = {Algorithm::sgd, Algorithm::gd, Algorithm::pgd};
  sweep.reference_delta = 1e-8;
  sweep.reference_grad_tol = 1e-8;
  sweep.timing.tol = 0.05;
  sweep.timing.sgd_budget = 200'000;
  sweep.timing.gd_budget = 20'000;
  sweep.timing.pgd_budget = 20'000;
  sweep.timing.warmup_iterations = 10;
  const auto rows = sweep_constraints(sweep);
  REQUIRE(rows.size() == 12);
  CHECK(rows[0].m == 10);
  CHECK(rows[0].seed == 1);
  CHECK(rows[0].algorithm == "sgd");
  CHECK(rows[1].algorithm == "gd");
  CHECK(rows[2].algorithm == "pgd");
  CHECK(rows[3].seed == 2);
  CHECK(rows[6].m == 40);
  for (const auto& r : rows) {
    CHECK(r.wall_seconds >= 0.0);
    if (r.converged) CHECK(r.k_tau <= 200'000);
  }
  sweep.m_list = {40, 10};
  CHECK_THROWS_AS(sweep_constraints(sweep), std::invalid_argument);
}
