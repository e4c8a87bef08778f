#include "rbsgd/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "rbsgd/central.hpp"
#include "rbsgd/problem_io.hpp"

namespace rbsgd {
namespace {

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string describe(const Sequence& s) {
  if (const auto* law = s.power_law()) return shortest(law->coefficient) + "*k^-" + shortest(law->exponent);
  return "custom";
}

std::string describe(const RecordGrid& g) {
  switch (g.kind) {
    case RecordGrid::Kind::geometric:
      return "geometric";
    case RecordGrid::Kind::stride:
      return fmt::format("stride:{}", g.every);
    case RecordGrid::Kind::endpoints:
      return "endpoints";
    case RecordGrid::Kind::list: {
      std::string out = "list";
      for (auto k : g.points) out += fmt::format(":{}", k);
      return out;
    }
  }
  return "?";
}

}  // namespace

std::size_t EnsembleStats::reached_tolerance() const {
  return static_cast<std::size_t>(std::count_if(k_tau.begin(), k_tau.end(), [](const auto& v) { return v.has_value(); }));
}

double EnsembleStats::mean_err_at(std::uint64_t kk) const {
  const auto it = std::lower_bound(k.begin(), k.end(), kk);
  if (it == k.end() || *it != kk) throw std::out_of_range(fmt::format("k = {} is not on the recording grid", kk));
  return mean_err[static_cast<std::size_t>(it - k.begin())];
}

std::uint64_t config_hash(const EnsembleConfig& c) {
  const auto& s = c.sgd.schedules;
  std::string text = fmt::format(
      "gamma={};eps={};delta_inf={};batch={},{};seed={};force={};budget={};stop={},{},{};record={};runs={};x0=",
      describe(s.gamma), describe(s.barrier.epsilon), shortest(s.barrier.delta_inf), c.sgd.batch.objective,
      c.sgd.batch.constraints, c.sgd.seed, c.sgd.force, c.run.budget, static_cast<int>(c.run.stop.mode),
      shortest(c.run.stop.tol), c.run.stop.stride, describe(c.run.record), c.runs);
  if (c.run.x0) {
    for (Index i = 0; i < c.run.x0->size(); ++i) text += shortest((*c.run.x0)[i]) + ",";
  } else {
    text += "origin";
  }
  return fnv1a(text);
}

EnsembleStats run_ensemble(const Problem& p, const EnsembleConfig& config, const Anchors& anchors) {
  if (config.runs < 1) throw std::invalid_argument("runs >= 1 required");
  if (anchors.x_star.size() != p.dim()) throw std::invalid_argument("ensemble needs the x* anchor");

  RunOptions options = config.run;
  options.stop.mode = StopMode::budget;  // aligned grids across runs; k_tau is still tracked
  options.keep_snapshots = false;

  std::vector<Trajectory> trajectories(config.runs);
  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  std::optional<EnsembleError> failure;

  auto worker = [&]() {
    for (;;) {
      const std::size_t r = next.fetch_add(1);
      if (r >= config.runs) return;
      {
        std::lock_guard lock(failure_mutex);
        if (failure) return;
      }
      RunOptions local = options;
      local.run_id = r;
      try {
        trajectories[r] = run_sgd(p, config.sgd, local, anchors);
      } catch (const std::exception& e) {
        std::lock_guard lock(failure_mutex);
        if (!failure || failure->run_id() > r)
          failure.emplace(fmt::format("run_id {} aborted: {}", r, e.what()), r);
        return;
      }
    }
  };

  unsigned workers = config.workers ? config.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, config.runs));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) throw *failure;

  EnsembleStats stats;
  stats.runs = config.runs;
  stats.config_hash = config_hash(config);
  const auto& grid = trajectories.front().records;
  const std::size_t points = grid.size();
  stats.k.resize(points);
  stats.mean_err.assign(points, 0.0);
  stats.std_err.assign(points, 0.0);
  stats.mean_violation.assign(points, 0.0);
  for (std::size_t t = 0; t < points; ++t) stats.k[t] = grid[t].k;

  const double runs = static_cast<double>(config.runs);
  for (const auto& traj : trajectories) {
    if (traj.records.size() != points) throw std::logic_error("ensemble trajectories recorded different grids");
    for (std::size_t t = 0; t < points; ++t) {
      stats.mean_err[t] += traj.records[t].err_to_xstar;
      stats.mean_violation[t] += traj.records[t].max_violation;
    }
    stats.k_tau.push_back(traj.k_tau);
  }
  for (std::size_t t = 0; t < points; ++t) {
    stats.mean_err[t] /= runs;
    stats.mean_violation[t] /= runs;
  }
  if (config.runs > 1) {
    for (const auto& traj : trajectories)
      for (std::size_t t = 0; t < points; ++t) {
        const double dev = traj.records[t].err_to_xstar - stats.mean_err[t];
        stats.std_err[t] += dev * dev;
      }
    for (auto& v : stats.std_err) v = std::sqrt(v / (runs - 1.0));
  }
  if (config.keep_trajectories) stats.trajectories = std::move(trajectories);
  return stats;
}

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::sgd:
      return "sgd";
    case Algorithm::gd:
      return "gd";
    case Algorithm::pgd:
      return "pgd";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "sgd") return Algorithm::sgd;
  if (name == "gd") return Algorithm::gd;
  if (name == "pgd") return Algorithm::pgd;
  throw std::invalid_argument(fmt::format("unknown algorithm '{}' (expected sgd, gd or pgd)", name));
}

TimingRecord time_to_tolerance(const Problem& p, Algorithm algorithm, const TimingConfig& config, const Vector& x_ref) {
  Anchors anchors;
  anchors.x_ref = x_ref;
  RunOptions options;
  options.stop = {StopMode::tolerance, config.tol, config.stride};
  options.record = RecordGrid::Endpoints();
  options.wall_clock = true;

  auto run = [&](std::uint64_t budget) {
    options.budget = budget;
    switch (algorithm) {
      case Algorithm::sgd:
        return run_sgd(p, config.sgd, options, anchors);
      case Algorithm::gd:
        return run_gd(p, config.gd_gamma, config.sgd.schedules.barrier, options, anchors);
      case Algorithm::pgd:
        return run_pgd(p, config.pgd_gamma, config.projection, options, anchors);
    }
    throw std::logic_error("unhandled algorithm");
  };
  std::uint64_t budget = 0;
  switch (algorithm) {
    case Algorithm::sgd:
      budget = config.sgd_budget;
      break;
    case Algorithm::gd:
      budget = config.gd_budget;
      break;
    case Algorithm::pgd:
      budget = config.pgd_budget;
      break;
  }
  if (config.warmup_iterations > 0) (void)run(std::min(budget, config.warmup_iterations));
  const Trajectory traj = run(budget);

  TimingRecord rec;
  rec.algorithm = to_string(algorithm);
  rec.m = p.constraint_count();
  rec.seed = p.spec.seed;
  rec.k_tau = traj.k_final;
  rec.converged = traj.reason == Termination::tolerance;
  rec.wall_seconds = std::max<std::int64_t>(1, traj.records.back().wall_ns) * 1e-9;
  return rec;
}

std::vector<TimingRecord> sweep_constraints(const SweepConfig& config) {
  if (!std::is_sorted(config.m_list.begin(), config.m_list.end()))
    throw std::invalid_argument("m_list must be ascending");
  std::vector<TimingRecord> rows;
  rows.reserve(config.m_list.size() * config.seeds.size() * config.algorithms.size());
  for (const Index m : config.m_list) {
    for (const std::uint64_t seed : config.seeds) {
      GeneratorSpec spec = config.base;
      spec.m = m;
      spec.seed = seed;
      const Problem p = generate_ellipsoid_problem(spec);
      const CentralPoint ref = solve_central_point(p, config.reference_delta, config.reference_grad_tol);
      for (const Algorithm a : config.algorithms) rows.push_back(time_to_tolerance(p, a, config.timing, ref.x));
    }
  }
  return rows;
}

}  // namespace rbsgd
