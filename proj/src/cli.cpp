#include "rbsgd/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "rbsgd/bench.hpp"
#include "rbsgd/central.hpp"
#include "rbsgd/config.hpp"
#include "rbsgd/csv.hpp"
#include "rbsgd/problem_io.hpp"
#include "rbsgd/solvers.hpp"
#include "rbsgd/theory.hpp"

namespace rbsgd {
namespace {

namespace fs = std::filesystem;

class VerificationFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config_path;
  std::string problem_path;
  std::string output_dir;
};

struct Context {
  RunConfig config;
  fs::path out_dir;
  std::ostream& out;
  std::ostream& err;
};

Context make_context(const Common& common, std::ostream& out, std::ostream& err) {
  RunConfig config = common.config_path.empty() ? RunConfig{} : load_config(common.config_path);
  if (common.config_path.empty()) config.validate();
  fs::path dir = config.output.directory;
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') dir = env;
  if (!common.output_dir.empty()) dir = common.output_dir;
  fs::create_directories(dir);
  return {std::move(config), std::move(dir), out, err};
}

Problem obtain_problem(const Context& ctx, const Common& common) {
  if (!common.problem_path.empty()) return load_problem(common.problem_path);
  return generate_ellipsoid_problem(ctx.config.problem);
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  return file;
}

Vector central(const Context& ctx, const Problem& p, double delta) {
  const CentralPoint cp = solve_central_point(p, delta, ctx.config.solver.central_grad_tol);
  return cp.x;
}

void require_valid_schedules(const RunConfig& c) {
  const Schedules s = c.solver.schedules();
  const ValidityReport report = validate(s.gamma, s.barrier.epsilon);
  if (!report.valid() && !c.solver.force) throw ScheduleRejected(report);
}

int cmd_generate(const Common& common, const std::string& out_path, std::ostream& out, std::ostream& err) {
  const Context ctx = make_context(common, out, err);
  const Problem p = generate_ellipsoid_problem(ctx.config.problem);
  const fs::path path = out_path.empty() ? ctx.out_dir / "problem.rbp" : fs::path(out_path);
  save_problem(path, p);
  out << fmt::format("wrote {}\nbeta = {}\nmu = {}\nL = {}\ndigest = {:016x}\n", path.string(),
                     format_double(p.objective.beta), format_double(p.objective.mu),
                     format_double(p.objective.lipschitz), problem_digest(p));
  return kExitOk;
}

int cmd_solve(const Common& common, bool force, std::ostream& out, std::ostream& err) {
  Context ctx = make_context(common, out, err);
  if (force) ctx.config.solver.force = true;
  const RunConfig& c = ctx.config;
  const Problem p = obtain_problem(ctx, common);
  if (c.solver.algorithm == Algorithm::sgd) require_valid_schedules(c);

  Anchors anchors;
  anchors.x_star = central(ctx, p, c.solver.delta_inf);
  anchors.x_ref = central(ctx, p, c.solver.reference_delta);

  std::vector<Trajectory> trajectories;
  if (c.solver.algorithm == Algorithm::sgd && c.runs.trajectories > 1) {
    EnsembleConfig ec;
    ec.sgd = c.sgd_config();
    ec.run = c.run_options();
    ec.runs = c.runs.trajectories;
    ec.workers = c.runs.workers;
    ec.keep_trajectories = true;
    EnsembleStats stats = run_ensemble(p, ec, anchors);
    auto file = open_output(ctx.out_dir / "ensemble.csv");
    write_ensemble(file, stats);
    out << fmt::format("ensemble: {} runs, config hash {:016x}, final mean error {}, {} of {} reached tol {}\n",
                       stats.runs, stats.config_hash, format_double(stats.mean_err.back()),
                       stats.reached_tolerance(), stats.runs, format_double(c.solver.stop.tol));
    trajectories = std::move(stats.trajectories);
  } else {
    RunOptions options = c.run_options();
    const double step = c.solver.gamma.coefficient;
    switch (c.solver.algorithm) {
      case Algorithm::sgd:
        trajectories.push_back(run_sgd(p, c.sgd_config(), options, anchors));
        break;
      case Algorithm::gd:
        trajectories.push_back(run_gd(p, step, c.solver.schedules().barrier, options, anchors));
        break;
      case Algorithm::pgd:
        trajectories.push_back(run_pgd(p, step, c.solver.projection, options, anchors));
        break;
    }
    const Trajectory& t = trajectories.front();
    out << fmt::format("{}: stopped by {} at k = {}, error to x* {}\n", to_string(c.solver.algorithm),
                       to_string(t.reason), t.k_final, format_double(t.records.back().err_to_xstar));
  }
  auto file = open_output(ctx.out_dir / "trajectories.csv");
  write_trajectories(file, trajectories);
  out << fmt::format("wrote {}\n", (ctx.out_dir / "trajectories.csv").string());
  return kExitOk;
}

int cmd_bench(const Common& common, std::ostream& out, std::ostream& err) {
  const Context ctx = make_context(common, out, err);
  const std::vector<TimingRecord> rows = sweep_constraints(ctx.config.sweep_config());
  auto file = open_output(ctx.out_dir / "timing.csv");
  write_timing(file, rows);
  for (const auto& r : rows)
    out << fmt::format("{:>4} m={:<8} seed={:<4} k_tau={:<9} {:.6f} s{}\n", r.algorithm, r.m, r.seed, r.k_tau,
                       r.wall_seconds, r.converged ? "" : " (unconverged)");
  out << fmt::format("wrote {}\n", (ctx.out_dir / "timing.csv").string());
  return kExitOk;
}

int cmd_verify(const Common& common, std::ostream& out, std::ostream& err) {
  const Context ctx = make_context(common, out, err);
  const RunConfig& c = ctx.config;
  const VerifySection& v = c.verify;
  const Problem p = obtain_problem(ctx, common);
  const Schedules s = c.solver.schedules();
  const TheoryConstants k = compute_constants(p, c.solver.delta_inf, c.solver.central_grad_tol);
  out << fmt::format(
      "constants: a_bar={} a_bbar={} a_hat={} b_bar={} b_bbar={} c_hat={} L_hat={} sigma_phi={}\n",
      format_double(k.a_bar), format_double(k.a_bbar), format_double(k.a_hat), format_double(k.b_bar),
      format_double(k.b_bbar), format_double(k.c_hat), format_double(k.L_hat), format_double(k.sigma_phi));

  std::vector<BoundCheck> rows = sample_unbiasedness_checks(p, k, c.solver.delta_inf, v.unbiased_points, v.radius, v.seed);
  BoundSampling plan;
  plan.samples = v.samples;
  plan.radius = v.radius;
  plan.k_max = v.k_max;
  plan.seed = v.seed;
  plan.workers = c.runs.workers;
  for (auto& row : sample_appendix_checks(p, k, s.barrier, plan)) rows.push_back(std::move(row));
  for (std::uint64_t kk = 1; kk <= v.k_max; kk *= 10) rows.push_back(check_c0(k, s.barrier, kk));

  std::uint64_t k0 = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t k_start = 1;
  try {
    k0 = find_k0(k, s, v.k0_budget);
    k_start = k0;
    out << fmt::format("k0 = {}\n", k0);
  } catch (const K0NotFound& e) {
    err << "warning: " << e.what() << "; descent rows are informational only\n";
  }
  DescentSampling descent;
  descent.runs = v.descent_runs;
  descent.states_per_run = v.descent_states;
  descent.span = v.descent_span;
  descent.seed = v.seed;
  for (auto& row : sample_descent_checks(p, k, s, k_start, k0, descent)) rows.push_back(std::move(row));

  auto file = open_output(ctx.out_dir / "bounds.csv");
  write_bounds(file, rows);
  file.close();

  std::map<std::string, std::pair<std::size_t, std::size_t>> tally;  // rows, violations
  std::size_t failures = 0;
  for (const auto& r : rows) {
    auto& t = tally[r.bound];
    ++t.first;
    if (!r.holds) ++t.second;
    if (r.gated && !r.holds) ++failures;
  }
  for (const auto& [name, t] : tally) out << fmt::format("{:<16} rows={:<7} violations={}\n", name, t.first, t.second);
  out << fmt::format("wrote {}\n", (ctx.out_dir / "bounds.csv").string());
  if (failures > 0) throw VerificationFailed(fmt::format("{} gated bound checks failed", failures));
  return kExitOk;
}

int cmd_central(const Common& common, std::vector<double> deltas, std::optional<double> grad_tol, std::ostream& out,
                std::ostream& err) {
  const Context ctx = make_context(common, out, err);
  const Problem p = obtain_problem(ctx, common);
  if (deltas.empty()) deltas.push_back(ctx.config.solver.delta_inf);
  const double tol = grad_tol.value_or(ctx.config.solver.central_grad_tol);
  std::vector<Vector> points;
  for (const double delta : deltas) {
    const CentralPoint cp = solve_central_point(p, delta, tol);
    const fs::path path = ctx.out_dir / fmt::format("central_{}.csv", format_double(delta));
    auto file = open_output(path);
    file << "index,x\n";
    for (Index i = 0; i < cp.x.size(); ++i) file << i << ',' << format_double(cp.x[i]) << '\n';
    out << fmt::format("delta = {}: {} Newton steps, gradient norm {:.3e}, max violation {:.3e}, wrote {}\n",
                       format_double(delta), cp.iterations, cp.grad_norm, max_violation(p, cp.x), path.string());
    points.push_back(cp.x);
  }
  for (std::size_t t = 1; t < points.size(); ++t)
    out << fmt::format("||x*({}) - x*({})|| = {}\n", format_double(deltas[t - 1]), format_double(deltas[t]),
                       format_double((points[t] - points[t - 1]).norm()));
  return kExitOk;
}

int cmd_plot_data(const Common& common, const std::vector<double>& deltas, double z_lo, double z_hi, int points,
                  std::ostream& out, std::ostream& err) {
  const Context ctx = make_context(common, out, err);
  const auto rows = barrier_table(deltas, z_lo, z_hi, points);
  const fs::path path = ctx.out_dir / "barrier.csv";
  auto file = open_output(path);
  write_barrier_table(file, rows);
  out << fmt::format("wrote {}\n", path.string());
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Relaxed-barrier SGD for linearly constrained finite sums", "rbsgd"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Print help for every subcommand");
  app.footer(fmt::format("Exit codes: 0 ok, 1 usage or configuration error, 2 runtime failure, 3 verification "
                         "failure.\nThe output directory is taken from --output-dir, then ${}, then "
                         "output.directory in the config.",
                         kOutputDirEnv));

  Common common;
  auto add_common = [&](CLI::App* sub, bool with_problem) {
    sub->add_option("-c,--config", common.config_path, "JSON run configuration (comments allowed)");
    if (with_problem) sub->add_option("-p,--problem", common.problem_path, "Problem file; generated from the config if omitted");
    sub->add_option("-o,--output-dir", common.output_dir, "Directory for artifacts");
  };

  auto* generate = app.add_subcommand("generate", "Generate the ellipsoid benchmark problem and save it");
  add_common(generate, false);
  std::string problem_out;
  generate->add_option("--out", problem_out, "Problem file path (default <output-dir>/problem.rbp)");

  auto* solve = app.add_subcommand("solve", "Run the configured solver; writes trajectories.csv (and ensemble.csv)");
  add_common(solve, true);
  bool force = false;
  solve->add_flag("--force", force, "Run even if the schedules violate the convergence conditions");

  auto* bench = app.add_subcommand("bench", "Time-to-tolerance sweep over m; writes timing.csv");
  add_common(bench, false);

  auto* verify = app.add_subcommand("verify", "Check the convergence inequalities; writes bounds.csv");
  add_common(verify, true);

  auto* central_cmd = app.add_subcommand("central", "Solve central points x*(delta); writes central_<delta>.csv");
  add_common(central_cmd, true);
  std::vector<double> central_deltas;
  std::optional<double> grad_tol;
  central_cmd->add_option("-d,--delta", central_deltas, "Barrier parameter; repeat to solve several and print distances");
  central_cmd->add_option("--grad-tol", grad_tol, "Gradient-norm tolerance (default solver.central_grad_tol)");

  auto* plot = app.add_subcommand("plot-data", "Tabulate the barrier and its derivatives; writes barrier.csv");
  add_common(plot, false);
  std::vector<double> plot_deltas{1.0, 1e-2, 1e-6};
  double z_lo = -3.0;
  double z_hi = 1.0;
  int points = 401;
  plot->add_option("--deltas", plot_deltas, "Barrier parameters")->capture_default_str();
  plot->add_option("--z-min", z_lo, "Left end of the z grid")->capture_default_str();
  plot->add_option("--z-max", z_hi, "Right end of the z grid")->capture_default_str();
  plot->add_option("--points", points, "Grid points per delta")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (generate->parsed()) return cmd_generate(common, problem_out, out, err);
    if (solve->parsed()) return cmd_solve(common, force, out, err);
    if (bench->parsed()) return cmd_bench(common, out, err);
    if (verify->parsed()) return cmd_verify(common, out, err);
    if (central_cmd->parsed()) return cmd_central(common, central_deltas, grad_tol, out, err);
    if (plot->parsed()) return cmd_plot_data(common, plot_deltas, z_lo, z_hi, points, out, err);
  } catch (const VerificationFailed& e) {
    err << "verification failed: " << e.what() << '\n';
    return kExitVerification;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace rbsgd
