#include "rbsgd/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace rbsgd {
namespace {

using nlohmann::json;

// Walks one JSON object, rejecting keys outside `allowed`.
class Section {
 public:
  Section(const json& node, std::string path, std::initializer_list<const char*> allowed)
      : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(fmt::format("{}: expected an object", label()));
    for (const auto& [key, _] : node_.items()) {
      bool known = false;
      for (const char* a : allowed) known = known || key == a;
      if (!known) throw ConfigError(fmt::format("unknown key '{}'", qualified(key)));
    }
  }

  bool has(const char* key) const { return node_.contains(key); }
  const json& at(const char* key) const { return node_.at(key); }
  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <class T>
  void read(const char* key, T& out) const {
    if (!has(key)) return;
    const json& v = node_.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError("expected a boolean");
        out = v.get<bool>();
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError("expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.is_number_unsigned()) {
            out = v.get<T>();
          } else {
            if (v.get<std::int64_t>() < 0) throw ConfigError("expected a non-negative integer");
            out = static_cast<T>(v.get<std::int64_t>());
          }
        } else {
          out = v.get<T>();
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError("expected a number");
        out = v.get<T>();
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError("expected a string");
        out = v.get<std::string>();
      } else {
        static_assert(sizeof(T) == 0, "unsupported config type");
      }
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{}: {}", qualified(key), e.what()));
    }
  }

  void read_pair(const char* key, std::pair<double, double>& out) const {
    if (!has(key)) return;
    const json& v = node_.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      throw ConfigError(fmt::format("{}: expected [lo, hi]", qualified(key)));
    out = {v[0].get<double>(), v[1].get<double>()};
  }

 private:
  std::string label() const { return path_.empty() ? "config" : path_; }

  const json& node_;
  std::string path_;
};

PowerLawSchedule read_law(const Section& parent, const char* key, const char* exponent_key, PowerLawSchedule law) {
  if (!parent.has(key)) return law;
  const Section s(parent.at(key), parent.qualified(key), {"c", exponent_key});
  s.read("c", law.coefficient);
  s.read(exponent_key, law.exponent);
  return law;
}

StopMode parse_stop_mode(const std::string& name) {
  if (name == "budget") return StopMode::budget;
  if (name == "tolerance") return StopMode::tolerance;
  throw ConfigError(fmt::format("solver.stop.mode: unknown mode '{}' (expected budget or tolerance)", name));
}

Algorithm read_algorithm(const std::string& path, const std::string& name) {
  try {
    return parse_algorithm(name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
}

void read_problem(const Section& root, GeneratorSpec& spec) {
  if (!root.has("problem")) return;
  const Section s(root.at("problem"), "problem",
                  {"d", "m", "n", "seed", "radius2", "q_range", "alpha_range", "target_norm"});
  s.read("d", spec.d);
  s.read("m", spec.m);
  s.read("n", spec.n);
  s.read("seed", spec.seed);
  s.read("radius2", spec.radius2);
  s.read_pair("q_range", spec.q_range);
  s.read_pair("alpha_range", spec.alpha_range);
  s.read("target_norm", spec.target_norm);
}

void read_solver(const Section& root, SolverSection& out) {
  if (!root.has("solver")) return;
  const Section s(root.at("solver"), "solver",
                  {"algorithm", "gamma", "epsilon", "delta_inf", "budget", "stop", "reference_delta",
                   "central_grad_tol", "batch", "x0", "force", "projection"});
  std::string algorithm = to_string(out.algorithm);
  s.read("algorithm", algorithm);
  out.algorithm = read_algorithm("solver.algorithm", algorithm);
  out.gamma = read_law(s, "gamma", "p", out.gamma);
  out.epsilon = read_law(s, "epsilon", "q", out.epsilon);
  s.read("delta_inf", out.delta_inf);
  s.read("budget", out.budget);
  s.read("reference_delta", out.reference_delta);
  s.read("central_grad_tol", out.central_grad_tol);
  s.read("force", out.force);
  if (s.has("stop")) {
    const Section st(s.at("stop"), "solver.stop", {"mode", "tol", "stride"});
    std::string mode = out.stop.mode == StopMode::budget ? "budget" : "tolerance";
    st.read("mode", mode);
    out.stop.mode = parse_stop_mode(mode);
    st.read("tol", out.stop.tol);
    st.read("stride", out.stop.stride);
  }
  if (s.has("batch")) {
    const Section b(s.at("batch"), "solver.batch", {"bi", "bj"});
    b.read("bi", out.batch.objective);
    b.read("bj", out.batch.constraints);
  }
  if (s.has("x0") && !s.at("x0").is_null()) {
    const json& v = s.at("x0");
    if (!v.is_array()) throw ConfigError("solver.x0: expected an array of numbers or null");
    std::vector<double> x0;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError("solver.x0: expected an array of numbers or null");
      x0.push_back(e.get<double>());
    }
    out.x0 = std::move(x0);
  }
  if (s.has("projection")) {
    const Section pr(s.at("projection"), "solver.projection", {"tol", "max_sweeps"});
    pr.read("tol", out.projection.tol);
    pr.read("max_sweeps", out.projection.max_sweeps);
  }
}

void read_runs(const Section& root, RunsSection& out) {
  if (!root.has("runs")) return;
  const Section s(root.at("runs"), "runs", {"trajectories", "record_every", "master_seed", "workers", "wall_clock"});
  s.read("trajectories", out.trajectories);
  s.read("record_every", out.record_every);
  s.read("master_seed", out.master_seed);
  s.read("workers", out.workers);
  s.read("wall_clock", out.wall_clock);
}

void read_output(const Section& root, OutputSection& out) {
  if (!root.has("output")) return;
  const Section s(root.at("output"), "output", {"directory"});
  s.read("directory", out.directory);
}

void read_verify(const Section& root, VerifySection& out) {
  if (!root.has("verify")) return;
  const Section s(root.at("verify"), "verify",
                  {"samples", "radius", "k_max", "unbiased_points", "k0_budget", "descent_runs", "descent_states",
                   "descent_span", "seed"});
  s.read("samples", out.samples);
  s.read("radius", out.radius);
  s.read("k_max", out.k_max);
  s.read("unbiased_points", out.unbiased_points);
  s.read("k0_budget", out.k0_budget);
  s.read("descent_runs", out.descent_runs);
  s.read("descent_states", out.descent_states);
  s.read("descent_span", out.descent_span);
  s.read("seed", out.seed);
}

void read_timing(const Section& root, TimingSection& out) {
  if (!root.has("timing")) return;
  const Section s(root.at("timing"), "timing",
                  {"m_list", "seeds", "algorithms", "gd_gamma", "pgd_gamma", "sgd_budget", "gd_budget", "pgd_budget",
                   "warmup_iterations"});
  auto int_list = [&](const char* key, auto& dst) {
    if (!s.has(key)) return;
    const json& v = s.at(key);
    if (!v.is_array()) throw ConfigError(fmt::format("timing.{}: expected an array of integers", key));
    dst.clear();
    for (const auto& e : v) {
      if (!e.is_number_integer() || e.get<std::int64_t>() < 0)
        throw ConfigError(fmt::format("timing.{}: expected an array of non-negative integers", key));
      dst.push_back(static_cast<typename std::decay_t<decltype(dst)>::value_type>(e.get<std::int64_t>()));
    }
  };
  int_list("m_list", out.m_list);
  int_list("seeds", out.seeds);
  if (s.has("algorithms")) {
    const json& v = s.at("algorithms");
    if (!v.is_array()) throw ConfigError("timing.algorithms: expected an array of names");
    out.algorithms.clear();
    for (const auto& e : v) {
      if (!e.is_string()) throw ConfigError("timing.algorithms: expected an array of names");
      out.algorithms.push_back(read_algorithm("timing.algorithms", e.get<std::string>()));
    }
  }
  s.read("gd_gamma", out.gd_gamma);
  s.read("pgd_gamma", out.pgd_gamma);
  s.read("sgd_budget", out.sgd_budget);
  s.read("gd_budget", out.gd_budget);
  s.read("pgd_budget", out.pgd_budget);
  s.read("warmup_iterations", out.warmup_iterations);
}

// Re-throws the validators' messages as configuration errors.
template <class F>
void checked(F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

Schedules SolverSection::schedules() const {
  Schedules s;
  s.gamma = gamma;
  s.barrier = BarrierSchedule{delta_inf, epsilon};
  return s;
}

void RunConfig::validate() const {
  checked([&] { problem.validate(); });
  checked([&] {
    solver.gamma.validate();
    solver.epsilon.validate();
    solver.schedules().barrier.validate();
  });
  if (!(solver.reference_delta > 0.0)) throw ConfigError("solver.reference_delta must be positive");
  if (!(solver.central_grad_tol > 0.0)) throw ConfigError("solver.central_grad_tol must be positive");
  if (!(solver.stop.tol > 0.0)) throw ConfigError("solver.stop.tol must be positive");
  if (solver.stop.stride < 1) throw ConfigError("solver.stop.stride must be >= 1");
  if (solver.batch.objective < 1 || solver.batch.constraints < 1) throw ConfigError("solver.batch: bi, bj >= 1 required");
  if (solver.x0 && static_cast<Index>(solver.x0->size()) != problem.d)
    throw ConfigError(fmt::format("solver.x0 has {} entries, problem.d is {}", solver.x0->size(), problem.d));
  if (solver.algorithm != Algorithm::sgd && solver.gamma.exponent != 0.0)
    throw ConfigError("gd and pgd take a constant step: set solver.gamma.p to 0");
  if (solver.algorithm != Algorithm::sgd && !(solver.gamma.coefficient > 0.0))
    throw ConfigError("gd and pgd need solver.gamma.c > 0");
  if (!(solver.projection.tol > 0.0)) throw ConfigError("solver.projection.tol must be positive");
  if (runs.trajectories < 1) throw ConfigError("runs.trajectories >= 1 required");
  if (output.directory.empty()) throw ConfigError("output.directory must not be empty");
  if (!(verify.radius > 0.0)) throw ConfigError("verify.radius must be positive");
  if (verify.k_max < 1) throw ConfigError("verify.k_max >= 1 required");
  if (verify.descent_states < 1) throw ConfigError("verify.descent_states >= 1 required");
  if (timing.m_list.empty() || timing.seeds.empty() || timing.algorithms.empty())
    throw ConfigError("timing: m_list, seeds and algorithms must be non-empty");
  for (std::size_t t = 0; t < timing.m_list.size(); ++t) {
    if (timing.m_list[t] < 1) throw ConfigError("timing.m_list: m >= 1 required");
    if (t > 0 && timing.m_list[t] < timing.m_list[t - 1]) throw ConfigError("timing.m_list must be ascending");
  }
  if (!(timing.gd_gamma > 0.0) || !(timing.pgd_gamma > 0.0)) throw ConfigError("timing step sizes must be positive");
}

RecordGrid RunConfig::record_grid() const {
  return runs.record_every == 0 ? RecordGrid::Geometric() : RecordGrid::Every(runs.record_every);
}

RunOptions RunConfig::run_options() const {
  RunOptions o;
  o.budget = solver.budget;
  o.stop = solver.stop;
  o.record = record_grid();
  if (solver.x0) o.x0 = Eigen::Map<const Vector>(solver.x0->data(), static_cast<Index>(solver.x0->size()));
  o.wall_clock = runs.wall_clock;
  return o;
}

SgdConfig RunConfig::sgd_config() const {
  SgdConfig c;
  c.schedules = solver.schedules();
  c.batch = solver.batch;
  c.seed = runs.master_seed;
  c.force = solver.force;
  return c;
}

SweepConfig RunConfig::sweep_config() const {
  SweepConfig c;
  c.base = problem;
  c.m_list = timing.m_list;
  c.seeds = timing.seeds;
  c.algorithms = timing.algorithms;
  c.timing.sgd = sgd_config();
  c.timing.gd_gamma = timing.gd_gamma;
  c.timing.pgd_gamma = timing.pgd_gamma;
  c.timing.projection = solver.projection;
  c.timing.tol = solver.stop.tol;
  c.timing.stride = solver.stop.stride;
  c.timing.sgd_budget = timing.sgd_budget;
  c.timing.gd_budget = timing.gd_budget;
  c.timing.pgd_budget = timing.pgd_budget;
  c.timing.warmup_iterations = timing.warmup_iterations;
  c.reference_delta = solver.reference_delta;
  c.reference_grad_tol = solver.central_grad_tol;
  return c;
}

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config is not valid JSON: {}", e.what()));
  }
  const Section s(root, "", {"problem", "solver", "runs", "output", "verify", "timing"});
  RunConfig c;
  read_problem(s, c.problem);
  read_solver(s, c.solver);
  read_runs(s, c.runs);
  read_output(s, c.output);
  read_verify(s, c.verify);
  read_timing(s, c.timing);
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

}  // namespace rbsgd
