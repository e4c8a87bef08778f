#pragma once

// Run configuration, read from JSON (comments allowed). Parsing is strict:
// unknown keys and wrongly typed values are errors, and every section is
// validated at load. Omitted keys keep the defaults below.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rbsgd/bench.hpp"
#include "rbsgd/problem.hpp"
#include "rbsgd/schedules.hpp"
#include "rbsgd/solvers.hpp"

namespace rbsgd {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SolverSection {
  Algorithm algorithm = Algorithm::sgd;
  PowerLawSchedule gamma{0.3, 0.8};  // gd and pgd use gamma.c as a constant step
  PowerLawSchedule epsilon{5.0, 0.3};
  double delta_inf = 1e-6;
  std::uint64_t budget = 20'000;
  StopRule stop{StopMode::budget, 0.01, 1};
  double reference_delta = 1e-9;  // delta of the constrained-optimum proxy
  double central_grad_tol = 1e-10;
  Batch batch;
  std::optional<std::vector<double>> x0;
  bool force = false;
  ProjectionOptions projection;

  Schedules schedules() const;
};

struct RunsSection {
  std::size_t trajectories = 1;
  std::uint64_t record_every = 0;  // 0 records on the geometric grid 1, 2, 4, ...
  std::uint64_t master_seed = 1;
  unsigned workers = 0;
  bool wall_clock = true;  // false writes wall_ns = 0
};

struct OutputSection {
  std::string directory = "out";
};

struct VerifySection {
  std::size_t samples = 10'000;
  double radius = 30.0;
  std::uint64_t k_max = 1'000'000;
  std::size_t unbiased_points = 100;
  std::uint64_t k0_budget = 1'000'000'000'000ULL;
  std::size_t descent_runs = 10;
  std::size_t descent_states = 100;  // per run
  std::uint64_t descent_span = 10'000;
  std::uint64_t seed = 1;
};

struct TimingSection {
  std::vector<Index> m_list{100, 1'000, 10'000, 100'000};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::vector<Algorithm> algorithms{Algorithm::sgd, Algorithm::gd, Algorithm::pgd};
  double gd_gamma = 1e-2;
  double pgd_gamma = 1e-2;
  std::uint64_t sgd_budget = 1'000'000;
  std::uint64_t gd_budget = 100'000;
  std::uint64_t pgd_budget = 100'000;
  std::uint64_t warmup_iterations = 100;
};

struct RunConfig {
  GeneratorSpec problem;
  SolverSection solver;
  RunsSection runs;
  OutputSection output;
  VerifySection verify;
  TimingSection timing;

  void validate() const;
  RecordGrid record_grid() const;
  RunOptions run_options() const;
  SgdConfig sgd_config() const;
  SweepConfig sweep_config() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace rbsgd
