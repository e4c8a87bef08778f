#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rbsgd/cli.hpp"
#include "rbsgd/csv.hpp"

namespace fs = std::filesystem;
using namespace rbsgd;

namespace {

const char* kSmallConfig = R"({
  "problem": {"d": 5, "m": 50, "n": 3, "radius2": 1.0, "target_norm": 2.0},
  "solver": {"budget": 2000, "reference_delta": 1e-8, "central_grad_tol": 1e-8},
  "runs": {"wall_clock": false},
  "verify": {"samples": 50, "unbiased_points": 5, "k_max": 1000, "k0_budget": 1000000,
             "descent_runs": 1, "descent_states": 10, "descent_span": 100}
})";

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "rbsgd");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) {
    path = fs::temp_directory_path() / ("rbsgd_cli_" + name + "_" + std::to_string(std::rand()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path write(const std::string& file, const std::string& text) const {
    std::ofstream(path / file) << text;
    return path / file;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("generate writes identical files for identical configs") {
  TempDir dir("generate");
  const auto cfg = dir.write("c.json", kSmallConfig);
  const Result a = run({"generate", "-c", cfg.string(), "--out", (dir.path / "a.rbp").string()});
  const Result b = run({"generate", "-c", cfg.string(), "--out", (dir.path / "b.rbp").string()});
  CHECK(a.code == kExitOk);
  CHECK(b.code == kExitOk);
  CHECK(a.out.find("digest = ") != std::string::npos);
  CHECK(slurp(dir.path / "a.rbp") == slurp(dir.path / "b.rbp"));
  CHECK_FALSE(slurp(dir.path / "a.rbp").empty());
}

TEST_CASE("m = 0 is a usage error") {
  TempDir dir("m0");
  const auto cfg = dir.write("c.json", R"({"problem": {"m": 0}})");
  const Result r = run({"generate", "-c", cfg.string(), "-o", dir.path.string()});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("m >= 1 required") != std::string::npos);
}

TEST_CASE("invalid schedules are refused citing the failed condition") {
  TempDir dir("refuse");
  const auto cfg = dir.write("c.json", R"({
    "problem": {"d": 5, "m": 20, "n": 3, "radius2": 1.0, "target_norm": 2.0},
    "solver": {"gamma": {"c": 0.3, "p": 0.4}, "epsilon": {"c": 5, "q": 1.0}, "budget": 100,
               "reference_delta": 1e-8, "central_grad_tol": 1e-8},
    "runs": {"wall_clock": false}
  })");
  const Result refused = run({"solve", "-c", cfg.string(), "-o", dir.path.string()});
  CHECK(refused.code == kExitUsage);
  CHECK(refused.err.find("condition (b)") != std::string::npos);
  CHECK_FALSE(fs::exists(dir.path / "trajectories.csv"));
  const Result forced = run({"solve", "-c", cfg.string(), "-o", dir.path.string(), "--force"});
  CHECK(forced.code == kExitOk);
  CHECK(fs::exists(dir.path / "trajectories.csv"));
}

TEST_CASE("solve writes reproducible trajectories and an ensemble") {
  TempDir dir("solve");
  const auto cfg = dir.write("c.json", kSmallConfig);
  REQUIRE(run({"solve", "-c", cfg.string(), "-o", (dir.path / "a").string()}).code == kExitOk);
  REQUIRE(run({"solve", "-c", cfg.string(), "-o", (dir.path / "b").string()}).code == kExitOk);
  CHECK(slurp(dir.path / "a" / "trajectories.csv") == slurp(dir.path / "b" / "trajectories.csv"));
  std::ifstream in(dir.path / "a" / "trajectories.csv");
  const auto rows = read_trajectories(in);
  REQUIRE_FALSE(rows.empty());
  CHECK(rows.back().record.k == 2000);

  const auto ens_cfg = dir.write("e.json", R"({
    "problem": {"d": 5, "m": 50, "n": 3, "radius2": 1.0, "target_norm": 2.0},
    "solver": {"budget": 500, "reference_delta": 1e-8, "central_grad_tol": 1e-8}, "runs": {"trajectories": 3, "record_every": 100}
  })");
  const Result r = run({"solve", "-c", ens_cfg.string(), "-o", (dir.path / "e").string()});
  CHECK(r.code == kExitOk);
  std::ifstream ens(dir.path / "e" / "ensemble.csv");
  const auto erows = read_ensemble(ens);
  CHECK(erows.size() == 6);
  CHECK(erows.back().runs == 3);
}

TEST_CASE("solve with gd and pgd") {
  TempDir dir("gdpgd");
  for (const char* algo : {"gd", "pgd"}) {
    const auto cfg = dir.write(std::string(algo) + ".json", std::string(R"({
      "problem": {"d": 5, "m": 20, "n": 3, "radius2": 1.0, "target_norm": 2.0},
      "solver": {"algorithm": ")") + algo + R"(", "gamma": {"c": 0.001, "p": 0}, "budget": 200,
                 "reference_delta": 1e-8, "central_grad_tol": 1e-8},
      "runs": {"wall_clock": false}})");
    const Result r = run({"solve", "-c", cfg.string(), "-o", (dir.path / algo).string()});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find(algo) != std::string::npos);
  }
}

TEST_CASE("central prints the distance between central points") {
  TempDir dir("central");
  const auto cfg = dir.write("c.json", kSmallConfig);
  const Result r = run({"central", "-c", cfg.string(), "-o", dir.path.string(), "-d", "1e-6", "-d", "1e-9", "--grad-tol", "1e-8"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("||x*(1e-06) - x*(1e-09)|| = ") != std::string::npos);
  CHECK(fs::exists(dir.path / "central_1e-06.csv"));
  CHECK(slurp(dir.path / "central_1e-09.csv").rfind("index,x\n", 0) == 0);
}

TEST_CASE("verify writes bounds.csv and passes") {
  TempDir dir("verify");
  const auto cfg = dir.write("c.json", kSmallConfig);
  const Result r = run({"verify", "-c", cfg.string(), "-o", dir.path.string()});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("C_norm") != std::string::npos);
  CHECK(r.err.find("descent rows are informational") != std::string::npos);
  std::ifstream in(dir.path / "bounds.csv");
  const auto rows = read_bounds(in);
  CHECK(rows.size() >= 4 * 50 + 10);
  for (const auto& row : rows)
    if (row.gated) CHECK(row.holds);
}

TEST_CASE("plot-data tabulates the barrier") {
  TempDir dir("plot");
  const Result r = run({"plot-data", "-o", dir.path.string(), "--points", "11"});
  CHECK(r.code == kExitOk);
  const std::string text = slurp(dir.path / "barrier.csv");
  CHECK(text.rfind(std::string(kBarrierHeader) + "\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 3 * 11);
}

TEST_CASE("output directory precedence") {
  TempDir dir("env");
  const fs::path from_env = dir.path / "from_env";
  const fs::path from_flag = dir.path / "from_flag";
  const auto cfg = dir.write("c.json", std::string(R"({"output": {"directory": ")") +
                                           (dir.path / "from_config").string() + R"("}})");
  ::setenv(kOutputDirEnv, from_env.c_str(), 1);
  CHECK(run({"plot-data", "-c", cfg.string(), "--points", "3"}).code == kExitOk);
  CHECK(fs::exists(from_env / "barrier.csv"));
  CHECK(run({"plot-data", "-c", cfg.string(), "-o", from_flag.string(), "--points", "3"}).code == kExitOk);
  CHECK(fs::exists(from_flag / "barrier.csv"));
  ::unsetenv(kOutputDirEnv);
  CHECK(run({"plot-data", "-c", cfg.string(), "--points", "3"}).code == kExitOk);
  CHECK(fs::exists(dir.path / "from_config" / "barrier.csv"));
}

TEST_CASE("an unreachable gradient tolerance is a runtime failure naming the floor") {
  TempDir dir("floor");
  const auto cfg = dir.write("c.json", kSmallConfig);
  const Result r = run({"central", "-c", cfg.string(), "-o", dir.path.string(), "-d", "1e-9", "--grad-tol", "1e-14"});
  CHECK(r.code == kExitRuntime);
  CHECK(r.err.find("rounding floor") != std::string::npos);
}

TEST_CASE("help and usage errors") {
  const Result help = run({"--help"});
  CHECK(help.code == kExitOk);
  for (const char* sub : {"generate", "solve", "bench", "verify", "central", "plot-data"})
    CHECK(help.out.find(sub) != std::string::npos);
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"solve", "--no-such-flag"}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  TempDir dir("badcfg");
  const auto cfg = dir.write("c.json", R"({"solver": {"gama": 1}})");
  const Result bad = run({"solve", "-c", cfg.string(), "-o", dir.path.string()});
  CHECK(bad.code == kExitUsage);
  CHECK(bad.err.find("unknown key 'solver.gama'") != std::string::npos);
  CHECK(run({"solve", "-c", (dir.path / "missing.json").string(), "-o", dir.path.string()}).code != kExitOk);
}

TEST_CASE("the installed binary reports exit codes") {
  const char* exe = std::getenv("RBSGD_CLI");
  if (exe == nullptr) return;
  TempDir dir("binary");
  const auto cfg = dir.write("c.json", R"({"problem": {"m": 0}})");
  const std::string quiet = " > /dev/null 2>&1";
  auto status = [&](const std::string& args) {
    const int raw = std::system((std::string(exe) + " " + args + quiet).c_str());
    return WEXITSTATUS(raw);
  };
  CHECK(status("--help") == 0);
  CHECK(status("generate -c " + cfg.string() + " -o " + dir.path.string()) == 1);
  CHECK(status("plot-data --points 3 -o " + dir.path.string()) == 0);
}
