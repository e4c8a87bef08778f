#include "rbsgd/problem_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace rbsgd {
namespace {

static_assert(std::endian::native == std::endian::little, "problem files are little-endian");

using nlohmann::json;

void write_array(std::ostream& out, const double* data, std::size_t count) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
}

void read_array(std::istream& in, double* data, std::size_t count, const std::string& name) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(double))
    throw std::runtime_error("problem file truncated in array '" + name + "'");
}

json array_entry(const char* name, Index rows, Index cols) {
  return json{{"name", name}, {"rows", rows}, {"cols", cols}, {"dtype", "f64le"}};
}

}  // namespace

void write_problem(std::ostream& out, const Problem& p) {
  const auto& s = p.spec;
  json header = {
      {"label", p.label},
      {"d", p.dim()},
      {"m", p.constraint_count()},
      {"n", p.components()},
      {"seed", s.seed},
      {"radius2", s.radius2},
      {"q_range", {s.q_range.first, s.q_range.second}},
      {"alpha_range", {s.alpha_range.first, s.alpha_range.second}},
      {"target_norm", s.target_norm},
      {"beta", p.objective.beta},
      {"mu", p.objective.mu},
      {"lipschitz", p.objective.lipschitz},
      {"arrays", json::array({array_entry("q_diag", p.q_diag.size(), 1),
                              array_entry("normals", p.constraint_count(), p.dim()),
                              array_entry("offsets", p.constraint_count(), 1),
                              array_entry("alphas", p.components(), p.dim())})},
  };
  out << kProblemMagic << '\n' << header.dump() << '\n';
  write_array(out, p.q_diag.data(), static_cast<std::size_t>(p.q_diag.size()));
  write_array(out, p.constraints.normals.data(), static_cast<std::size_t>(p.constraints.normals.size()));
  write_array(out, p.constraints.offsets.data(), static_cast<std::size_t>(p.constraints.offsets.size()));
  write_array(out, p.objective.alphas.data(), static_cast<std::size_t>(p.objective.alphas.size()));
  if (!out) throw std::runtime_error("failed writing problem");
}

Problem read_problem(std::istream& in) {
  std::string magic;
  std::getline(in, magic);
  if (magic != kProblemMagic) throw std::runtime_error("not a problem file (bad magic line)");
  std::string header_line;
  std::getline(in, header_line);
  const json header = json::parse(header_line);

  Problem p;
  p.label = header.at("label").get<std::string>();
  const auto d = header.at("d").get<Index>();
  const auto m = header.at("m").get<Index>();
  const auto n = header.at("n").get<Index>();
  p.spec.d = d;
  p.spec.m = m;
  p.spec.n = n;
  p.spec.seed = header.at("seed").get<std::uint64_t>();
  p.spec.radius2 = header.at("radius2").get<double>();
  p.spec.q_range = {header.at("q_range").at(0).get<double>(), header.at("q_range").at(1).get<double>()};
  p.spec.alpha_range = {header.at("alpha_range").at(0).get<double>(), header.at("alpha_range").at(1).get<double>()};
  p.spec.target_norm = header.at("target_norm").get<double>();
  p.objective.beta = header.at("beta").get<double>();
  p.objective.mu = header.at("mu").get<double>();
  p.objective.lipschitz = header.at("lipschitz").get<double>();

  for (const auto& entry : header.at("arrays")) {
    const auto name = entry.at("name").get<std::string>();
    const auto rows = entry.at("rows").get<Index>();
    const auto cols = entry.at("cols").get<Index>();
    if (entry.at("dtype").get<std::string>() != "f64le") throw std::runtime_error("unsupported dtype in " + name);
    const auto count = static_cast<std::size_t>(rows * cols);
    if (name == "q_diag") {
      p.q_diag.resize(rows);
      read_array(in, p.q_diag.data(), count, name);
    } else if (name == "normals") {
      if (rows != m || cols != d) throw std::runtime_error("normals shape mismatch");
      p.constraints.normals.resize(rows, cols);
      read_array(in, p.constraints.normals.data(), count, name);
    } else if (name == "offsets") {
      if (rows != m) throw std::runtime_error("offsets shape mismatch");
      p.constraints.offsets.resize(rows);
      read_array(in, p.constraints.offsets.data(), count, name);
    } else if (name == "alphas") {
      if (rows != n || cols != d) throw std::runtime_error("alphas shape mismatch");
      p.objective.alphas.resize(rows, cols);
      read_array(in, p.objective.alphas.data(), count, name);
    } else {
      throw std::runtime_error("unknown array '" + name + "' in problem file");
    }
  }
  p.objective.validate();
  p.constraints.validate();
  return p;
}

void save_problem(const std::filesystem::path& path, const Problem& p) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_problem(out, p);
}

Problem load_problem(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open problem file " + path.string());
  return read_problem(in);
}

std::string serialize_problem(const Problem& p) {
  std::ostringstream out(std::ios::binary);
  write_problem(out, p);
  return std::move(out).str();
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t problem_digest(const Problem& p) { return fnv1a(serialize_problem(p)); }

}  // namespace rbsgd
