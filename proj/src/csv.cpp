#include "rbsgd/csv.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <string_view>

#include <fmt/format.h>

#include "rbsgd/barrier.hpp"

namespace rbsgd {
namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
T parse_number(std::string_view field, std::size_t line) {
  T value{};
  const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size())
    throw CsvError(fmt::format("line {}: cannot parse '{}'", line, field));
  return value;
}

bool parse_bool(std::string_view field, std::size_t line) {
  if (field == "true") return true;
  if (field == "false") return false;
  throw CsvError(fmt::format("line {}: expected true or false, got '{}'", line, field));
}

// Reads the header, then calls `row(fields, line_number)` for each data line.
template <class Row>
void read_table(std::istream& in, const char* header, std::size_t columns, Row&& row) {
  std::string line;
  if (!std::getline(in, line)) throw CsvError("empty CSV input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw CsvError(fmt::format("unexpected header '{}', expected '{}'", line, header));
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != columns)
      throw CsvError(fmt::format("line {}: {} fields, expected {}", number, fields.size(), columns));
    row(fields, number);
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_trajectories(std::ostream& out, const std::vector<Trajectory>& runs) {
  out << kTrajectoryHeader << '\n';
  for (const auto& t : runs)
    for (const auto& r : t.records)
      out << t.run_id << ',' << r.k << ',' << format_double(r.err_to_xstar) << ',' << format_double(r.err_to_xc)
          << ',' << format_double(r.max_violation) << ',' << format_double(r.objective) << ',' << r.wall_ns << '\n';
}

std::vector<TrajectoryRow> read_trajectories(std::istream& in) {
  std::vector<TrajectoryRow> rows;
  read_table(in, kTrajectoryHeader, 7, [&](const auto& f, std::size_t n) {
    TrajectoryRow row;
    row.run_id = parse_number<std::uint64_t>(f[0], n);
    row.record.k = parse_number<std::uint64_t>(f[1], n);
    row.record.err_to_xstar = parse_number<double>(f[2], n);
    row.record.err_to_xc = parse_number<double>(f[3], n);
    row.record.max_violation = parse_number<double>(f[4], n);
    row.record.objective = parse_number<double>(f[5], n);
    row.record.wall_ns = parse_number<std::int64_t>(f[6], n);
    rows.push_back(row);
  });
  return rows;
}

void write_ensemble(std::ostream& out, const EnsembleStats& s) {
  out << kEnsembleHeader << '\n';
  for (std::size_t t = 0; t < s.k.size(); ++t)
    out << s.k[t] << ',' << format_double(s.mean_err[t]) << ',' << format_double(s.std_err[t]) << ','
        << format_double(s.mean_violation[t]) << ',' << s.runs << '\n';
}

std::vector<EnsembleRow> read_ensemble(std::istream& in) {
  std::vector<EnsembleRow> rows;
  read_table(in, kEnsembleHeader, 5, [&](const auto& f, std::size_t n) {
    rows.push_back({parse_number<std::uint64_t>(f[0], n), parse_number<double>(f[1], n),
                    parse_number<double>(f[2], n), parse_number<double>(f[3], n),
                    parse_number<std::size_t>(f[4], n)});
  });
  return rows;
}

void write_timing(std::ostream& out, const std::vector<TimingRecord>& rows) {
  out << kTimingHeader << '\n';
  for (const auto& r : rows)
    out << r.algorithm << ',' << r.m << ',' << r.seed << ',' << r.k_tau << ',' << format_double(r.wall_seconds) << ','
        << (r.converged ? "true" : "false") << '\n';
}

std::vector<TimingRecord> read_timing(std::istream& in) {
  std::vector<TimingRecord> rows;
  read_table(in, kTimingHeader, 6, [&](const auto& f, std::size_t n) {
    TimingRecord r;
    r.algorithm = std::string(f[0]);
    r.m = parse_number<Index>(f[1], n);
    r.seed = parse_number<std::uint64_t>(f[2], n);
    r.k_tau = parse_number<std::uint64_t>(f[3], n);
    r.wall_seconds = parse_number<double>(f[4], n);
    r.converged = parse_bool(f[5], n);
    rows.push_back(std::move(r));
  });
  return rows;
}

void write_bounds(std::ostream& out, const std::vector<BoundCheck>& rows) {
  out << kBoundsHeader << '\n';
  for (const auto& b : rows)
    out << b.bound << ',' << b.k << ',' << format_double(b.lhs) << ',' << format_double(b.rhs) << ','
        << format_double(b.margin()) << ',' << (b.holds ? "true" : "false") << '\n';
}

std::vector<BoundCheck> read_bounds(std::istream& in) {
  std::vector<BoundCheck> rows;
  read_table(in, kBoundsHeader, 6, [&](const auto& f, std::size_t n) {
    BoundCheck b;
    b.bound = std::string(f[0]);
    b.k = parse_number<std::uint64_t>(f[1], n);
    b.lhs = parse_number<double>(f[2], n);
    b.rhs = parse_number<double>(f[3], n);
    (void)parse_number<double>(f[4], n);
    b.holds = parse_bool(f[5], n);
    b.gated = b.bound.find("_pre_k0") == std::string::npos;
    rows.push_back(std::move(b));
  });
  return rows;
}

std::vector<BarrierRow> barrier_table(const std::vector<double>& deltas, double z_lo, double z_hi, int points) {
  if (points < 2) throw std::invalid_argument("barrier table needs at least 2 points");
  if (!(z_lo < z_hi)) throw std::invalid_argument("barrier table needs z_lo < z_hi");
  std::vector<BarrierRow> rows;
  rows.reserve(deltas.size() * static_cast<std::size_t>(points));
  for (const double delta : deltas)
    for (int t = 0; t < points; ++t) {
      const double z = z_lo + (z_hi - z_lo) * t / (points - 1);
      const BarrierEval e = barrier_eval(z, delta);
      rows.push_back({z, delta, e.value, e.slope, e.curvature});
    }
  return rows;
}

void write_barrier_table(std::ostream& out, const std::vector<BarrierRow>& rows) {
  out << kBarrierHeader << '\n';
  for (const auto& r : rows)
    out << format_double(r.z) << ',' << format_double(r.delta) << ',' << format_double(r.value) << ','
        << format_double(r.slope) << ',' << format_double(r.curvature) << '\n';
}

}  // namespace rbsgd
