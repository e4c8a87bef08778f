#pragma once

// Fixed-schema CSV tables. Numbers use the shortest round-trip decimal form,
// so reading a written table reproduces every double exactly.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rbsgd/bench.hpp"
#include "rbsgd/solvers.hpp"
#include "rbsgd/theory.hpp"

namespace rbsgd {

inline constexpr const char* kTrajectoryHeader = "run_id,k,err_to_xstar,err_to_xc,max_violation,objective,wall_ns";
inline constexpr const char* kEnsembleHeader = "k,mean_err,std_err,mean_violation,runs";
inline constexpr const char* kTimingHeader = "algorithm,m,seed,k_tau,wall_seconds,converged";
inline constexpr const char* kBoundsHeader = "bound,k,lhs,rhs,margin,holds";
inline constexpr const char* kBarrierHeader = "z,delta,value,slope,curvature";

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string format_double(double v);

struct TrajectoryRow {
  std::uint64_t run_id = 0;
  RunRecord record;
};

struct EnsembleRow {
  std::uint64_t k = 0;
  double mean_err = 0.0;
  double std_err = 0.0;
  double mean_violation = 0.0;
  std::size_t runs = 0;
};

struct BarrierRow {
  double z;
  double delta;
  double value;
  double slope;
  double curvature;
};

void write_trajectories(std::ostream& out, const std::vector<Trajectory>& runs);
std::vector<TrajectoryRow> read_trajectories(std::istream& in);

void write_ensemble(std::ostream& out, const EnsembleStats& stats);
std::vector<EnsembleRow> read_ensemble(std::istream& in);

void write_timing(std::ostream& out, const std::vector<TimingRecord>& rows);
std::vector<TimingRecord> read_timing(std::istream& in);

/// The margin column is rhs - lhs; the gated flag is carried by the bound name.
void write_bounds(std::ostream& out, const std::vector<BoundCheck>& rows);
std::vector<BoundCheck> read_bounds(std::istream& in);

/// z on an even grid over [z_lo, z_hi] for each delta.
std::vector<BarrierRow> barrier_table(const std::vector<double>& deltas, double z_lo, double z_hi, int points);
void write_barrier_table(std::ostream& out, const std::vector<BarrierRow>& rows);

}  // namespace rbsgd
