#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <variant>

namespace rbsgd {

/// c * k^(-p), evaluated for k >= 1. Iteration indexing starts at 1; k == 0
/// throws std::out_of_range.
struct PowerLawSchedule {
  double coefficient = 1.0;
  double exponent = 0.0;

  double operator()(std::uint64_t k) const;
  void validate() const;  // coefficient >= 0, exponent >= 0, both finite
};

/// Arbitrary positive sequence. Accepted by solvers, but the validity checker
/// cannot reason about it and reports Verdict::unknown.
struct CustomSequence {
  std::function<double(std::uint64_t)> at;
  std::string name = "custom";
};

class Sequence {
 public:
  Sequence(PowerLawSchedule law) : impl_(law) {}  // NOLINT(implicit)
  Sequence(CustomSequence custom) : impl_(std::move(custom)) {}  // NOLINT(implicit)

  double operator()(std::uint64_t k) const;
  const PowerLawSchedule* power_law() const { return std::get_if<PowerLawSchedule>(&impl_); }
  /// True when the sequence is known to be non-increasing in k.
  bool monotone() const;

 private:
  std::variant<PowerLawSchedule, CustomSequence> impl_;
};

/// delta_k = delta_inf + epsilon_k.
struct BarrierSchedule {
  double delta_inf = 1e-6;
  Sequence epsilon = PowerLawSchedule{0.0, 0.0};

  double gap(std::uint64_t k) const { return epsilon(k); }
  double delta(std::uint64_t k) const;
  void validate() const;
};

enum class Verdict { holds, violated, unknown };

const char* to_string(Verdict v);

/// Step-size and barrier-adaptation conditions:
///   (a) sum gamma_k = inf, (b) sum gamma_k^2 < inf, (c) sum gamma_k eps_k < inf.
struct ValidityReport {
  Verdict steps_diverge = Verdict::unknown;     // (a)
  Verdict squares_summable = Verdict::unknown;  // (b)
  Verdict gap_summable = Verdict::unknown;      // (c)

  bool valid() const {
    return steps_diverge == Verdict::holds && squares_summable == Verdict::holds &&
           gap_summable == Verdict::holds;
  }
  /// Human-readable list of the failing conditions, empty when valid.
  std::string describe() const;
};

ValidityReport validate(const Sequence& gamma, const Sequence& epsilon);

}  // namespace rbsgd
