#include "rbsgd/schedules.hpp"

#include <cmath>
#include <stdexcept>

namespace rbsgd {

double PowerLawSchedule::operator()(std::uint64_t k) const {
  if (k == 0) throw std::out_of_range("schedule index starts at k = 1");
  if (exponent == 0.0) return coefficient;
  return coefficient * std::pow(static_cast<double>(k), -exponent);
}

void PowerLawSchedule::validate() const {
  if (!std::isfinite(coefficient) || coefficient < 0.0)
    throw std::invalid_argument("power-law coefficient must be finite and non-negative");
  if (!std::isfinite(exponent) || exponent < 0.0)
    throw std::invalid_argument("power-law exponent must be finite and non-negative");
}

double Sequence::operator()(std::uint64_t k) const {
  if (const auto* law = power_law()) return (*law)(k);
  if (k == 0) throw std::out_of_range("schedule index starts at k = 1");
  return std::get<CustomSequence>(impl_).at(k);
}

bool Sequence::monotone() const { return power_law() != nullptr; }

double BarrierSchedule::delta(std::uint64_t k) const { return delta_inf + epsilon(k); }

void BarrierSchedule::validate() const {
  if (!(delta_inf > 0.0) || !std::isfinite(delta_inf))
    throw std::invalid_argument("delta_inf must be positive and finite");
  if (const auto* law = epsilon.power_law()) law->validate();
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::holds:
      return "holds";
    case Verdict::violated:
      return "violated";
    case Verdict::unknown:
      return "unknown";
  }
  return "unknown";
}

std::string ValidityReport::describe() const {
  std::string out;
  auto note = [&out](Verdict v, const char* text) {
    if (v == Verdict::holds) return;
    if (!out.empty()) out += "; ";
    out += text;
    out += v == Verdict::violated ? " violated" : " cannot be decided";
  };
  note(steps_diverge, "condition (a) sum gamma_k = inf");
  note(squares_summable, "condition (b) sum gamma_k^2 < inf");
  note(gap_summable, "condition (c) sum gamma_k*eps_k < inf");
  return out;
}

ValidityReport validate(const Sequence& gamma, const Sequence& epsilon) {
  ValidityReport report;
  const auto* g = gamma.power_law();
  if (g == nullptr || g->coefficient <= 0.0) {
    if (g != nullptr) {
      // gamma_k == 0 never moves; (a) fails outright.
      report.steps_diverge = Verdict::violated;
      report.squares_summable = Verdict::holds;
      report.gap_summable = Verdict::holds;
    }
    return report;
  }
  const double p = g->exponent;
  // p-series: sum k^-s converges iff s > 1.
  report.steps_diverge = p <= 1.0 ? Verdict::holds : Verdict::violated;
  report.squares_summable = 2.0 * p > 1.0 ? Verdict::holds : Verdict::violated;

  const auto* e = epsilon.power_law();
  if (e == nullptr) {
    report.gap_summable = Verdict::unknown;
  } else if (e->coefficient == 0.0) {
    report.gap_summable = Verdict::holds;
  } else {
    report.gap_summable = p + e->exponent > 1.0 ? Verdict::holds : Verdict::violated;
  }
  return report;
}

}  // namespace rbsgd
