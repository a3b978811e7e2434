#include "ageus/ga.hpp"

#include <cmath>

namespace ageus {

double hadlock_ga(double hc_cm, double bpd_cm, double ac_cm, double fl_cm) {
  if (hc_cm < 0.0 || bpd_cm < 0.0 || ac_cm < 0.0 || fl_cm < 0.0)
    throw std::invalid_argument("negative biometric");
  return 10.85 + 0.060 * hc_cm * fl_cm + 0.670 * bpd_cm + 0.1680 * ac_cm;
}

GaEstimate hadlock_ga(const BiometricSet& b) {
  if (!b.hc_cm || !b.bpd_cm || !b.ac_cm || !b.fl_cm)
    throw std::runtime_error("incomplete biometrics");
  GaEstimate est;
  est.inputs = b;
  est.ga_weeks = hadlock_ga(*b.hc_cm, *b.bpd_cm, *b.ac_cm, *b.fl_cm);
  return est;
}

namespace {

void check(std::vector<std::string>& warnings, const char* name,
           const std::optional<double>& value, const BiometricRange& range) {
  if (!value) {
    warnings.push_back(std::string(name) + " missing");
    return;
  }
  // 3x envelope around the observed range, centered on it
  const double half = 0.5 * (range.max_cm - range.min_cm);
  const double mid = 0.5 * (range.max_cm + range.min_cm);
  const double lo = mid - 3.0 * half;
  const double hi = mid + 3.0 * half;
  if (*value < lo || *value > hi)
    warnings.push_back(std::string(name) + " implausible: " + std::to_string(*value) + " cm");
}

}  // namespace

std::vector<std::string> validate_biometrics(const BiometricSet& b) {
  std::vector<std::string> warnings;
  check(warnings, "HC", b.hc_cm, kHcRange);
  check(warnings, "BPD", b.bpd_cm, kBpdRange);
  check(warnings, "AC", b.ac_cm, kAcRange);
  check(warnings, "FL", b.fl_cm, kFlRange);
  return warnings;
}

}  // namespace ageus
