#pragma once

#include "ageus/geometry.hpp"

#include <string>
#include <vector>

namespace ageus {

struct GaEstimate {
  double ga_weeks = 0.0;
  BiometricSet inputs;
};

// Clinical ranges (cm) observed in the reference cohort; values outside
// 3x these envelopes trigger plausibility warnings.
struct BiometricRange {
  double min_cm;
  double max_cm;
};
inline constexpr BiometricRange kHcRange{19.676, 34.267};
inline constexpr BiometricRange kBpdRange{5.315, 11.119};
inline constexpr BiometricRange kAcRange{12.332, 34.678};
inline constexpr BiometricRange kFlRange{4.299, 6.986};

// Hadlock 4-parameter equation, cm in, weeks out:
//   GA = 10.85 + 0.060*HC*FL + 0.670*BPD + 0.1680*AC
double hadlock_ga(double hc_cm, double bpd_cm, double ac_cm, double fl_cm);

// Throws "incomplete biometrics" when any of the four is absent.
GaEstimate hadlock_ga(const BiometricSet& b);

// Plausibility warnings; never throws for out-of-range values.
std::vector<std::string> validate_biometrics(const BiometricSet& b);

}  // namespace ageus
