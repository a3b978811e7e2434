#include "ageus/ga.hpp"

#include <doctest.h>

#include <cmath>

using namespace ageus;

TEST_CASE("hadlock intercept case") {
  CHECK(hadlock_ga(0.0, 0.0, 0.0, 0.0) == 10.85);
}

TEST_CASE("hadlock at the cohort minima matches the published minimum GA") {
  const double ga = hadlock_ga(19.676, 5.315, 12.332, 4.299);
  CHECK(std::abs(ga - 21.558) <= 0.005);
  CHECK(std::abs(ga - 21.560) <= 0.01);
}

TEST_CASE("hadlock at the cohort medians") {
  CHECK(hadlock_ga(30.514, 8.644, 30.011, 6.232) == doctest::Approx(33.093).epsilon(1e-4));
}

TEST_CASE("hadlock is strictly increasing in each argument") {
  const double base = hadlock_ga(25.0, 7.0, 20.0, 5.0);
  CHECK(hadlock_ga(25.1, 7.0, 20.0, 5.0) > base);
  CHECK(hadlock_ga(25.0, 7.1, 20.0, 5.0) > base);
  CHECK(hadlock_ga(25.0, 7.0, 20.1, 5.0) > base);
  CHECK(hadlock_ga(25.0, 7.0, 20.0, 5.1) > base);
}

TEST_CASE("hadlock partial derivatives are the published coefficients") {
  const double h = 1e-6;
  const double d_bpd =
      (hadlock_ga(25, 7 + h, 20, 5) - hadlock_ga(25, 7 - h, 20, 5)) / (2 * h);
  const double d_ac = (hadlock_ga(25, 7, 20 + h, 5) - hadlock_ga(25, 7, 20 - h, 5)) / (2 * h);
  const double d_hc = (hadlock_ga(25 + h, 7, 20, 5) - hadlock_ga(25 - h, 7, 20, 5)) / (2 * h);
  CHECK(std::abs(d_bpd - 0.670) < 1e-9);
  CHECK(std::abs(d_ac - 0.1680) < 1e-9);
  CHECK(std::abs(d_hc - 0.060 * 5.0) < 1e-9);
}

TEST_CASE("product term is symmetric in HC and FL") {
  CHECK(hadlock_ga(25.0, 7.0, 20.0, 5.0) == doctest::Approx(hadlock_ga(5.0, 7.0, 20.0, 25.0)));
}

TEST_CASE("incomplete biometrics are rejected") {
  BiometricSet b;
  b.hc_cm = 25.0;
  b.bpd_cm = 7.0;
  b.ac_cm = 20.0;  // fl absent
  CHECK_THROWS_WITH_AS(hadlock_ga(b), "incomplete biometrics", std::runtime_error);
  b.fl_cm = 5.0;
  const auto est = hadlock_ga(b);
  CHECK(est.ga_weeks == doctest::Approx(hadlock_ga(25.0, 7.0, 20.0, 5.0)));
}

TEST_CASE("validate_biometrics accepts the cohort medians") {
  BiometricSet b;
  b.hc_cm = 30.514;
  b.bpd_cm = 8.644;
  b.ac_cm = 30.011;
  b.fl_cm = 6.232;
  CHECK(validate_biometrics(b).empty());
}

TEST_CASE("validate_biometrics flags gross outliers and missing values") {
  BiometricSet b;
  b.hc_cm = 150.0;
  b.bpd_cm = 8.0;
  b.ac_cm = 25.0;  // fl missing
  const auto warnings = validate_biometrics(b);
  REQUIRE(warnings.size() == 2);
  CHECK(warnings[0].find("HC") != std::string::npos);
  CHECK(warnings[1].find("FL") != std::string::npos);
  CHECK(warnings[1].find("missing") != std::string::npos);
}
