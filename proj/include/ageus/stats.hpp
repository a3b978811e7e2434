#pragma once

#include <utility>
#include <vector>

namespace ageus {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// One-sample Kolmogorov-Smirnov test against a normal fitted with the sample
// mean and (unbiased) standard deviation. Asymptotic p-value; no Lilliefors
// correction for the estimated parameters.
TestResult ks_normality(const std::vector<double>& values);

// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences
// are dropped; ties get midranks. Exact null distribution for n <= 25,
// tie-corrected normal approximation beyond.
TestResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b);

// Upper tail of the Kolmogorov distribution, Q(lambda) = P(K > lambda).
double kolmogorov_q(double lambda);

double normal_cdf(double z);

}  // namespace ageus
