#include "ageus/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace ageus {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double kolmogorov_q(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double q = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * std::exp(-2.0 * k * k * lambda * lambda);
    q += (k % 2 == 1) ? term : -term;
    if (term < 1e-12) break;
  }
  return std::clamp(q, 0.0, 1.0);
}

TestResult ks_normality(const std::vector<double>& values) {
  const size_t n = values.size();
  if (n < 5) throw std::invalid_argument("need at least 5 samples");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= (n - 1);
  if (var <= 0.0) throw std::runtime_error("zero variance sample");
  const double sd = std::sqrt(var);

  std::vector<double> x = values;
  std::sort(x.begin(), x.end());
  double d = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double f = normal_cdf((x[i] - mean) / sd);
    d = std::max(d, static_cast<double>(i + 1) / n - f);
    d = std::max(d, f - static_cast<double>(i) / n);
  }
  const double sn = std::sqrt(static_cast<double>(n));
  TestResult res;
  res.statistic = d;
  res.p_value = kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
  return res;
}

TestResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired samples of unequal length");
  std::vector<double> diffs;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d != 0.0) diffs.push_back(d);
  }
  if (diffs.empty()) throw std::runtime_error("all differences zero");
  const size_t n = diffs.size();
  if (n < 5) throw std::invalid_argument("need at least 5 nonzero differences");

  // midranks of |d|, doubled so they stay integral under ties
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t i, size_t j) { return std::abs(diffs[i]) < std::abs(diffs[j]); });
  std::vector<long> rank2(n, 0);
  std::map<long, long> tie_counts;  // tie group size keyed by group start (for variance correction)
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n &&
           std::abs(diffs[order[j + 1]]) == std::abs(diffs[order[i]]))
      ++j;
    const long mid2 = static_cast<long>(i + 1 + j + 1);  // 2 * midrank
    for (size_t k = i; k <= j; ++k) rank2[order[k]] = mid2;
    tie_counts[static_cast<long>(i)] = static_cast<long>(j - i + 1);
    i = j + 1;
  }

  long w2_plus = 0, total2 = 0;
  for (size_t k = 0; k < n; ++k) {
    total2 += rank2[k];
    if (diffs[k] > 0.0) w2_plus += rank2[k];
  }
  const long w2_minus = total2 - w2_plus;

  TestResult res;
  res.statistic = 0.5 * std::min(w2_plus, w2_minus);

  if (n <= 25) {
    // exact null distribution by subset-sum DP over doubled ranks
    std::vector<double> count(total2 + 1, 0.0);
    count[0] = 1.0;
    for (size_t k = 0; k < n; ++k)
      for (long s = total2; s >= rank2[k]; --s) count[s] += count[s - rank2[k]];
    const double denom = std::pow(2.0, static_cast<double>(n));
    double le = 0.0, ge = 0.0;
    for (long s = 0; s <= total2; ++s) {
      if (s <= w2_plus) le += count[s];
      if (s >= w2_plus) ge += count[s];
    }
    res.p_value = std::min(1.0, 2.0 * std::min(le, ge) / denom);
  } else {
    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
    for (const auto& [_, t] : tie_counts)
      var -= (static_cast<double>(t) * t * t - t) / 48.0;
    const double w = 0.5 * w2_plus;
    double z = w - mean;
    z -= std::copysign(std::min(0.5, std::abs(z)), z);  // continuity correction
    z /= std::sqrt(var);
    res.p_value = std::min(1.0, 2.0 * normal_cdf(-std::abs(z)));
  }
  return res;
}

}  // namespace ageus
