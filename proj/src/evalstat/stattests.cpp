#include "skinelev/evalstat/stattests.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "skinelev/error.hpp"

namespace skinelev::evalstat {

namespace {

double midp_exact_small(std::uint64_t n, std::uint64_t k) {
  // numerator = 2 * sum_{i<k} C(n,i) + C(n,k), denominator 2^n; every term
  // fits in 64 bits for n <= 62.
  std::uint64_t choose = 1;  // C(n, 0)
  std::uint64_t below = 0;
  for (std::uint64_t i = 0; i < k; ++i) {
    below += choose;
    choose = choose * (n - i) / (i + 1);  // exact: C(n,i)*(n-i) is divisible by i+1
  }
  const std::uint64_t numerator = 2 * below + choose;
  return std::ldexp(static_cast<double>(numerator), -static_cast<int>(n));
}

double midp_log_space(std::uint64_t n, std::uint64_t k) {
  const double dn = static_cast<double>(n);
  const double log_half_n = -dn * std::log(2.0);
  auto log_pmf = [&](std::uint64_t i) {
    const double di = static_cast<double>(i);
    return std::lgamma(dn + 1.0) - std::lgamma(di + 1.0) - std::lgamma(dn - di + 1.0) + log_half_n;
  };
  // Terms increase with i up to n/2, so the largest is at k.
  const double top = log_pmf(k);
  double below = 0.0;
  for (std::uint64_t i = 0; i < k; ++i) below += std::exp(log_pmf(i) - top);
  return std::exp(top) * (2.0 * below + 1.0);
}

}  // namespace

double mcnemar_midp(std::uint64_t b, std::uint64_t c) {
  const std::uint64_t n = b + c;
  if (n == 0) throw ModelError("no discordant pairs");
  const std::uint64_t k = std::min(b, c);
  const double p = n <= 62 ? midp_exact_small(n, k) : midp_log_space(n, k);
  return std::clamp(p, 0.0, 1.0);
}

StatTestResult mcnemar_midp(std::span<const bool> correct_a, std::span<const bool> correct_b) {
  if (correct_a.size() != correct_b.size()) throw ModelError("McNemar: paired lists differ in length");
  StatTestResult r;
  for (std::size_t i = 0; i < correct_a.size(); ++i) {
    if (correct_a[i] && !correct_b[i]) ++r.discordant_b;
    if (!correct_a[i] && correct_b[i]) ++r.discordant_c;
  }
  r.midp_value = mcnemar_midp(r.discordant_b, r.discordant_c);
  return r;
}

double cohens_d(std::span<const double> group_a, std::span<const double> group_b) {
  if (group_a.size() < 2 || group_b.size() < 2) throw ModelError("Cohen's d needs at least two values per group");
  auto mean = [](std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
  auto sum_sq = [](std::span<const double> v, double m) {
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s;
  };
  const double ma = mean(group_a);
  const double mb = mean(group_b);
  const double na = static_cast<double>(group_a.size());
  const double nb = static_cast<double>(group_b.size());
  // (n-1) s^2 is the centered sum of squares.
  const double pooled_var = (sum_sq(group_a, ma) + sum_sq(group_b, mb)) / (na + nb - 2.0);
  if (!(pooled_var > 0.0) || !std::isfinite(pooled_var)) {
    throw ModelError("Cohen's d undefined: pooled variance is zero");
  }
  return (mb - ma) / std::sqrt(pooled_var);
}

}  // namespace skinelev::evalstat
