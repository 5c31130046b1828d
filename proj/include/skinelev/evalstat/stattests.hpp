#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace skinelev::evalstat {

// Paired comparison of two models. `cohens_d` is positive when the second
// group's mean exceeds the first's.
struct StatTestResult {
  double midp_value = 1.0;
  std::uint64_t discordant_b = 0;  // first model right, second wrong
  std::uint64_t discordant_c = 0;  // first model wrong, second right
  double cohens_d = 0.0;
  std::size_t n_runs_per_group = 0;
};

// Exact McNemar mid-p from discordant counts: with n = b + c and
// k = min(b, c), mid-p = 2 P(X <= k) - P(X = k) for X ~ Binomial(n, 1/2),
// clamped to [0, 1]. Exact integer arithmetic up to n = 62, log-space sums
// beyond. Throws ModelError("no discordant pairs") when n = 0.
double mcnemar_midp(std::uint64_t b, std::uint64_t c);

// Counts discordant pairs and runs the test. Throws ModelError on length
// mismatch or when there are no discordant pairs.
StatTestResult mcnemar_midp(std::span<const bool> correct_a, std::span<const bool> correct_b);

// (mean_b - mean_a) / pooled sample standard deviation. Throws ModelError if a
// group has fewer than two values or the pooled variance is zero.
double cohens_d(std::span<const double> group_a, std::span<const double> group_b);

}  // namespace skinelev::evalstat
