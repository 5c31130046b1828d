#include "skinelev/evalstat/bootstrap.hpp"

#include <algorithm>
#include <cmath>

#include "skinelev/error.hpp"
#include "skinelev/random.hpp"

namespace skinelev::evalstat {

namespace {

void check_options(const BootstrapOptions& o) {
  if (!(o.level > 0.0 && o.level < 1.0)) throw ConfigError("bootstrap level must lie in (0, 1)");
  if (o.resamples < 100) throw ConfigError("bootstrap needs at least 100 resamples");
}

template <typename StatFn>
Interval percentile_interval(std::size_t n, const BootstrapOptions& o, StatFn&& stat) {
  std::vector<std::size_t> idx(n);
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(o.resamples));
  for (int r = 0; r < o.resamples; ++r) {
    Rng rng(derive_seed(o.seed, r));
    for (auto& i : idx) i = rng.below(n);
    if (auto v = stat(idx)) values.push_back(*v);
  }
  if (values.empty()) throw ModelError("bootstrap: metric undefined on every resample");
  std::sort(values.begin(), values.end());
  const double alpha = 1.0 - o.level;
  return {quantile_sorted(values, alpha / 2.0), quantile_sorted(values, 1.0 - alpha / 2.0)};
}

}  // namespace

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ModelError("quantile of empty data");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Interval bootstrap_ci(const ProbabilityMatrix& probs, std::span<const int> targets, std::size_t num_classes,
                      Metric metric, const BootstrapOptions& options) {
  check_options(options);
  if (probs.empty()) throw ModelError("bootstrap: empty input");
  if (probs.size() != targets.size()) throw ModelError("bootstrap: predictions and targets differ in length");
  ProbabilityMatrix sample_probs(probs.size());
  std::vector<int> sample_targets(probs.size());
  return percentile_interval(probs.size(), options, [&](const std::vector<std::size_t>& idx) {
    for (std::size_t i = 0; i < idx.size(); ++i) {
      sample_probs[i] = probs[idx[i]];
      sample_targets[i] = targets[idx[i]];
    }
    return compute_metric(metric, sample_probs, sample_targets, num_classes);
  });
}

Interval bootstrap_ci(std::span<const bool> correct, const BootstrapOptions& options) {
  check_options(options);
  if (correct.empty()) throw ModelError("bootstrap: empty input");
  return percentile_interval(correct.size(), options, [&](const std::vector<std::size_t>& idx) {
    std::size_t hits = 0;
    for (auto i : idx) hits += correct[i] ? 1 : 0;
    return std::optional<double>(static_cast<double>(hits) / static_cast<double>(idx.size()));
  });
}

void attach_intervals(MetricReport& report, const ProbabilityMatrix& probs, std::span<const int> targets,
                      std::size_t num_classes, const BootstrapOptions& options) {
  for (Metric m : kAllMetrics) {
    const auto point = report.value(m);
    if (!point) continue;
    Interval iv = bootstrap_ci(probs, targets, num_classes, m, options);
    iv.low = std::min(iv.low, *point);
    iv.high = std::max(iv.high, *point);
    report.set_interval(m, iv);
  }
}

}  // namespace skinelev::evalstat
