#pragma once

#include <cstdint>
#include <span>

#include "skinelev/evalstat/metrics.hpp"

namespace skinelev::evalstat {

struct BootstrapOptions {
  double level = 0.95;
  int resamples = 1000;
  std::uint64_t seed = 0;
};

// Percentile bootstrap over test items. Resample r draws its indices from a
// stream derived from (seed, r), so the interval does not depend on how the
// resamples are scheduled. Resamples on which the metric is undefined (AUROC
// with one class drawn) are skipped.
// Throws ConfigError for level outside (0,1) or fewer than 100 resamples,
// ModelError on empty input or when no resample yields a defined value.
Interval bootstrap_ci(const ProbabilityMatrix& probs, std::span<const int> targets, std::size_t num_classes,
                      Metric metric, const BootstrapOptions& options);

// Accuracy interval from per-sample correctness flags.
Interval bootstrap_ci(std::span<const bool> correct, const BootstrapOptions& options);

// Linear-interpolation quantile (Hyndman-Fan type 7) of sorted data.
double quantile_sorted(std::span<const double> sorted, double q);

// Fills every interval of `report`, widening an interval to contain its point
// estimate when the percentile interval misses it.
void attach_intervals(MetricReport& report, const ProbabilityMatrix& probs, std::span<const int> targets,
                      std::size_t num_classes, const BootstrapOptions& options);

}  // namespace skinelev::evalstat
