#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "skinelev/evalstat/metrics.hpp"

namespace skinelev::evalstat {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample (n-1) standard deviation
  std::size_t n = 0;
};

struct RunSummary {
  std::array<std::optional<MeanStd>, 6> metrics{};  // indexed by Metric
  std::size_t num_runs = 0;
  bool single_run_warning = false;  // n = 1: std reported as 0

  const std::optional<MeanStd>& at(Metric m) const { return metrics[static_cast<std::size_t>(m)]; }
  std::string to_text() const;  // "metric: mean ± std" lines
};

MeanStd mean_std(const std::vector<double>& values);

// Throws ModelError on an empty list.
RunSummary aggregate_runs(const std::vector<MetricReport>& reports);

}  // namespace skinelev::evalstat
