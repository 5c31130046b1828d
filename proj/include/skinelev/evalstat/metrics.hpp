#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace skinelev::evalstat {

enum class Metric { accuracy, balanced_accuracy, precision, recall, f1, auroc };

inline constexpr std::array<Metric, 6> kAllMetrics{Metric::accuracy, Metric::balanced_accuracy, Metric::precision,
                                                   Metric::recall,   Metric::f1,                Metric::auroc};

std::string to_string(Metric m);
Metric parse_metric(const std::string& s);

using ProbabilityMatrix = std::vector<std::vector<double>>;  // one row per sample

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

// Six classification metrics for one evaluated model on one split. Averages
// are macro over the classes present in the targets; F1 is the mean of
// per-class F1 scores.
struct MetricReport {
  double accuracy = 0.0;
  double balanced_accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::optional<double> auroc;  // absent when the targets hold a single class

  std::array<std::optional<Interval>, 6> ci{};  // indexed by Metric
  std::size_t n_test = 0;
  int run_id = 0;
  std::vector<std::string> warnings;

  std::optional<double> value(Metric m) const;
  const std::optional<Interval>& interval(Metric m) const { return ci[static_cast<std::size_t>(m)]; }
  void set_interval(Metric m, Interval iv) { ci[static_cast<std::size_t>(m)] = iv; }
};

// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> row);

// Area under the ROC curve for binary labels, computed as the Mann-Whitney
// statistic with mid-ranks for tied scores (equal to trapezoidal integration
// of the empirical ROC). Returns nullopt when either class is missing.
std::optional<double> binary_auroc(std::span<const double> scores, std::span<const int> positive);

// Mean over classes of the one-vs-rest AUROC, over classes that have both
// positive and negative targets. nullopt when no class qualifies.
std::optional<double> macro_auroc(const ProbabilityMatrix& probs, std::span<const int> targets);

// Throws ModelError on length mismatch, empty input, ragged rows or targets
// outside [0, num_classes).
MetricReport classification_metrics(const ProbabilityMatrix& probs, std::span<const int> targets,
                                    std::size_t num_classes);

// Single metric value; nullopt where undefined (AUROC on one class).
std::optional<double> compute_metric(Metric m, const ProbabilityMatrix& probs, std::span<const int> targets,
                                     std::size_t num_classes);

}  // namespace skinelev::evalstat
