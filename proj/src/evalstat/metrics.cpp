#include "skinelev/evalstat/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "skinelev/error.hpp"

namespace skinelev::evalstat {

std::string to_string(Metric m) {
  switch (m) {
    case Metric::accuracy: return "accuracy";
    case Metric::balanced_accuracy: return "balanced_accuracy";
    case Metric::precision: return "precision";
    case Metric::recall: return "recall";
    case Metric::f1: return "f1";
    case Metric::auroc: return "auroc";
  }
  return "?";
}

Metric parse_metric(const std::string& s) {
  for (Metric m : kAllMetrics) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("unknown metric '" + s + "'");
}

std::optional<double> MetricReport::value(Metric m) const {
  switch (m) {
    case Metric::accuracy: return accuracy;
    case Metric::balanced_accuracy: return balanced_accuracy;
    case Metric::precision: return precision;
    case Metric::recall: return recall;
    case Metric::f1: return f1;
    case Metric::auroc: return auroc;
  }
  return std::nullopt;
}

std::size_t argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < row.size(); ++i) {
    if (row[i] > row[best]) best = i;
  }
  return best;
}

std::optional<double> binary_auroc(std::span<const double> scores, std::span<const int> positive) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks i+1..j share their mean.
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (positive[order[k]]) {
        rank_sum_pos += mid_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

std::optional<double> macro_auroc(const ProbabilityMatrix& probs, std::span<const int> targets) {
  if (probs.empty()) return std::nullopt;
  const std::size_t k = probs.front().size();
  std::vector<double> column(probs.size());
  std::vector<int> positive(probs.size());
  double sum = 0.0;
  int defined = 0;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < probs.size(); ++i) {
      column[i] = probs[i][c];
      positive[i] = targets[i] == static_cast<int>(c);
    }
    if (auto auc = binary_auroc(column, positive)) {
      sum += *auc;
      ++defined;
    }
  }
  if (defined == 0) return std::nullopt;
  return sum / defined;
}

namespace {

void validate_inputs(const ProbabilityMatrix& probs, std::span<const int> targets, std::size_t num_classes) {
  if (probs.size() != targets.size()) {
    throw ModelError("metrics: " + std::to_string(probs.size()) + " predictions vs " +
                     std::to_string(targets.size()) + " targets");
  }
  if (probs.empty()) throw ModelError("metrics: empty evaluation set");
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i].size() != num_classes) throw ModelError("metrics: prediction row has wrong class count");
    if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= num_classes) {
      throw ModelError("metrics: target index out of range");
    }
  }
}

struct PerClass {
  std::vector<std::size_t> tp, fp, fn, support;
  std::size_t correct = 0;
};

PerClass tally(const ProbabilityMatrix& probs, std::span<const int> targets, std::size_t num_classes) {
  PerClass t;
  t.tp.assign(num_classes, 0);
  t.fp.assign(num_classes, 0);
  t.fn.assign(num_classes, 0);
  t.support.assign(num_classes, 0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const auto pred = argmax(probs[i]);
    const auto truth = static_cast<std::size_t>(targets[i]);
    ++t.support[truth];
    if (pred == truth) {
      ++t.tp[truth];
      ++t.correct;
    } else {
      ++t.fp[pred];
      ++t.fn[truth];
    }
  }
  return t;
}

struct MacroScores {
  double precision = 0, recall = 0, f1 = 0;
  std::size_t absent = 0;
};

MacroScores macro_scores(const PerClass& t) {
  MacroScores m;
  std::size_t present = 0;
  for (std::size_t c = 0; c < t.support.size(); ++c) {
    if (t.support[c] == 0) {
      ++m.absent;
      continue;
    }
    ++present;
    const double tp = static_cast<double>(t.tp[c]);
    const double recall = tp / static_cast<double>(t.support[c]);
    const double predicted = static_cast<double>(t.tp[c] + t.fp[c]);
    const double precision = predicted > 0 ? tp / predicted : 0.0;
    const double f1 = (precision + recall) > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    m.precision += precision;
    m.recall += recall;
    m.f1 += f1;
  }
  m.precision /= static_cast<double>(present);
  m.recall /= static_cast<double>(present);
  m.f1 /= static_cast<double>(present);
  return m;
}

}  // namespace

MetricReport classification_metrics(const ProbabilityMatrix& probs, std::span<const int> targets,
                                    std::size_t num_classes) {
  validate_inputs(probs, targets, num_classes);
  const PerClass t = tally(probs, targets, num_classes);
  const MacroScores macro = macro_scores(t);

  MetricReport r;
  r.n_test = probs.size();
  r.accuracy = static_cast<double>(t.correct) / static_cast<double>(probs.size());
  r.recall = macro.recall;
  r.balanced_accuracy = macro.recall;
  r.precision = macro.precision;
  r.f1 = macro.f1;
  r.auroc = macro_auroc(probs, targets);
  if (macro.absent > 0) {
    r.warnings.push_back(std::to_string(macro.absent) + " class(es) absent from targets excluded from macro averages");
  }
  if (!r.auroc) r.warnings.push_back("AUROC undefined: targets contain a single class");
  return r;
}

std::optional<double> compute_metric(Metric m, const ProbabilityMatrix& probs, std::span<const int> targets,
                                     std::size_t num_classes) {
  if (m == Metric::auroc) return macro_auroc(probs, targets);
  const PerClass t = tally(probs, targets, num_classes);
  if (m == Metric::accuracy) return static_cast<double>(t.correct) / static_cast<double>(probs.size());
  const MacroScores macro = macro_scores(t);
  switch (m) {
    case Metric::balanced_accuracy:
    case Metric::recall: return macro.recall;
    case Metric::precision: return macro.precision;
    case Metric::f1: return macro.f1;
    default: return std::nullopt;
  }
}

}  // namespace skinelev::evalstat
