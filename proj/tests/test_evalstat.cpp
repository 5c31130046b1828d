#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include <gtest/gtest.h>

#include "skinelev/error.hpp"
#include "skinelev/evalstat/aggregate.hpp"
#include "skinelev/evalstat/bootstrap.hpp"
#include "skinelev/evalstat/metrics.hpp"
#include "skinelev/evalstat/report_io.hpp"
#include "skinelev/evalstat/stattests.hpp"
#include "skinelev/random.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace skinelev;
using namespace skinelev::evalstat;

namespace {

ProbabilityMatrix one_hot_rows(const std::vector<int>& preds, std::size_t k) {
  ProbabilityMatrix p;
  for (int c : preds) {
    std::vector<double> row(k, 0.0);
    row[static_cast<std::size_t>(c)] = 1.0;
    p.push_back(row);
  }
  return p;
}

ProbabilityMatrix random_probs(Rng& rng, std::size_t n, std::size_t k) {
  ProbabilityMatrix p(n, std::vector<double>(k));
  for (auto& row : p) {
    double s = 0;
    for (auto& v : row) s += (v = rng.uniform() + 1e-3);
    for (auto& v : row) v /= s;
  }
  return p;
}

}  // namespace

// ---------------------------------------------------------------- metrics

TEST(Metrics, HandComputedConfusion) {
  // truth 0 0 1 1 2 2, predicted 0 1 1 1 0 2
  const std::vector<int> y{0, 0, 1, 1, 2, 2};
  const auto p = one_hot_rows({0, 1, 1, 1, 0, 2}, 3);
  const auto r = classification_metrics(p, y, 3);
  EXPECT_DOUBLE_EQ(r.accuracy, 4.0 / 6.0);
  // recalls 1/2, 1, 1/2; precisions 1/2, 2/3, 1
  EXPECT_DOUBLE_EQ(r.recall, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.balanced_accuracy, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.precision, (0.5 + 2.0 / 3.0 + 1.0) / 3.0);
  const double f1 = (0.5 + 0.8 + 2.0 / 3.0) / 3.0;
  EXPECT_NEAR(r.f1, f1, 1e-15);
  EXPECT_EQ(r.n_test, 6u);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(Metrics, BalancedAccuracyIsTheMeanRecall) {
  // Per-class recalls 1, 0.5 and 0.
  const ProbabilityMatrix p{{1, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 0, 0}, {1, 0, 0}, {1, 0, 0}};
  const std::vector<int> y{0, 0, 1, 1, 2, 2};
  EXPECT_NEAR(classification_metrics(p, y, 3).balanced_accuracy, 0.5, 1e-15);
}

TEST(Metrics, AbsentClassIsExcludedWithWarning) {
  const std::vector<int> y{0, 0, 1};
  const auto r = classification_metrics(one_hot_rows({0, 0, 1}, 3), y, 3);
  EXPECT_DOUBLE_EQ(r.recall, 1.0);
  ASSERT_EQ(r.warnings.size(), 1u);
}

TEST(Metrics, SingleClassTargetsLeaveAurocUndefined) {
  const std::vector<int> y{1, 1, 1};
  const auto r = classification_metrics(one_hot_rows({1, 0, 1}, 2), y, 2);
  EXPECT_FALSE(r.auroc.has_value());
  EXPECT_FALSE(r.warnings.empty());
}

TEST(Metrics, RejectsMismatchedInput) {
  const std::vector<int> y{0, 1};
  EXPECT_THROW(classification_metrics(one_hot_rows({0}, 2), y, 2), ModelError);
  EXPECT_THROW(classification_metrics(one_hot_rows({0, 1}, 2), std::vector<int>{0, 2}, 2), ModelError);
  EXPECT_THROW(classification_metrics({}, std::vector<int>{}, 2), ModelError);
}

TEST(Metrics, ArgmaxTiesGoToLowestIndex) {
  EXPECT_EQ(argmax(std::vector<double>{0.4, 0.4, 0.2}), 0u);
  EXPECT_EQ(argmax(std::vector<double>{0.1, 0.45, 0.45}), 1u);
}

TEST(Auroc, MatchesPairCountingOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(40);
    std::vector<double> s(n);
    std::vector<int> pos(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.below(6));  // plenty of ties
      pos[i] = static_cast<int>(rng.below(2));
    }
    pos[0] = 1;
    pos[1] = 0;
    EXPECT_NEAR(*binary_auroc(s, pos), oracle::auroc_pairs(s, pos), 1e-12);
  }
}

TEST(Auroc, ConstantScorerIsOneHalf) {
  const std::vector<double> s(10, 0.3);
  const std::vector<int> pos{1, 0, 1, 0, 0, 0, 1, 1, 0, 1};
  EXPECT_DOUBLE_EQ(*binary_auroc(s, pos), 0.5);
  EXPECT_FALSE(binary_auroc(s, std::vector<int>(10, 1)).has_value());
}

TEST(Auroc, InvariantUnderIncreasingTransforms) {
  Rng rng(8);
  const auto probs = random_probs(rng, 60, 3);
  std::vector<int> y(60);
  for (auto& t : y) t = static_cast<int>(rng.below(3));
  const double base = *macro_auroc(probs, y);
  auto transformed = probs;
  for (auto& row : transformed) {
    for (auto& v : row) v = std::exp(3.0 * v) + 7.0;
  }
  EXPECT_NEAR(*macro_auroc(transformed, y), base, 1e-12);
}

TEST(Auroc, MacroSkipsClassesWithoutPositives) {
  const ProbabilityMatrix p{{0.9, 0.1, 0.0}, {0.2, 0.8, 0.0}, {0.6, 0.4, 0.0}};
  const std::vector<int> y{0, 1, 0};
  EXPECT_DOUBLE_EQ(*macro_auroc(p, y), 1.0);
}

// ---------------------------------------------------------------- bootstrap

TEST(Bootstrap, QuantileType7) {
  const std::vector<double> v{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.25), 1.75);
}

TEST(Bootstrap, DeterministicAndBracketsThePoint) {
  Rng rng(1);
  const auto probs = random_probs(rng, 80, 3);
  std::vector<int> y(80);
  for (auto& t : y) t = static_cast<int>(rng.below(3));
  auto report = classification_metrics(probs, y, 3);
  auto again = report;
  attach_intervals(report, probs, y, 3, {0.95, 300, 12});
  attach_intervals(again, probs, y, 3, {0.95, 300, 12});
  for (Metric m : kAllMetrics) {
    ASSERT_TRUE(report.interval(m).has_value()) << to_string(m);
    const auto iv = *report.interval(m);
    EXPECT_EQ(iv.low, again.interval(m)->low);
    EXPECT_EQ(iv.high, again.interval(m)->high);
    EXPECT_LE(iv.low, *report.value(m));
    EXPECT_GE(iv.high, *report.value(m));
    EXPECT_GE(iv.low, 0.0);
    EXPECT_LE(iv.high, 1.0);
  }
}

TEST(Bootstrap, AllCorrectGivesDegenerateInterval) {
  const bool flags[] = {true, true, true, true};
  const auto iv = bootstrap_ci(std::span<const bool>(flags), {0.95, 200, 3});
  EXPECT_EQ(iv.low, 1.0);
  EXPECT_EQ(iv.high, 1.0);
}

TEST(Bootstrap, NarrowsWithMoreData) {
  auto flags = [](std::size_t n) {
    auto p = std::make_unique<bool[]>(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i % 4 != 0;
    return p;
  };
  const auto small = flags(40), large = flags(4000);
  const auto a = bootstrap_ci(std::span<const bool>(small.get(), 40), {0.95, 500, 1});
  const auto b = bootstrap_ci(std::span<const bool>(large.get(), 4000), {0.95, 500, 1});
  EXPECT_GT(a.high - a.low, 3 * (b.high - b.low));
  EXPECT_NEAR(0.5 * (b.low + b.high), 0.75, 0.01);
}

TEST(Bootstrap, BernoulliAccuracyInterval) {
  Rng rng(80);
  auto flags = std::make_unique<bool[]>(1000);
  for (int i = 0; i < 1000; ++i) flags[i] = rng.uniform() < 0.8;
  const auto iv = bootstrap_ci(std::span<const bool>(flags.get(), 1000), {0.95, 1000, 3});
  EXPECT_LE(iv.low, 0.8);
  EXPECT_GE(iv.high, 0.8);
  EXPECT_LT(iv.high - iv.low, 0.06);
}

TEST(Bootstrap, RejectsBadOptions) {
  const bool flags[] = {true, false};
  EXPECT_THROW(bootstrap_ci(std::span<const bool>(flags), {1.5, 200, 0}), ConfigError);
  EXPECT_THROW(bootstrap_ci(std::span<const bool>(flags), {0.95, 10, 0}), ConfigError);
  EXPECT_THROW(bootstrap_ci(std::span<const bool>(), {0.95, 200, 0}), ModelError);
}

// ---------------------------------------------------------------- statistical tests

TEST(McNemar, FixedPoints) {
  EXPECT_EQ(mcnemar_midp(5, 5), 1.0);
  EXPECT_EQ(mcnemar_midp(8, 2), 0.0654296875);
  EXPECT_EQ(mcnemar_midp(2, 8), 0.0654296875);
  EXPECT_THROW(mcnemar_midp(0, 0), ModelError);
}

TEST(McNemar, SymmetricMonotoneAndBounded) {
  for (std::uint64_t n = 1; n <= 40; ++n) {
    double prev = 2.0;
    for (std::uint64_t b = (n + 1) / 2; b <= n; ++b) {  // |b - c| grows with b
      const double p = mcnemar_midp(b, n - b);
      EXPECT_EQ(p, mcnemar_midp(n - b, b));
      EXPECT_GE(p, 0.0);
      EXPECT_LE(p, 1.0);
      EXPECT_LT(p, prev + 1e-15);
      prev = p;
    }
  }
}

TEST(McNemar, LargeCountsStayFiniteAndAgreeAcrossTheExactBoundary) {
  // n = 62 is exact, n = 63 switches to log-space sums.
  EXPECT_NEAR(mcnemar_midp(31, 31), 1.0, 1e-12);
  EXPECT_NEAR(mcnemar_midp(40, 23), mcnemar_midp(23, 40), 0.0);
  const double p = mcnemar_midp(700, 300);
  EXPECT_GT(p, 0.0);
  EXPECT_LT(p, 1e-30);
}

TEST(McNemar, PairedFlagsCountDiscordance) {
  const bool a[] = {true, true, false, false, true};
  const bool b[] = {false, true, true, false, false};
  const auto r = mcnemar_midp(std::span<const bool>(a), std::span<const bool>(b));
  EXPECT_EQ(r.discordant_b, 2u);
  EXPECT_EQ(r.discordant_c, 1u);
  EXPECT_EQ(r.midp_value, oracle::midp(2, 1));
  const bool shorter[] = {true};
  EXPECT_THROW(mcnemar_midp(std::span<const bool>(a), std::span<const bool>(shorter)), ModelError);
}

TEST(CohensD, ExactExampleAndOrientation) {
  const std::vector<double> a{0.5, 0.6, 0.7}, b{0.8, 0.9, 1.0};
  // 0.6, 0.7, 0.8 and 0.9 are not representable; for the binary inputs the
  // exact value is 3 + 1.1e-15, so equality holds to a few ulp only.
  EXPECT_NEAR(cohens_d(a, b), 3.0, 4 * std::numeric_limits<double>::epsilon() * 3.0);
  EXPECT_EQ(cohens_d(b, a), -cohens_d(a, b));
  EXPECT_NEAR(cohens_d(a, b), oracle::cohens_d(a, b), 1e-12 * 3.0);
}

TEST(CohensD, Errors) {
  EXPECT_THROW(cohens_d(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}), ModelError);
  EXPECT_THROW(cohens_d(std::vector<double>{1.0, 1.0}, std::vector<double>{2.0, 2.0}), ModelError);
}

// ---------------------------------------------------------------- aggregation and report files

TEST(Aggregate, MeanAndSampleStd) {
  const auto ms = mean_std({0.88, 0.90, 0.92});
  EXPECT_NEAR(ms.mean, 0.90, 1e-12);
  EXPECT_NEAR(ms.std, 0.02, 1e-12);
  EXPECT_EQ(ms.n, 3u);
  EXPECT_EQ(mean_std({0.7}).std, 0.0);
}

TEST(Aggregate, RunsSummaryAndSingleRunWarning) {
  std::vector<MetricReport> runs(3);
  const double aucs[] = {0.88, 0.90, 0.92};
  for (int i = 0; i < 3; ++i) {
    runs[static_cast<std::size_t>(i)].auroc = aucs[i];
    runs[static_cast<std::size_t>(i)].accuracy = 0.5;
  }
  const auto s = aggregate_runs(runs);
  EXPECT_EQ(s.num_runs, 3u);
  EXPECT_NEAR(s.at(Metric::auroc)->mean, 0.90, 1e-12);
  EXPECT_NEAR(s.at(Metric::auroc)->std, 0.02, 1e-12);
  EXPECT_NE(s.to_text().find("auroc: 0.9000 ± 0.0200"), std::string::npos) << s.to_text();
  EXPECT_FALSE(s.single_run_warning);
  EXPECT_TRUE(aggregate_runs({runs[0]}).single_run_warning);
  EXPECT_THROW(aggregate_runs({}), ModelError);
}

TEST(ReportIo, JsonRoundTripIsExact) {
  Rng rng(4);
  const auto probs = random_probs(rng, 30, 3);
  std::vector<int> y(30);
  for (auto& t : y) t = static_cast<int>(rng.below(3));
  auto r = classification_metrics(probs, y, 3);
  r.run_id = 2;
  attach_intervals(r, probs, y, 3, {0.95, 200, 1});
  const auto back = report_from_json(to_json(r));
  EXPECT_EQ(back.run_id, 2);
  for (Metric m : kAllMetrics) {
    EXPECT_EQ(back.value(m), r.value(m));
    EXPECT_EQ(back.interval(m)->low, r.interval(m)->low);
  }
  testing_support::TempDir dir;
  auto pooled = r;
  pooled.run_id = -1;
  testing_support::write_text(dir / "r.jsonl", reports_to_jsonl({r, pooled}, "m", "test"));
  const auto rows = read_reports(dir / "r.jsonl");
  ASSERT_EQ(rows.size(), 1u);  // pooled row is not a run
  EXPECT_EQ(reports_to_jsonl({r}, "m", "test"), reports_to_jsonl({r}, "m", "test"));
}
