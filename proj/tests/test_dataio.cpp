#include <algorithm>
#include <map>
#include <set>

#include <gtest/gtest.h>
#include <opencv2/imgcodecs.hpp>

#include "skinelev/dataio/class_weights.hpp"
#include "skinelev/dataio/manifest.hpp"
#include "skinelev/dataio/preprocess.hpp"
#include "skinelev/dataio/schema.hpp"
#include "skinelev/dataio/split.hpp"
#include "skinelev/error.hpp"
#include "skinelev/random.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace skinelev;
using namespace skinelev::dataio;
using testing_support::make_manifest;
using testing_support::TempDir;
using testing_support::write_text;

namespace {

LabelSchema small_schema() {
  return LabelSchema::parse(
      "diagnosis_classes = BCC, MEL, NEV\n"
      "elevation_classes = flat, palpable, nodular\n"
      "group = melanoma (in situ) -> MEL\n"
      "group = blue nevus -> NEV\n");
}

}  // namespace

// ---------------------------------------------------------------- schema

TEST(Schema, ParseSerializeRoundTrip) {
  const auto s = small_schema();
  EXPECT_EQ(s.num_diagnosis(), 3u);
  EXPECT_EQ(s.elevation_index("nodular"), 2);
  EXPECT_EQ(s.group_diagnosis("blue nevus"), 2);
  EXPECT_EQ(s.group_diagnosis("MEL"), 1);
  EXPECT_FALSE(s.group_diagnosis("unknown").has_value());
  EXPECT_EQ(LabelSchema::parse(s.serialize()), s);
}

TEST(Schema, RejectsBrokenVocabularies) {
  EXPECT_THROW(LabelSchema::parse("diagnosis_classes = A, A\nelevation_classes = flat\n"), DataError);
  EXPECT_THROW(LabelSchema::parse("diagnosis_classes = A\nelevation_classes = flat\ngroup = x -> B\n"), DataError);
  EXPECT_THROW(LabelSchema::parse("diagnosis_classes = A\nelevation_classes = flat\ngroup = no arrow\n"), DataError);
}

TEST(Schema, DefaultElevationOrderIsFixed) {
  EXPECT_EQ(default_elevation_classes(), (std::vector<std::string>{"flat", "palpable", "nodular"}));
  const auto d = derm7pt_schema();
  EXPECT_EQ(d.elevation_classes, default_elevation_classes());
  EXPECT_EQ(d.num_diagnosis(), 5u);
  EXPECT_NO_THROW(d.validate());
}

// ---------------------------------------------------------------- manifest

TEST(Manifest, LoadsLabelsModalityAndRelativePaths) {
  TempDir dir;
  write_text(dir / "m.csv",
             "image_id,image_path,modality,diagnosis,elevation\n"
             "a,img/a.png,clinical,melanoma (in situ),palpable\n"
             "b,/abs/b.png,clinical,,flat\n"
             "c,img/c.png,clinical,NEV,\n");
  const auto m = load_manifest(dir / "m.csv", small_schema());
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m.records[0].diagnosis, 1);
  EXPECT_EQ(m.records[0].elevation, 1);
  EXPECT_EQ(m.records[0].image_path, dir / "img/a.png");
  EXPECT_EQ(m.records[1].image_path, "/abs/b.png");
  EXPECT_FALSE(m.records[1].diagnosis.has_value());
  EXPECT_FALSE(m.records[2].elevation.has_value());
  EXPECT_EQ(m.common_modality(), Modality::clinical);
  EXPECT_EQ(m.elevation_counts(), (std::vector<std::size_t>{1, 1, 0}));
  EXPECT_EQ(m.diagnosis_counts(), (std::vector<std::size_t>{0, 1, 1}));
  EXPECT_EQ(m.find("c").image_id, "c");
  EXPECT_THROW(m.find("zzz"), DataError);
}

TEST(Manifest, CanonicalCsvReloads) {
  TempDir dir;
  write_text(dir / "m.csv",
             "image_id,image_path,modality,diagnosis,elevation\n"
             "a,a.png,dermoscopic,blue nevus,nodular\n");
  const auto m = load_manifest(dir / "m.csv", small_schema());
  write_text(dir / "m2.csv", manifest_to_csv(m));
  const auto again = load_manifest(dir / "m2.csv", small_schema());
  EXPECT_EQ(again.records[0].diagnosis, 2);
  EXPECT_EQ(again.records[0].elevation, 2);
  EXPECT_EQ(again.records[0].modality, Modality::dermoscopic);
}

TEST(Manifest, DataErrorsNameTheProblem) {
  TempDir dir;
  auto expect_error = [&](const std::string& body, const std::string& needle) {
    write_text(dir / "bad.csv", body);
    try {
      load_manifest(dir / "bad.csv", small_schema());
      FAIL() << "no error for: " << needle;
    } catch (const DataError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_error("image_id,modality\na,clinical\n", "image_path");
  expect_error("image_id,image_path,modality\na,a.png,xray\n", "xray");
  expect_error("image_id,image_path,modality,diagnosis\na,a.png,clinical,wart\n", "wart");
  expect_error("image_id,image_path,modality,elevation\na,a.png,clinical,bumpy\n", "bumpy");
  expect_error("image_id,image_path,modality\na,a.png,clinical\na,b.png,clinical\n", "duplicate");
  EXPECT_THROW(load_manifest(dir / "absent.csv", small_schema()), DataError);
}

TEST(Manifest, MixedModalityHasNoCommonModality) {
  auto m = make_manifest({0, 1}, {}, small_schema());
  m.records[1].modality = Modality::clinical;
  EXPECT_FALSE(m.common_modality().has_value());
}

// ---------------------------------------------------------------- class weights

TEST(ClassWeights, MedianFrequencyExample) {
  const std::vector<std::size_t> counts{448, 440, 123};
  const auto w = compute_class_weights(counts);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w[0], 440.0 / 448.0);
  EXPECT_EQ(w[1], 1.0);
  EXPECT_EQ(w[2], 440.0 / 123.0);
}

TEST(ClassWeights, EvenLengthUsesMeanOfMiddleValues) {
  const std::vector<std::size_t> counts{1, 2, 3, 4};
  const auto w = compute_class_weights(counts);
  EXPECT_DOUBLE_EQ(w[0], 2.5);
  EXPECT_DOUBLE_EQ(w[1], 1.25);
  EXPECT_DOUBLE_EQ(w[2], 2.5 / 3.0);
  EXPECT_DOUBLE_EQ(w[3], 0.625);
  EXPECT_DOUBLE_EQ(median({4.0, 1.0, 3.0, 2.0}), 2.5);
}

TEST(ClassWeights, ProductWithCountIsConstant) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::size_t> counts(1 + rng.below(8));
    for (auto& c : counts) c = 1 + rng.below(1000);
    const auto w = compute_class_weights(counts);
    const auto exact = oracle::median_frequency(std::vector<std::uint64_t>(counts.begin(), counts.end()));
    for (std::size_t c = 0; c < counts.size(); ++c) {
      EXPECT_NEAR(w[c], exact[c].value(), 1e-12 * exact[c].value());
      EXPECT_NEAR(w[c] * counts[c], w[0] * counts[0], 1e-9 * w[0] * counts[0]);
    }
  }
}

TEST(ClassWeights, RejectsEmptyAndZeroCounts) {
  EXPECT_THROW(compute_class_weights(std::vector<std::size_t>{}), DataError);
  EXPECT_THROW(compute_class_weights(std::vector<std::size_t>{3, 0, 2}), DataError);
}

TEST(ClassWeights, SerializeParseRoundTrip) {
  const auto w = compute_class_weights(std::vector<std::size_t>{448, 440, 123});
  EXPECT_EQ(ClassWeights::parse(w.serialize()).weights, w.weights);
  EXPECT_THROW(ClassWeights::parse("1, -2"), ConfigError);
}

// ---------------------------------------------------------------- split

TEST(Split, LargestRemainderCounts) {
  const SplitRatios r{0.7, 0.15, 0.15};
  EXPECT_EQ(largest_remainder_counts(448, r), (std::array<std::size_t, 3>{314, 67, 67}));
  EXPECT_EQ(largest_remainder_counts(440, r), (std::array<std::size_t, 3>{308, 66, 66}));
  // 86.1 / 18.45 / 18.45: the single leftover goes to val (tie with test).
  EXPECT_EQ(largest_remainder_counts(123, r), (std::array<std::size_t, 3>{86, 19, 18}));
  EXPECT_EQ(largest_remainder_counts(1, r), (std::array<std::size_t, 3>{1, 0, 0}));
  // 1.4 / 0.3 / 0.3: the leftover goes to the largest remainder (train).
  EXPECT_EQ(largest_remainder_counts(2, r), (std::array<std::size_t, 3>{2, 0, 0}));
  EXPECT_EQ(largest_remainder_counts(5, SplitRatios{1.0, 0.0, 0.0}), (std::array<std::size_t, 3>{5, 0, 0}));
}

TEST(Split, LargestRemainderMatchesRationalOracle) {
  Rng rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    const std::uint64_t a = rng.below(101);
    const std::uint64_t b = rng.below(101 - a);
    const std::uint64_t c = 100 - a - b;
    const std::size_t n = 1 + rng.below(500);
    const auto got = largest_remainder_counts(n, SplitRatios{a / 100.0, b / 100.0, c / 100.0});
    const auto want = oracle::largest_remainder(n, {a, b, c}, 100);
    EXPECT_EQ(std::vector<std::size_t>(got.begin(), got.end()), want) << n << " " << a << "/" << b << "/" << c;
  }
}

TEST(Split, StratifiedPartitionOfTheReferenceCounts) {
  std::vector<int> elev;
  for (int c = 0; c < 3; ++c) elev.insert(elev.end(), std::vector<std::size_t>{448, 440, 123}[c], c);
  const auto m = make_manifest(elev, {}, small_schema());
  const auto s = stratified_split(m, {0.7, 0.15, 0.15}, StratifyOn::elevation, 1);
  EXPECT_EQ(s.assignment.size(), m.size());
  std::map<std::pair<int, Split>, int> cell;
  for (const auto& r : m.records) ++cell[{*r.elevation, s.at(r.image_id)}];
  EXPECT_EQ((cell[{2, Split::train}]), 86);
  EXPECT_EQ((cell[{2, Split::val}]), 19);
  EXPECT_EQ((cell[{2, Split::test}]), 18);
  EXPECT_EQ((cell[{0, Split::train}]), 314);
  EXPECT_EQ(s.count(Split::train), 314u + 308u + 86u);
}

TEST(Split, SeedDeterministicAndSeedSensitive) {
  std::vector<int> elev(200);
  for (std::size_t i = 0; i < elev.size(); ++i) elev[i] = static_cast<int>(i % 3);
  const auto m = make_manifest(elev, {}, small_schema());
  const auto a = stratified_split(m, {0.7, 0.15, 0.15}, StratifyOn::elevation, 9);
  const auto b = stratified_split(m, {0.7, 0.15, 0.15}, StratifyOn::elevation, 9);
  const auto c = stratified_split(m, {0.7, 0.15, 0.15}, StratifyOn::elevation, 10);
  EXPECT_EQ(a.assignment, b.assignment);
  EXPECT_NE(a.assignment, c.assignment);
}

TEST(Split, CsvRoundTripAndSubsets) {
  TempDir dir;
  const auto m = make_manifest({0, 1, 2, 0, 1, 2, 0, 1, 2, 0}, {}, small_schema());
  const auto s = stratified_split(m, {0.6, 0.2, 0.2}, StratifyOn::elevation, 4);
  write_text(dir / "split.csv", s.to_csv(m));
  const auto back = SplitAssignment::from_csv(dir / "split.csv");
  EXPECT_EQ(back.assignment, s.assignment);
  std::size_t total = 0;
  for (auto which : {Split::train, Split::val, Split::test}) total += subset(m, s, which).size();
  EXPECT_EQ(total, m.size());
}

TEST(Split, ErrorsOnBadRatiosEmptyManifestAndMissingLabels) {
  const auto m = make_manifest({0, 1, -1}, {}, small_schema());
  EXPECT_THROW(stratified_split(m, {0.5, 0.5, 0.5}, StratifyOn::none, 0), ConfigError);
  EXPECT_THROW(stratified_split(m, {1.2, -0.1, -0.1}, StratifyOn::none, 0), ConfigError);
  EXPECT_THROW(stratified_split(make_manifest({}, {}, small_schema()), {0.7, 0.15, 0.15}, StratifyOn::none, 0),
               DataError);
  EXPECT_THROW(stratified_split(m, {0.7, 0.15, 0.15}, StratifyOn::elevation, 0), DataError);
  EXPECT_NO_THROW(stratified_split(m, {0.7, 0.15, 0.15}, StratifyOn::none, 0));
  EXPECT_THROW(parse_stratify_on("age"), ConfigError);
}

// ---------------------------------------------------------------- preprocessing

TEST(Preprocess, ResizesAndNormalizes) {
  cv::Mat rgb(10, 20, CV_8UC3, cv::Scalar(255, 0, 128));
  PreprocessConfig cfg;
  cfg.image_size = 32;
  const auto x = preprocess_image(rgb, cfg, false, 0);
  ASSERT_EQ(x.sizes(), (std::vector<std::int64_t>{3, 32, 32}));
  EXPECT_NEAR(x[0][5][5].item<float>(), (1.0f - 0.485f) / 0.229f, 1e-5);
  EXPECT_NEAR(x[1][5][5].item<float>(), (0.0f - 0.456f) / 0.224f, 1e-5);
  EXPECT_NEAR(x[2][31][0].item<float>(), (128.0f / 255.0f - 0.406f) / 0.225f, 1e-5);
}

TEST(Preprocess, RejectsEmptyImages) {
  EXPECT_THROW(preprocess_image(cv::Mat(), PreprocessConfig{}, false, 0), DataError);
  EXPECT_THROW(decode_rgb("/nonexistent/x.png"), DataError);
}

TEST(Preprocess, DecodesPngAsRgb) {
  TempDir dir;
  cv::Mat bgr(4, 4, CV_8UC3, cv::Scalar(10, 20, 30));  // B, G, R
  cv::imwrite((dir / "x.png").string(), bgr);
  const auto rgb = decode_rgb(dir / "x.png");
  EXPECT_EQ(rgb.at<cv::Vec3b>(0, 0), cv::Vec3b(30, 20, 10));
}

TEST(Dihedral, GroupLaws) {
  const auto x = torch::arange(2 * 3 * 3, torch::kFloat32).view({2, 3, 3});
  std::set<std::vector<float>> images;
  for (int i = 0; i < 8; ++i) {
    const auto t = DihedralTransform::from_index(i);
    EXPECT_EQ(t.index(), i);
    const auto y = t.apply(x).contiguous();
    images.insert(std::vector<float>(y.data_ptr<float>(), y.data_ptr<float>() + y.numel()));
    EXPECT_TRUE(torch::equal(t.inverse().apply(t.apply(x)), x));
    for (int j = 0; j < 8; ++j) {
      const auto u = DihedralTransform::from_index(j);
      EXPECT_TRUE(torch::equal(u.after(t).apply(x), u.apply(t.apply(x)))) << i << " " << j;
    }
  }
  EXPECT_EQ(images.size(), 8u);  // all eight are distinct
  EXPECT_TRUE(DihedralTransform::from_index(0).is_identity());
}

TEST(Dihedral, VerticalFlipIsHalfTurnAfterMirror) {
  const auto x = torch::arange(9, torch::kFloat32).view({1, 3, 3});
  const DihedralTransform v{2, true};
  EXPECT_TRUE(torch::equal(v.apply(x), x.flip({1})));
  const DihedralTransform h{0, true};
  EXPECT_TRUE(torch::equal(h.apply(x), x.flip({2})));
}

TEST(Dihedral, DrawIsSeededAndCoversTheGroup) {
  std::set<int> seen;
  for (std::uint64_t s = 0; s < 200; ++s) {
    EXPECT_EQ(draw_transform(s).index(), draw_transform(s).index());
    seen.insert(draw_transform(s).index());
  }
  EXPECT_EQ(seen.size(), 8u);
}

TEST(Preprocess, TrainModeAppliesTheSeededTransform) {
  cv::Mat rgb(8, 8, CV_8UC3);
  cv::randu(rgb, 0, 255);
  PreprocessConfig cfg;
  cfg.image_size = 8;
  const auto plain = preprocess_image(rgb, cfg, false, 0);
  for (std::uint64_t s = 0; s < 16; ++s) {
    const auto aug = preprocess_image(rgb, cfg, true, s);
    EXPECT_TRUE(torch::equal(aug, draw_transform(s).apply(plain)));
  }
}
