#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "skinelev/cli/commands.hpp"
#include "skinelev/cli/experiment_config.hpp"
#include "skinelev/cli/predictions.hpp"
#include "skinelev/csv.hpp"
#include "skinelev/error.hpp"
#include "skinelev/labeler/labeler.hpp"
#include "skinelev/synth/generator.hpp"
#include "support/fixtures.hpp"

using namespace skinelev;
using namespace skinelev::cli;
using testing_support::TempDir;
using testing_support::write_text;
namespace fs = std::filesystem;

namespace {

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "skinelev");
  args.push_back("--log-level");
  args.push_back(std::getenv("SKINELEV_TEST_LOG") ? std::getenv("SKINELEV_TEST_LOG") : "off");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

// ---------------------------------------------------------------- config

TEST(ExperimentConfig, DefaultsAndRelativePaths) {
  TempDir dir("cfg");
  write_text(dir / "a.cfg", "manifest = data/m.csv\nrole = elevation\nfamily = resnet18\nepochs = 3\n");
  const auto c = load_experiment(dir / "a.cfg", {}, std::nullopt, {});
  EXPECT_EQ(c.manifest, dir / "data/m.csv");
  EXPECT_EQ(c.out_dir, dir / "out");
  EXPECT_EQ(c.role, modelcore::Role::elevation);
  EXPECT_EQ(c.backbone.family, modelcore::Family::resnet18);
  EXPECT_EQ(c.train.epochs, 3);
  EXPECT_EQ(c.train.batch_size, 32);
  EXPECT_EQ(c.split_ratios, (dataio::SplitRatios{0.7, 0.15, 0.15}));
  EXPECT_EQ(c.preprocess.image_size, 224);
  EXPECT_EQ(c.eval_split, dataio::Split::test);
}

TEST(ExperimentConfig, OverridesSeedAndOut) {
  TempDir dir("cfg");
  write_text(dir / "a.cfg", "seed = 4\nepochs = 3\n");
  const auto c = load_experiment(dir / "a.cfg", {"epochs=9", "lr = 0.5"}, 11, dir / "elsewhere");
  EXPECT_EQ(c.train.epochs, 9);
  EXPECT_EQ(c.train.lr, 0.5);
  EXPECT_EQ(c.seed, 11u);
  EXPECT_EQ(c.train.seed, 11u);
  EXPECT_EQ(c.out_dir, fs::absolute(dir / "elsewhere"));
  EXPECT_THROW(load_experiment(dir / "a.cfg", {"epochs"}, std::nullopt, {}), ConfigError);
  EXPECT_THROW(load_experiment(dir / "missing.cfg", {}, std::nullopt, {}), ConfigError);
}

TEST(ExperimentConfig, RejectsInvalidCombinations) {
  TempDir dir("cfg");
  for (const char* bad : {"colour = red\n", "fusion = soft\n", "role = elevation\nfusion = gt_onehot\n",
                          "pretrained = true\n", "ci_level = 1\n", "bootstrap_resamples = 10\n",
                          "split_ratios = 0.5, 0.5\n", "family = alexnet\n", "eval_split = holdout\n",
                          "epochs = -1\n"}) {
    write_text(dir / "b.cfg", bad);
    EXPECT_THROW(load_experiment(dir / "b.cfg", {}, std::nullopt, {}), ConfigError) << bad;
  }
  write_text(dir / "b.cfg", "fusion = soft\nelevation_labels = l.csv\n");
  EXPECT_NO_THROW(load_experiment(dir / "b.cfg", {}, std::nullopt, {}));
}

TEST(ExperimentConfig, HashIgnoresOutputLocationOnly) {
  TempDir dir("cfg");
  write_text(dir / "a.cfg", "epochs = 3\n");
  const auto a = load_experiment(dir / "a.cfg", {}, std::nullopt, dir / "x").hash();
  EXPECT_EQ(a, load_experiment(dir / "a.cfg", {"log_level=debug"}, std::nullopt, dir / "y").hash());
  EXPECT_NE(a, load_experiment(dir / "a.cfg", {}, 1, dir / "x").hash());
  EXPECT_NE(a, load_experiment(dir / "a.cfg", {"epochs=4"}, std::nullopt, dir / "x").hash());
  EXPECT_EQ(a.size(), 16u);
}

// ---------------------------------------------------------------- predictions

TEST(Predictions, CsvRoundTrip) {
  TempDir dir("pred");
  PredictionDump d;
  d.classes = {"a", "b"};
  d.image_ids = {"x", "y", "z"};
  d.targets = {0, 1, 1};
  d.runs = {{{0.25, 0.75}, {0.5, 0.5}, {1.0 / 3.0, 2.0 / 3.0}}, {{0.75, 0.25}, {0.5, 0.5}, {0.0, 1.0}}};
  d.mean = average_runs(d.runs);
  EXPECT_EQ(d.mean[0], (std::vector<double>{0.5, 0.5}));
  write_text(dir / "p.csv", predictions_csv(d));
  const auto back = read_predictions(dir / "p.csv");
  EXPECT_EQ(back.classes, d.classes);
  EXPECT_EQ(back.image_ids, d.image_ids);
  EXPECT_EQ(back.targets, d.targets);
  ASSERT_EQ(back.runs.size(), 2u);
  EXPECT_EQ(back.runs[1][2], d.runs[1][2]);
  EXPECT_EQ(back.runs[0][2], d.runs[0][2]);
  EXPECT_EQ(back.mean, d.mean);
  EXPECT_THROW(average_runs({}), Error);
}

// ---------------------------------------------------------------- exit codes

TEST(Cli, ExitCodesFollowTheErrorKind) {
  TempDir dir("exit");
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"frobnicate"}), 2);
  EXPECT_EQ(run({"--config", (dir / "none.cfg").string(), "prepare"}), 2);
  write_text(dir / "bad.cfg", "colour = red\n");
  EXPECT_EQ(run({"--config", (dir / "bad.cfg").string(), "prepare"}), 2);
  EXPECT_EQ(run({"--device", "cuda", "prepare"}), 2);
  write_text(dir / "m.cfg", "manifest = nope.csv\n");
  EXPECT_EQ(run({"--config", (dir / "m.cfg").string(), "--out", (dir / "o").string(), "prepare"}), 3);
  write_text(dir / "e.cfg", "checkpoints = corrupt.pt\nmanifest = m.csv\nsplit_file = s.csv\n");
  synth::SynthOptions o;
  o.count = 6;
  o.image_size = 32;
  const auto files = synth::write_dataset(dir / "d", o);
  fs::copy_file(files.manifest, dir / "m.csv");
  fs::copy_file(files.schema, dir / "schema.txt");
  std::string split = "image_id,split\n";
  for (int i = 0; i < 6; ++i) split += "img0000" + std::to_string(i) + ",test\n";
  write_text(dir / "s.csv", split);
  write_text(dir / "corrupt.pt", "not a checkpoint");
  EXPECT_EQ(run({"--config", (dir / "e.cfg").string(), "--set", "schema=schema.txt", "evaluate"}), 4);
}

// ---------------------------------------------------------------- pipeline

namespace {

class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("pipeline");
    synth::SynthOptions o;
    o.count = 30;
    o.image_size = 32;
    o.min_radius = 6;
    o.max_radius = 12;
    o.seed = 1;
    const auto elev = synth::write_dataset(*dir_ / "elev", o);
    o.diagnosis_task = true;
    o.count = 36;
    o.seed = 2;
    const auto diag = synth::write_dataset(*dir_ / "diag", o);
    const std::string common =
        "family = mobilenetv2\nwidth_multiplier = 0.35\nimage_size = 32\nepochs = 2\nbatch_size = 8\n"
        "repeats = 2\nbootstrap_resamples = 200\nsplit_ratios = 0.5, 0.25, 0.25\n";
    write_text(*dir_ / "elev.cfg", common + "role = elevation\nmanifest = " + elev.manifest.string() +
                                       "\nschema = " + elev.schema.string() + "\n");
    write_text(*dir_ / "diag.cfg", common + "role = diagnosis\nstratify_on = diagnosis\nmanifest = " +
                                       diag.manifest.string() + "\nschema = " + diag.schema.string() + "\n");
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static std::string path(const std::string& name) { return (*dir_ / name).string(); }
  static TempDir* dir_;
};

TempDir* Pipeline::dir_ = nullptr;

}  // namespace

TEST_F(Pipeline, EndToEndWithEveryFusionMode) {
  // elevation model, then pseudo-labels for the diagnosis images
  ASSERT_EQ(run({"--config", path("elev.cfg"), "--out", path("E"), "prepare"}), 0);
  EXPECT_TRUE(fs::exists(path("E/split.csv")));
  EXPECT_NE(read_all(path("E/class_weights.txt")).find("elevation"), std::string::npos);
  ASSERT_EQ(run({"--config", path("elev.cfg"), "--out", path("E"), "train"}), 0);
  const auto runs = read_csv(path("E/train/runs.csv"));
  ASSERT_EQ(runs.rows.size(), 2u);
  EXPECT_EQ(resolve_checkpoints(path("E/train")).size(), 2u);
  const auto diag_manifest = (*dir_ / "diag/manifest.csv").string();
  ASSERT_EQ(run({"--config", path("elev.cfg"), "--out", path("L"), "--set", "manifest=" + diag_manifest, "--set",
                 "label_checkpoint=" + path("E/train"), "label"}),
            0);
  const auto labels = labeler::read_label_file(path("L/labels.csv"), synth::synth_schema().elevation_classes);
  EXPECT_EQ(labels.size(), 36u);
  EXPECT_EQ(labels[0].source_model, "run_0/" + fs::path(runs.rows[0][runs.column("best_checkpoint")]).filename().string());

  // diagnosis models sharing one split
  ASSERT_EQ(run({"--config", path("diag.cfg"), "--out", path("D"), "prepare"}), 0);
  const std::string split = "split_file=" + path("D/split.csv");
  for (const std::string mode : {"none", "gt_onehot", "soft", "discrete_onehot"}) {
    const auto out = path("D_" + mode);
    ASSERT_EQ(run({"--config", path("diag.cfg"), "--out", out, "--set", split, "--set", "fusion=" + mode, "--set",
                   "elevation_labels=" + path("L/labels.csv"), "train", "evaluate"}),
              0)
        << mode;
    const auto summary = nlohmann::json::parse(read_all(out + "/evaluate/summary.json"));
    EXPECT_TRUE(summary.contains("accuracy")) << summary.dump();
    EXPECT_EQ(read_csv(out + "/train/runs.csv").rows.size(), 2u);
    const auto dump = read_predictions(out + "/evaluate/predictions.csv");
    EXPECT_EQ(dump.runs.size(), 2u);
    EXPECT_EQ(dump.image_ids.size(), 8u);
  }

  ASSERT_EQ(run({"--out", path("C"), "--set", "compare_a=" + path("D_none/evaluate"), "--set",
                 "compare_b=" + path("D_soft/evaluate"), "compare"}),
            0);
  const auto row = nlohmann::json::parse(read_all(path("C/compare.jsonl")));
  EXPECT_EQ(row["n_runs_per_group"], 2);
  EXPECT_TRUE(row.contains("discordant_b") && row.contains("discordant_c") && row.contains("cohens_d"));

  const auto id = read_predictions(path("D_soft/evaluate/predictions.csv")).image_ids[0];
  ASSERT_EQ(run({"--config", path("diag.cfg"), "--out", path("G"), "--set",
                 "cam_checkpoint=" + fs::path(path("D_none/train")).string() + "/" +
                     read_csv(path("D_none/train/runs.csv")).rows[0][4],
                 "--set", "cam_images=" + id, "cam"}),
            0);
  int pngs = 0;
  for (const auto& f : fs::directory_iterator(path("G/cam"))) pngs += f.path().extension() == ".png";
  EXPECT_EQ(pngs, 1);
}

TEST_F(Pipeline, ReRunsAreByteIdentical) {
  for (const std::string tag : {"R1", "R2"}) {
    ASSERT_EQ(run({"--config", path("elev.cfg"), "--out", path(tag), "prepare", "train", "evaluate"}), 0);
    ASSERT_EQ(run({"--config", path("elev.cfg"), "--out", path(tag), "--set", "label_checkpoint=" + path(tag + "/train"),
                   "label"}),
              0);
  }
  for (const char* f : {"split.csv", "labels.csv", "evaluate/reports.jsonl", "evaluate/predictions.csv",
                        "evaluate/summary.txt"}) {
    EXPECT_EQ(read_all(path(std::string("R1/") + f)), read_all(path(std::string("R2/") + f))) << f;
  }
}

TEST_F(Pipeline, FusedTrainingWithoutLabelsForEveryImageFails) {
  TempDir dir("partial");
  write_text(dir / "l.csv", "image_id,p_flat,p_palpable,p_nodular,argmax,source_model,source_modality\n"
                            "img0,1,0,0,flat,m,dermoscopic\n");
  ASSERT_EQ(run({"--config", path("diag.cfg"), "--out", (dir / "o").string(), "prepare"}), 0);
  EXPECT_EQ(run({"--config", path("diag.cfg"), "--out", (dir / "o").string(), "--set", "fusion=soft", "--set",
                 "elevation_labels=" + (dir / "l.csv").string(), "train"}),
            3);
}
