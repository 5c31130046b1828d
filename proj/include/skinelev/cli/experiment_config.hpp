#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "skinelev/dataio/preprocess.hpp"
#include "skinelev/dataio/split.hpp"
#include "skinelev/kv_config.hpp"
#include "skinelev/modelcore/model.hpp"
#include "skinelev/trainer/train_config.hpp"

namespace skinelev::cli {

// One runnable experiment, read from a flat key-value file. Relative paths
// resolve against the config file's directory; outputs go under out_dir.
struct ExperimentConfig {
  std::filesystem::path manifest;
  std::filesystem::path schema;      // empty: derm7pt-style default schema
  std::filesystem::path split_file;  // empty: <out>/split.csv written by prepare
  dataio::SplitRatios split_ratios{0.7, 0.15, 0.15};
  dataio::StratifyOn stratify_on = dataio::StratifyOn::elevation;

  modelcore::Role role = modelcore::Role::diagnosis;
  modelcore::BackboneSpec backbone;
  modelcore::FusionMode fusion = modelcore::FusionMode::none;
  std::filesystem::path elevation_labels;  // label CSV for soft / discrete_onehot
  trainer::TrainConfig train;
  dataio::PreprocessConfig preprocess;

  std::filesystem::path out_dir;
  std::uint64_t seed = 0;

  // label: checkpoint file, or a training output directory (uses label_run).
  std::filesystem::path label_checkpoint;
  int label_run = 0;
  // evaluate: checkpoint files or training output directories; default <out>/train.
  std::vector<std::filesystem::path> checkpoints;
  dataio::Split eval_split = dataio::Split::test;
  double ci_level = 0.95;
  int bootstrap_resamples = 1000;
  // compare: two evaluate output directories.
  std::filesystem::path compare_a;
  std::filesystem::path compare_b;
  // cam
  std::filesystem::path cam_checkpoint;
  std::vector<std::string> cam_images;
  std::string cam_class = "predicted";  // predicted | all | <class name>

  KeyValueFile raw;  // effective key-values, hashed into checkpoints

  // Invariant checks: soft / discrete_onehot need a label file, fusion only
  // for diagnosis models. Throws ConfigError.
  void validate() const;
  std::string hash() const;

  static ExperimentConfig from_kv(KeyValueFile kv, const std::filesystem::path& base_dir);
};

// Reads `path` (may be empty: all defaults), applies KEY=VALUE overrides and
// the --seed / --out flags.
ExperimentConfig load_experiment(const std::filesystem::path& path, const std::vector<std::string>& overrides,
                                 const std::optional<std::uint64_t>& seed, const std::filesystem::path& out);

}  // namespace skinelev::cli
