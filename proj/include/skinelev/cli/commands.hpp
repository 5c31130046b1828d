#pragma once

#include <filesystem>
#include <vector>

#include "skinelev/cli/experiment_config.hpp"

namespace skinelev::cli {

struct RunFlags {
  bool allow_modality_mismatch = false;
};

// Writes <out>/split.csv and <out>/class_weights.txt. Records lacking the
// stratification label are dropped with a logged count; none left is an error.
void cmd_prepare(const ExperimentConfig& cfg);

// Trains cfg.train.repeats models (seeds seed, seed+1, ...) into
// <out>/train/run_<r>/ and lists their best checkpoints in <out>/train/runs.csv.
void cmd_train(const ExperimentConfig& cfg);

// Pseudo-labels every record of cfg.manifest into <out>/labels.csv.
void cmd_label(const ExperimentConfig& cfg, const RunFlags& flags);

// Evaluates every checkpoint on cfg.eval_split: <out>/evaluate/{reports.jsonl,
// predictions.csv, summary.json, summary.txt}. Returns the summary text.
std::string cmd_evaluate(const ExperimentConfig& cfg);

// McNemar mid-p on the run-averaged predictions and Cohen's d on per-run
// AUROC of two evaluate directories: <out>/compare.jsonl. Returns the row.
std::string cmd_compare(const ExperimentConfig& cfg);

// GradCAM overlays <out>/cam/<image_id>_<class>.png.
void cmd_cam(const ExperimentConfig& cfg);

// Checkpoint files named by `path`: the file itself, or the best checkpoints
// listed in <path>/runs.csv for a training output directory.
std::vector<std::filesystem::path> resolve_checkpoints(const std::filesystem::path& path);

// Full command line; returns the process exit code (0 ok, 2 config, 3 data,
// 4 runtime).
int run_cli(int argc, char** argv);

}  // namespace skinelev::cli
