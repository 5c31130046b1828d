#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include <torch/torch.h>

#include "skinelev/dataio/manifest.hpp"
#include "skinelev/evalstat/metrics.hpp"
#include "skinelev/modelcore/model.hpp"
#include "skinelev/trainer/runlog.hpp"
#include "skinelev/trainer/train_config.hpp"

namespace skinelev::trainer {

struct TrainOptions {
  // Receives best-so-far checkpoints, last.pt and runlog.jsonl. Empty: no files.
  std::filesystem::path out_dir;
  int run_id = 0;
  std::function<void(const EpochRecord&)> on_epoch;
};

// Class index of every record for the bundle's role. Throws DataError naming
// the first record that lacks the label.
std::vector<int> role_targets(const modelcore::ModelBundle& bundle, const dataio::DatasetManifest& manifest);

// Aux matrix [N, N_E] the fusion mode consumes: one-hot ground truth for
// gt_onehot, attached pseudo-labels for soft and discrete_onehot (one-hot of
// their argmax for the latter). Undefined tensor for mode none. Throws
// DataError when a record lacks the required label.
torch::Tensor fusion_inputs(const modelcore::ModelBundle& bundle, const dataio::DatasetManifest& manifest);

// Runs cfg.epochs epochs of SGD on weighted cross-entropy with the seed in
// cfg.seed: ceil(n/batch_size) steps per epoch, batches drawn from a seeded
// shuffle, dihedral augmentation on training images only. Val AUROC (macro
// one-vs-rest) is computed after each epoch; a checkpoint is written for each
// new best and the previous best deleted. Class weights come from cfg or, if
// absent, from the training labels.
// Throws DataError on an empty split or missing labels.
RunLog train(modelcore::ModelBundle& bundle, const dataio::DatasetManifest& train_set,
             const dataio::DatasetManifest& val_set, const TrainConfig& cfg, const TrainOptions& options = {});

// Eval-mode probabilities for every record, in manifest order.
evalstat::ProbabilityMatrix predict_manifest(modelcore::ModelBundle& bundle, const dataio::DatasetManifest& manifest,
                                             int batch_size = 32, dataio::ImageCache* cache = nullptr);

// Pins torch's RNG and switches on deterministic kernels.
void make_deterministic(std::uint64_t seed);

}  // namespace skinelev::trainer
