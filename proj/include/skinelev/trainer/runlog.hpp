#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace skinelev::trainer {

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  std::optional<double> val_auroc;  // absent when the val split holds one class
  double lr = 0.0;
  std::string checkpoint;  // written at this epoch (new best), else empty
};

struct RunLog {
  int run_id = 0;
  std::uint64_t seed = 0;
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;
  std::string best_checkpoint;
  std::string last_checkpoint;

  // One JSON object per epoch, then a summary object.
  std::string to_jsonl() const;
  static RunLog from_jsonl(const std::string& text);
};

// Epoch with the highest val AUROC, earliest on ties; epochs without an AUROC
// rank below all others. -1 for an empty list.
int best_epoch(const std::vector<EpochRecord>& epochs);

// Checkpoint written at the best epoch. Throws ModelError on an empty log or
// when that epoch has no checkpoint recorded.
std::filesystem::path select_best(const RunLog& log);

}  // namespace skinelev::trainer
