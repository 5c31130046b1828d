#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "skinelev/dataio/class_weights.hpp"
#include "skinelev/kv_config.hpp"

namespace skinelev::trainer {

// Optimization schedule. Config keys carry the field names; class_weights is
// either a comma-separated list or absent ("auto": computed from the training
// split by median frequency balancing).
struct TrainConfig {
  int epochs = 50;
  int batch_size = 32;
  double lr = 1e-2;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double lr_decay_factor = 0.1;
  int lr_decay_every = 10;
  std::uint64_t seed = 0;
  std::optional<dataio::ClassWeights> class_weights;
  int repeats = 3;

  // lr * factor^floor(epoch / decay_every)
  double lr_at(int epoch) const;
  // Seed of repeat r (base seed + r).
  std::uint64_t run_seed(int repeat) const { return seed + static_cast<std::uint64_t>(repeat); }

  // Throws ConfigError on out-of-range fields.
  void validate() const;
  static TrainConfig from_config(const KeyValueFile& kv);
  void write_to(KeyValueFile& kv) const;
};

// FNV-1a (64-bit) of a string, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace skinelev::trainer
