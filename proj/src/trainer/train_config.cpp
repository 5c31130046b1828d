#include "skinelev/trainer/train_config.hpp"

#include <cmath>
#include <cstdio>

#include "skinelev/error.hpp"

namespace skinelev::trainer {

double TrainConfig::lr_at(int epoch) const {
  return lr * std::pow(lr_decay_factor, static_cast<double>(epoch / lr_decay_every));
}

void TrainConfig::validate() const {
  if (epochs <= 0) throw ConfigError("epochs must be positive");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0,1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
  if (!(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0)) throw ConfigError("lr_decay_factor must lie in (0,1]");
  if (lr_decay_every <= 0) throw ConfigError("lr_decay_every must be positive");
  if (repeats <= 0) throw ConfigError("repeats must be positive");
  if (class_weights) {
    for (double w : class_weights->weights) {
      if (!(w > 0.0)) throw ConfigError("class_weights must be positive");
    }
  }
}

TrainConfig TrainConfig::from_config(const KeyValueFile& kv) {
  TrainConfig c;
  c.epochs = static_cast<int>(kv.get_int("epochs", c.epochs));
  c.batch_size = static_cast<int>(kv.get_int("batch_size", c.batch_size));
  c.lr = kv.get_double("lr", c.lr);
  c.momentum = kv.get_double("momentum", c.momentum);
  c.weight_decay = kv.get_double("weight_decay", c.weight_decay);
  c.lr_decay_factor = kv.get_double("lr_decay_factor", c.lr_decay_factor);
  c.lr_decay_every = static_cast<int>(kv.get_int("lr_decay_every", c.lr_decay_every));
  const auto seed = kv.get_int("seed", 0);
  if (seed < 0) throw ConfigError("seed must be non-negative");
  c.seed = static_cast<std::uint64_t>(seed);
  c.repeats = static_cast<int>(kv.get_int("repeats", c.repeats));
  const auto w = kv.get_or("class_weights", "auto");
  if (w != "auto" && !w.empty()) {
    try {
      c.class_weights = dataio::ClassWeights::parse(w);
    } catch (const Error& e) {
      throw ConfigError(std::string("class_weights: ") + e.what());
    }
  }
  c.validate();
  return c;
}

void TrainConfig::write_to(KeyValueFile& kv) const {
  kv.set("epochs", std::to_string(epochs));
  kv.set("batch_size", std::to_string(batch_size));
  kv.set("lr", fmt_double(lr));
  kv.set("momentum", fmt_double(momentum));
  kv.set("weight_decay", fmt_double(weight_decay));
  kv.set("lr_decay_factor", fmt_double(lr_decay_factor));
  kv.set("lr_decay_every", std::to_string(lr_decay_every));
  kv.set("seed", std::to_string(seed));
  kv.set("class_weights", class_weights ? class_weights->serialize() : "auto");
  kv.set("repeats", std::to_string(repeats));
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace skinelev::trainer
