#include "skinelev/trainer/runlog.hpp"

#include <sstream>

#include <nlohmann/json.hpp>

#include "skinelev/error.hpp"

namespace skinelev::trainer {

using nlohmann::json;

std::string RunLog::to_jsonl() const {
  std::string out;
  for (const auto& e : epochs) {
    json j{{"kind", "epoch"},           {"run_id", run_id},     {"epoch", e.epoch},
           {"train_loss", e.train_loss}, {"val_loss", e.val_loss}, {"lr", e.lr},
           {"checkpoint", e.checkpoint}};
    j["val_auroc"] = e.val_auroc ? json(*e.val_auroc) : json(nullptr);
    out += j.dump() + "\n";
  }
  json s{{"kind", "summary"},         {"run_id", run_id},
         {"seed", seed},              {"best_epoch", best_epoch},
         {"best_checkpoint", best_checkpoint}, {"last_checkpoint", last_checkpoint}};
  out += s.dump() + "\n";
  return out;
}

RunLog RunLog::from_jsonl(const std::string& text) {
  RunLog log;
  std::istringstream in(text);
  std::string line;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto j = json::parse(line);
      if (j.at("kind") == "epoch") {
        EpochRecord e;
        e.epoch = j.at("epoch").get<int>();
        e.train_loss = j.at("train_loss").get<double>();
        e.val_loss = j.at("val_loss").get<double>();
        if (!j.at("val_auroc").is_null()) e.val_auroc = j["val_auroc"].get<double>();
        e.lr = j.at("lr").get<double>();
        e.checkpoint = j.value("checkpoint", "");
        log.epochs.push_back(e);
      } else if (j.at("kind") == "summary") {
        log.run_id = j.at("run_id").get<int>();
        log.seed = j.at("seed").get<std::uint64_t>();
        log.best_epoch = j.at("best_epoch").get<int>();
        log.best_checkpoint = j.value("best_checkpoint", "");
        log.last_checkpoint = j.value("last_checkpoint", "");
      }
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed run log: ") + e.what());
  }
  return log;
}

int best_epoch(const std::vector<EpochRecord>& epochs) {
  int best = -1;
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    if (best < 0) {
      best = static_cast<int>(i);
      continue;
    }
    const auto& cur = epochs[i].val_auroc;
    const auto& top = epochs[static_cast<std::size_t>(best)].val_auroc;
    if (cur && (!top || *cur > *top)) best = static_cast<int>(i);
  }
  return best;
}

std::filesystem::path select_best(const RunLog& log) {
  if (log.epochs.empty()) throw ModelError("select_best: empty run log");
  const int b = best_epoch(log.epochs);
  const auto& ckpt = log.epochs[static_cast<std::size_t>(b)].checkpoint;
  if (ckpt.empty()) throw ModelError("select_best: no checkpoints recorded");
  return ckpt;
}

}  // namespace skinelev::trainer
