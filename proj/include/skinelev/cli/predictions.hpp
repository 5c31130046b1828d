#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "skinelev/evalstat/metrics.hpp"

namespace skinelev::cli {

// Per-image probabilities of every evaluated run plus their mean, as written
// by `evaluate` and consumed by `compare`.
struct PredictionDump {
  std::vector<std::string> classes;
  std::vector<std::string> image_ids;
  std::vector<int> targets;
  std::vector<evalstat::ProbabilityMatrix> runs;
  evalstat::ProbabilityMatrix mean;
};

evalstat::ProbabilityMatrix average_runs(const std::vector<evalstat::ProbabilityMatrix>& runs);

// CSV `image_id,run,target,p_<class>...`; run is the run index or "mean".
std::string predictions_csv(const PredictionDump& dump);
PredictionDump read_predictions(const std::filesystem::path& path);

}  // namespace skinelev::cli
