#include "skinelev/cli/predictions.hpp"

#include <map>

#include "skinelev/csv.hpp"
#include "skinelev/error.hpp"
#include "skinelev/kv_config.hpp"

namespace skinelev::cli {

evalstat::ProbabilityMatrix average_runs(const std::vector<evalstat::ProbabilityMatrix>& runs) {
  if (runs.empty()) throw ModelError("no runs to average");
  auto mean = runs.front();
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].size() != mean.size()) throw ModelError("runs cover different images");
    for (std::size_t i = 0; i < mean.size(); ++i) {
      for (std::size_t j = 0; j < mean[i].size(); ++j) mean[i][j] += runs[r][i][j];
    }
  }
  for (auto& row : mean) {
    for (auto& v : row) v /= static_cast<double>(runs.size());
  }
  return mean;
}

std::string predictions_csv(const PredictionDump& d) {
  std::vector<std::string> header{"image_id", "run", "target"};
  for (const auto& c : d.classes) header.push_back("p_" + c);
  std::string out = csv_row(header);
  auto emit = [&](const std::string& run, const evalstat::ProbabilityMatrix& probs) {
    for (std::size_t i = 0; i < d.image_ids.size(); ++i) {
      std::vector<std::string> row{d.image_ids[i], run, d.classes[static_cast<std::size_t>(d.targets[i])]};
      for (double v : probs[i]) row.push_back(fmt_double(v));
      out += csv_row(row);
    }
  };
  for (std::size_t r = 0; r < d.runs.size(); ++r) emit(std::to_string(r), d.runs[r]);
  emit("mean", d.mean);
  return out;
}

PredictionDump read_predictions(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  if (table.header.size() < 4 || table.header[0] != "image_id" || table.header[1] != "run" ||
      table.header[2] != "target") {
    throw DataError(path.string() + ": not a prediction dump");
  }
  PredictionDump d;
  std::map<std::string, int> class_index;
  for (std::size_t c = 3; c < table.header.size(); ++c) {
    if (table.header[c].rfind("p_", 0) != 0) throw DataError(path.string() + ": bad column " + table.header[c]);
    d.classes.push_back(table.header[c].substr(2));
    class_index[d.classes.back()] = static_cast<int>(c - 3);
  }
  std::map<std::string, evalstat::ProbabilityMatrix> by_run;
  std::vector<std::string> run_order;
  for (const auto& row : table.rows) {
    const auto& run = row[1];
    if (!by_run.count(run)) run_order.push_back(run);
    std::vector<double> probs;
    for (std::size_t c = 3; c < row.size(); ++c) probs.push_back(parse_double(row[c], "probability"));
    by_run[run].push_back(std::move(probs));
    if (run == "mean") {
      auto it = class_index.find(row[2]);
      if (it == class_index.end()) throw DataError(path.string() + ": unknown target class " + row[2]);
      d.image_ids.push_back(row[0]);
      d.targets.push_back(it->second);
    }
  }
  if (!by_run.count("mean")) throw DataError(path.string() + ": no mean rows");
  d.mean = by_run["mean"];
  for (const auto& run : run_order) {
    if (run != "mean") d.runs.push_back(by_run[run]);
  }
  return d;
}

}  // namespace skinelev::cli
