#include "skinelev/evalstat/report_io.hpp"

#include <sstream>

#include "skinelev/csv.hpp"
#include "skinelev/error.hpp"

namespace skinelev::evalstat {

nlohmann::json to_json(const MetricReport& r) {
  nlohmann::json j;
  j["run_id"] = r.run_id;
  j["n_test"] = r.n_test;
  for (Metric m : kAllMetrics) {
    const auto v = r.value(m);
    j[to_string(m)] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    if (const auto& iv = r.interval(m)) j["ci_" + to_string(m)] = {iv->low, iv->high};
  }
  if (!r.warnings.empty()) j["warnings"] = r.warnings;
  return j;
}

MetricReport report_from_json(const nlohmann::json& j) {
  MetricReport r;
  try {
    r.run_id = j.at("run_id").get<int>();
    r.n_test = j.at("n_test").get<std::size_t>();
    r.accuracy = j.at("accuracy").get<double>();
    r.balanced_accuracy = j.at("balanced_accuracy").get<double>();
    r.precision = j.at("precision").get<double>();
    r.recall = j.at("recall").get<double>();
    r.f1 = j.at("f1").get<double>();
    if (!j.at("auroc").is_null()) r.auroc = j.at("auroc").get<double>();
    for (Metric m : kAllMetrics) {
      const auto key = "ci_" + to_string(m);
      if (j.contains(key)) r.set_interval(m, {j[key][0].get<double>(), j[key][1].get<double>()});
    }
    if (j.contains("warnings")) r.warnings = j["warnings"].get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed metric report: ") + e.what());
  }
  return r;
}

nlohmann::json to_json(const RunSummary& s) {
  nlohmann::json j;
  j["num_runs"] = s.num_runs;
  j["single_run_warning"] = s.single_run_warning;
  for (Metric m : kAllMetrics) {
    if (const auto& v = s.at(m)) j[to_string(m)] = {{"mean", v->mean}, {"std", v->std}, {"n", v->n}};
  }
  return j;
}

nlohmann::json to_json(const StatTestResult& r) {
  return {{"discordant_b", r.discordant_b},
          {"discordant_c", r.discordant_c},
          {"midp_value", r.midp_value},
          {"cohens_d", r.cohens_d},
          {"n_runs_per_group", r.n_runs_per_group}};
}

std::vector<MetricReport> read_reports(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<MetricReport> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (j.value("kind", "") == "run") out.push_back(report_from_json(j));
  }
  return out;
}

std::string reports_to_jsonl(const std::vector<MetricReport>& reports, const std::string& model_name,
                             const std::string& split_name) {
  std::string out;
  for (const auto& r : reports) {
    auto j = to_json(r);
    j["kind"] = r.run_id >= 0 ? "run" : "pooled";
    j["model"] = model_name;
    j["split"] = split_name;
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace skinelev::evalstat
