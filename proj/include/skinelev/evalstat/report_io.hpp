#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skinelev/evalstat/aggregate.hpp"
#include "skinelev/evalstat/metrics.hpp"
#include "skinelev/evalstat/stattests.hpp"

namespace skinelev::evalstat {

// One JSON object per line. Doubles are written with round-trip precision,
// so identical reports serialize to identical bytes.
nlohmann::json to_json(const MetricReport& r);
MetricReport report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunSummary& s);
nlohmann::json to_json(const StatTestResult& r);

std::vector<MetricReport> read_reports(const std::filesystem::path& path);
std::string reports_to_jsonl(const std::vector<MetricReport>& reports, const std::string& model_name,
                             const std::string& split_name);

}  // namespace skinelev::evalstat
