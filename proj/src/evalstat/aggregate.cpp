#include "skinelev/evalstat/aggregate.hpp"

#include <cmath>
#include <cstdio>

#include "skinelev/error.hpp"

namespace skinelev::evalstat {

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd out;
  out.n = values.size();
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

RunSummary aggregate_runs(const std::vector<MetricReport>& reports) {
  if (reports.empty()) throw ModelError("aggregate_runs: no reports");
  RunSummary s;
  s.num_runs = reports.size();
  s.single_run_warning = reports.size() == 1;
  for (Metric m : kAllMetrics) {
    std::vector<double> values;
    for (const auto& r : reports) {
      if (auto v = r.value(m)) values.push_back(*v);
    }
    if (!values.empty()) s.metrics[static_cast<std::size_t>(m)] = mean_std(values);
  }
  return s;
}

std::string RunSummary::to_text() const {
  std::string out;
  char buf[128];
  for (Metric m : kAllMetrics) {
    const auto& v = at(m);
    if (!v) {
      out += to_string(m) + ": undefined\n";
      continue;
    }
    std::snprintf(buf, sizeof buf, "%s: %.4f ± %.4f (n=%zu)\n", to_string(m).c_str(), v->mean, v->std, v->n);
    out += buf;
  }
  if (single_run_warning) out += "warning: single run, std reported as 0\n";
  return out;
}

}  // namespace skinelev::evalstat
