#include "skinelev/dataio/class_weights.hpp"

#include <algorithm>
#include <cstdio>

#include "skinelev/error.hpp"
#include "skinelev/kv_config.hpp"

namespace skinelev::dataio {

double median(std::vector<double> values) {
  if (values.empty()) throw DataError("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

ClassWeights compute_class_weights(std::span<const std::size_t> counts) {
  if (counts.empty()) throw DataError("class weights: no classes");
  std::vector<double> freq;
  freq.reserve(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) {
      throw DataError("class weights: class " + std::to_string(c) + " has zero training samples (weight undefined)");
    }
    freq.push_back(static_cast<double>(counts[c]));
  }
  // Frequencies would be counts/total; the total cancels in the ratio.
  const double med = median(freq);
  ClassWeights out;
  out.weights.reserve(freq.size());
  for (double f : freq) out.weights.push_back(med / f);
  return out;
}

std::string ClassWeights::serialize() const {
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < weights.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", weights[i]);
    out += (i ? ", " : "") + std::string(buf);
  }
  return out;
}

ClassWeights ClassWeights::parse(const std::string& text) {
  ClassWeights out;
  for (const auto& item : split_list(text)) {
    const double w = parse_double(item, "class_weights");
    if (!(w > 0.0)) throw ConfigError("class_weights must be positive");
    out.weights.push_back(w);
  }
  return out;
}

}  // namespace skinelev::dataio
