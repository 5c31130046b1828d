#pragma once

#include <span>
#include <string>
#include <vector>

namespace skinelev::dataio {

// Median frequency balancing: weight_c = median(counts) / counts_c, so the
// median-frequency class gets weight 1 and weight_c * counts_c is constant.
struct ClassWeights {
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
  double operator[](std::size_t c) const { return weights[c]; }

  std::string serialize() const;  // "w0, w1, ..." with 17 significant digits
  static ClassWeights parse(const std::string& text);
  static ClassWeights uniform(std::size_t n) { return {std::vector<double>(n, 1.0)}; }
};

// Median of an even-length list is the mean of its two middle values.
double median(std::vector<double> values);

// Throws DataError if `counts` is empty or any count is zero.
ClassWeights compute_class_weights(std::span<const std::size_t> counts);

}  // namespace skinelev::dataio
