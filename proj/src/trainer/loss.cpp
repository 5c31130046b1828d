#include "skinelev/trainer/loss.hpp"

#include <algorithm>
#include <cmath>

#include "skinelev/error.hpp"

namespace skinelev::trainer {
namespace {

void check(std::size_t classes, int target, const dataio::ClassWeights& weights) {
  if (weights.size() != classes) {
    throw ModelError("class weight count " + std::to_string(weights.size()) + " != logit count " +
                     std::to_string(classes));
  }
  if (target < 0 || static_cast<std::size_t>(target) >= classes) {
    throw ModelError("target " + std::to_string(target) + " out of range");
  }
}

// log(sum(exp(logits))) shifted by the maximum.
double log_sum_exp(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (double z : logits) s += std::exp(z - m);
  return m + std::log(s);
}

}  // namespace

double weighted_cross_entropy(std::span<const double> logits, int target, const dataio::ClassWeights& weights) {
  check(logits.size(), target, weights);
  return weights[target] * (log_sum_exp(logits) - logits[target]);
}

std::vector<double> weighted_cross_entropy_grad(std::span<const double> logits, int target,
                                                const dataio::ClassWeights& weights) {
  check(logits.size(), target, weights);
  const double lse = log_sum_exp(logits);
  std::vector<double> g(logits.size());
  for (std::size_t j = 0; j < logits.size(); ++j) {
    const double p = std::exp(logits[j] - lse);
    g[j] = weights[target] * (p - (static_cast<int>(j) == target ? 1.0 : 0.0));
  }
  return g;
}

torch::Tensor weighted_cross_entropy(const torch::Tensor& logits, const torch::Tensor& targets,
                                     const torch::Tensor& class_weights) {
  if (logits.dim() != 2 || targets.dim() != 1 || logits.size(0) != targets.size(0)) {
    throw ModelError("weighted_cross_entropy: logits [N,C] and targets [N] required");
  }
  if (class_weights.numel() != logits.size(1)) throw ModelError("weighted_cross_entropy: weight count mismatch");
  if (targets.numel() > 0 &&
      (targets.min().item<std::int64_t>() < 0 || targets.max().item<std::int64_t>() >= logits.size(1))) {
    throw ModelError("weighted_cross_entropy: target out of range");
  }
  auto logp = torch::log_softmax(logits, 1);
  auto nll = -logp.gather(1, targets.unsqueeze(1)).squeeze(1);
  auto w = class_weights.to(logits.dtype()).index_select(0, targets);
  return (w * nll).sum() / w.sum();
}

torch::Tensor to_tensor(const dataio::ClassWeights& weights) {
  return torch::tensor(weights.weights, torch::kFloat64);
}

}  // namespace skinelev::trainer
