#pragma once

#include <span>
#include <vector>

#include <torch/torch.h>

#include "skinelev/dataio/class_weights.hpp"

namespace skinelev::trainer {

// weights[target] * -log softmax(logits)[target], in double precision.
// Throws ModelError on a target out of range or a weight-length mismatch.
double weighted_cross_entropy(std::span<const double> logits, int target, const dataio::ClassWeights& weights);

// Analytic gradient with respect to the logits:
// weights[target] * (softmax(logits) - onehot(target)).
std::vector<double> weighted_cross_entropy_grad(std::span<const double> logits, int target,
                                                const dataio::ClassWeights& weights);

// Batch loss on raw logits [N, C] and int64 targets [N]:
// sum_i w[t_i] * nll_i / sum_i w[t_i]. Differentiable.
torch::Tensor weighted_cross_entropy(const torch::Tensor& logits, const torch::Tensor& targets,
                                     const torch::Tensor& class_weights);

// Float64 [C]; weighted_cross_entropy casts it to the logits dtype.
torch::Tensor to_tensor(const dataio::ClassWeights& weights);

}  // namespace skinelev::trainer
