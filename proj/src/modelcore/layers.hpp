#pragma once

#include <cstdint>

#include <torch/torch.h>

namespace skinelev::modelcore::layers {

enum class Act { none, relu, relu6, hardswish, hardsigmoid, silu, sigmoid };

torch::Tensor activate(const torch::Tensor& x, Act act);

// Stateless activation, so a Sequential keeps torchvision's index layout.
class ActivationImpl : public torch::nn::Module {
 public:
  explicit ActivationImpl(Act act) : act_(act) {}
  torch::Tensor forward(const torch::Tensor& x) { return activate(x, act_); }

 private:
  Act act_;
};
TORCH_MODULE(Activation);

// Sequential with a concrete forward, so it can nest inside another Sequential.
class SeqImpl : public torch::nn::SequentialImpl {
 public:
  using SequentialImpl::SequentialImpl;
  torch::Tensor forward(torch::Tensor x) { return SequentialImpl::forward(std::move(x)); }
};
TORCH_MODULE(Seq);

struct ConvOptions {
  std::int64_t in = 0;
  std::int64_t out = 0;
  std::int64_t kernel = 3;
  std::int64_t stride = 1;
  std::int64_t groups = 1;
  Act act = Act::relu;
  double bn_eps = 1e-5;
  double bn_momentum = 0.1;
};

// Conv (no bias, "same" padding) + BatchNorm + optional activation, registered
// as indices 0, 1, 2.
Seq conv_norm_act(const ConvOptions& o);

// Squeeze-and-excitation with fc1/fc2 1x1 convolutions.
class SqueezeExcitationImpl : public torch::nn::Module {
 public:
  SqueezeExcitationImpl(std::int64_t channels, std::int64_t squeeze, Act act, Act scale_act);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d fc1{nullptr}, fc2{nullptr};
  Act act_, scale_act_;
};
TORCH_MODULE(SqueezeExcitation);

// Rounds to the nearest multiple of `divisor`, never dropping more than 10%.
std::int64_t make_divisible(double v, std::int64_t divisor = 8);

// Kaiming-normal (fan_out) convolutions with zero bias, BatchNorm at (1, 0).
void init_conv_bn(torch::nn::Module& root);

}  // namespace skinelev::modelcore::layers
