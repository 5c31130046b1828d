#include "layers.hpp"

#include <algorithm>

namespace skinelev::modelcore::layers {

torch::Tensor activate(const torch::Tensor& x, Act act) {
  switch (act) {
    case Act::none: return x;
    case Act::relu: return torch::relu(x);
    case Act::relu6: return torch::hardtanh(x, 0.0, 6.0);
    case Act::hardswish: return torch::hardswish(x);
    case Act::hardsigmoid: return torch::hardsigmoid(x);
    case Act::silu: return torch::silu(x);
    case Act::sigmoid: return torch::sigmoid(x);
  }
  return x;
}

Seq conv_norm_act(const ConvOptions& o) {
  Seq seq;
  seq->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(o.in, o.out, o.kernel)
                                       .stride(o.stride)
                                       .padding((o.kernel - 1) / 2)
                                       .groups(o.groups)
                                       .bias(false)));
  seq->push_back(torch::nn::BatchNorm2d(torch::nn::BatchNorm2dOptions(o.out).eps(o.bn_eps).momentum(o.bn_momentum)));
  if (o.act != Act::none) seq->push_back(Activation(o.act));
  return seq;
}

SqueezeExcitationImpl::SqueezeExcitationImpl(std::int64_t channels, std::int64_t squeeze, Act act, Act scale_act)
    : act_(act), scale_act_(scale_act) {
  fc1 = register_module("fc1", torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, squeeze, 1)));
  fc2 = register_module("fc2", torch::nn::Conv2d(torch::nn::Conv2dOptions(squeeze, channels, 1)));
}

torch::Tensor SqueezeExcitationImpl::forward(const torch::Tensor& x) {
  auto s = torch::adaptive_avg_pool2d(x, {1, 1});
  s = activate(fc2(activate(fc1(s), act_)), scale_act_);
  return x * s;
}

std::int64_t make_divisible(double v, std::int64_t divisor) {
  auto rounded = static_cast<std::int64_t>(v + divisor / 2.0) / divisor * divisor;
  auto out = std::max<std::int64_t>(divisor, rounded);
  if (static_cast<double>(out) < 0.9 * v) out += divisor;
  return out;
}

void init_conv_bn(torch::nn::Module& root) {
  torch::NoGradGuard guard;
  for (auto& m : root.modules(/*include_self=*/false)) {
    if (auto* conv = m->as<torch::nn::Conv2d>()) {
      torch::nn::init::kaiming_normal_(conv->weight, 0.0, torch::kFanOut, torch::kReLU);
      if (conv->bias.defined()) conv->bias.zero_();
    } else if (auto* bn = m->as<torch::nn::BatchNorm2d>()) {
      bn->weight.fill_(1.0);
      bn->bias.zero_();
    }
  }
}

}  // namespace skinelev::modelcore::layers
