#include "families.hpp"

#include <cmath>

#include "layers.hpp"

namespace skinelev::modelcore {
namespace {

namespace nn = torch::nn;
using layers::Act;
using layers::conv_norm_act;
using layers::ConvOptions;
using layers::make_divisible;

void init_linear_normal(nn::Module& root) {
  torch::NoGradGuard guard;
  for (auto& m : root.modules(false)) {
    if (auto* lin = m->as<nn::Linear>()) {
      nn::init::normal_(lin->weight, 0.0, 0.01);
      lin->bias.zero_();
    }
  }
}

// --- MobileNetV2 -----------------------------------------------------------

class InvertedResidualV2Impl : public nn::Module {
 public:
  InvertedResidualV2Impl(std::int64_t in, std::int64_t out, std::int64_t stride, int expand)
      : residual_(stride == 1 && in == out) {
    const auto hidden = static_cast<std::int64_t>(std::lround(static_cast<double>(in) * expand));
    layers::Seq seq;
    if (expand != 1) seq->push_back(conv_norm_act({.in = in, .out = hidden, .kernel = 1, .act = Act::relu6}));
    seq->push_back(conv_norm_act(
        {.in = hidden, .out = hidden, .kernel = 3, .stride = stride, .groups = hidden, .act = Act::relu6}));
    seq->push_back(nn::Conv2d(nn::Conv2dOptions(hidden, out, 1).bias(false)));
    seq->push_back(nn::BatchNorm2d(out));
    conv = register_module("conv", seq);
  }

  torch::Tensor forward(const torch::Tensor& x) { return residual_ ? x + conv->forward(x) : conv->forward(x); }

 private:
  bool residual_;
  layers::Seq conv{nullptr};
};
TORCH_MODULE(InvertedResidualV2);

class MobileNetV2Impl : public BackboneImpl {
 public:
  explicit MobileNetV2Impl(double width) {
    struct Stage {
      int t, c, n, s;
    };
    constexpr Stage kStages[] = {{1, 16, 1, 1},  {6, 24, 2, 2},  {6, 32, 3, 2},  {6, 64, 4, 2},
                                 {6, 96, 3, 1},  {6, 160, 3, 2}, {6, 320, 1, 1}};
    auto in = make_divisible(32 * width);
    last_channel_ = make_divisible(1280 * std::max(1.0, width));
    layers::Seq seq;
    seq->push_back(conv_norm_act({.in = 3, .out = in, .kernel = 3, .stride = 2, .act = Act::relu6}));
    for (const auto& st : kStages) {
      const auto out = make_divisible(st.c * width);
      for (int i = 0; i < st.n; ++i) {
        seq->push_back(InvertedResidualV2(in, out, i == 0 ? st.s : 1, st.t));
        in = out;
      }
    }
    seq->push_back(conv_norm_act({.in = in, .out = last_channel_, .kernel = 1, .act = Act::relu6}));
    features_ = register_module("features", seq);
    layers::init_conv_bn(*this);
  }

  torch::Tensor spatial(const torch::Tensor& x) override { return features_->forward(x); }
  std::int64_t feature_dim() const override { return last_channel_; }
  double head_dropout() const override { return 0.2; }
  std::vector<std::string> reference_head_prefixes() const override { return {"classifier."}; }

 private:
  std::int64_t last_channel_ = 0;
  layers::Seq features_{nullptr};
};

// --- MobileNetV3-Large -----------------------------------------------------

constexpr double kV3Eps = 0.001;
constexpr double kV3Momentum = 0.01;

struct V3Block {
  int in, kernel, expanded, out;
  bool se;
  Act act;
  int stride;
};

class InvertedResidualV3Impl : public nn::Module {
 public:
  InvertedResidualV3Impl(const V3Block& c) : residual_(c.stride == 1 && c.in == c.out) {
    layers::Seq seq;
    auto cna = [](std::int64_t in, std::int64_t out, std::int64_t k, std::int64_t stride, std::int64_t groups,
                  Act act) {
      return conv_norm_act({.in = in,
                            .out = out,
                            .kernel = k,
                            .stride = stride,
                            .groups = groups,
                            .act = act,
                            .bn_eps = kV3Eps,
                            .bn_momentum = kV3Momentum});
    };
    if (c.expanded != c.in) seq->push_back(cna(c.in, c.expanded, 1, 1, 1, c.act));
    seq->push_back(cna(c.expanded, c.expanded, c.kernel, c.stride, c.expanded, c.act));
    if (c.se) {
      seq->push_back(layers::SqueezeExcitation(c.expanded, make_divisible(c.expanded / 4), Act::relu,
                                               Act::hardsigmoid));
    }
    seq->push_back(cna(c.expanded, c.out, 1, 1, 1, Act::none));
    block = register_module("block", seq);
  }

  torch::Tensor forward(const torch::Tensor& x) { return residual_ ? x + block->forward(x) : block->forward(x); }

 private:
  bool residual_;
  layers::Seq block{nullptr};
};
TORCH_MODULE(InvertedResidualV3);

class MobileNetV3LargeImpl : public BackboneImpl {
 public:
  explicit MobileNetV3LargeImpl(double width) {
    const Act RE = Act::relu, HS = Act::hardswish;
    const V3Block kConfig[] = {
        {16, 3, 16, 16, false, RE, 1},    {16, 3, 64, 24, false, RE, 2},    {24, 3, 72, 24, false, RE, 1},
        {24, 5, 72, 40, true, RE, 2},     {40, 5, 120, 40, true, RE, 1},    {40, 5, 120, 40, true, RE, 1},
        {40, 3, 240, 80, false, HS, 2},   {80, 3, 200, 80, false, HS, 1},   {80, 3, 184, 80, false, HS, 1},
        {80, 3, 184, 80, false, HS, 1},   {80, 3, 480, 112, true, HS, 1},   {112, 3, 672, 112, true, HS, 1},
        {112, 5, 672, 160, true, HS, 2},  {160, 5, 960, 160, true, HS, 1},  {160, 5, 960, 160, true, HS, 1},
    };
    auto adjust = [width](int c) { return static_cast<int>(make_divisible(c * width)); };
    layers::Seq seq;
    int first = adjust(16);
    seq->push_back(conv_norm_act({.in = 3,
                                  .out = first,
                                  .kernel = 3,
                                  .stride = 2,
                                  .act = HS,
                                  .bn_eps = kV3Eps,
                                  .bn_momentum = kV3Momentum}));
    int last_in = first;
    for (auto c : kConfig) {
      c.in = adjust(c.in);
      c.expanded = adjust(c.expanded);
      c.out = adjust(c.out);
      seq->push_back(InvertedResidualV3(c));
      last_in = c.out;
    }
    const std::int64_t last_conv = 6 * last_in;
    seq->push_back(conv_norm_act({.in = last_in,
                                  .out = last_conv,
                                  .kernel = 1,
                                  .act = HS,
                                  .bn_eps = kV3Eps,
                                  .bn_momentum = kV3Momentum}));
    features_ = register_module("features", seq);
    last_channel_ = make_divisible(1280 * width);
    // Same key as the reference pre-classifier ("classifier.0").
    classifier_ = register_module("classifier", layers::Seq(nn::Linear(last_conv, last_channel_)));
    layers::init_conv_bn(*this);
    init_linear_normal(*this);
  }

  torch::Tensor spatial(const torch::Tensor& x) override { return features_->forward(x); }
  torch::Tensor neck(const torch::Tensor& pooled) override {
    return torch::hardswish(classifier_->forward(pooled));
  }
  std::int64_t feature_dim() const override { return last_channel_; }
  double head_dropout() const override { return 0.2; }
  std::vector<std::string> reference_head_prefixes() const override { return {"classifier.3."}; }

 private:
  std::int64_t last_channel_ = 0;
  layers::Seq features_{nullptr};
  layers::Seq classifier_{nullptr};
};

}  // namespace

Backbone make_mobilenet_v2(double width_multiplier) { return std::make_shared<MobileNetV2Impl>(width_multiplier); }

Backbone make_mobilenet_v3_large(double width_multiplier) {
  return std::make_shared<MobileNetV3LargeImpl>(width_multiplier);
}

}  // namespace skinelev::modelcore
