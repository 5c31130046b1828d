#include "families.hpp"

#include <cmath>

#include "layers.hpp"

namespace skinelev::modelcore {
namespace {

namespace nn = torch::nn;
using layers::Act;
using layers::conv_norm_act;

constexpr double kStochasticDepth = 0.2;

// Drops the whole residual branch per sample during training.
torch::Tensor stochastic_depth(const torch::Tensor& x, double p, bool training) {
  if (!training || p == 0.0) return x;
  const double survival = 1.0 - p;
  std::vector<std::int64_t> shape(x.dim(), 1);
  shape[0] = x.size(0);
  auto noise = torch::empty(shape, x.options()).bernoulli_(survival);
  if (survival > 0.0) noise.div_(survival);
  return x * noise;
}

struct MBConfig {
  int expand, kernel, stride, in, out, layers;
};

class MBConvImpl : public nn::Module {
 public:
  MBConvImpl(int expand, int kernel, int stride, std::int64_t in, std::int64_t out, double drop)
      : residual_(stride == 1 && in == out), drop_(drop) {
    const std::int64_t expanded = layers::make_divisible(static_cast<double>(in) * expand);
    layers::Seq seq;
    if (expanded != in) seq->push_back(conv_norm_act({.in = in, .out = expanded, .kernel = 1, .act = Act::silu}));
    seq->push_back(conv_norm_act(
        {.in = expanded, .out = expanded, .kernel = kernel, .stride = stride, .groups = expanded, .act = Act::silu}));
    seq->push_back(layers::SqueezeExcitation(expanded, std::max<std::int64_t>(1, in / 4), Act::silu, Act::sigmoid));
    seq->push_back(conv_norm_act({.in = expanded, .out = out, .kernel = 1, .act = Act::none}));
    block = register_module("block", seq);
  }

  torch::Tensor forward(const torch::Tensor& x) {
    auto h = block->forward(x);
    if (!residual_) return h;
    return x + stochastic_depth(h, drop_, is_training());
  }

 private:
  bool residual_;
  double drop_;
  layers::Seq block{nullptr};
};
TORCH_MODULE(MBConv);

class EfficientNetImpl : public BackboneImpl {
 public:
  explicit EfficientNetImpl(double depth_mult) {
    std::vector<MBConfig> stages = {{1, 3, 1, 32, 16, 1},   {6, 3, 2, 16, 24, 2},  {6, 5, 2, 24, 40, 2},
                                    {6, 3, 2, 40, 80, 3},   {6, 5, 1, 80, 112, 3}, {6, 5, 2, 112, 192, 4},
                                    {6, 3, 1, 192, 320, 1}};
    int total = 0;
    for (auto& s : stages) {
      s.layers = static_cast<int>(std::ceil(s.layers * depth_mult));
      total += s.layers;
    }
    layers::Seq seq;
    seq->push_back(conv_norm_act({.in = 3, .out = stages[0].in, .kernel = 3, .stride = 2, .act = Act::silu}));
    int block_id = 0;
    for (const auto& s : stages) {
      layers::Seq stage;
      for (int i = 0; i < s.layers; ++i) {
        const double drop = kStochasticDepth * block_id / total;
        stage->push_back(MBConv(s.expand, s.kernel, i == 0 ? s.stride : 1, i == 0 ? s.in : s.out, s.out, drop));
        ++block_id;
      }
      seq->push_back(stage);
    }
    dim_ = 4 * stages.back().out;
    seq->push_back(conv_norm_act({.in = stages.back().out, .out = dim_, .kernel = 1, .act = Act::silu}));
    features_ = register_module("features", seq);
    layers::init_conv_bn(*this);
  }

  torch::Tensor spatial(const torch::Tensor& x) override { return features_->forward(x); }
  std::int64_t feature_dim() const override { return dim_; }
  double head_dropout() const override { return 0.2; }
  std::vector<std::string> reference_head_prefixes() const override { return {"classifier."}; }

 private:
  std::int64_t dim_ = 0;
  layers::Seq features_{nullptr};
};

}  // namespace

Backbone make_efficientnet(double depth_multiplier) { return std::make_shared<EfficientNetImpl>(depth_multiplier); }

}  // namespace skinelev::modelcore
