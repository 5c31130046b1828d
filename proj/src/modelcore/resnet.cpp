#include "families.hpp"

#include "layers.hpp"
#include "skinelev/error.hpp"

namespace skinelev::modelcore {
namespace {

namespace nn = torch::nn;

nn::Conv2d conv(std::int64_t in, std::int64_t out, std::int64_t k, std::int64_t stride = 1) {
  return nn::Conv2d(nn::Conv2dOptions(in, out, k).stride(stride).padding(k / 2).bias(false));
}

class ResidualBlockImpl : public nn::Module {
 public:
  // expansion 1: two 3x3 convs (basic block); expansion 4: 1x1-3x3-1x1 bottleneck.
  ResidualBlockImpl(std::int64_t in, std::int64_t planes, std::int64_t stride, int expansion)
      : bottleneck_(expansion == 4) {
    const auto out = planes * expansion;
    if (bottleneck_) {
      conv1 = register_module("conv1", conv(in, planes, 1));
      bn1 = register_module("bn1", nn::BatchNorm2d(planes));
      conv2 = register_module("conv2", conv(planes, planes, 3, stride));
      bn2 = register_module("bn2", nn::BatchNorm2d(planes));
      conv3 = register_module("conv3", conv(planes, out, 1));
      bn3 = register_module("bn3", nn::BatchNorm2d(out));
    } else {
      conv1 = register_module("conv1", conv(in, planes, 3, stride));
      bn1 = register_module("bn1", nn::BatchNorm2d(planes));
      conv2 = register_module("conv2", conv(planes, planes, 3));
      bn2 = register_module("bn2", nn::BatchNorm2d(planes));
    }
    if (stride != 1 || in != out) {
      downsample = register_module("downsample", nn::Sequential(conv(in, out, 1, stride), nn::BatchNorm2d(out)));
    }
  }

  torch::Tensor forward(const torch::Tensor& x) {
    auto h = torch::relu(bn1(conv1(x)));
    h = bn2(conv2(h));
    if (bottleneck_) h = bn3(conv3(torch::relu(h)));
    auto identity = downsample ? downsample->forward(x) : x;
    return torch::relu(h + identity);
  }

 private:
  bool bottleneck_;
  nn::Conv2d conv1{nullptr}, conv2{nullptr}, conv3{nullptr};
  nn::BatchNorm2d bn1{nullptr}, bn2{nullptr}, bn3{nullptr};
  nn::Sequential downsample{nullptr};
};
TORCH_MODULE(ResidualBlock);

class ResNetImpl : public BackboneImpl {
 public:
  ResNetImpl(std::array<int, 4> blocks, int expansion) : expansion_(expansion) {
    conv1 = register_module("conv1", conv(3, 64, 7, 2));
    bn1 = register_module("bn1", nn::BatchNorm2d(64));
    std::int64_t in = 64;
    const std::int64_t planes[4] = {64, 128, 256, 512};
    for (int s = 0; s < 4; ++s) {
      nn::Sequential stage;
      for (int b = 0; b < blocks[s]; ++b) {
        stage->push_back(ResidualBlock(in, planes[s], (b == 0 && s > 0) ? 2 : 1, expansion));
        in = planes[s] * expansion;
      }
      stages_[s] = register_module("layer" + std::to_string(s + 1), stage);
    }
    layers::init_conv_bn(*this);
  }

  torch::Tensor spatial(const torch::Tensor& x) override {
    auto h = torch::relu(bn1(conv1(x)));
    h = torch::max_pool2d(h, 3, 2, 1);
    for (auto& stage : stages_) h = stage->forward(h);
    return h;
  }

  std::int64_t feature_dim() const override { return 512 * expansion_; }
  std::vector<std::string> reference_head_prefixes() const override { return {"fc."}; }

 private:
  int expansion_;
  nn::Conv2d conv1{nullptr};
  nn::BatchNorm2d bn1{nullptr};
  std::array<nn::Sequential, 4> stages_{nn::Sequential{nullptr}, nn::Sequential{nullptr}, nn::Sequential{nullptr},
                                        nn::Sequential{nullptr}};
};

}  // namespace

Backbone make_resnet(int depth) {
  if (depth == 18) return std::make_shared<ResNetImpl>(std::array<int, 4>{2, 2, 2, 2}, 1);
  if (depth == 50) return std::make_shared<ResNetImpl>(std::array<int, 4>{3, 4, 6, 3}, 4);
  throw ConfigError("unsupported resnet depth " + std::to_string(depth));
}

}  // namespace skinelev::modelcore
