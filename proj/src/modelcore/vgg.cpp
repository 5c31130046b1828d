#include "families.hpp"

#include "layers.hpp"

namespace skinelev::modelcore {
namespace {

// Configuration "D" with batch normalization; 0 marks a max-pool.
constexpr int kVgg16[] = {64, 64, 0, 128, 128, 0, 256, 256, 256, 0, 512, 512, 512, 0, 512, 512, 512, 0};

class Vgg16GapImpl : public BackboneImpl {
 public:
  Vgg16GapImpl() {
    torch::nn::Sequential seq;
    std::int64_t in = 3;
    for (int c : kVgg16) {
      if (c == 0) {
        seq->push_back(torch::nn::MaxPool2d(torch::nn::MaxPool2dOptions(2).stride(2)));
        continue;
      }
      seq->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(in, c, 3).padding(1)));
      seq->push_back(torch::nn::BatchNorm2d(c));
      seq->push_back(layers::Activation(layers::Act::relu));
      in = c;
    }
    features_ = register_module("features", seq);
    layers::init_conv_bn(*this);
  }

  // Everything up to, not including, the last max-pool: the final conv block.
  torch::Tensor spatial(const torch::Tensor& x) override {
    auto h = x;
    auto it = features_->begin();
    for (std::size_t i = 0; i + 1 < features_->size(); ++i, ++it) h = it->forward(h);
    return h;
  }

  torch::Tensor pool(const torch::Tensor& maps) override {
    auto pooled = torch::max_pool2d(maps, 2, 2);
    return torch::adaptive_avg_pool2d(pooled, {1, 1}).flatten(1);
  }

  std::int64_t feature_dim() const override { return 512; }
  std::vector<std::string> reference_head_prefixes() const override { return {"classifier."}; }

 private:
  torch::nn::Sequential features_{nullptr};
};

}  // namespace

Backbone make_vgg16_gap() { return std::make_shared<Vgg16GapImpl>(); }

}  // namespace skinelev::modelcore
