#include "families.hpp"

#include "layers.hpp"

namespace skinelev::modelcore {
namespace {

namespace nn = torch::nn;

constexpr std::int64_t kGrowth = 32;
constexpr std::int64_t kBottleneck = 4;

class DenseLayerImpl : public nn::Module {
 public:
  explicit DenseLayerImpl(std::int64_t in) {
    norm1 = register_module("norm1", nn::BatchNorm2d(in));
    conv1 = register_module("conv1", nn::Conv2d(nn::Conv2dOptions(in, kBottleneck * kGrowth, 1).bias(false)));
    norm2 = register_module("norm2", nn::BatchNorm2d(kBottleneck * kGrowth));
    conv2 = register_module(
        "conv2", nn::Conv2d(nn::Conv2dOptions(kBottleneck * kGrowth, kGrowth, 3).padding(1).bias(false)));
  }

  torch::Tensor forward(const torch::Tensor& x) {
    auto h = conv1(torch::relu(norm1(x)));
    return conv2(torch::relu(norm2(h)));
  }

 private:
  nn::BatchNorm2d norm1{nullptr}, norm2{nullptr};
  nn::Conv2d conv1{nullptr}, conv2{nullptr};
};
TORCH_MODULE(DenseLayer);

class DenseBlockImpl : public nn::Module {
 public:
  DenseBlockImpl(int num_layers, std::int64_t in) {
    for (int i = 0; i < num_layers; ++i) {
      layers_.push_back(register_module("denselayer" + std::to_string(i + 1), DenseLayer(in + i * kGrowth)));
    }
  }

  torch::Tensor forward(const torch::Tensor& x) {
    std::vector<torch::Tensor> feats{x};
    for (auto& layer : layers_) feats.push_back(layer(torch::cat(feats, 1)));
    return torch::cat(feats, 1);
  }

 private:
  std::vector<DenseLayer> layers_;
};
TORCH_MODULE(DenseBlock);

class TransitionImpl : public nn::Module {
 public:
  TransitionImpl(std::int64_t in, std::int64_t out) {
    norm = register_module("norm", nn::BatchNorm2d(in));
    conv = register_module("conv", nn::Conv2d(nn::Conv2dOptions(in, out, 1).bias(false)));
  }
  torch::Tensor forward(const torch::Tensor& x) { return torch::avg_pool2d(conv(torch::relu(norm(x))), 2, 2); }

 private:
  nn::BatchNorm2d norm{nullptr};
  nn::Conv2d conv{nullptr};
};
TORCH_MODULE(Transition);

class DenseNet121Impl : public BackboneImpl {
 public:
  DenseNet121Impl() {
    features_ = register_module("features", std::make_shared<nn::Module>());
    conv0 = features_->register_module("conv0", nn::Conv2d(nn::Conv2dOptions(3, 64, 7).stride(2).padding(3).bias(false)));
    norm0 = features_->register_module("norm0", nn::BatchNorm2d(64));
    std::int64_t ch = 64;
    const int kBlocks[] = {6, 12, 24, 16};
    for (int b = 0; b < 4; ++b) {
      blocks_.push_back(features_->register_module("denseblock" + std::to_string(b + 1), DenseBlock(kBlocks[b], ch)));
      ch += kBlocks[b] * kGrowth;
      if (b != 3) {
        transitions_.push_back(features_->register_module("transition" + std::to_string(b + 1), Transition(ch, ch / 2)));
        ch /= 2;
      }
    }
    norm5 = features_->register_module("norm5", nn::BatchNorm2d(ch));
    dim_ = ch;

    torch::NoGradGuard guard;
    for (auto& m : modules(false)) {
      if (auto* c = m->as<nn::Conv2d>()) {
        nn::init::kaiming_normal_(c->weight);
      } else if (auto* bn = m->as<nn::BatchNorm2d>()) {
        bn->weight.fill_(1.0);
        bn->bias.zero_();
      }
    }
  }

  torch::Tensor spatial(const torch::Tensor& x) override {
    auto h = torch::max_pool2d(torch::relu(norm0(conv0(x))), 3, 2, 1);
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      h = blocks_[b](h);
      if (b < transitions_.size()) h = transitions_[b](h);
    }
    return torch::relu(norm5(h));
  }

  std::int64_t feature_dim() const override { return dim_; }
  std::vector<std::string> reference_head_prefixes() const override { return {"classifier."}; }

 private:
  std::shared_ptr<nn::Module> features_;
  nn::Conv2d conv0{nullptr};
  nn::BatchNorm2d norm0{nullptr}, norm5{nullptr};
  std::vector<DenseBlock> blocks_;
  std::vector<Transition> transitions_;
  std::int64_t dim_ = 0;
};

}  // namespace

Backbone make_densenet121() { return std::make_shared<DenseNet121Impl>(); }

}  // namespace skinelev::modelcore
