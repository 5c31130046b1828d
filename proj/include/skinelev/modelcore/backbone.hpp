#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace skinelev::modelcore {

enum class Family {
  vgg16_gap,
  resnet18,
  resnet50,
  mobilenetv2,
  mobilenetv3l,
  densenet121,
  efficientnet_b0,
  efficientnet_b1,
};

inline constexpr std::array<Family, 8> kAllFamilies{
    Family::vgg16_gap,   Family::resnet18,        Family::resnet50,        Family::mobilenetv2,
    Family::mobilenetv3l, Family::densenet121,    Family::efficientnet_b0, Family::efficientnet_b1};

// Names as written in configs: vgg16-gap, resnet18, ..., efficientnet-b1.
std::string to_string(Family f);
Family parse_family(const std::string& s);  // ConfigError("unknown family ...")

struct BackboneSpec {
  Family family = Family::mobilenetv2;
  bool pretrained = false;
  // torchvision-layout state dict (.pth) with the pretrained feature extractor.
  std::string pretrained_path;
  // Channel multiplier; only the MobileNet families accept values other than 1.
  double width_multiplier = 1.0;
  std::int64_t feature_dim = 0;  // 0 = fill in from the family
  std::int64_t num_classes = 0;
};

// Width of the vector fed to the final linear classifier.
std::int64_t family_feature_dim(Family f, double width_multiplier = 1.0);

// Feature extractor of a classifier, split so the last convolutional maps are
// reachable for GradCAM:
//   features(x) = neck(pool(spatial(x)))
// Submodule names follow torchvision so its state dicts load directly.
class BackboneImpl : public torch::nn::Module {
 public:
  // Last convolutional feature maps, [N, C, h, w].
  virtual torch::Tensor spatial(const torch::Tensor& x) = 0;
  // Global pooling to [N, C].
  virtual torch::Tensor pool(const torch::Tensor& maps);
  // Layers between pooling and the final classifier (MobileNetV3's
  // pre-classifier); identity elsewhere.
  virtual torch::Tensor neck(const torch::Tensor& pooled) { return pooled; }
  virtual std::int64_t feature_dim() const = 0;
  // Dropout the reference architecture applies right before its classifier.
  virtual double head_dropout() const { return 0.0; }
  // State-dict key prefixes of the reference classifier, skipped when loading
  // pretrained weights.
  virtual std::vector<std::string> reference_head_prefixes() const { return {}; }

  torch::Tensor features(const torch::Tensor& x) { return neck(pool(spatial(x))); }
};

using Backbone = std::shared_ptr<BackboneImpl>;

// Randomly initialized backbone with the reference initialization scheme.
// Throws ConfigError for width multipliers a family does not support.
Backbone make_backbone(Family family, double width_multiplier = 1.0);

// Parameter count of the reference classification network (backbone plus its
// original head) for `num_classes` outputs. Used to check head surgery.
std::int64_t reference_head_parameters(Family family, std::int64_t num_classes, double width_multiplier = 1.0);

}  // namespace skinelev::modelcore
