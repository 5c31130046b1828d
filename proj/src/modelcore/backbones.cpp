#include "families.hpp"

#include <algorithm>

#include "layers.hpp"
#include "skinelev/error.hpp"

namespace skinelev::modelcore {

std::string to_string(Family f) {
  switch (f) {
    case Family::vgg16_gap: return "vgg16-gap";
    case Family::resnet18: return "resnet18";
    case Family::resnet50: return "resnet50";
    case Family::mobilenetv2: return "mobilenetv2";
    case Family::mobilenetv3l: return "mobilenetv3l";
    case Family::densenet121: return "densenet121";
    case Family::efficientnet_b0: return "efficientnet-b0";
    case Family::efficientnet_b1: return "efficientnet-b1";
  }
  return "?";
}

Family parse_family(const std::string& s) {
  for (Family f : kAllFamilies) {
    if (to_string(f) == s) return f;
  }
  throw ConfigError("unknown family '" + s + "'");
}

torch::Tensor BackboneImpl::pool(const torch::Tensor& maps) {
  return torch::adaptive_avg_pool2d(maps, {1, 1}).flatten(1);
}

Backbone make_backbone(Family family, double width_multiplier) {
  if (!(width_multiplier > 0.0)) throw ConfigError("width_multiplier must be positive");
  const bool scalable = family == Family::mobilenetv2 || family == Family::mobilenetv3l;
  if (!scalable && width_multiplier != 1.0) {
    throw ConfigError("family " + to_string(family) + " does not support width_multiplier != 1");
  }
  switch (family) {
    case Family::vgg16_gap: return make_vgg16_gap();
    case Family::resnet18: return make_resnet(18);
    case Family::resnet50: return make_resnet(50);
    case Family::mobilenetv2: return make_mobilenet_v2(width_multiplier);
    case Family::mobilenetv3l: return make_mobilenet_v3_large(width_multiplier);
    case Family::densenet121: return make_densenet121();
    case Family::efficientnet_b0: return make_efficientnet(1.0);
    case Family::efficientnet_b1: return make_efficientnet(1.1);
  }
  throw ConfigError("unknown family");
}

std::int64_t family_feature_dim(Family f, double width_multiplier) {
  switch (f) {
    case Family::vgg16_gap: return 512;
    case Family::resnet18: return 512;
    case Family::resnet50: return 2048;
    case Family::mobilenetv2: return layers::make_divisible(1280 * std::max(1.0, width_multiplier));
    case Family::mobilenetv3l: return layers::make_divisible(1280 * width_multiplier);
    case Family::densenet121: return 1024;
    case Family::efficientnet_b0:
    case Family::efficientnet_b1: return 1280;
  }
  return 0;
}

std::int64_t reference_head_parameters(Family family, std::int64_t num_classes, double width_multiplier) {
  auto bb = make_backbone(family, width_multiplier);
  std::int64_t n = 0;
  for (const auto& p : bb->parameters()) n += p.numel();
  if (family == Family::vgg16_gap) {
    // Original VGG head: 512x7x7 -> 4096 -> 4096 -> num_classes.
    constexpr std::int64_t flat = 512 * 7 * 7;
    return n + (flat * 4096 + 4096) + (4096 * 4096 + 4096) + (4096 * num_classes + num_classes);
  }
  return n + bb->feature_dim() * num_classes + num_classes;
}

}  // namespace skinelev::modelcore
