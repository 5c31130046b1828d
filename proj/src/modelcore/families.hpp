#pragma once

#include "skinelev/modelcore/backbone.hpp"

namespace skinelev::modelcore {

Backbone make_vgg16_gap();
Backbone make_resnet(int depth);  // 18 or 50
Backbone make_mobilenet_v2(double width_multiplier);
Backbone make_mobilenet_v3_large(double width_multiplier);
Backbone make_densenet121();
Backbone make_efficientnet(double depth_multiplier);  // 1.0 = B0, 1.1 = B1

}  // namespace skinelev::modelcore
