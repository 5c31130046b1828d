#pragma once

#include <cstdint>
#include <optional>

#include <torch/torch.h>

#include "skinelev/modelcore/model.hpp"

namespace skinelev::modelcore {

// GradCAM for one preprocessed image [3,S,S]: channel weights are the spatial
// means of d(target logit)/d(last conv maps); the map is the rectified
// weighted channel sum, bilinearly upsampled to S x S and divided by its
// maximum (an all-zero map stays zero). Returns float32 [S,S] in [0,1].
// Throws ModelError on an out-of-range class, wrong shape or aux.
torch::Tensor gradcam(ModelBundle& bundle, const torch::Tensor& image, std::int64_t target_class,
                      const std::optional<torch::Tensor>& aux = std::nullopt);

// Fraction of the map's total mass inside the half-open pixel box
// [x0, x1) x [y0, y1); 0 for an all-zero map.
double mass_inside(const torch::Tensor& map, std::int64_t x0, std::int64_t y0, std::int64_t x1, std::int64_t y1);

// RGB uint8 overlay of a [0,1] map on an RGB uint8 image (JET colormap, alpha blend).
torch::Tensor overlay_heatmap(const torch::Tensor& rgb_u8, const torch::Tensor& map, double alpha = 0.5);

}  // namespace skinelev::modelcore
