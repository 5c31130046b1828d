#include "skinelev/modelcore/gradcam.hpp"

#include <opencv2/imgproc.hpp>

#include "skinelev/error.hpp"

namespace skinelev::modelcore {

torch::Tensor gradcam(ModelBundle& bundle, const torch::Tensor& image, std::int64_t target_class,
                      const std::optional<torch::Tensor>& aux) {
  if (target_class < 0 || target_class >= bundle.num_classes()) {
    throw ModelError("target_class " + std::to_string(target_class) + " out of range [0," +
                     std::to_string(bundle.num_classes()) + ")");
  }
  if (image.dim() != 3) throw ModelError("gradcam takes a single [3,S,S] image");
  auto x = check_images(bundle, image);
  auto a = check_aux(bundle, aux, 1);

  auto& net = bundle.net;
  net->eval();
  torch::AutoGradMode grad_on(true);
  torch::Tensor maps;
  {
    torch::NoGradGuard no_grad;
    maps = net->backbone().spatial(x);
  }
  if (maps.dim() != 4) throw ModelError("backbone exposes no spatial feature maps");
  maps = maps.detach().requires_grad_(true);
  auto score = net->logits_from_maps(maps, a).select(1, target_class).sum();

  torch::Tensor grad;
  if (score.requires_grad()) {
    grad = torch::autograd::grad({score}, {maps}, {}, false, false, /*allow_unused=*/true)[0];
  }
  if (!grad.defined()) grad = torch::zeros_like(maps);

  torch::NoGradGuard no_grad;
  auto weights = grad.mean({2, 3}, /*keepdim=*/true);
  auto cam = torch::relu((weights * maps.detach()).sum(1, /*keepdim=*/true));
  cam = torch::nn::functional::interpolate(cam, torch::nn::functional::InterpolateFuncOptions()
                                                    .size(std::vector<std::int64_t>{x.size(2), x.size(3)})
                                                    .mode(torch::kBilinear)
                                                    .align_corners(false));
  cam = cam.squeeze(0).squeeze(0).clamp_min(0.0);
  const double peak = cam.max().item<double>();
  if (peak > 0.0) cam = cam / peak;
  return cam.to(torch::kFloat32).contiguous();
}

double mass_inside(const torch::Tensor& map, std::int64_t x0, std::int64_t y0, std::int64_t x1, std::int64_t y1) {
  auto m = map.to(torch::kFloat64);
  const double total = m.sum().item<double>();
  if (total <= 0.0) return 0.0;
  x0 = std::clamp<std::int64_t>(x0, 0, m.size(1));
  x1 = std::clamp<std::int64_t>(x1, 0, m.size(1));
  y0 = std::clamp<std::int64_t>(y0, 0, m.size(0));
  y1 = std::clamp<std::int64_t>(y1, 0, m.size(0));
  if (x1 <= x0 || y1 <= y0) return 0.0;
  return m.slice(0, y0, y1).slice(1, x0, x1).sum().item<double>() / total;
}

torch::Tensor overlay_heatmap(const torch::Tensor& rgb_u8, const torch::Tensor& map, double alpha) {
  auto img = rgb_u8.contiguous();
  const int h = static_cast<int>(img.size(0)), w = static_cast<int>(img.size(1));
  auto m8 = (map.clamp(0.0, 1.0) * 255.0).round().to(torch::kUInt8).contiguous();
  cv::Mat gray(static_cast<int>(m8.size(0)), static_cast<int>(m8.size(1)), CV_8UC1, m8.data_ptr<std::uint8_t>());
  cv::Mat resized, color, color_rgb;
  cv::resize(gray, resized, cv::Size(w, h), 0, 0, cv::INTER_LINEAR);
  cv::applyColorMap(resized, color, cv::COLORMAP_JET);
  cv::cvtColor(color, color_rgb, cv::COLOR_BGR2RGB);
  cv::Mat base(h, w, CV_8UC3, img.data_ptr<std::uint8_t>());
  cv::Mat blended;
  cv::addWeighted(base, 1.0 - alpha, color_rgb, alpha, 0.0, blended);
  return torch::from_blob(blended.data, {h, w, 3}, torch::kUInt8).clone();
}

}  // namespace skinelev::modelcore
