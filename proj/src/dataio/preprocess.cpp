#include "skinelev/dataio/preprocess.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <torch/torch.h>

#include "skinelev/error.hpp"
#include "skinelev/kv_config.hpp"
#include "skinelev/random.hpp"

namespace skinelev::dataio {

PreprocessConfig PreprocessConfig::from_config(const KeyValueFile& kv) {
  PreprocessConfig c;
  c.image_size = static_cast<int>(kv.get_int("image_size", c.image_size));
  if (c.image_size <= 0) throw ConfigError("image_size must be positive");
  auto read3 = [&](const char* key, std::array<float, 3>& dst) {
    const auto v = kv.get_doubles(key, {dst[0], dst[1], dst[2]});
    if (v.size() != 3) throw ConfigError(std::string(key) + " needs exactly 3 values");
    for (int i = 0; i < 3; ++i) dst[i] = static_cast<float>(v[i]);
  };
  read3("norm_mean", c.mean);
  read3("norm_std", c.std);
  for (float s : c.std) {
    if (!(s > 0.0f)) throw ConfigError("norm_std entries must be positive");
  }
  return c;
}

void PreprocessConfig::write_to(KeyValueFile& kv) const {
  auto fmt3 = [](const std::array<float, 3>& a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.9g, %.9g, %.9g", a[0], a[1], a[2]);
    return std::string(buf);
  };
  kv.set("image_size", std::to_string(image_size));
  kv.set("norm_mean", fmt3(mean));
  kv.set("norm_std", fmt3(std));
}

DihedralTransform DihedralTransform::from_index(int index) {
  if (index < 0 || index >= kOrder) throw std::out_of_range("dihedral index");
  return {index % 4, index >= 4};
}

DihedralTransform DihedralTransform::after(const DihedralTransform& first) const {
  // R^a F^f R^b F^g = R^(a + (f ? -b : b)) F^(f xor g), using F R = R^-1 F.
  const int r = flip ? rotations - first.rotations : rotations + first.rotations;
  return {((r % 4) + 4) % 4, flip != first.flip};
}

DihedralTransform DihedralTransform::inverse() const {
  if (flip) return *this;  // reflections are involutions
  return {(4 - rotations) % 4, false};
}

torch::Tensor DihedralTransform::apply(const torch::Tensor& image) const {
  const int64_t h = image.dim() - 2;
  const int64_t w = image.dim() - 1;
  torch::Tensor out = flip ? torch::flip(image, {w}) : image;
  if (rotations) out = torch::rot90(out, rotations, {h, w});
  return out.contiguous();
}

DihedralTransform draw_transform(std::uint64_t seed) {
  Rng rng(seed);
  return DihedralTransform::from_index(static_cast<int>(rng.below(DihedralTransform::kOrder)));
}

cv::Mat decode_rgb(const std::filesystem::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) {
    if (!std::filesystem::exists(path)) throw DataError("image not found: " + path.string());
    throw DataError("cannot decode image (or image is empty): " + path.string());
  }
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  return rgb;
}

torch::Tensor preprocess_image(const cv::Mat& rgb, const PreprocessConfig& config, bool train_mode,
                               std::uint64_t seed) {
  if (rgb.empty() || rgb.rows == 0 || rgb.cols == 0) throw DataError("zero-size image");
  if (rgb.type() != CV_8UC3) throw DataError("expected an 8-bit 3-channel RGB image");

  cv::Mat resized;
  const cv::Size target(config.image_size, config.image_size);
  const bool shrinking = rgb.cols > target.width || rgb.rows > target.height;
  cv::resize(rgb, resized, target, 0, 0, shrinking ? cv::INTER_AREA : cv::INTER_LINEAR);

  cv::Mat as_float;
  resized.convertTo(as_float, CV_32FC3, 1.0 / 255.0);
  auto hwc = torch::from_blob(as_float.data, {config.image_size, config.image_size, 3}, torch::kFloat32);
  auto chw = hwc.permute({2, 0, 1}).clone();
  const auto mean = torch::tensor({config.mean[0], config.mean[1], config.mean[2]}).view({3, 1, 1});
  const auto std = torch::tensor({config.std[0], config.std[1], config.std[2]}).view({3, 1, 1});
  chw = (chw - mean) / std;

  if (train_mode) chw = draw_transform(seed).apply(chw);
  return chw.contiguous();
}

torch::Tensor preprocess_image(const ImageRecord& record, const PreprocessConfig& config, bool train_mode,
                               std::uint64_t seed) {
  return preprocess_image(decode_rgb(record.image_path), config, train_mode, seed);
}

cv::Mat ImageCache::get(const std::filesystem::path& path) {
  const auto key = path.string();
  if (auto it = images_.find(key); it != images_.end()) return it->second;
  cv::Mat img = decode_rgb(path);
  const auto bytes = img.total() * img.elemSize();
  if (bytes_ + bytes <= max_bytes_) {
    images_.emplace(key, img);
    bytes_ += bytes;
  }
  return img;
}

torch::Tensor load_batch(const std::vector<ImageRecord>& records, std::span<const std::size_t> indices,
                         const PreprocessConfig& config, bool train_mode, std::span<const std::uint64_t> seeds,
                         ImageCache* cache) {
  std::vector<torch::Tensor> items;
  items.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& rec = records.at(indices[i]);
    cv::Mat rgb = cache ? cache->get(rec.image_path) : decode_rgb(rec.image_path);
    const std::uint64_t seed = i < seeds.size() ? seeds[i] : 0;
    items.push_back(preprocess_image(rgb, config, train_mode, seed));
  }
  return torch::stack(items);
}

}  // namespace skinelev::dataio
