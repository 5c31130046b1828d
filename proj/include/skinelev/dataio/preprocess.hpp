#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_map>
#include <vector>

#include <opencv2/core.hpp>
#include <torch/types.h>

#include "skinelev/dataio/manifest.hpp"

namespace skinelev {
class KeyValueFile;
}

namespace skinelev::dataio {

// Resize target and channel statistics of the backbone's pretraining corpus.
// Defaults are the ImageNet statistics; configs override them via the keys
// image_size, norm_mean and norm_std.
struct PreprocessConfig {
  int image_size = 224;
  std::array<float, 3> mean{0.485f, 0.456f, 0.406f};
  std::array<float, 3> std{0.229f, 0.224f, 0.225f};

  static PreprocessConfig from_config(const KeyValueFile& kv);
  void write_to(KeyValueFile& kv) const;
};

// Element of the dihedral group of the square: `flip` (horizontal mirror)
// applied first, then `rotations` quarter turns. Vertical flip is
// {rotations = 2, flip = true}.
struct DihedralTransform {
  int rotations = 0;  // 0..3
  bool flip = false;

  static constexpr int kOrder = 8;
  static DihedralTransform from_index(int index);  // 0..7
  int index() const { return rotations + (flip ? 4 : 0); }

  // (*this) after `first`.
  DihedralTransform after(const DihedralTransform& first) const;
  DihedralTransform inverse() const;
  bool is_identity() const { return rotations == 0 && !flip; }

  // Applies to a CHW (or NCHW) tensor; spatial dims are the last two.
  torch::Tensor apply(const torch::Tensor& image) const;

  bool operator==(const DihedralTransform&) const = default;
};

// Uniform draw over the 8 group elements from a seed.
DihedralTransform draw_transform(std::uint64_t seed);

// Reads an image as 8-bit RGB. Throws DataError if undecodable or empty.
cv::Mat decode_rgb(const std::filesystem::path& path);

// RGB uint8 image -> normalized float tensor of shape [3, size, size]
// (channel-first, the layout the models consume). In train mode a dihedral
// transform drawn from `seed` is applied; eval mode ignores the seed.
torch::Tensor preprocess_image(const cv::Mat& rgb, const PreprocessConfig& config, bool train_mode,
                               std::uint64_t seed);
torch::Tensor preprocess_image(const ImageRecord& record, const PreprocessConfig& config, bool train_mode,
                               std::uint64_t seed);

// Decoded RGB images keyed by path. Stops inserting once `max_bytes` of pixel
// data are held; later images are decoded on every call. Not thread-safe.
class ImageCache {
 public:
  explicit ImageCache(std::size_t max_bytes = std::size_t{512} << 20) : max_bytes_(max_bytes) {}
  cv::Mat get(const std::filesystem::path& path);

 private:
  std::unordered_map<std::string, cv::Mat> images_;
  std::size_t bytes_ = 0;
  std::size_t max_bytes_;
};

// Stacked preprocessed images [N,3,S,S] for `records[indices[i]]`. In train
// mode image i uses transform seed seeds[i].
torch::Tensor load_batch(const std::vector<ImageRecord>& records, std::span<const std::size_t> indices,
                         const PreprocessConfig& config, bool train_mode, std::span<const std::uint64_t> seeds,
                         ImageCache* cache = nullptr);

}  // namespace skinelev::dataio
