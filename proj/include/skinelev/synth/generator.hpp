#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "skinelev/dataio/manifest.hpp"
#include "skinelev/dataio/schema.hpp"

namespace skinelev::synth {

// Toy lesion images. Elevation classes are drawn as shapes on a skin-coloured
// background: a flat disk, a disk with a dark raised rim, or a disk with a
// bright central nodule. In the diagnosis variant a striped texture is added
// to half of the lesions and the diagnosis is 3*texture + elevation, so it
// depends jointly on a visible cue and the elevation latent.
struct SynthOptions {
  int count = 600;
  int image_size = 64;
  std::uint64_t seed = 0;
  bool diagnosis_task = false;
  dataio::Modality modality = dataio::Modality::dermoscopic;
  double min_radius = 14.0;
  double max_radius = 24.0;
  double texture_amplitude = 0.12;
  double texture_period = 4.0;
  // Blend of the rim / nodule colour over the lesion colour; 1 draws them
  // at full strength, 0 makes elevation invisible.
  double elevation_contrast = 1.0;
};

struct Box {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // pixel coordinates of the generated image
};

struct SynthSample {
  cv::Mat rgb;  // CV_8UC3
  int elevation = 0;
  int texture = 0;
  Box box;  // bounding box of the lesion disk
};

// Draws one image; the random stream is fully determined by `seed`.
SynthSample render(int elevation, int texture, std::uint64_t seed, const SynthOptions& options);

// Six diagnosis classes (texture x elevation) and the fixed elevation classes.
dataio::LabelSchema synth_schema();

struct SynthFiles {
  std::filesystem::path manifest;  // manifest.csv
  std::filesystem::path schema;    // schema.txt
  std::filesystem::path boxes;     // boxes.csv: image_id,x0,y0,x1,y1
};

// Writes images/*.png plus the three files under `dir`. Elevation classes
// cycle (balanced) in the elevation task and are drawn uniformly in the
// diagnosis task. Diagnosis labels are only written for the diagnosis task.
SynthFiles write_dataset(const std::filesystem::path& dir, const SynthOptions& options);

std::vector<std::pair<std::string, Box>> read_boxes(const std::filesystem::path& path);

}  // namespace skinelev::synth
