#include "skinelev/synth/generator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "skinelev/csv.hpp"
#include "skinelev/error.hpp"
#include "skinelev/kv_config.hpp"
#include "skinelev/random.hpp"

namespace skinelev::synth {

namespace fs = std::filesystem;
using Rgb = std::array<double, 3>;

namespace {

constexpr Rgb kSkin{0.87, 0.70, 0.60};
constexpr Rgb kLesion{0.45, 0.30, 0.20};
constexpr Rgb kRim{0.20, 0.12, 0.08};
constexpr Rgb kNodule{0.80, 0.20, 0.25};

}  // namespace

SynthSample render(int elevation, int texture, std::uint64_t seed, const SynthOptions& o) {
  if (elevation < 0 || elevation > 2) throw ConfigError("synthetic elevation must be 0, 1 or 2");
  if (!(o.elevation_contrast >= 0.0 && o.elevation_contrast <= 1.0))
    throw ConfigError("elevation_contrast must lie in [0, 1]");
  Rng rng(seed);
  const int n = o.image_size;
  const double scale = n / 64.0;
  const double r = rng.uniform(o.min_radius, o.max_radius) * scale;
  const double cx = rng.uniform(r + 2 * scale, n - 2 * scale - r);
  const double cy = rng.uniform(r + 2 * scale, n - 2 * scale - r);

  Rgb skin, lesion;
  for (int c = 0; c < 3; ++c) skin[c] = kSkin[c] + rng.normal(0.0, 0.03);
  for (int c = 0; c < 3; ++c) lesion[c] = kLesion[c] + rng.normal(0.0, 0.03);
  const double angle = rng.uniform(0.0, std::numbers::pi);

  std::vector<double> img(static_cast<std::size_t>(n) * n * 3);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      double* px = &img[(static_cast<std::size_t>(y) * n + x) * 3];
      const double d = std::hypot(x - cx, y - cy);
      const bool inside = d <= r;
      for (int c = 0; c < 3; ++c) px[c] = inside ? lesion[c] + rng.normal(0.0, 0.04) : skin[c] + rng.normal(0.0, 0.03);
      if (!inside) continue;
      if (texture) {
        const double s = std::sin((std::cos(angle) * x + std::sin(angle) * y) / scale * 2.0 * std::numbers::pi /
                                  o.texture_period);
        for (int c = 0; c < 3; ++c) px[c] += o.texture_amplitude * s;
      }
      if (elevation == 1 && d >= 0.7 * r && o.elevation_contrast > 0.0) {
        const double k = o.elevation_contrast;
        for (int c = 0; c < 3; ++c) px[c] = (1.0 - k) * px[c] + k * (kRim[c] + rng.normal(0.0, 0.04));
      } else if (elevation == 2) {
        const double blob = o.elevation_contrast * std::exp(-std::pow(d / (0.5 * r), 2.0));
        for (int c = 0; c < 3; ++c) px[c] = px[c] * (1.0 - blob) + blob * kNodule[c];
      }
    }
  }

  SynthSample s;
  s.elevation = elevation;
  s.texture = texture;
  s.box = {cx - r, cy - r, cx + r, cy + r};
  s.rgb = cv::Mat(n, n, CV_8UC3);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double* px = &img[(static_cast<std::size_t>(y) * n + x) * 3];
      auto& out = s.rgb.at<cv::Vec3b>(y, x);
      for (int c = 0; c < 3; ++c) {
        out[c] = static_cast<std::uint8_t>(std::lround(std::clamp(px[c], 0.0, 1.0) * 255.0));
      }
    }
  }
  return s;
}

dataio::LabelSchema synth_schema() {
  dataio::LabelSchema s;
  s.elevation_classes = dataio::default_elevation_classes();
  for (const char* t : {"plain", "striped"}) {
    for (const auto& e : s.elevation_classes) s.diagnosis_classes.push_back(std::string(t) + "_" + e);
  }
  return s;
}

SynthFiles write_dataset(const fs::path& dir, const SynthOptions& o) {
  if (o.count <= 0) throw ConfigError("count must be positive");
  if (o.image_size < 16) throw ConfigError("image_size must be at least 16");
  fs::create_directories(dir / "images");
  const auto schema = synth_schema();
  Rng labels(derive_seed(o.seed, 0x6c6162ULL));

  std::string manifest = csv_row({"image_id", "image_path", "modality", "diagnosis", "elevation"});
  std::string boxes = csv_row({"image_id", "x0", "y0", "x1", "y1"});
  for (int i = 0; i < o.count; ++i) {
    int elevation = i % 3;
    int texture = 0;
    if (o.diagnosis_task) {
      elevation = static_cast<int>(labels.below(3));
      texture = static_cast<int>(labels.below(2));
    }
    const auto sample = render(elevation, texture, derive_seed(o.seed, i), o);
    char id[32];
    std::snprintf(id, sizeof id, "img%05d", i);
    const auto rel = fs::path("images") / (std::string(id) + ".png");
    cv::Mat bgr;
    cv::cvtColor(sample.rgb, bgr, cv::COLOR_RGB2BGR);
    if (!cv::imwrite((dir / rel).string(), bgr)) throw DataError("cannot write " + (dir / rel).string());
    const std::string diagnosis =
        o.diagnosis_task ? schema.diagnosis_classes[static_cast<std::size_t>(3 * texture + elevation)] : "";
    manifest += csv_row({id, rel.string(), dataio::to_string(o.modality), diagnosis,
                         schema.elevation_classes[static_cast<std::size_t>(elevation)]});
    boxes += csv_row({id, fmt_double(sample.box.x0), fmt_double(sample.box.y0), fmt_double(sample.box.x1),
                      fmt_double(sample.box.y1)});
  }
  SynthFiles files{dir / "manifest.csv", dir / "schema.txt", dir / "boxes.csv"};
  write_file_atomic(files.manifest, manifest);
  write_file_atomic(files.schema, schema.serialize());
  write_file_atomic(files.boxes, boxes);
  return files;
}

std::vector<std::pair<std::string, Box>> read_boxes(const fs::path& path) {
  const auto table = read_csv(path);
  const int id = table.column("image_id");
  const int x0 = table.column("x0"), y0 = table.column("y0"), x1 = table.column("x1"), y1 = table.column("y1");
  if (id < 0 || x0 < 0 || y0 < 0 || x1 < 0 || y1 < 0) throw DataError(path.string() + ": missing box columns");
  std::vector<std::pair<std::string, Box>> out;
  for (const auto& row : table.rows) {
    out.emplace_back(row[static_cast<std::size_t>(id)],
                     Box{parse_double(row[static_cast<std::size_t>(x0)], "x0"),
                         parse_double(row[static_cast<std::size_t>(y0)], "y0"),
                         parse_double(row[static_cast<std::size_t>(x1)], "x1"),
                         parse_double(row[static_cast<std::size_t>(y1)], "y1")});
  }
  return out;
}

}  // namespace skinelev::synth
