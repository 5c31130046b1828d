#include "fixtures.hpp"

#include <atomic>
#include <fstream>
#include <unistd.h>

namespace testing_support {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("skinelev_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream(path, std::ios::binary) << text;
}

skinelev::dataio::DatasetManifest make_manifest(const std::vector<int>& elevation, const std::vector<int>& diagnosis,
                                                const skinelev::dataio::LabelSchema& schema) {
  skinelev::dataio::DatasetManifest m;
  m.name = "memory";
  m.schema = schema;
  const auto n = std::max(elevation.size(), diagnosis.size());
  for (std::size_t i = 0; i < n; ++i) {
    skinelev::dataio::ImageRecord r;
    r.image_id = "img" + std::to_string(i);
    r.image_path = r.image_id + ".png";
    if (i < elevation.size() && elevation[i] >= 0) r.elevation = elevation[i];
    if (i < diagnosis.size() && diagnosis[i] >= 0) r.diagnosis = diagnosis[i];
    m.records.push_back(r);
  }
  return m;
}

}  // namespace testing_support
