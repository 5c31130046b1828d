#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "skinelev/dataio/manifest.hpp"

namespace testing_support {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

void write_text(const std::filesystem::path& path, const std::string& text);

// In-memory manifest with the given per-record elevation / diagnosis indices
// (-1 for absent). Image paths are fake.
skinelev::dataio::DatasetManifest make_manifest(const std::vector<int>& elevation, const std::vector<int>& diagnosis,
                                                const skinelev::dataio::LabelSchema& schema);

}  // namespace testing_support
