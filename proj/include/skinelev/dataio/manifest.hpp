#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "skinelev/dataio/schema.hpp"

namespace skinelev::dataio {

enum class Modality { clinical, dermoscopic };

std::string to_string(Modality m);
Modality parse_modality(const std::string& s);

struct ImageRecord {
  std::string image_id;
  std::filesystem::path image_path;
  Modality modality = Modality::dermoscopic;
  std::optional<int> diagnosis;  // index into schema.diagnosis_classes
  std::optional<int> elevation;  // index into schema.elevation_classes
  // Auxiliary vector fused into a diagnosis model (attached pseudo-labels).
  std::optional<std::vector<double>> aux;
};

struct DatasetManifest {
  std::string name;
  LabelSchema schema;
  std::vector<ImageRecord> records;

  std::size_t size() const { return records.size(); }
  const ImageRecord& find(const std::string& image_id) const;

  // Per-class counts in schema order; records without the label are skipped.
  std::vector<std::size_t> elevation_counts() const;
  std::vector<std::size_t> diagnosis_counts() const;

  // Single modality shared by every record, if any.
  std::optional<Modality> common_modality() const;
};

// Reads a manifest CSV with header
//   image_id,image_path,modality[,diagnosis][,elevation]
// Empty cells mean "absent label". Relative image paths resolve against the
// manifest's directory. Throws DataError on missing file or column, unknown
// raw label, duplicate image_id or bad modality.
DatasetManifest load_manifest(const std::filesystem::path& path, const LabelSchema& schema);

// Writes the canonical CSV form (all five columns, class names for labels).
std::string manifest_to_csv(const DatasetManifest& manifest);

// Returns a copy restricted to records satisfying `keep`.
template <typename Pred>
DatasetManifest filter(const DatasetManifest& m, Pred keep) {
  DatasetManifest out{m.name, m.schema, {}};
  for (const auto& r : m.records) {
    if (keep(r)) out.records.push_back(r);
  }
  return out;
}

}  // namespace skinelev::dataio
