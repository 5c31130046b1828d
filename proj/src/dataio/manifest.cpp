#include "skinelev/dataio/manifest.hpp"

#include <unordered_set>

#include "skinelev/csv.hpp"
#include "skinelev/error.hpp"

namespace skinelev::dataio {

std::string to_string(Modality m) { return m == Modality::clinical ? "clinical" : "dermoscopic"; }

Modality parse_modality(const std::string& s) {
  if (s == "clinical") return Modality::clinical;
  if (s == "dermoscopic") return Modality::dermoscopic;
  throw DataError("unknown modality '" + s + "' (expected clinical or dermoscopic)");
}

const ImageRecord& DatasetManifest::find(const std::string& image_id) const {
  for (const auto& r : records) {
    if (r.image_id == image_id) return r;
  }
  throw DataError("image_id '" + image_id + "' not in manifest " + name);
}

std::vector<std::size_t> DatasetManifest::elevation_counts() const {
  std::vector<std::size_t> counts(schema.num_elevation(), 0);
  for (const auto& r : records) {
    if (r.elevation) ++counts[static_cast<std::size_t>(*r.elevation)];
  }
  return counts;
}

std::vector<std::size_t> DatasetManifest::diagnosis_counts() const {
  std::vector<std::size_t> counts(schema.num_diagnosis(), 0);
  for (const auto& r : records) {
    if (r.diagnosis) ++counts[static_cast<std::size_t>(*r.diagnosis)];
  }
  return counts;
}

std::optional<Modality> DatasetManifest::common_modality() const {
  if (records.empty()) return std::nullopt;
  const Modality first = records.front().modality;
  for (const auto& r : records) {
    if (r.modality != first) return std::nullopt;
  }
  return first;
}

DatasetManifest load_manifest(const std::filesystem::path& path, const LabelSchema& schema) {
  if (!std::filesystem::exists(path)) throw DataError("manifest not found: " + path.string());
  schema.validate();
  const CsvTable table = read_csv(path);
  const std::string origin = path.string();

  auto required = [&](const char* name) {
    const int c = table.column(name);
    if (c < 0) throw DataError(origin + ": missing required column '" + name + "'");
    return c;
  };
  const int c_id = required("image_id");
  const int c_path = required("image_path");
  const int c_mod = required("modality");
  const int c_diag = table.column("diagnosis");
  const int c_elev = table.column("elevation");

  DatasetManifest manifest;
  manifest.name = path.stem().string();
  manifest.schema = schema;
  manifest.records.reserve(table.rows.size());
  std::unordered_set<std::string> ids;
  const auto base = path.parent_path();

  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string where = origin + ":" + std::to_string(table.row_lines[i]);
    ImageRecord rec;
    rec.image_id = row[c_id];
    if (rec.image_id.empty()) throw DataError(where + ": empty image_id");
    if (!ids.insert(rec.image_id).second) throw DataError(where + ": duplicate image_id '" + rec.image_id + "'");
    if (row[c_path].empty()) throw DataError(where + ": empty image_path");
    rec.image_path = row[c_path];
    if (rec.image_path.is_relative()) rec.image_path = base / rec.image_path;
    try {
      rec.modality = parse_modality(row[c_mod]);
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
    if (c_diag >= 0 && !row[c_diag].empty()) {
      rec.diagnosis = schema.group_diagnosis(row[c_diag]);
      if (!rec.diagnosis) throw DataError(where + ": unknown raw diagnosis label '" + row[c_diag] + "'");
    }
    if (c_elev >= 0 && !row[c_elev].empty()) {
      rec.elevation = schema.elevation_index(row[c_elev]);
      if (!rec.elevation) throw DataError(where + ": unknown elevation label '" + row[c_elev] + "'");
    }
    manifest.records.push_back(std::move(rec));
  }
  return manifest;
}

std::string manifest_to_csv(const DatasetManifest& manifest) {
  std::string out = "image_id,image_path,modality,diagnosis,elevation\n";
  for (const auto& r : manifest.records) {
    out += csv_row({r.image_id, r.image_path.string(), to_string(r.modality),
                    r.diagnosis ? manifest.schema.diagnosis_classes[*r.diagnosis] : "",
                    r.elevation ? manifest.schema.elevation_classes[*r.elevation] : ""});
  }
  return out;
}

}  // namespace skinelev::dataio
