#include "skinelev/dataio/schema.hpp"

#include <set>

#include "skinelev/csv.hpp"
#include "skinelev/error.hpp"
#include "skinelev/kv_config.hpp"

namespace skinelev::dataio {

namespace {

std::optional<int> index_of(const std::vector<std::string>& names, const std::string& name) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

void check_class_list(const std::vector<std::string>& names, const char* what) {
  if (names.empty()) throw DataError(std::string("schema: ") + what + " is empty");
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (n.empty()) throw DataError(std::string("schema: empty class name in ") + what);
    if (!seen.insert(n).second) throw DataError(std::string("schema: duplicate class '") + n + "' in " + what);
  }
}

}  // namespace

std::optional<int> LabelSchema::diagnosis_index(const std::string& name) const {
  return index_of(diagnosis_classes, name);
}

std::optional<int> LabelSchema::elevation_index(const std::string& name) const {
  return index_of(elevation_classes, name);
}

std::optional<int> LabelSchema::group_diagnosis(const std::string& raw) const {
  if (auto it = diagnosis_grouping.find(raw); it != diagnosis_grouping.end()) {
    return diagnosis_index(it->second);
  }
  return diagnosis_index(raw);
}

void LabelSchema::validate() const {
  check_class_list(diagnosis_classes, "diagnosis_classes");
  check_class_list(elevation_classes, "elevation_classes");
  for (const auto& [raw, grouped] : diagnosis_grouping) {
    if (!diagnosis_index(grouped)) {
      throw DataError("schema: grouping '" + raw + "' -> '" + grouped + "' targets an unknown diagnosis class");
    }
  }
}

LabelSchema LabelSchema::parse(const std::string& text, const std::string& origin) {
  const auto kv = KeyValueFile::parse(text, origin);
  LabelSchema schema;
  schema.diagnosis_classes = split_list(kv.get_or("diagnosis_classes", ""));
  schema.elevation_classes = split_list(kv.get_or("elevation_classes", ""));
  for (const auto& entry : kv.all("group")) {
    const auto arrow = entry.find("->");
    if (arrow == std::string::npos) {
      throw DataError(origin + ": grouping entry '" + entry + "' must look like 'raw label -> CLASS'");
    }
    auto raw = trim(std::string_view(entry).substr(0, arrow));
    auto grouped = trim(std::string_view(entry).substr(arrow + 2));
    if (raw.empty() || grouped.empty()) throw DataError(origin + ": incomplete grouping entry '" + entry + "'");
    if (!schema.diagnosis_grouping.emplace(raw, grouped).second) {
      throw DataError(origin + ": raw label '" + raw + "' grouped twice");
    }
  }
  schema.validate();
  return schema;
}

LabelSchema LabelSchema::load(const std::filesystem::path& path) {
  return parse(read_file(path), path.string());
}

std::string LabelSchema::serialize() const {
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
    return s;
  };
  std::string out = "diagnosis_classes = " + join(diagnosis_classes) + "\n";
  out += "elevation_classes = " + join(elevation_classes) + "\n";
  for (const auto& [raw, grouped] : diagnosis_grouping) out += "group = " + raw + " -> " + grouped + "\n";
  return out;
}

std::vector<std::string> default_elevation_classes() { return {"flat", "palpable", "nodular"}; }

LabelSchema derm7pt_schema() {
  LabelSchema s;
  s.diagnosis_classes = {"BCC", "MEL", "NEV", "SK", "MISC"};
  s.elevation_classes = default_elevation_classes();
  s.diagnosis_grouping = {
      {"basal cell carcinoma", "BCC"},
      {"melanoma", "MEL"},
      {"melanoma (in situ)", "MEL"},
      {"melanoma (less than 0.76 mm)", "MEL"},
      {"melanoma (0.76 to 1.5 mm)", "MEL"},
      {"melanoma (more than 1.5 mm)", "MEL"},
      {"melanoma metastasis", "MEL"},
      {"blue nevus", "NEV"},
      {"clark nevus", "NEV"},
      {"combined nevus", "NEV"},
      {"congenital nevus", "NEV"},
      {"dermal nevus", "NEV"},
      {"recurrent nevus", "NEV"},
      {"reed or spitz nevus", "NEV"},
      {"seborrheic keratosis", "SK"},
      {"dermatofibroma", "MISC"},
      {"lentigo", "MISC"},
      {"melanosis", "MISC"},
      {"miscellaneous", "MISC"},
      {"vascular lesion", "MISC"},
  };
  return s;
}

}  // namespace skinelev::dataio
