#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace skinelev::dataio {

// Class vocabularies for one run. Index i of every probability vector refers
// to position i of the corresponding class list.
struct LabelSchema {
  std::vector<std::string> diagnosis_classes;
  std::vector<std::string> elevation_classes;
  // Raw dataset label -> grouped diagnosis class name.
  std::map<std::string, std::string> diagnosis_grouping;

  std::size_t num_diagnosis() const { return diagnosis_classes.size(); }
  std::size_t num_elevation() const { return elevation_classes.size(); }

  std::optional<int> diagnosis_index(const std::string& name) const;
  std::optional<int> elevation_index(const std::string& name) const;

  // Maps a raw manifest label to its class index. Canonical class names map to
  // themselves; anything else must have a grouping entry.
  std::optional<int> group_diagnosis(const std::string& raw) const;

  // Throws DataError on empty or duplicated class lists, or groupings that
  // point at unknown classes.
  void validate() const;

  // Key-value text form:
  //   diagnosis_classes = BCC, MEL, NEV, SK, MISC
  //   elevation_classes = flat, palpable, nodular
  //   group = basal cell carcinoma -> BCC      (repeatable)
  static LabelSchema parse(const std::string& text, const std::string& origin = "<schema>");
  static LabelSchema load(const std::filesystem::path& path);
  std::string serialize() const;

  bool operator==(const LabelSchema&) const = default;
};

// Elevation classes in their fixed order.
std::vector<std::string> default_elevation_classes();
// Five-way diagnosis grouping used for derm7pt-style data.
LabelSchema derm7pt_schema();

}  // namespace skinelev::dataio
