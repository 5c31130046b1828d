#include "skinelev/dataio/split.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "skinelev/csv.hpp"
#include "skinelev/error.hpp"
#include "skinelev/random.hpp"

namespace skinelev::dataio {

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw DataError("unknown split '" + s + "'");
}

std::string to_string(StratifyOn s) {
  switch (s) {
    case StratifyOn::elevation: return "elevation";
    case StratifyOn::diagnosis: return "diagnosis";
    case StratifyOn::none: return "none";
  }
  return "?";
}

StratifyOn parse_stratify_on(const std::string& s) {
  if (s == "elevation") return StratifyOn::elevation;
  if (s == "diagnosis") return StratifyOn::diagnosis;
  if (s == "none") return StratifyOn::none;
  throw ConfigError("stratify_on must be elevation, diagnosis or none; got '" + s + "'");
}

Split SplitAssignment::at(const std::string& image_id) const {
  auto it = assignment.find(image_id);
  if (it == assignment.end()) throw DataError("image_id '" + image_id + "' has no split assignment");
  return it->second;
}

std::size_t SplitAssignment::count(Split s) const {
  return static_cast<std::size_t>(
      std::count_if(assignment.begin(), assignment.end(), [s](const auto& kv) { return kv.second == s; }));
}

std::string SplitAssignment::to_csv(const DatasetManifest& manifest) const {
  std::string out = "image_id,split\n";
  for (const auto& r : manifest.records) {
    if (auto it = assignment.find(r.image_id); it != assignment.end()) {
      out += csv_row({r.image_id, to_string(it->second)});
    }
  }
  return out;
}

SplitAssignment SplitAssignment::from_csv(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  const int c_id = table.column("image_id");
  const int c_split = table.column("split");
  if (c_id < 0 || c_split < 0) throw DataError(path.string() + ": split file needs image_id and split columns");
  SplitAssignment out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    if (!out.assignment.emplace(row[c_id], parse_split(row[c_split])).second) {
      throw DataError(path.string() + ":" + std::to_string(table.row_lines[i]) + ": duplicate image_id '" +
                      row[c_id] + "'");
    }
  }
  return out;
}

std::array<std::size_t, 3> largest_remainder_counts(std::size_t n, const SplitRatios& ratios) {
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    double quota = ratios[k] * static_cast<double>(n);
    // Decimal ratios are inexact in binary; snap so 0.7 * 440 floors to 308
    // and equal exact remainders compare equal.
    if (std::abs(quota - std::round(quota)) < 1e-9) quota = std::round(quota);
    counts[k] = static_cast<std::size_t>(std::floor(quota));
    remainder[k] = std::round((quota - std::floor(quota)) * 1e9) / 1e9;
    assigned += counts[k];
  }
  // Floating error in the quotas can push the floor sum past n by one record.
  while (assigned > n) {
    const auto k = static_cast<std::size_t>(std::distance(
        remainder.begin(), std::min_element(remainder.begin(), remainder.end())));
    if (counts[k] == 0) {
      remainder[k] = 2.0;
      continue;
    }
    --counts[k];
    --assigned;
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < n; i = (i + 1) % 3) {
    // Splits with a zero ratio never receive leftover records.
    if (ratios[order[i]] > 0.0) {
      ++counts[order[i]];
      ++assigned;
    }
  }
  return counts;
}

SplitAssignment stratified_split(const DatasetManifest& manifest, const SplitRatios& ratios, StratifyOn stratify_on,
                                 std::uint64_t seed) {
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r >= 0.0)) throw ConfigError("split ratios must be non-negative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1 (got " + std::to_string(sum) + ")");
  if (manifest.records.empty()) throw DataError("cannot split an empty manifest (empty stratum)");

  std::size_t num_strata = 1;
  if (stratify_on == StratifyOn::elevation) num_strata = manifest.schema.num_elevation();
  if (stratify_on == StratifyOn::diagnosis) num_strata = manifest.schema.num_diagnosis();

  std::vector<std::vector<std::size_t>> strata(num_strata);
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const auto& r = manifest.records[i];
    std::optional<int> label = 0;
    if (stratify_on == StratifyOn::elevation) label = r.elevation;
    if (stratify_on == StratifyOn::diagnosis) label = r.diagnosis;
    if (!label) {
      throw DataError("record '" + r.image_id + "' has no " + to_string(stratify_on) + " label to stratify on");
    }
    strata[static_cast<std::size_t>(*label)].push_back(i);
  }

  SplitAssignment out;
  out.ratios = ratios;
  out.stratify_on = stratify_on;
  out.seed = seed;
  for (std::size_t s = 0; s < strata.size(); ++s) {
    auto& members = strata[s];
    if (members.empty()) continue;
    Rng rng(derive_seed(seed, s));
    rng.shuffle(std::span<std::size_t>(members));
    const auto counts = largest_remainder_counts(members.size(), ratios);
    std::size_t pos = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      for (std::size_t j = 0; j < counts[k]; ++j, ++pos) {
        out.assignment[manifest.records[members[pos]].image_id] = static_cast<Split>(k);
      }
    }
  }
  return out;
}

DatasetManifest subset(const DatasetManifest& manifest, const SplitAssignment& split, Split which) {
  return filter(manifest, [&](const ImageRecord& r) {
    auto it = split.assignment.find(r.image_id);
    return it != split.assignment.end() && it->second == which;
  });
}

}  // namespace skinelev::dataio
