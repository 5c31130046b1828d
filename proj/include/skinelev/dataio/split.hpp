#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "skinelev/dataio/manifest.hpp"

namespace skinelev::dataio {

enum class Split { train, val, test };
enum class StratifyOn { elevation, diagnosis, none };

std::string to_string(Split s);
Split parse_split(const std::string& s);
std::string to_string(StratifyOn s);
StratifyOn parse_stratify_on(const std::string& s);

using SplitRatios = std::array<double, 3>;  // train, val, test

struct SplitAssignment {
  std::map<std::string, Split> assignment;
  SplitRatios ratios{};
  StratifyOn stratify_on = StratifyOn::none;
  std::uint64_t seed = 0;

  Split at(const std::string& image_id) const;
  std::size_t count(Split s) const;

  // CSV with header `image_id,split`, rows in manifest order.
  std::string to_csv(const DatasetManifest& manifest) const;
  static SplitAssignment from_csv(const std::filesystem::path& path);
};

// Integer split sizes for one stratum: floor of ratio*n, then the leftover
// records go to the splits with the largest fractional remainders, ties broken
// train > val > test.
std::array<std::size_t, 3> largest_remainder_counts(std::size_t n, const SplitRatios& ratios);

// Deterministic stratified partition. Each stratum (class of `stratify_on`, or
// the whole manifest for `none`) is shuffled with a stream derived from `seed`
// and cut according to largest_remainder_counts.
// Throws ConfigError if ratios are negative or do not sum to 1 within 1e-9,
// DataError if the manifest is empty or a record lacks the stratification label.
SplitAssignment stratified_split(const DatasetManifest& manifest, const SplitRatios& ratios, StratifyOn stratify_on,
                                 std::uint64_t seed);

// Records of `manifest` assigned to `which`, in manifest order. Records absent
// from the assignment are skipped.
DatasetManifest subset(const DatasetManifest& manifest, const SplitAssignment& split, Split which);

}  // namespace skinelev::dataio
