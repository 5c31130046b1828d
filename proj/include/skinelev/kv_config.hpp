#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace skinelev {

// Flat `key = value` text file. Lines starting with '#' are comments.
// Repeated keys accumulate (see `all`); `get` returns the last occurrence.
class KeyValueFile {
 public:
  KeyValueFile() = default;

  static KeyValueFile parse(const std::string& text, const std::string& origin = "<string>");
  static KeyValueFile load(const std::filesystem::path& path);

  bool has(const std::string& key) const;
  std::optional<std::string> get(const std::string& key) const;
  std::vector<std::string> all(const std::string& key) const;

  std::string require(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;

  // Replaces every occurrence of `key` with a single value.
  void set(const std::string& key, const std::string& value);
  void add(const std::string& key, const std::string& value);

  // Keys in first-seen order, with their values.
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  std::string serialize() const;
  const std::string& origin() const { return origin_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::string origin_;
};

std::string trim(std::string_view s);
std::vector<std::string> split_list(std::string_view s, char sep = ',');
double parse_double(std::string_view s, const std::string& what);
long long parse_int(std::string_view s, const std::string& what);
std::string join(const std::vector<std::string>& items, std::string_view sep = ", ");
// Shortest text that reads back to the same double ("%.17g").
std::string fmt_double(double v);

}  // namespace skinelev
