#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scone {

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
// Whole-field parse; throws ParseError(line) on junk or out-of-range input.
double parse_double(std::string_view s, std::size_t line = 0);
std::size_t parse_size(std::string_view s, std::size_t line = 0);

std::string_view trim(std::string_view s) noexcept;
std::vector<std::string> split(std::string_view s, char delimiter);

// Flat `key = value` text, one pair per line, `#` starts a comment.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  std::optional<std::string> get(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, std::size_t> lines_;
};

// Header plus rows of a tab- or comma-separated file. The delimiter is the
// one that appears in the header line (tab wins if both do).
struct DelimitedTable {
  char delimiter = '\t';
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> row_lines;  // 1-based source line per row
};

// Throws ParseError on ragged rows, naming the line.
DelimitedTable read_delimited(std::istream& in);
DelimitedTable read_delimited(const std::filesystem::path& path);

// Writes `content` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace scone
