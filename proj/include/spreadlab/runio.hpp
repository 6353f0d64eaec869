#pragma once

// Experiment output plumbing: CSV tables stamped with a run-manifest hash,
// the manifest itself, and the flat key = value config format.
//
// Reproducibility contract: a CSV is rendered fully in memory and written in
// one shot, numbers are formatted with 17 significant digits, line endings
// are LF, and non-finite values are written as "nan". Two runs with the same
// resolved parameters emit byte-identical files.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace spreadlab {

// 64-bit FNV-1a over the bytes of `data`.
std::uint64_t fnv1a64(std::string_view data);

// 17-significant-digit text form; any non-finite value becomes "nan".
std::string csv_number(double v);

// Resolved run parameters, rendered as sorted key=value lines plus a
// format_version line. The FNV-1a hash of that rendering is stamped into
// every CSV the run writes, tying data files to their parameters.
class RunManifest {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, std::int64_t value);
  void set(const std::string& key, std::uint64_t value);
  void set(const std::string& key, bool value);

  std::string render() const;
  std::uint64_t hash() const;
  // Writes render() to path; "io:" error when the file cannot be opened.
  void write(const std::filesystem::path& path) const;

 private:
  std::map<std::string, std::string> entries_;
};

// In-memory CSV table. Rows must match the header width ("shape:" error).
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  void add_row(std::vector<std::string> cells);
  void add_numeric_row(const std::vector<double>& values);

  // Header and rows, comma separated, LF endings.
  std::string render() const;
  // "# manifest=<16 hex digits>" comment line followed by render().
  void write(const std::filesystem::path& path, std::uint64_t manifest_hash) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Parses flat `key = value` config text. '#' starts a comment, blank lines
// are skipped, keys may not repeat. Malformed lines raise "parse:" errors.
std::map<std::string, std::string> parse_config_text(std::string_view text);
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

// Scalar parsers for config values, with "parse:" errors naming the key.
double config_double(const std::string& key, const std::string& value);
std::int64_t config_int(const std::string& key, const std::string& value);
std::uint64_t config_u64(const std::string& key, const std::string& value);
bool config_bool(const std::string& key, const std::string& value);
// Comma-separated list of doubles, e.g. "0.5,0.6,0.7".
std::vector<double> config_double_list(const std::string& key, const std::string& value);

// Reads a whole file ("io:" error when unreadable).
std::string read_text_file(const std::filesystem::path& path);
// Writes content in one shot ("io:" error when unwritable).
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace spreadlab
