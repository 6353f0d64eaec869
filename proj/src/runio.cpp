#include "spreadlab/runio.hpp"

#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "spreadlab/vecmath.hpp"

namespace spreadlab {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
  }
  return true;
}

std::string hex16(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string csv_number(double v) {
  if (!std::isfinite(v)) return "nan";
  return g17(v);
}

void RunManifest::set(const std::string& key, const std::string& value) {
  if (!valid_key(key)) throw std::invalid_argument("parse: bad manifest key '" + key + "'");
  entries_[key] = value;
}

void RunManifest::set(const std::string& key, double value) { set(key, csv_number(value)); }

void RunManifest::set(const std::string& key, std::int64_t value) {
  set(key, std::to_string(value));
}

void RunManifest::set(const std::string& key, std::uint64_t value) {
  set(key, std::to_string(value));
}

void RunManifest::set(const std::string& key, bool value) {
  set(key, std::string(value ? "true" : "false"));
}

std::string RunManifest::render() const {
  std::string out = "format_version=1\n";
  for (const auto& [k, v] : entries_) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

std::uint64_t RunManifest::hash() const { return fnv1a64(render()); }

void RunManifest::write(const std::filesystem::path& path) const {
  write_text_file(path, render());
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
  if (header_.empty()) throw std::invalid_argument("shape: empty CSV header");
}

void CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) {
    throw std::invalid_argument("shape: CSV row has " + std::to_string(cells.size()) +
                                " cells, header has " + std::to_string(header_.size()));
  }
  rows_.push_back(std::move(cells));
}

void CsvTable::add_numeric_row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(csv_number(v));
  add_row(std::move(cells));
}

std::string CsvTable::render() const {
  std::string out;
  auto append_line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  append_line(header_);
  for (const auto& row : rows_) append_line(row);
  return out;
}

void CsvTable::write(const std::filesystem::path& path, std::uint64_t manifest_hash) const {
  write_text_file(path, "# manifest=" + hex16(manifest_hash) + "\n" + render());
}

std::map<std::string, std::string> parse_config_text(std::string_view text) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    std::size_t hash_at = line.find('#');
    if (hash_at != std::string_view::npos) line = line.substr(0, hash_at);
    std::string stripped = trim(line);
    if (stripped.empty()) continue;
    std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("parse: line " + std::to_string(line_no) +
                                  " has no '=' separator");
    }
    std::string key = trim(std::string_view(stripped).substr(0, eq));
    std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (!valid_key(key)) {
      throw std::invalid_argument("parse: line " + std::to_string(line_no) + " has bad key '" +
                                  key + "'");
    }
    if (out.contains(key)) throw std::invalid_argument("parse: duplicate key '" + key + "'");
    out[key] = value;
  }
  return out;
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
  return parse_config_text(read_text_file(path));
}

double config_double(const std::string& key, const std::string& value) {
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(value.c_str(), &end);
  if (end != value.c_str() + value.size() || value.empty() || errno == ERANGE) {
    throw std::invalid_argument("parse: key '" + key + "' has non-numeric value '" + value + "'");
  }
  return v;
}

std::int64_t config_int(const std::string& key, const std::string& value) {
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(value.c_str(), &end, 10);
  if (end != value.c_str() + value.size() || value.empty() || errno == ERANGE) {
    throw std::invalid_argument("parse: key '" + key + "' has non-integer value '" + value + "'");
  }
  return static_cast<std::int64_t>(v);
}

std::uint64_t config_u64(const std::string& key, const std::string& value) {
  errno = 0;
  char* end = nullptr;
  unsigned long long v = std::strtoull(value.c_str(), &end, 10);
  if (end != value.c_str() + value.size() || value.empty() || errno == ERANGE ||
      value.front() == '-') {
    throw std::invalid_argument("parse: key '" + key + "' has non-integer value '" + value + "'");
  }
  return static_cast<std::uint64_t>(v);
}

bool config_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::invalid_argument("parse: key '" + key + "' has non-boolean value '" + value + "'");
}

std::vector<double> config_double_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= value.size()) {
    std::size_t comma = value.find(',', pos);
    std::string item =
        trim(std::string_view(value).substr(pos, comma == std::string::npos ? comma : comma - pos));
    if (item.empty()) throw std::invalid_argument("parse: key '" + key + "' has an empty item");
    out.push_back(config_double(key, item));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw std::invalid_argument("parse: key '" + key + "' has an empty list");
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("io: cannot open " + path.string() + " for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw std::runtime_error("io: failed reading " + path.string());
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("io: cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw std::runtime_error("io: failed writing " + path.string());
}

}  // namespace spreadlab
