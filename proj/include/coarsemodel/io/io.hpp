#pragma once

// CSV and JSON artefacts. Numbers are printed with std::to_chars (shortest
// round-trip form, no locale), JSON keys come out sorted, and every CSV starts
// with one comment line naming the command and the config hash.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "coarsemodel/error.hpp"

namespace coarsemodel::io {

using Json = nlohmann::json;

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

/// Hash of the canonical (sorted, compact) dump.
inline std::string config_hash(const Json& config) { return hex64(fnv1a64(config.dump())); }

inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return {buf, res.ptr};
}

/// Non-finite values become strings so the document stays valid JSON.
inline Json number(double x) {
  if (std::isfinite(x)) return x;
  return format_number(x);
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  class Row {
   public:
    explicit Row(CsvTable& t) : t_(t) {}
    Row& operator<<(double x) { return cell(format_number(x)); }
    Row& operator<<(int x) { return cell(std::to_string(x)); }
    Row& operator<<(std::size_t x) { return cell(std::to_string(x)); }
    Row& operator<<(bool x) { return cell(x ? "true" : "false"); }
    Row& operator<<(const std::string& s) { return cell(s); }
    Row& operator<<(const char* s) { return cell(s); }
    ~Row() { t_.rows_.push_back(std::move(cells_)); }

   private:
    Row& cell(std::string s) {
      require(s.find_first_of(",\"\n") == std::string::npos, "CSV cell must not contain delimiters");
      cells_.push_back(std::move(s));
      return *this;
    }
    CsvTable& t_;
    std::vector<std::string> cells_;
  };

  Row row() { return Row(*this); }
  std::size_t size() const { return rows_.size(); }

  /// Header and rows, without the provenance line.
  std::string body() const {
    std::string out = join(header_);
    for (const auto& r : rows_) {
      require(r.size() == header_.size(), "CSV row has the wrong number of cells");
      out += join(r);
    }
    return out;
  }

  std::string render(std::string_view command, const std::string& hash) const {
    return "# coarsemodel " + std::string(command) + " config_hash=" + hash + "\n" + body();
  }

 private:
  static std::string join(const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) s += ',';
      s += cells[i];
    }
    return s + '\n';
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::invalid_argument, "cannot open " + path.string() + " for writing");
  f << text;
}

inline void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorKind::invalid_argument, "cannot read config " + path.string());
  try {
    return Json::parse(f);
  } catch (const Json::exception& e) {
    fail(ErrorKind::invalid_argument, "config " + path.string() + " is not valid JSON: " + e.what());
  }
}

}  // namespace coarsemodel::io
