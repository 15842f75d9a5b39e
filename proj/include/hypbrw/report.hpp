#pragma once

// CSV and manifest plumbing: fixed headers, 17 significant digits, LF line
// endings, SHA-256 digests of everything written.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace hypbrw {

/// 17 significant digits; "nan", "inf" and "-inf" for non-finite values.
std::string format_double(double x);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  /// Cells are written verbatim; they must not contain commas or newlines.
  void add_row(std::vector<std::string> cells);
  std::size_t rows() const { return rows_.size(); }
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::string cell(double x) { return format_double(x); }
inline std::string cell(int x) { return std::to_string(x); }
inline std::string cell(long x) { return std::to_string(x); }
inline std::string cell(unsigned long x) { return std::to_string(x); }
inline std::string cell(unsigned long long x) { return std::to_string(x); }
inline std::string cell(long long x) { return std::to_string(x); }
inline std::string cell(bool x) { return x ? "1" : "0"; }
inline std::string cell(std::string s) { return s; }
inline std::string cell(const char* s) { return s; }

std::string sha256_hex(std::string_view data);

/// Output directory that remembers the digest of every file it writes.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir);

  const std::filesystem::path& path() const { return dir_; }
  void write(const std::string& name, const std::string& content);
  void write(const std::string& name, const CsvTable& table) { write(name, table.str()); }
  /// Digests of CSV files written so far, by file name.
  const std::map<std::string, std::string>& digests() const { return digests_; }

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::string> digests_;
};

std::string read_file(const std::filesystem::path& p);

}  // namespace hypbrw
