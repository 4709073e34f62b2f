#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ngf {

/// Writes `bytes` to a temporary sibling and renames it over `path`.
void atomic_write(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

/// Shortest round-trip decimal form of `v`.
std::string format_real(double v);

/// CSV text accumulated in memory and committed atomically.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  CsvWriter& row(const std::vector<double>& values);
  CsvWriter& row(const std::vector<std::string>& cells);
  std::size_t rows() const { return rows_; }
  const std::string& text() const { return text_; }
  void save(const std::filesystem::path& path) const { atomic_write(path, text_); }

 private:
  std::size_t columns_;
  std::size_t rows_ = 0;
  std::string text_;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

}  // namespace ngf
