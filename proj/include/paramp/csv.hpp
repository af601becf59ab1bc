#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace paramp {

/// FNV-1a 64-bit hash; used to fingerprint output files in run manifests.
[[nodiscard]] std::uint64_t fnv1a64(std::string_view bytes,
                                    std::uint64_t state = 0xcbf29ce484222325ull);
[[nodiscard]] std::string hash_hex(std::uint64_t hash);

/// Numeric table read back from a CSV file produced by CsvWriter (or by
/// anything else that writes a plain header line plus number rows).
struct CsvTable {
  std::vector<std::string> columns;
  Eigen::MatrixXd values;  // one row per data line

  /// Index of a named column; throws ConfigError when absent.
  [[nodiscard]] Eigen::Index column(std::string_view name) const;
  [[nodiscard]] Eigen::VectorXd col(std::string_view name) const {
    return values.col(column(name));
  }
};

[[nodiscard]] CsvTable read_csv(const std::filesystem::path& path);

/// CSV writer for numeric tables.  Values are serialized with
/// std::to_chars (shortest round-trip form, locale-independent).  Data goes
/// to "<path>.partial" and is renamed into place by finish(); a writer
/// destroyed before finish() removes its partial file, so failed runs leave
/// nothing behind.
class CsvWriter {
 public:
  CsvWriter(std::filesystem::path path, const std::vector<std::string>& columns);
  ~CsvWriter();

  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(std::span<const double> values);
  void row(std::initializer_list<double> values) {
    row(std::span<const double>(values.begin(), values.size()));
  }
  void row(const Eigen::VectorXd& values) {
    row(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())));
  }

  /// Flush, close, and rename into place; returns the content hash.
  std::uint64_t finish();

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }

 private:
  void write(std::string_view text);

  std::filesystem::path path_;
  std::ofstream out_;
  std::uint64_t hash_ = 0xcbf29ce484222325ull;
  std::size_t n_columns_ = 0;
  bool finished_ = false;
};

}  // namespace paramp
