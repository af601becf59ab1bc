#include "paramp/csv.hpp"

#include <charconv>
#include <system_error>

#include "paramp/errors.hpp"

namespace paramp {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state) {
  for (const char c : bytes) {
    state ^= static_cast<unsigned char>(c);
    state *= 0x100000001b3ull;
  }
  return state;
}

std::string hash_hex(std::uint64_t hash) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int k = 15; k >= 0; --k, hash >>= 4) out[static_cast<std::size_t>(k)] = digits[hash & 0xf];
  return out;
}

Eigen::Index CsvTable::column(std::string_view name) const {
  for (std::size_t k = 0; k < columns.size(); ++k)
    if (columns[k] == name) return static_cast<Eigen::Index>(k);
  throw ConfigError("CSV table has no column named '" + std::string(name) + "'");
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  CsvTable table;
  table.columns = split_line(line);
  const auto n_cols = static_cast<Eigen::Index>(table.columns.size());

  std::vector<double> numbers;
  Eigen::Index n_rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_line(line);
    if (static_cast<Eigen::Index>(fields.size()) != n_cols)
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": expected " + std::to_string(n_cols) + " fields, got " +
                        std::to_string(fields.size()));
    for (const std::string& field : fields) {
      double value = 0.0;
      const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
      if (ec != std::errc() || end != field.data() + field.size())
        throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                          ": not a number: '" + field + "'");
      numbers.push_back(value);
    }
    ++n_rows;
  }

  table.values.resize(n_rows, n_cols);
  for (Eigen::Index r = 0; r < n_rows; ++r)
    for (Eigen::Index c = 0; c < n_cols; ++c)
      table.values(r, c) = numbers[static_cast<std::size_t>(r * n_cols + c)];
  return table;
}

CsvWriter::CsvWriter(std::filesystem::path path, const std::vector<std::string>& columns)
    : path_(std::move(path)), n_columns_(columns.size()) {
  if (columns.empty()) throw ConfigError("CsvWriter: need at least one column");
  const std::filesystem::path partial = path_.string() + ".partial";
  out_.open(partial, std::ios::binary | std::ios::trunc);
  if (!out_) throw ConfigError("CsvWriter: cannot open " + partial.string() + " for writing");

  std::string header;
  for (std::size_t k = 0; k < columns.size(); ++k) {
    if (k > 0) header += ',';
    header += columns[k];
  }
  header += '\n';
  write(header);
}

CsvWriter::~CsvWriter() {
  // Abandoned writer: close and delete the partial file so an aborted run
  // leaves no outputs at all.
  if (!finished_) {
    if (out_.is_open()) out_.close();
    std::error_code ignored;
    std::filesystem::remove(path_.string() + ".partial", ignored);
  }
}

void CsvWriter::write(std::string_view text) {
  hash_ = fnv1a64(text, hash_);
  out_.write(text.data(), static_cast<std::streamsize>(text.size()));
}

void CsvWriter::row(std::span<const double> values) {
  if (values.size() != n_columns_)
    throw ConfigError("CsvWriter: row width does not match the header");
  std::string line;
  char buffer[32];
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k > 0) line += ',';
    // Shortest round-trip representation: locale-free and exact on re-read.
    const auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), values[k]);
    if (ec != std::errc()) throw NumericError("CsvWriter: value serialization failed");
    line.append(buffer, end);
  }
  line += '\n';
  write(line);
}

std::uint64_t CsvWriter::finish() {
  if (finished_) return hash_;
  out_.flush();
  if (!out_) throw NumericError("CsvWriter: write to " + path_.string() + ".partial failed");
  out_.close();
  std::filesystem::rename(path_.string() + ".partial", path_);
  finished_ = true;
  return hash_;
}

}  // namespace paramp
