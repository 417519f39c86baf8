#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <utility>

#include "nystrom/common.hpp"

namespace nystrom {

/// A collection of n points in R^m, stored column-major (one point per column).
class Dataset {
 public:
  Dataset() = default;

  explicit Dataset(Matrix points) : points_(std::move(points)) {
    if (points_.rows() < 1 || points_.cols() < 1) {
      throw std::invalid_argument("Dataset: need at least one point of dimension >= 1");
    }
    if (!points_.allFinite()) {
      throw std::invalid_argument("Dataset: non-finite coordinate");
    }
  }

  Index size() const { return points_.cols(); }  // n
  Index dim() const { return points_.rows(); }   // m
  auto point(Index i) const { return points_.col(i); }
  const Matrix& points() const { return points_; }

 private:
  Matrix points_;
};

enum class DatasetFormat { csv, nysd };

/// Picks the format from the file extension (.csv vs anything else -> binary).
inline DatasetFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? DatasetFormat::csv : DatasetFormat::nysd;
}

namespace detail {

inline constexpr char kNysdMagic[4] = {'N', 'Y', 'S', 'D'};

inline double parse_field(std::string_view field, std::size_t line_no) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw std::runtime_error("csv: line " + std::to_string(line_no) + ": cannot parse '" +
                             std::string(field) + "' as a number");
  }
  if (!std::isfinite(value)) {
    throw std::runtime_error("csv: line " + std::to_string(line_no) + ": non-finite value");
  }
  return value;
}

inline bool try_parse_row(const std::string& line, std::size_t line_no, std::vector<double>& out,
                          bool strict) {
  out.clear();
  std::string_view rest(line);
  if (!rest.empty() && rest.back() == '\r') rest.remove_suffix(1);
  while (true) {
    const auto comma = rest.find(',');
    std::string_view field = rest.substr(0, comma);
    // trim surrounding spaces
    while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
    while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
    if (strict) {
      out.push_back(parse_field(field, line_no));
    } else {
      double value = 0.0;
      const char* begin = field.data();
      const char* end = begin + field.size();
      auto [ptr, ec] = std::from_chars(begin, end, value);
      if (ec != std::errc{} || ptr != end || !std::isfinite(value)) return false;
      out.push_back(value);
    }
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return true;
}

}  // namespace detail

/// Loads one point per row from CSV (an optional non-numeric header row is skipped).
inline Dataset load_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> row;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    if (rows.empty() && line_no == 1) {
      if (!detail::try_parse_row(line, line_no, row, /*strict=*/false)) continue;  // header
    } else {
      detail::try_parse_row(line, line_no, row, /*strict=*/true);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::runtime_error("csv: line " + std::to_string(line_no) + ": expected " +
                               std::to_string(rows.front().size()) + " fields, got " +
                               std::to_string(row.size()));
    }
    rows.push_back(row);
  }
  if (rows.empty()) throw std::runtime_error("csv: " + path.string() + " has no data rows");

  const Index n = static_cast<Index>(rows.size());
  const Index m = static_cast<Index>(rows.front().size());
  Matrix points(m, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < m; ++j) {
      points(j, i) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return Dataset(std::move(points));
}

// NYSD binary layout: magic "NYSD", u32 m, u32 n, then n*m little-endian f64,
// column-major (point after point).
inline Dataset load_dataset_nysd(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, detail::kNysdMagic, 4) != 0) {
    throw std::runtime_error(path.string() + ": not a NYSD file (bad magic)");
  }
  std::uint32_t m = 0;
  std::uint32_t n = 0;
  in.read(reinterpret_cast<char*>(&m), sizeof m);
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  if (!in || m == 0 || n == 0) throw std::runtime_error(path.string() + ": bad NYSD header");

  Matrix points(static_cast<Index>(m), static_cast<Index>(n));
  in.read(reinterpret_cast<char*>(points.data()),
          static_cast<std::streamsize>(sizeof(double) * m * n));
  if (!in) throw std::runtime_error(path.string() + ": truncated NYSD payload");
  return Dataset(std::move(points));
}

inline Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
  return format == DatasetFormat::csv ? load_dataset_csv(path) : load_dataset_nysd(path);
}

inline void save_dataset_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  char buffer[40];
  for (Index i = 0; i < dataset.size(); ++i) {
    for (Index j = 0; j < dataset.dim(); ++j) {
      std::snprintf(buffer, sizeof buffer, "%.17g", dataset.points()(j, i));
      out << (j ? "," : "") << buffer;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline void save_dataset_nysd(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const std::uint32_t m = static_cast<std::uint32_t>(dataset.dim());
  const std::uint32_t n = static_cast<std::uint32_t>(dataset.size());
  out.write(detail::kNysdMagic, 4);
  out.write(reinterpret_cast<const char*>(&m), sizeof m);
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(dataset.points().data()),
            static_cast<std::streamsize>(sizeof(double) * m * n));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline void save_dataset(const Dataset& dataset, const std::filesystem::path& path,
                         DatasetFormat format) {
  if (format == DatasetFormat::csv) {
    save_dataset_csv(dataset, path);
  } else {
    save_dataset_nysd(dataset, path);
  }
}

}  // namespace nystrom
