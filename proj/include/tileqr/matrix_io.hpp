#pragma once

// Matrix files.
//
// Binary: "TQR1", rows (u64 LE), cols (u64 LE), rows*cols IEEE-754 doubles
// (LE), column-major.
// CSV: one matrix row per line, comma-separated decimal values.

#include <array>
#include <cctype>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include "tileqr/matrix.hpp"

namespace tileqr {

/// Raised for unreadable, unwritable or malformed matrix files.
class MatrixFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::uint64_t to_little_endian(std::uint64_t x) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t y = 0;
    for (int k = 0; k < 8; ++k) y |= ((x >> (8 * k)) & 0xffu) << (8 * (7 - k));
    return y;
  }
  return x;
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
  v = to_little_endian(v);
  std::array<char, 8> buf;
  std::memcpy(buf.data(), &v, 8);
  out.write(buf.data(), 8);
}

inline bool read_u64(std::istream& in, std::uint64_t& v) {
  std::array<char, 8> buf;
  if (!in.read(buf.data(), 8)) return false;
  std::memcpy(&v, buf.data(), 8);
  v = to_little_endian(v);
  return true;
}

inline bool has_csv_extension(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return ext == ".csv";
}

}  // namespace detail

inline constexpr std::array<char, 4> kMatrixMagic = {'T', 'Q', 'R', '1'};

inline void write_matrix_binary(std::ostream& out, const DenseMatrix& a) {
  out.write(kMatrixMagic.data(), kMatrixMagic.size());
  detail::write_u64(out, a.rows());
  detail::write_u64(out, a.cols());
  for (double x : a.data()) detail::write_u64(out, std::bit_cast<std::uint64_t>(x));
}

inline DenseMatrix read_matrix_binary(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMatrixMagic)
    throw MatrixFileError("bad magic: not a TQR1 matrix file");
  std::uint64_t rows = 0, cols = 0;
  if (!detail::read_u64(in, rows) || !detail::read_u64(in, cols)) throw MatrixFileError("truncated header");
  if (rows != 0 && cols > std::numeric_limits<std::uint64_t>::max() / 8 / rows)
    throw MatrixFileError("header dimensions overflow");
  std::vector<double> data;
  data.reserve(rows * cols);
  for (std::uint64_t k = 0; k < rows * cols; ++k) {
    std::uint64_t bits = 0;
    if (!detail::read_u64(in, bits)) throw MatrixFileError("truncated data: expected " + std::to_string(rows * cols) + " values");
    data.push_back(std::bit_cast<double>(bits));
  }
  return DenseMatrix(rows, cols, std::move(data));
}

/// Values are written with 17 significant digits, which round-trips doubles.
inline void write_matrix_csv(std::ostream& out, const DenseMatrix& a) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) {
      if (c) out << ',';
      out << a(r, c);
    }
    out << '\n';
  }
}

inline DenseMatrix read_matrix_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw MatrixFileError("malformed CSV value '" + cell + "'");
      }
      if (cell.find_first_not_of(" \t", used) != std::string::npos)
        throw MatrixFileError("malformed CSV value '" + cell + "'");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) throw MatrixFileError("ragged CSV rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw MatrixFileError("empty CSV matrix");
  DenseMatrix a(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) a(r, c) = rows[r][c];
  return a;
}

/// Format chosen by extension: ".csv" is CSV, anything else binary.
inline DenseMatrix load_matrix(const std::filesystem::path& path) {
  const bool csv = detail::has_csv_extension(path);
  std::ifstream in(path, csv ? std::ios::in : std::ios::binary);
  if (!in) throw MatrixFileError("cannot open '" + path.string() + "' for reading");
  return csv ? read_matrix_csv(in) : read_matrix_binary(in);
}

inline void save_matrix(const std::filesystem::path& path, const DenseMatrix& a) {
  const bool csv = detail::has_csv_extension(path);
  std::ofstream out(path, csv ? std::ios::out : std::ios::binary);
  if (!out) throw MatrixFileError("cannot open '" + path.string() + "' for writing");
  csv ? write_matrix_csv(out, a) : write_matrix_binary(out, a);
  if (!out) throw MatrixFileError("write to '" + path.string() + "' failed");
}

}  // namespace tileqr
