#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tileqr/matrix.hpp"

namespace tileqr {

/// Matrix in block data layout: a p x q grid of b x b tiles. Each tile is a
/// contiguous column-major buffer of b*b values and the tiles themselves are
/// ordered column-major in the grid, so tile (i, j) starts at (i + j*p)*b*b.
///
/// Sizes that are not multiples of b are zero-padded up to p*b x q*b. The
/// padded region is zero after construction; kernels may later write zeros
/// of either sign there but nothing else.
class TiledMatrix {
 public:
  TiledMatrix() = default;

  /// Zero matrix with logical size m x n.
  TiledMatrix(std::size_t m, std::size_t n, std::size_t b) : m_(m), n_(n), b_(b) {
    if (m == 0 || n == 0) throw std::invalid_argument("TiledMatrix: zero-dimension matrix");
    if (b == 0) throw std::invalid_argument("TiledMatrix: block size must be >= 1");
    p_ = (m + b - 1) / b;
    q_ = (n + b - 1) / b;
    storage_.assign(p_ * q_ * b * b, 0.0);
  }

  std::size_t m() const { return m_; }
  std::size_t n() const { return n_; }
  std::size_t b() const { return b_; }
  std::size_t p() const { return p_; }
  std::size_t q() const { return q_; }
  std::size_t pad_rows() const { return p_ * b_ - m_; }
  std::size_t pad_cols() const { return q_ * b_ - n_; }
  std::size_t tile_size() const { return b_ * b_; }

  std::span<double> tile_span(std::size_t i, std::size_t j) {
    check(i, j);
    return {storage_.data() + offset(i, j), tile_size()};
  }
  std::span<const double> tile_span(std::size_t i, std::size_t j) const {
    check(i, j);
    return {storage_.data() + offset(i, j), tile_size()};
  }

  /// Handle to tile (i, j); reads and writes go straight to the tile buffer.
  MatrixView tile(std::size_t i, std::size_t j) { return {tile_span(i, j).data(), b_, b_, b_}; }
  ConstMatrixView tile(std::size_t i, std::size_t j) const { return {tile_span(i, j).data(), b_, b_, b_}; }

  /// Entry of the padded matrix at global (r, c).
  double& at(std::size_t r, std::size_t c) { return tile(r / b_, c / b_)(r % b_, c % b_); }
  double at(std::size_t r, std::size_t c) const { return tile(r / b_, c / b_)(r % b_, c % b_); }

  std::span<const double> storage() const { return storage_; }

  friend bool operator==(const TiledMatrix&, const TiledMatrix&) = default;

 private:
  std::size_t offset(std::size_t i, std::size_t j) const { return (i + j * p_) * tile_size(); }
  void check(std::size_t i, std::size_t j) const {
    if (i >= p_ || j >= q_)
      throw std::invalid_argument("tile index (" + std::to_string(i) + "," + std::to_string(j) +
                                  ") outside " + std::to_string(p_) + "x" + std::to_string(q_) + " grid");
  }

  std::size_t m_ = 0, n_ = 0, b_ = 0, p_ = 0, q_ = 0;
  std::vector<double> storage_;
};

inline TiledMatrix from_col_major(const DenseMatrix& a, std::size_t b) {
  if (a.rows() == 0 || a.cols() == 0) throw std::invalid_argument("from_col_major: zero-dimension matrix");
  if (b == 0) throw std::invalid_argument("from_col_major: block size must be >= 1");
  TiledMatrix t(a.rows(), a.cols(), b);
  for (std::size_t tj = 0; tj < t.q(); ++tj)
    for (std::size_t ti = 0; ti < t.p(); ++ti) {
      MatrixView tile = t.tile(ti, tj);
      const std::size_t r0 = ti * b, c0 = tj * b;
      const std::size_t nr = std::min(b, a.rows() - r0), nc = std::min(b, a.cols() - c0);
      for (std::size_t c = 0; c < nc; ++c)
        for (std::size_t r = 0; r < nr; ++r) tile(r, c) = a(r0 + r, c0 + c);
    }
  return t;
}

/// Logical m x n content; padding is cropped.
inline DenseMatrix to_col_major(const TiledMatrix& t) {
  DenseMatrix a(t.m(), t.n());
  const std::size_t b = t.b();
  for (std::size_t tj = 0; tj < t.q(); ++tj)
    for (std::size_t ti = 0; ti < t.p(); ++ti) {
      ConstMatrixView tile = t.tile(ti, tj);
      const std::size_t r0 = ti * b, c0 = tj * b;
      const std::size_t nr = std::min(b, t.m() - r0), nc = std::min(b, t.n() - c0);
      for (std::size_t c = 0; c < nc; ++c)
        for (std::size_t r = 0; r < nr; ++r) a(r0 + r, c0 + c) = tile(r, c);
    }
  return a;
}

}  // namespace tileqr
