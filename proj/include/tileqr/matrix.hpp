#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace tileqr {

// Non-owning column-major view with a leading dimension. Used for tiles
// (ld == rows) and for row blocks of taller matrices (ld > rows).
template <typename T>
class BasicMatrixView {
 public:
  using value_type = std::remove_const_t<T>;

  BasicMatrixView() = default;
  BasicMatrixView(T* data, std::size_t rows, std::size_t cols, std::size_t ld)
      : data_(data), rows_(rows), cols_(cols), ld_(ld) {
    assert(ld_ >= rows_ || cols_ == 0);
  }
  BasicMatrixView(T* data, std::size_t rows, std::size_t cols)
      : BasicMatrixView(data, rows, cols, rows) {}

  // MatrixView -> ConstMatrixView
  template <typename U>
    requires(std::is_const_v<T> && std::is_same_v<const U, T>)
  BasicMatrixView(const BasicMatrixView<U>& other)  // NOLINT
      : data_(other.data()), rows_(other.rows()), cols_(other.cols()), ld_(other.ld()) {}

  T& operator()(std::size_t r, std::size_t c) const {
    assert(r < rows_ && c < cols_);
    return data_[r + c * ld_];
  }

  T* data() const { return data_; }
  T* col(std::size_t c) const { return data_ + c * ld_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t ld() const { return ld_; }

  BasicMatrixView block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
    assert(r0 + nr <= rows_ && c0 + nc <= cols_);
    return BasicMatrixView(data_ + r0 + c0 * ld_, nr, nc, ld_);
  }

 private:
  T* data_ = nullptr;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t ld_ = 0;
};

using MatrixView = BasicMatrixView<double>;
using ConstMatrixView = BasicMatrixView<const double>;

// Owning dense matrix, column-major.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
      throw std::invalid_argument("DenseMatrix: data length " + std::to_string(data_.size()) +
                                  " does not match " + std::to_string(rows_) + "x" + std::to_string(cols_));
  }

  static DenseMatrix identity(std::size_t rows, std::size_t cols) {
    DenseMatrix m(rows, cols);
    for (std::size_t i = 0; i < std::min(rows, cols); ++i) m(i, i) = 1.0;
    return m;
  }
  static DenseMatrix identity(std::size_t n) { return identity(n, n); }

  double& operator()(std::size_t r, std::size_t c) {
    assert(r < rows_ && c < cols_);
    return data_[r + c * rows_];
  }
  double operator()(std::size_t r, std::size_t c) const {
    assert(r < rows_ && c < cols_);
    return data_[r + c * rows_];
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  MatrixView view() { return MatrixView(data_.data(), rows_, cols_, std::max<std::size_t>(rows_, 1)); }
  ConstMatrixView view() const {
    return ConstMatrixView(data_.data(), rows_, cols_, std::max<std::size_t>(rows_, 1));
  }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline DenseMatrix to_dense(ConstMatrixView v) {
  DenseMatrix out(v.rows(), v.cols());
  for (std::size_t c = 0; c < v.cols(); ++c)
    for (std::size_t r = 0; r < v.rows(); ++r) out(r, c) = v(r, c);
  return out;
}

inline DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix out(a.cols(), a.rows());
  for (std::size_t c = 0; c < a.cols(); ++c)
    for (std::size_t r = 0; r < a.rows(); ++r) out(c, r) = a(r, c);
  return out;
}

inline DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("multiply: inner dimensions differ");
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t c = 0; c < b.cols(); ++c)
    for (std::size_t l = 0; l < a.cols(); ++l) {
      const double blc = b(l, c);
      for (std::size_t r = 0; r < a.rows(); ++r) out(r, c) += a(r, l) * blc;
    }
  return out;
}

inline DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("subtract: shape mismatch");
  DenseMatrix out = a;
  auto od = out.data();
  auto bd = b.data();
  for (std::size_t k = 0; k < od.size(); ++k) od[k] -= bd[k];
  return out;
}

inline double frobenius_norm(const DenseMatrix& a) {
  // Scaled sum of squares, as in the reference BLAS nrm2.
  double scale = 0.0;
  double ssq = 1.0;
  for (double x : a.data()) {
    if (x == 0.0) continue;
    const double ax = std::abs(x);
    if (scale < ax) {
      ssq = 1.0 + ssq * (scale / ax) * (scale / ax);
      scale = ax;
    } else {
      ssq += (ax / scale) * (ax / scale);
    }
  }
  return scale * std::sqrt(ssq);
}

inline double max_abs(const DenseMatrix& a) {
  double m = 0.0;
  for (double x : a.data()) m = std::max(m, std::abs(x));
  return m;
}

// Max row sum.
inline double inf_norm(const DenseMatrix& a) {
  std::vector<double> sums(a.rows(), 0.0);
  for (std::size_t c = 0; c < a.cols(); ++c)
    for (std::size_t r = 0; r < a.rows(); ++r) sums[r] += std::abs(a(r, c));
  return sums.empty() ? 0.0 : *std::max_element(sums.begin(), sums.end());
}

// Truncates or zero-extends to rows x cols.
inline DenseMatrix resized(const DenseMatrix& a, std::size_t rows, std::size_t cols) {
  DenseMatrix out(rows, cols);
  for (std::size_t c = 0; c < std::min(cols, a.cols()); ++c)
    for (std::size_t r = 0; r < std::min(rows, a.rows()); ++r) out(r, c) = a(r, c);
  return out;
}

}  // namespace tileqr
