#pragma once

// Baselines and oracles: unblocked Householder QR, LAPACK-style blocked QR
// (panel factorization plus trailing update), analytic flop models and the
// error metrics used to compare factorization paths.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "tileqr/kernels.hpp"
#include "tileqr/matrix.hpp"

namespace tileqr {

/// Anything that can hand back R and apply its implicit Q.
template <typename F>
concept QrFactors = requires(const F& f, const DenseMatrix& b) {
  { f.rows() } -> std::convertible_to<std::size_t>;
  { f.cols() } -> std::convertible_to<std::size_t>;
  { f.r() } -> std::convertible_to<DenseMatrix>;
  { f.apply_q(b) } -> std::convertible_to<DenseMatrix>;
  { f.apply_q_transpose(b) } -> std::convertible_to<DenseMatrix>;
};

/// LAPACK geqr2-style storage: R on and above the diagonal, reflector tails
/// below it, one tau per reflector.
struct UnblockedFactors {
  DenseMatrix vr;
  std::vector<double> taus;

  std::size_t rows() const { return vr.rows(); }
  std::size_t cols() const { return vr.cols(); }

  /// m x n upper trapezoidal R.
  DenseMatrix r() const {
    DenseMatrix out(vr.rows(), vr.cols());
    for (std::size_t c = 0; c < vr.cols(); ++c)
      for (std::size_t r = 0; r <= std::min(c, vr.rows() - 1); ++r) out(r, c) = vr(r, c);
    return out;
  }

  /// Q B = H_1 H_2 ... H_k B.
  DenseMatrix apply_q(const DenseMatrix& b) const {
    check_rows(b);
    DenseMatrix out = b;
    for (std::size_t j = taus.size(); j-- > 0;) apply_reflector(j, out);
    return out;
  }

  /// Q^T B = H_k ... H_1 B.
  DenseMatrix apply_q_transpose(const DenseMatrix& b) const {
    check_rows(b);
    DenseMatrix out = b;
    for (std::size_t j = 0; j < taus.size(); ++j) apply_reflector(j, out);
    return out;
  }

 private:
  void check_rows(const DenseMatrix& b) const {
    if (b.rows() != vr.rows()) throw std::invalid_argument("apply_q: row count mismatch");
  }

  void apply_reflector(std::size_t j, DenseMatrix& b) const {
    const double tau = taus[j];
    if (tau == 0.0) return;
    const std::size_t m = vr.rows();
    for (std::size_t c = 0; c < b.cols(); ++c) {
      double w = b(j, c);
      for (std::size_t r = j + 1; r < m; ++r) w += vr(r, j) * b(r, c);
      w *= tau;
      b(j, c) -= w;
      for (std::size_t r = j + 1; r < m; ++r) b(r, c) -= w * vr(r, j);
    }
  }
};

inline UnblockedFactors house_qr_unblocked(const DenseMatrix& a) {
  if (a.empty()) throw std::invalid_argument("house_qr_unblocked: zero-dimension matrix");
  UnblockedFactors f{a, std::vector<double>(std::min(a.rows(), a.cols()))};
  factor_unblocked(f.vr.view(), f.taus);
  return f;
}

/// Right-looking blocked QR with panel width nb. Each panel is factored with
/// the unblocked routine, its reflectors accumulated into T, and the
/// trailing columns updated with (I - V T V^T)^T.
inline UnblockedFactors blocked_qr(const DenseMatrix& a, std::size_t nb) {
  if (nb == 0) throw std::invalid_argument("blocked_qr: panel width must be >= 1");
  if (a.empty()) throw std::invalid_argument("blocked_qr: zero-dimension matrix");
  const std::size_t m = a.rows(), n = a.cols(), kmax = std::min(m, n);
  UnblockedFactors f{a, std::vector<double>(kmax)};
  MatrixView full = f.vr.view();
  for (std::size_t k = 0; k < kmax; k += nb) {
    const std::size_t w = std::min(nb, kmax - k);
    // The last panel takes every remaining column.
    const std::size_t panel_cols = k + w == kmax ? n - k : w;
    MatrixView panel = full.block(k, k, m - k, panel_cols);
    std::span<double> taus(f.taus.data() + k, w);
    factor_unblocked(panel, taus);
    if (k + panel_cols < n) {
      const MatrixView v = panel.block(0, 0, m - k, w);
      const DenseMatrix t = larft_accumulate(v, taus);
      larfb_apply(v, t.view(), full.block(k, k + w, m - k, n - k - w), Op::trans);
    }
  }
  return f;
}

/// Standard Householder QR count 2 n^2 (m - n/3).
inline double model_flops_blocked(std::size_t m, std::size_t n) {
  if (n == 0 || m < n) throw std::invalid_argument("model_flops_blocked: requires m >= n >= 1");
  const double md = static_cast<double>(m), nd = static_cast<double>(n);
  return 2.0 * nd * nd * (md - nd / 3.0);
}

/// Kernel invocations of the tiled algorithm on a p x q tile grid.
struct KernelCounts {
  std::uint64_t geqt2 = 0, larfb = 0, tsqt2 = 0, ssrfb = 0;

  std::uint64_t total() const { return geqt2 + larfb + tsqt2 + ssrfb; }
  std::uint64_t& operator[](KernelKind kind) {
    switch (kind) {
      case KernelKind::geqt2: return geqt2;
      case KernelKind::larfb: return larfb;
      case KernelKind::tsqt2: return tsqt2;
      case KernelKind::ssrfb: return ssrfb;
    }
    throw std::invalid_argument("KernelCounts: unknown kernel kind");
  }
  /// Summed model cost in b^3/3 units.
  std::uint64_t flop_units() const {
    return geqt2 * kernel_flop_units(KernelKind::geqt2) + larfb * kernel_flop_units(KernelKind::larfb) +
           tsqt2 * kernel_flop_units(KernelKind::tsqt2) + ssrfb * kernel_flop_units(KernelKind::ssrfb);
  }
  friend bool operator==(const KernelCounts&, const KernelCounts&) = default;
};

inline KernelCounts tiled_kernel_counts(std::size_t p, std::size_t q) {
  KernelCounts c;
  for (std::size_t k = 0; k < std::min(p, q); ++k) {
    c.geqt2 += 1;
    c.larfb += q - k - 1;
    c.tsqt2 += p - k - 1;
    c.ssrfb += (p - k - 1) * (q - k - 1);
  }
  return c;
}

/// sum_{k=1..q} [6 + 9(q-k) + 10(p-k) + 15(p-k)(q-k)] in b^3/3 units.
inline std::uint64_t model_flop_units_tiled(std::size_t p, std::size_t q) {
  if (q == 0 || p < q) throw std::invalid_argument("model_flops_tiled: requires p >= q >= 1");
  std::uint64_t units = 0;
  for (std::uint64_t k = 1; k <= q; ++k) units += 6 + 9 * (q - k) + 10 * (p - k) + 15 * (p - k) * (q - k);
  return units;
}

/// Exact (non-asymptotic) model count of the tiled algorithm.
inline double model_flops_tiled(std::size_t p, std::size_t q, std::size_t b) {
  if (b == 0) throw std::invalid_argument("model_flops_tiled: block size must be >= 1");
  const double b3 = static_cast<double>(b) * static_cast<double>(b) * static_cast<double>(b);
  return static_cast<double>(model_flop_units_tiled(p, q)) * b3 / 3.0;
}

/// ||A - Q R||_F / ||A||_F, or the absolute residual when A is zero.
template <QrFactors F>
double backward_error(const DenseMatrix& a, const F& f) {
  if (a.rows() != f.rows() || a.cols() != f.cols()) throw std::invalid_argument("backward_error: shape mismatch");
  const DenseMatrix qr = f.apply_q(f.r());
  const double residual = frobenius_norm(subtract(a, qr));
  const double anorm = frobenius_norm(a);
  return anorm == 0.0 ? residual : residual / anorm;
}

/// ||Q^T Q - I||_inf with Q formed by applying the factors to I_m.
template <QrFactors F>
double orthogonality_error(const F& f, std::size_t m) {
  if (m != f.rows()) throw std::invalid_argument("orthogonality_error: row count mismatch");
  const DenseMatrix q = f.apply_q(DenseMatrix::identity(m));
  return inf_norm(subtract(multiply(transpose(q), q), DenseMatrix::identity(m)));
}

/// Negates rows of R whose diagonal entry is negative.
inline DenseMatrix normalize_r_signs(DenseMatrix r) {
  for (std::size_t i = 0; i < std::min(r.rows(), r.cols()); ++i) {
    if (!(r(i, i) < 0.0)) continue;
    for (std::size_t c = 0; c < r.cols(); ++c) r(i, c) = -r(i, c);
  }
  return r;
}

/// Default tolerance scale c in c * max(m, n) * eps.
inline constexpr double kToleranceScale = 100.0;

inline double qr_tolerance(std::size_t m, std::size_t n, double scale = kToleranceScale) {
  return scale * static_cast<double>(std::max(m, n)) * std::numeric_limits<double>::epsilon();
}

}  // namespace tileqr
