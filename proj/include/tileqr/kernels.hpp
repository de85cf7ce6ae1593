#pragma once

// Householder primitives and the four tile kernels of the tiled QR
// factorization:
//
//   geqt2  A_kk            -> V_kk, R_kk and T_kk
//   larfb  A_kj            -> Q_kk^T A_kj
//   tsqt2  [R_kk; A_ik]    -> R_kk', V_ik and T_ik
//   ssrfb  [A_kj; A_ij]    -> Q_ik^T [A_kj; A_ij]
//
// Block reflectors use the forward compact WY form Q = H_1 H_2 ... H_b =
// I - V T V^T with T upper triangular. The factorization applies Q^T, i.e.
// I - V T^T V^T; the apply kernels take an Op to select either side.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "tileqr/matrix.hpp"

namespace tileqr {

enum class KernelKind : std::uint8_t { geqt2, larfb, tsqt2, ssrfb };

/// Whether an apply kernel multiplies by Q (no_trans) or Q^T (trans).
enum class Op : std::uint8_t { no_trans, trans };

inline std::string_view kernel_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::geqt2: return "GEQT2";
    case KernelKind::larfb: return "LARFB";
    case KernelKind::tsqt2: return "TSQT2";
    case KernelKind::ssrfb: return "SSRFB";
  }
  return "?";
}

/// Modeled kernel cost in units of b^3/3 flops: 2, 3, 10/3 and 5 b^3.
/// Integer units keep summed model counts exact.
inline std::uint64_t kernel_flop_units(KernelKind kind) {
  switch (kind) {
    case KernelKind::geqt2: return 6;
    case KernelKind::larfb: return 9;
    case KernelKind::tsqt2: return 10;
    case KernelKind::ssrfb: return 15;
  }
  throw std::invalid_argument("kernel_flop_units: unknown kernel kind");
}

inline double kernel_flops(KernelKind kind, std::size_t b) {
  const double b3 = static_cast<double>(b) * static_cast<double>(b) * static_cast<double>(b);
  return static_cast<double>(kernel_flop_units(kind)) * b3 / 3.0;
}

/// H = I - tau v v^T with v[0] == 1.
struct Reflector {
  std::vector<double> v;
  double tau = 0.0;
  double beta = 0.0;
};

namespace detail {

inline double norm2(std::span<const double> x) {
  double scale = 0.0;
  double ssq = 1.0;
  for (double xi : x) {
    if (xi == 0.0) continue;
    const double a = std::abs(xi);
    if (scale < a) {
      ssq = 1.0 + ssq * (scale / a) * (scale / a);
      scale = a;
    } else {
      ssq += (a / scale) * (a / scale);
    }
  }
  return scale * std::sqrt(ssq);
}

}  // namespace detail

/// In-place reflector generation. On entry alpha and tail hold x; on exit
/// alpha holds beta and tail holds v[1:]. Returns tau.
///
/// A zero tail means no reflection: tau = 0, beta = alpha, tail untouched.
inline double generate_reflector(double& alpha, std::span<double> tail) {
  const double xnorm = detail::norm2(tail);
  if (xnorm == 0.0) return 0.0;
  const double beta = -std::copysign(std::hypot(alpha, xnorm), alpha);
  const double tau = (beta - alpha) / beta;
  const double scal = 1.0 / (alpha - beta);
  for (double& t : tail) t *= scal;
  alpha = beta;
  return tau;
}

inline Reflector house_gen(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("house_gen: empty vector");
  Reflector h;
  h.v.assign(x.begin(), x.end());
  double alpha = x[0];
  h.tau = generate_reflector(alpha, std::span<double>(h.v).subspan(1));
  h.beta = alpha;
  h.v[0] = 1.0;
  if (h.tau == 0.0) std::fill(h.v.begin() + 1, h.v.end(), 0.0);
  return h;
}

/// Forward columnwise accumulation of the compact WY factor.
///
/// v is l x k (l >= k), unit lower trapezoidal: its diagonal is taken as 1 and
/// entries above the diagonal are never read. t must be k x k; on return it
/// is upper triangular with diag(t) == taus and I - V T V^T == H_1 ... H_k.
inline void larft_accumulate(ConstMatrixView v, std::span<const double> taus, MatrixView t) {
  const std::size_t l = v.rows(), k = v.cols();
  if (l < k || taus.size() != k || t.rows() != k || t.cols() != k)
    throw std::invalid_argument("larft_accumulate: shape mismatch");
  std::vector<double> z(k);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t r = j + 1; r < k; ++r) t(r, j) = 0.0;
    const double tau = taus[j];
    t(j, j) = tau;
    if (tau == 0.0) {
      for (std::size_t i = 0; i < j; ++i) t(i, j) = 0.0;
      continue;
    }
    // z = V(:, 0:j)^T v_j; v_j is zero above row j and one at row j.
    const double* vj = v.col(j);
    for (std::size_t i = 0; i < j; ++i) {
      const double* vi = v.col(i);
      double s = vi[j];
      for (std::size_t r = j + 1; r < l; ++r) s += vi[r] * vj[r];
      z[i] = s;
    }
    // t(0:j, j) = -tau * T(0:j, 0:j) z
    for (std::size_t i = 0; i < j; ++i) {
      double s = 0.0;
      for (std::size_t c = i; c < j; ++c) s += t(i, c) * z[c];
      t(i, j) = -tau * s;
    }
  }
}

inline DenseMatrix larft_accumulate(ConstMatrixView v, std::span<const double> taus) {
  DenseMatrix t(v.cols(), v.cols());
  larft_accumulate(v, taus, t.view());
  return t;
}

/// Unblocked Householder QR of an m x n view, in place: R in the upper
/// trapezoid, reflector tails below the diagonal. taus needs min(m, n) slots.
inline void factor_unblocked(MatrixView a, std::span<double> taus) {
  const std::size_t m = a.rows(), n = a.cols(), kmax = std::min(m, n);
  if (taus.size() < kmax) throw std::invalid_argument("factor_unblocked: taus too short");
  for (std::size_t j = 0; j < kmax; ++j) {
    double* aj = a.col(j);
    const double tau = generate_reflector(aj[j], std::span<double>(aj + j + 1, m - j - 1));
    taus[j] = tau;
    if (tau == 0.0) continue;
    for (std::size_t c = j + 1; c < n; ++c) {
      double* ac = a.col(c);
      double w = ac[j];
      for (std::size_t r = j + 1; r < m; ++r) w += aj[r] * ac[r];
      w *= tau;
      ac[j] -= w;
      for (std::size_t r = j + 1; r < m; ++r) ac[r] -= w * aj[r];
    }
  }
}

namespace detail {

// w <- op(T) w, in place, for an upper triangular k x k T and k x nc w.
inline void apply_triangular(ConstMatrixView t, MatrixView w, Op op) {
  const std::size_t k = t.rows();
  for (std::size_t c = 0; c < w.cols(); ++c) {
    double* wc = w.col(c);
    if (op == Op::no_trans) {
      for (std::size_t i = 0; i < k; ++i) {
        double s = 0.0;
        for (std::size_t l = i; l < k; ++l) s += t(i, l) * wc[l];
        wc[i] = s;
      }
    } else {
      for (std::size_t i = k; i-- > 0;) {
        const double* ti = t.col(i);
        double s = 0.0;
        for (std::size_t l = 0; l <= i; ++l) s += ti[l] * wc[l];
        wc[i] = s;
      }
    }
  }
}

}  // namespace detail

/// c <- (I - V op(T) V^T) c with V l x k unit lower trapezoidal (only the
/// strictly lower part is read) and c l x nc.
///
/// With Op::trans this is the trailing update of a panel, Q^T c.
inline void larfb_apply(ConstMatrixView v, ConstMatrixView t, MatrixView c, Op op = Op::trans) {
  const std::size_t l = v.rows(), k = v.cols(), nc = c.cols();
  if (l < k || c.rows() != l || t.rows() != k || t.cols() != k)
    throw std::invalid_argument("larfb_apply: shape mismatch");
  DenseMatrix wbuf(k, nc);
  MatrixView w = wbuf.view();
  // W = V^T C
  for (std::size_t col = 0; col < nc; ++col) {
    const double* cc = c.col(col);
    for (std::size_t i = 0; i < k; ++i) {
      const double* vi = v.col(i);
      double s = cc[i];
      for (std::size_t r = i + 1; r < l; ++r) s += vi[r] * cc[r];
      w(i, col) = s;
    }
  }
  detail::apply_triangular(t, w, op);
  // C -= V W
  for (std::size_t col = 0; col < nc; ++col) {
    double* cc = c.col(col);
    for (std::size_t i = 0; i < k; ++i) {
      const double* vi = v.col(i);
      const double wi = w(i, col);
      cc[i] -= wi;
      for (std::size_t r = i + 1; r < l; ++r) cc[r] -= vi[r] * wi;
    }
  }
}

/// Factor the diagonal tile in place: R in the upper triangle, V_kk in the
/// strict lower triangle, compact WY factor in t.
inline void geqt2(MatrixView a, MatrixView t) {
  const std::size_t b = a.rows();
  if (a.cols() != b || t.rows() != b || t.cols() != b) throw std::invalid_argument("geqt2: tiles must be b x b");
  std::vector<double> taus(b);
  factor_unblocked(a, taus);
  larft_accumulate(a, taus, t);
}

/// QR of the stacked 2b x b matrix [R; A]. Only the upper triangle of r is
/// read or written. On exit r holds the new R, a holds V (the reflectors are
/// [I; V]) and t the compact WY factor.
inline void tsqt2(MatrixView r, MatrixView a, MatrixView t) {
  const std::size_t b = r.rows();
  if (r.cols() != b || a.rows() != b || a.cols() != b || t.rows() != b || t.cols() != b)
    throw std::invalid_argument("tsqt2: tiles must be b x b");
  std::vector<double> z(b);
  for (std::size_t j = 0; j < b; ++j) {
    double* vj = a.col(j);
    // Rows j+1.. of r's column j are structurally zero, so x = (r_jj, a(:, j)).
    const double tau = generate_reflector(r(j, j), std::span<double>(vj, b));
    for (std::size_t c = j + 1; c < b; ++c) {
      if (tau == 0.0) break;
      double* ac = a.col(c);
      double w = r(j, c);
      for (std::size_t i = 0; i < b; ++i) w += vj[i] * ac[i];
      w *= tau;
      r(j, c) -= w;
      for (std::size_t i = 0; i < b; ++i) ac[i] -= w * vj[i];
    }
    // Structured T update: [e_i; v_i]^T [e_j; v_j] = v_i^T v_j for i < j.
    for (std::size_t i = j + 1; i < b; ++i) t(i, j) = 0.0;
    t(j, j) = tau;
    if (tau == 0.0) {
      for (std::size_t i = 0; i < j; ++i) t(i, j) = 0.0;
      continue;
    }
    for (std::size_t i = 0; i < j; ++i) {
      const double* vi = a.col(i);
      double s = 0.0;
      for (std::size_t rr = 0; rr < b; ++rr) s += vi[rr] * vj[rr];
      z[i] = s;
    }
    for (std::size_t i = 0; i < j; ++i) {
      double s = 0.0;
      for (std::size_t c = i; c < j; ++c) s += t(i, c) * z[c];
      t(i, j) = -tau * s;
    }
  }
}

/// [top; bottom] <- (I - [I; V] op(T) [I; V]^T) [top; bottom] with V a full
/// l x k block. top is k x nc and bottom l x nc.
inline void ssrfb_apply(ConstMatrixView v, ConstMatrixView t, MatrixView top, MatrixView bottom,
                        Op op = Op::trans) {
  const std::size_t l = v.rows(), k = v.cols(), nc = top.cols();
  if (top.rows() != k || bottom.rows() != l || bottom.cols() != nc || t.rows() != k || t.cols() != k)
    throw std::invalid_argument("ssrfb_apply: shape mismatch");
  DenseMatrix wbuf(k, nc);
  MatrixView w = wbuf.view();
  // W = top + V^T bottom
  for (std::size_t col = 0; col < nc; ++col) {
    const double* bc = bottom.col(col);
    for (std::size_t i = 0; i < k; ++i) {
      const double* vi = v.col(i);
      double s = top(i, col);
      for (std::size_t r = 0; r < l; ++r) s += vi[r] * bc[r];
      w(i, col) = s;
    }
  }
  detail::apply_triangular(t, w, op);
  for (std::size_t col = 0; col < nc; ++col) {
    double* tc = top.col(col);
    double* bc = bottom.col(col);
    for (std::size_t i = 0; i < k; ++i) {
      const double wi = w(i, col);
      tc[i] -= wi;
      const double* vi = v.col(i);
      for (std::size_t r = 0; r < l; ++r) bc[r] -= vi[r] * wi;
    }
  }
}

}  // namespace tileqr
