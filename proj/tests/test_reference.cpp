#include <gtest/gtest.h>

#include <cstring>
#include <limits>

#include "oracles.hpp"
#include "tileqr/random.hpp"
#include "tileqr/reference.hpp"

using namespace tileqr;

namespace {

constexpr double eps = std::numeric_limits<double>::epsilon();

// Direct evaluation of the tiled count, term by term, in long double.
long double tiled_sum_oracle(std::size_t p, std::size_t q, std::size_t b) {
  long double total = 0;
  const long double b3 = static_cast<long double>(b) * b * b;
  for (std::size_t k = 1; k <= q; ++k) {
    const long double pk = static_cast<long double>(p - k), qk = static_cast<long double>(q - k);
    total += (2 + 3 * qk + 10.0L / 3.0L * pk + 5 * pk * qk) * b3;
  }
  return total;
}

}  // namespace

TEST(Unblocked, Identity) {
  const UnblockedFactors f = house_qr_unblocked(DenseMatrix::identity(3));
  EXPECT_EQ(f.r(), DenseMatrix::identity(3));
  for (double tau : f.taus) EXPECT_EQ(tau, 0.0);
}

TEST(Unblocked, TwoByOne) {
  DenseMatrix a(2, 1);
  a(0, 0) = 3.0;
  a(1, 0) = 4.0;
  const UnblockedFactors f = house_qr_unblocked(a);
  EXPECT_DOUBLE_EQ(f.r()(0, 0), -5.0);
  EXPECT_DOUBLE_EQ(f.taus[0], 1.6);
  EXPECT_LE(orthogonality_error(f, 2), 16 * eps);
}

TEST(Unblocked, ResidualAndGramSchmidtOracle) {
  const DenseMatrix a = random_matrix(8, 5, 3);
  const UnblockedFactors f = house_qr_unblocked(a);
  EXPECT_LE(backward_error(a, f), 100 * 8 * eps);
  EXPECT_LE(oracle::relative_max_diff(resized(normalize_r_signs(f.r()), 5, 5), oracle::mgs_r(a)), 1e-12);
}

TEST(Unblocked, WideMatrix) {
  const DenseMatrix a = random_matrix(4, 9, 12);
  const UnblockedFactors f = house_qr_unblocked(a);
  EXPECT_LE(backward_error(a, f), 100 * 9 * eps);
  EXPECT_LE(orthogonality_error(f, 4), 100 * 4 * eps);
}

TEST(Unblocked, ApplyRoundTrip) {
  const DenseMatrix a = random_matrix(30, 20, 4);
  const UnblockedFactors f = house_qr_unblocked(a);
  const DenseMatrix b = random_matrix(30, 3, 5);
  EXPECT_LE(max_abs(subtract(f.apply_q(f.apply_q_transpose(b)), b)), 100 * 30 * eps * frobenius_norm(b));
  EXPECT_THROW(f.apply_q(DenseMatrix(29, 1)), std::invalid_argument);
}

TEST(Blocked, SinglePanelIsBitwiseUnblocked) {
  for (auto [m, n] : {std::pair<std::size_t, std::size_t>{12, 12}, {15, 7}, {5, 11}}) {
    const DenseMatrix a = random_matrix(m, n, m + n);
    const UnblockedFactors u = house_qr_unblocked(a);
    for (std::size_t b : {n, n + 5}) {
      const UnblockedFactors f = blocked_qr(a, b);
      EXPECT_EQ(std::memcmp(f.vr.data().data(), u.vr.data().data(), u.vr.data().size_bytes()), 0);
      EXPECT_EQ(f.taus, u.taus);
    }
  }
}

TEST(Blocked, MatchesUnblockedR) {
  const DenseMatrix a = random_matrix(12, 12, 17);
  const UnblockedFactors f = blocked_qr(a, 4);
  const UnblockedFactors u = house_qr_unblocked(a);
  EXPECT_LE(oracle::relative_max_diff(normalize_r_signs(f.r()), normalize_r_signs(u.r())), 1e-12);
  EXPECT_LE(backward_error(a, f), 100 * 12 * eps);
}

TEST(Blocked, RectangularAndRaggedPanels) {
  for (auto [m, n, b] : {std::tuple<std::size_t, std::size_t, std::size_t>{40, 17, 5}, {17, 40, 6}, {33, 33, 1}}) {
    const DenseMatrix a = random_matrix(m, n, m * n);
    const UnblockedFactors f = blocked_qr(a, b);
    EXPECT_LE(backward_error(a, f), 100 * std::max(m, n) * eps);
    EXPECT_LE(orthogonality_error(f, m), 100 * m * eps);
  }
}

TEST(Blocked, IdentityAnyPanel) {
  for (std::size_t b : {1u, 2u, 3u, 7u}) {
    const UnblockedFactors f = blocked_qr(DenseMatrix::identity(7), b);
    EXPECT_EQ(f.r(), DenseMatrix::identity(7));
    for (double tau : f.taus) EXPECT_EQ(tau, 0.0);
  }
  EXPECT_THROW(blocked_qr(DenseMatrix::identity(3), 0), std::invalid_argument);
}

TEST(FlopModel, Blocked) {
  EXPECT_DOUBLE_EQ(model_flops_blocked(30, 30), 4.0 / 3.0 * 27000.0);
  EXPECT_EQ(model_flops_blocked(3000, 3000), 3.6e10);
  EXPECT_THROW(model_flops_blocked(3, 4), std::invalid_argument);
}

TEST(FlopModel, Tiled) {
  EXPECT_EQ(model_flops_tiled(1, 1, 1), 2.0);
  EXPECT_EQ(model_flops_tiled(1, 1, 7), 2.0 * 343);
  EXPECT_EQ(model_flop_units_tiled(20, 20), 40780u);  // 13593 1/3
  EXPECT_NEAR(model_flops_tiled(20, 20, 1), 13593.0 + 1.0 / 3.0, 1e-9);
  EXPECT_NEAR(model_flops_tiled(20, 20, 1) / model_flops_blocked(20, 20), 1.274375, 1e-12);
  EXPECT_THROW(model_flops_tiled(2, 3, 4), std::invalid_argument);
  EXPECT_THROW(model_flops_tiled(3, 3, 0), std::invalid_argument);
}

TEST(FlopModel, AgreesWithTermwiseSum) {
  for (std::size_t q = 1; q <= 15; ++q)
    for (std::size_t p = q; p <= 15; ++p)
      for (std::size_t b : {1u, 3u, 10u}) {
        const long double want = tiled_sum_oracle(p, q, b);
        EXPECT_NEAR(static_cast<long double>(model_flops_tiled(p, q, b)), want, 1e-9L * want);
      }
}

TEST(FlopModel, CountsMatchLoops) {
  for (std::size_t q = 1; q <= 12; ++q)
    for (std::size_t p = q; p <= 12; ++p) EXPECT_EQ(tiled_kernel_counts(p, q).flop_units(), model_flop_units_tiled(p, q));
}

TEST(FlopModel, MonotoneAndApproachesFiveFourths) {
  double prev = 1e9;
  for (std::size_t p = 1; p <= 100; ++p) {
    const double ratio = model_flops_tiled(p, p, 8) / model_flops_blocked(8 * p, 8 * p);
    if (p > 1) {
      EXPECT_LT(ratio, prev);
    }
    prev = ratio;
    EXPECT_LE(model_flops_tiled(p, p, 8), model_flops_tiled(p + 1, p, 8));
  }
  EXPECT_GE(prev, 1.25);
  EXPECT_LE(prev, 1.26);
}

TEST(BackwardError, Basics) {
  const UnblockedFactors id = house_qr_unblocked(DenseMatrix::identity(5));
  EXPECT_LE(backward_error(DenseMatrix::identity(5), id), eps);
  EXPECT_EQ(orthogonality_error(id, 5), 0.0);

  const DenseMatrix a = random_matrix(100, 100, 8);
  UnblockedFactors f = house_qr_unblocked(a);
  EXPECT_LE(backward_error(a, f), 100 * 100 * eps);
  EXPECT_LE(orthogonality_error(house_qr_unblocked(random_matrix(50, 50, 9)), 50), 100 * 50 * eps);

  f.vr(3, 7) += 1.0;
  EXPECT_GE(backward_error(a, f), 0.5 / frobenius_norm(a));
}

TEST(BackwardError, ZeroMatrixGivesAbsoluteResidual) {
  const DenseMatrix z(4, 3);
  EXPECT_EQ(backward_error(z, house_qr_unblocked(z)), 0.0);
}

TEST(NormalizeSigns, Cases) {
  DenseMatrix r(2, 2);
  r(0, 0) = -1.0;
  r(0, 1) = 3.0;
  r(1, 1) = 2.0;
  const DenseMatrix n = normalize_r_signs(r);
  EXPECT_EQ(n(0, 0), 1.0);
  EXPECT_EQ(n(0, 1), -3.0);
  EXPECT_EQ(n(1, 1), 2.0);
  EXPECT_EQ(normalize_r_signs(n), n);
}
