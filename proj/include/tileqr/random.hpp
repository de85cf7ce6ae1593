#pragma once

#include <cstdint>
#include <random>

#include "tileqr/matrix.hpp"

namespace tileqr {

/// Synthetic test matrix with entries uniform in [-1, 1).
///
/// The stream is fixed: std::mt19937_64 seeded with `seed`, one draw per
/// entry in column-major order, mapped as 2 * ((x >> 11) * 2^-53) - 1. The
/// engine is fully specified by the standard, so matrices are identical
/// across platforms and releases. (std::uniform_real_distribution is not.)
inline DenseMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  DenseMatrix a(rows, cols);
  for (double& x : a.data()) {
    const double u = static_cast<double>(eng() >> 11) * 0x1.0p-53;
    x = 2.0 * u - 1.0;
  }
  return a;
}

}  // namespace tileqr
