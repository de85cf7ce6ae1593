#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <thread>
#include <utility>

#include "tileqr/dag.hpp"
#include "tileqr/kernels.hpp"
#include "tileqr/matrix.hpp"
#include "tileqr/scheduler.hpp"
#include "tileqr/tile_storage.hpp"
#include "tileqr/trace.hpp"

namespace tileqr {

/// Result of the tiled factorization, stored in place.
///
/// `a` holds R (upper triangle of the diagonal tiles plus the tiles right of
/// them), V_kk (strict lower part of diagonal tiles) and V_ik (the tiles
/// below the diagonal). `t` is a grid of the same shape whose slot (k, k)
/// holds T_kk and slot (i, k), i > k, holds T_ik. Slots above the diagonal
/// are unused and stay zero.
struct FactorSet {
  TiledMatrix a;
  TiledMatrix t;

  explicit FactorSet(TiledMatrix input)
      : a(std::move(input)), t(a.p() * a.b(), a.q() * a.b(), a.b()) {}

  std::size_t rows() const { return a.m(); }
  std::size_t cols() const { return a.n(); }
  std::size_t steps() const { return std::min(a.p(), a.q()); }

  /// Logical m x n R, upper trapezoidal.
  DenseMatrix r() const {
    DenseMatrix out(a.m(), a.n());
    for (std::size_t c = 0; c < a.n(); ++c)
      for (std::size_t r = 0; r <= std::min(c, a.m() - 1); ++r) out(r, c) = a.at(r, c);
    return out;
  }

  /// Q^T B: the factorization's block reflectors in forward order.
  DenseMatrix apply_q_transpose(const DenseMatrix& bmat) const {
    DenseMatrix work = padded(bmat);
    MatrixView w = work.view();
    const std::size_t b = a.b();
    for (std::size_t k = 0; k < steps(); ++k) {
      larfb_apply(a.tile(k, k), t.tile(k, k), w.block(k * b, 0, b, w.cols()), Op::trans);
      for (std::size_t i = k + 1; i < a.p(); ++i)
        ssrfb_apply(a.tile(i, k), t.tile(i, k), w.block(k * b, 0, b, w.cols()), w.block(i * b, 0, b, w.cols()),
                    Op::trans);
    }
    return resized(work, a.m(), bmat.cols());
  }

  /// Q B: the block reflectors in reverse order, untransposed.
  DenseMatrix apply_q(const DenseMatrix& bmat) const {
    DenseMatrix work = padded(bmat);
    MatrixView w = work.view();
    const std::size_t b = a.b();
    for (std::size_t k = steps(); k-- > 0;) {
      for (std::size_t i = a.p(); i-- > k + 1;)
        ssrfb_apply(a.tile(i, k), t.tile(i, k), w.block(k * b, 0, b, w.cols()), w.block(i * b, 0, b, w.cols()),
                    Op::no_trans);
      larfb_apply(a.tile(k, k), t.tile(k, k), w.block(k * b, 0, b, w.cols()), Op::no_trans);
    }
    return resized(work, a.m(), bmat.cols());
  }

  friend bool operator==(const FactorSet&, const FactorSet&) = default;

 private:
  DenseMatrix padded(const DenseMatrix& bmat) const {
    if (bmat.rows() != a.m())
      throw std::invalid_argument("apply_q: B has " + std::to_string(bmat.rows()) + " rows, expected " +
                                  std::to_string(a.m()));
    return resized(bmat, a.p() * a.b(), bmat.cols());
  }
};

inline DenseMatrix apply_q(const FactorSet& f, const DenseMatrix& bmat) { return f.apply_q(bmat); }
inline DenseMatrix apply_q_transpose(const FactorSet& f, const DenseMatrix& bmat) {
  return f.apply_q_transpose(bmat);
}

/// Runs one task's kernel against the factor storage.
inline void execute_task(FactorSet& f, const Task& task) {
  const std::size_t k = task.k, i = task.i, j = task.j;
  switch (task.kind) {
    case KernelKind::geqt2: geqt2(f.a.tile(k, k), f.t.tile(k, k)); break;
    case KernelKind::larfb: larfb_apply(f.a.tile(k, k), f.t.tile(k, k), f.a.tile(k, j), Op::trans); break;
    case KernelKind::tsqt2: tsqt2(f.a.tile(k, k), f.a.tile(i, k), f.t.tile(i, k)); break;
    case KernelKind::ssrfb:
      ssrfb_apply(f.a.tile(i, k), f.t.tile(i, k), f.a.tile(k, j), f.a.tile(i, j), Op::trans);
      break;
  }
}

/// The plain triple loop: GEQT2, the LARFBs of row k, then for each row
/// below a TSQT2 followed by its SSRFBs.
inline FactorSet tiled_qr_sequential(TiledMatrix input) {
  FactorSet f(std::move(input));
  const int p = static_cast<int>(f.a.p()), q = static_cast<int>(f.a.q());
  for (int k = 0; k < std::min(p, q); ++k) {
    execute_task(f, Task::G(k));
    for (int j = k + 1; j < q; ++j) execute_task(f, Task::L(k, j));
    for (int i = k + 1; i < p; ++i) {
      execute_task(f, Task::T(k, i));
      for (int j = k + 1; j < q; ++j) execute_task(f, Task::S(k, i, j));
    }
  }
  return f;
}

struct ParallelResult {
  FactorSet factors;
  ExecutionTrace trace;
};

inline std::size_t default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Graph-driven factorization. The output is bitwise identical to
/// tiled_qr_sequential for every worker count, since every pair of
/// conflicting tile accesses is ordered by the graph.
inline ParallelResult tiled_qr_parallel(TiledMatrix input, std::size_t workers, bool record_trace = true) {
  if (workers == 0) throw std::invalid_argument("tiled_qr_parallel: workers must be >= 1");
  ParallelResult res{FactorSet(std::move(input)), {}};
  const TaskGraph g = build_dag(res.factors.a.p(), res.factors.a.q());
  run_graph(g, workers, [&](const Task& t) { execute_task(res.factors, t); }, record_trace ? &res.trace : nullptr);
  return res;
}

}  // namespace tileqr
