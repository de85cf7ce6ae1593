#pragma once

// Command implementations for the tileqr tool. Kept out of main() so the
// test suite can drive complete command lines in-process.
//
// Exit codes: 0 success, 1 invalid flags, 2 file errors, 3 failed verify.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tileqr/tileqr.hpp"

namespace tileqr::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kFileError = 2, kVerifyFailed = 3 };

/// Worker count from TILEQR_WORKERS, else hardware parallelism.
inline std::size_t env_workers() {
  if (const char* s = std::getenv("TILEQR_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(s, &end, 10);
    if (end != s && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return default_workers();
}

/// "M" or "MxN".
inline std::pair<std::size_t, std::size_t> parse_size(const std::string& s) {
  const auto x = s.find_first_of("xX");
  auto num = [&](const std::string& part) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(part, &used);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--size", "expected M or MxN, got '" + s + "'");
    }
    if (used != part.size() || v == 0) throw CLI::ValidationError("--size", "expected M or MxN, got '" + s + "'");
    return static_cast<std::size_t>(v);
  };
  if (x == std::string::npos) {
    const auto m = num(s);
    return {m, m};
  }
  return {num(s.substr(0, x)), num(s.substr(x + 1))};
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// factor

struct FactorOptions {
  std::string input;
  std::string size;
  std::uint64_t seed = 1;
  std::size_t block = 128;
  std::size_t workers = 0;
  std::string out;
  std::string emit_q;
  std::string mode = "tiled";
};

inline int cmd_factor(const FactorOptions& o, std::ostream& out, std::ostream& err) {
  if (o.input.empty() == o.size.empty()) {
    err << "factor: give exactly one of --input or --size\n";
    return kUsage;
  }
  DenseMatrix a;
  if (!o.input.empty()) {
    try {
      a = load_matrix(o.input);
    } catch (const MatrixFileError& e) {
      err << "factor: " << e.what() << "\n";
      return kFileError;
    }
    if (a.empty()) {
      err << "factor: matrix '" << o.input << "' has a zero dimension\n";
      return kFileError;
    }
  } else {
    const auto [m, n] = parse_size(o.size);
    a = random_matrix(m, n, o.seed);
  }

  const auto t0 = std::chrono::steady_clock::now();
  DenseMatrix r, q;
  double berr = 0.0;
  auto finish = [&](const auto& f) {
    const double secs = seconds_since(t0);
    r = f.r();
    if (!o.emit_q.empty()) q = f.apply_q(DenseMatrix::identity(a.rows()));
    berr = backward_error(a, f);
    return secs;
  };
  double secs = 0.0;
  if (o.mode == "tiled") {
    secs = finish(tiled_qr_parallel(from_col_major(a, o.block), o.workers, false).factors);
  } else if (o.mode == "tiled-seq") {
    secs = finish(tiled_qr_sequential(from_col_major(a, o.block)));
  } else if (o.mode == "blocked") {
    secs = finish(blocked_qr(a, o.block));
  } else {
    secs = finish(house_qr_unblocked(a));
  }

  try {
    if (!o.out.empty()) save_matrix(o.out, r);
    if (!o.emit_q.empty()) save_matrix(o.emit_q, q);
  } catch (const MatrixFileError& e) {
    err << "factor: " << e.what() << "\n";
    return kFileError;
  }
  out << std::setprecision(6) << "mode " << o.mode << "\nsize " << a.rows() << "x" << a.cols() << "\nblock "
      << o.block << "\nworkers " << (o.mode == "tiled" ? o.workers : 1) << "\nbackward_error "
      << std::scientific << berr << "\nseconds " << std::fixed << secs << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyOptions {
  std::size_t max_size = 128;
  std::size_t seeds = 3;
  bool inject_fault = false;
};

struct PropertyResult {
  std::string name;
  bool ok = true;
  std::string detail;
};

inline std::vector<PropertyResult> run_verify(const VerifyOptions& o) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  std::vector<PropertyResult> results;
  auto check = [&](std::string name, const std::function<std::string()>& body) {
    PropertyResult r{std::move(name), true, {}};
    try {
      r.detail = body();
      r.ok = r.detail.empty();
    } catch (const std::exception& e) {
      r.ok = false;
      r.detail = std::string("exception: ") + e.what();
    }
    results.push_back(std::move(r));
  };
  const std::size_t max_size = std::max<std::size_t>(o.max_size, 1);

  check("kernel-oracles", [&]() -> std::string {
    for (std::size_t b : {2u, 3u, 4u, 8u, 16u}) {
      if (b > max_size) break;
      const double tol = 100.0 * static_cast<double>(b) * eps;
      for (std::uint64_t s = 0; s < o.seeds; ++s) {
        // geqt2 + larfb: Q^T A must equal R; tsqt2 + ssrfb likewise on a stack.
        const DenseMatrix a = random_matrix(b, b, s);
        DenseMatrix f = a, t(b, b);
        geqt2(f.view(), t.view());
        DenseMatrix c = a;
        larfb_apply(f.view(), t.view(), c.view());
        for (std::size_t j = 0; j < b; ++j)
          for (std::size_t i = 0; i < b; ++i) {
            const double want = i <= j ? f(i, j) : 0.0;
            if (std::abs(c(i, j) - want) > tol * frobenius_norm(a))
              return "geqt2/larfb b=" + std::to_string(b) + " seed=" + std::to_string(s);
          }
        DenseMatrix r = resized(a, b, b), lower = random_matrix(b, b, s + 1000), t2(b, b);
        for (std::size_t j = 0; j < b; ++j)
          for (std::size_t i = j + 1; i < b; ++i) r(i, j) = 0.0;
        DenseMatrix top = r, bot = lower, rr = r, vv = lower;
        tsqt2(rr.view(), vv.view(), t2.view());
        ssrfb_apply(vv.view(), t2.view(), top.view(), bot.view());
        const double scale = std::hypot(frobenius_norm(r), frobenius_norm(lower));
        if (max_abs(subtract(top, rr)) > tol * scale || max_abs(bot) > tol * scale)
          return "tsqt2/ssrfb b=" + std::to_string(b) + " seed=" + std::to_string(s);
      }
    }
    return {};
  });

  check("dag-structure", [&]() -> std::string {
    for (std::size_t p = 1; p <= 12; ++p)
      for (std::size_t q = 1; q <= 12; ++q) {
        const TaskGraph g = build_dag(p, q);
        if (g.size() != dag_node_count(p, q)) return "node count " + std::to_string(p) + "x" + std::to_string(q);
        if (!topological_order(g)) return "cycle in " + std::to_string(p) + "x" + std::to_string(q);
      }
    if (build_dag(3, 3).size() != 14) return "3x3 graph does not have 14 nodes";
    return {};
  });

  check("dag-serialization", [&]() -> std::string {
    for (std::size_t p = 1; p <= 8; ++p)
      for (std::size_t q = 1; q <= 8; ++q) {
        TaskGraph g = build_dag(p, q);
        if (o.inject_fault && p == 3 && q == 3) g.remove_edge(Task::T(0, 1), Task::S(0, 1, 1));
        const SerializationReport rep = verify_serialization(g);
        if (!rep.ok) return std::to_string(p) + "x" + std::to_string(q) + ": " + rep.message();
      }
    return {};
  });

  check("flop-model", [&]() -> std::string {
    for (std::size_t q = 1; q <= 12; ++q)
      for (std::size_t p = q; p <= 12; ++p)
        if (tiled_kernel_counts(p, q).flop_units() != model_flop_units_tiled(p, q))
          return "count mismatch " + std::to_string(p) + "x" + std::to_string(q);
    const double ratio = model_flops_tiled(100, 100, 1) / model_flops_blocked(100, 100);
    if (ratio < 1.25 || ratio > 1.26) return "asymptotic ratio " + std::to_string(ratio);
    return {};
  });

  std::vector<std::pair<std::size_t, std::size_t>> shapes;
  for (std::size_t m : {4u, 16u, 37u, 64u, 128u, 200u})
    if (m <= max_size) shapes.emplace_back(m, m);
  for (std::size_t m : {23u, 67u, 150u})
    if (m <= max_size) shapes.emplace_back(m, (m * 2) / 3);
  if (shapes.empty()) shapes.emplace_back(max_size, max_size);

  check("residuals", [&]() -> std::string {
    for (auto [m, n] : shapes)
      for (std::uint64_t s = 0; s < o.seeds; ++s) {
        const DenseMatrix a = random_matrix(m, n, s);
        const double tol = qr_tolerance(m, n);
        const UnblockedFactors u = house_qr_unblocked(a);
        const DenseMatrix r_ref = normalize_r_signs(u.r());
        const double anorm = std::max(max_abs(a), 1.0);
        for (std::size_t b : {4u, 8u, 16u}) {
          const std::string where = std::to_string(m) + "x" + std::to_string(n) + " b=" + std::to_string(b);
          const UnblockedFactors bl = blocked_qr(a, b);
          const FactorSet ti = tiled_qr_sequential(from_col_major(a, b));
          if (backward_error(a, bl) > tol) return "blocked backward error " + where;
          if (backward_error(a, ti) > tol) return "tiled backward error " + where;
          if (orthogonality_error(ti, m) > qr_tolerance(m, m)) return "tiled orthogonality " + where;
          if (max_abs(subtract(normalize_r_signs(ti.r()), r_ref)) > 1e-10 * anorm) return "tiled R " + where;
          if (max_abs(subtract(normalize_r_signs(bl.r()), r_ref)) > 1e-10 * anorm) return "blocked R " + where;
        }
        if (backward_error(a, u) > tol) return "unblocked backward error";
      }
    return {};
  });

  check("determinism", [&]() -> std::string {
    const std::size_t m = std::min<std::size_t>(max_size, 120);
    const std::size_t b = std::max<std::size_t>(1, m / 6);
    const DenseMatrix a = random_matrix(m, m, 99);
    const FactorSet ref = tiled_qr_sequential(from_col_major(a, b));
    for (std::size_t w : {1u, 2u, 4u, 8u})
      for (std::size_t rep = 0; rep < std::max<std::size_t>(o.seeds, 1); ++rep)
        if (!(tiled_qr_parallel(from_col_major(a, b), w, false).factors == ref))
          return "workers=" + std::to_string(w) + " differs from sequential";
    return {};
  });

  check("trace-completeness", [&]() -> std::string {
    const std::size_t m = std::min<std::size_t>(max_size, 64);
    const std::size_t b = std::max<std::size_t>(1, m / 4);
    const ParallelResult res = tiled_qr_parallel(from_col_major(random_matrix(m, m, 5), b), 3);
    const TaskGraph g = build_dag(res.factors.a.p(), res.factors.a.q());
    if (res.trace.records.size() != g.size()) return "record count";
    if (!intervals_disjoint(res.trace)) return "overlapping intervals";
    return {};
  });

  return results;
}

inline int cmd_verify(const VerifyOptions& o, std::ostream& out) {
  bool all = true;
  for (const auto& r : run_verify(o)) {
    out << (r.ok ? "PASS " : "FAIL ") << r.name;
    if (!r.ok) out << ": " << r.detail;
    out << "\n";
    all = all && r.ok;
  }
  return all ? kOk : kVerifyFailed;
}

// ---------------------------------------------------------------------------
// bench

struct BenchRecord {
  std::size_t m = 0, n = 0, b = 0, workers = 0;
  double seconds = 0.0;
  double raw_gflops = 0.0;       // tiled model count / time
  double relative_gflops = 0.0;  // 2n^2(m - n/3) / time
  double speedup = 0.0;
};

inline constexpr const char* kBenchHeader = "m,n,b,workers,seconds,raw_gflops,relative_gflops,speedup";

inline BenchRecord make_record(std::size_t m, std::size_t n, std::size_t b, std::size_t workers, double secs) {
  BenchRecord r{m, n, b, workers, secs};
  const std::size_t p = (m + b - 1) / b, q = (n + b - 1) / b;
  r.raw_gflops = model_flops_tiled(p, q, b) / secs * 1e-9;
  r.relative_gflops = model_flops_blocked(m, n) / secs * 1e-9;
  return r;
}

inline void write_bench_row(std::ostream& out, const BenchRecord& r) {
  out << r.m << ',' << r.n << ',' << r.b << ',' << r.workers << ',' << std::setprecision(9) << r.seconds << ','
      << r.raw_gflops << ',' << r.relative_gflops << ',' << r.speedup << '\n';
}

struct BenchOptions {
  std::vector<std::size_t> sizes{1024};
  std::size_t block = 200;
  std::vector<std::size_t> workers;
  bool weak = false;
  std::size_t nloc = 1000;
  std::string csv;
  std::uint64_t seed = 1;
  bool baselines = false;
};

inline double time_tiled(const DenseMatrix& a, std::size_t b, std::size_t workers) {
  TiledMatrix t = from_col_major(a, b);
  const auto t0 = std::chrono::steady_clock::now();
  auto res = tiled_qr_parallel(std::move(t), workers, false);
  return seconds_since(t0);
}

inline std::vector<BenchRecord> run_bench(const BenchOptions& o, std::ostream& log) {
  std::vector<BenchRecord> rows;
  if (!o.weak) {
    for (std::size_t n : o.sizes) {
      const DenseMatrix a = random_matrix(n, n, o.seed);
      std::optional<double> base;
      for (std::size_t w : o.workers) {
        const double secs = time_tiled(a, o.block, w);
        if (w == 1 && !base) base = secs;
        rows.push_back(make_record(n, n, o.block, w, secs));
      }
      if (!base) base = time_tiled(a, o.block, 1);
      for (auto& r : rows)
        if (r.m == n && r.speedup == 0.0) r.speedup = *base / r.seconds;
      if (o.baselines) {
        auto t0 = std::chrono::steady_clock::now();
        tiled_qr_sequential(from_col_major(a, o.block));
        const double seq = seconds_since(t0);
        t0 = std::chrono::steady_clock::now();
        blocked_qr(a, o.block);
        const double blk = seconds_since(t0);
        log << std::setprecision(4) << "n=" << n << "  tiled-seq " << seq << " s ("
            << model_flops_blocked(n, n) / seq * 1e-9 << " GFlop/s rel)  blocked-seq " << blk << " s ("
            << model_flops_blocked(n, n) / blk * 1e-9 << " GFlop/s)\n";
      }
    }
  } else {
    // Weak scaling: n = nloc * sqrt(workers) keeps n^2 / workers fixed.
    std::optional<double> base_rate;
    for (std::size_t w : o.workers) {
      const auto n = static_cast<std::size_t>(std::llround(static_cast<double>(o.nloc) * std::sqrt(double(w))));
      const DenseMatrix a = random_matrix(n, n, o.seed);
      BenchRecord r = make_record(n, n, o.block, w, time_tiled(a, o.block, w));
      if (!base_rate) {
        if (w == 1) {
          base_rate = r.relative_gflops;
        } else {
          const auto n1 = o.nloc;
          base_rate = make_record(n1, n1, o.block, 1, time_tiled(random_matrix(n1, n1, o.seed), o.block, 1))
                          .relative_gflops;
        }
      }
      r.speedup = r.relative_gflops / *base_rate;
      rows.push_back(r);
    }
  }
  return rows;
}

inline int cmd_bench(BenchOptions o, std::ostream& out, std::ostream& err) {
  if (o.sizes.empty() || o.workers.empty()) {
    err << "bench: --sizes and --workers must be nonempty\n";
    return kUsage;
  }
  for (auto v : o.sizes)
    if (v == 0) {
      err << "bench: sizes must be positive\n";
      return kUsage;
    }
  for (auto v : o.workers)
    if (v == 0) {
      err << "bench: worker counts must be positive\n";
      return kUsage;
    }
  std::ofstream file;
  if (!o.csv.empty()) {
    file.open(o.csv);
    if (!file) {
      err << "bench: cannot open '" << o.csv << "' for writing\n";
      return kFileError;
    }
  }
  std::ostream& csv = o.csv.empty() ? out : file;
  csv << kBenchHeader << '\n';
  for (const auto& r : run_bench(o, o.csv.empty() ? err : out)) {
    write_bench_row(csv, r);
    csv.flush();
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// trace

struct TraceOptions {
  std::size_t size = 1024;
  std::size_t block = 128;
  std::size_t workers = 0;
  std::string out;
  std::uint64_t seed = 1;
};

inline int cmd_trace(const TraceOptions& o, std::ostream& out, std::ostream& err) {
  std::ofstream file(o.out);
  if (!file) {
    err << "trace: cannot open '" << o.out << "' for writing\n";
    return kFileError;
  }
  const ParallelResult res = tiled_qr_parallel(from_col_major(random_matrix(o.size, o.size, o.seed), o.block),
                                               o.workers, true);
  write_trace_jsonl(file, res.trace);
  if (!file.flush()) {
    err << "trace: write to '" << o.out << "' failed\n";
    return kFileError;
  }
  const TraceSummary s = summarize(res.trace);
  out << "records " << res.trace.records.size() << "\nworkers " << res.trace.workers << "\nmakespan_ns "
      << s.makespan_ns << "\n";
  out << std::fixed << std::setprecision(4);
  for (std::size_t w = 0; w < s.busy_fraction.size(); ++w) out << "busy_fraction[" << w << "] " << s.busy_fraction[w] << "\n";
  out << "idle_fraction " << s.idle_fraction << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// dag

struct DagOptions {
  std::size_t p = 3;
  std::size_t q = 3;
  std::string out;
};

inline int cmd_dag(const DagOptions& o, std::ostream& out, std::ostream& err) {
  const TaskGraph g = build_dag(o.p, o.q);
  if (o.out.empty()) {
    write_dot(out, g);
    return kOk;
  }
  std::ofstream file(o.out);
  if (!file) {
    err << "dag: cannot open '" << o.out << "' for writing\n";
    return kFileError;
  }
  write_dot(file, g);
  return file ? kOk : kFileError;
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tiled QR factorization with graph-driven multicore scheduling", "tileqr"};
  app.require_subcommand(1);
  const std::size_t hw_workers = env_workers();

  FactorOptions fo;
  fo.workers = hw_workers;
  auto* factor = app.add_subcommand("factor", "Factor a matrix and report the backward error");
  auto* in_opt = factor->add_option("--input", fo.input, "Matrix file (.csv or TQR1 binary)");
  auto* size_opt = factor->add_option("--size", fo.size, "Synthetic matrix size, M or MxN");
  in_opt->excludes(size_opt);
  factor->add_option("--seed", fo.seed, "Seed for synthetic matrices")->capture_default_str();
  factor->add_option("--block", fo.block, "Tile size (panel width for --mode blocked)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  factor->add_option("--workers", fo.workers, "Worker threads (default: TILEQR_WORKERS or hardware)")
      ->check(CLI::PositiveNumber);
  factor->add_option("--out", fo.out, "Write R here (.csv or binary)");
  factor->add_option("--emit-q", fo.emit_q, "Also write the explicit Q here");
  factor->add_option("--mode", fo.mode, "Factorization path")
      ->capture_default_str()
      ->check(CLI::IsMember({"tiled", "tiled-seq", "blocked", "unblocked"}));

  VerifyOptions vo;
  auto* verify = app.add_subcommand("verify", "Run the invariant suite");
  verify->add_option("--max-size", vo.max_size, "Largest matrix order checked")->capture_default_str()->check(CLI::PositiveNumber);
  verify->add_option("--seeds", vo.seeds, "Random seeds per property")->capture_default_str();
  verify->add_flag("--inject-fault", vo.inject_fault, "Drop one graph edge (negative test)")->group("");

  BenchOptions bo;
  bo.workers = {1};
  if (hw_workers > 1) bo.workers.push_back(hw_workers);
  auto* bench = app.add_subcommand("bench", "Strong or weak scaling sweep, CSV output");
  bench->add_option("--sizes", bo.sizes, "Matrix orders, comma separated")->delimiter(',')->capture_default_str();
  bench->add_option("--block", bo.block, "Tile size")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--workers", bo.workers, "Worker counts, comma separated")->delimiter(',');
  bench->add_flag("--weak", bo.weak, "Weak scaling: n = nloc * sqrt(workers)");
  bench->add_option("--nloc", bo.nloc, "Local problem size for --weak")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--csv", bo.csv, "Write CSV here instead of stdout");
  bench->add_option("--seed", bo.seed, "Seed for synthetic matrices")->capture_default_str();
  bench->add_flag("--baselines", bo.baselines, "Also time tiled-sequential and blocked-sequential runs");

  TraceOptions to;
  to.workers = hw_workers;
  auto* trace = app.add_subcommand("trace", "Run the parallel factorization and write its execution trace");
  trace->add_option("--size", to.size, "Matrix order")->capture_default_str()->check(CLI::PositiveNumber);
  trace->add_option("--block", to.block, "Tile size")->capture_default_str()->check(CLI::PositiveNumber);
  trace->add_option("--workers", to.workers, "Worker threads")->check(CLI::PositiveNumber);
  trace->add_option("--out", to.out, "Trace output (JSON lines)")->required();
  trace->add_option("--seed", to.seed, "Seed for the synthetic matrix")->capture_default_str();

  DagOptions dop;
  auto* dag = app.add_subcommand("dag", "Export the task graph in Graphviz format");
  dag->add_option("--p", dop.p, "Tile rows")->capture_default_str()->check(CLI::PositiveNumber);
  dag->add_option("--q", dop.q, "Tile columns")->capture_default_str()->check(CLI::PositiveNumber);
  dag->add_option("--out", dop.out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    if (*factor) return cmd_factor(fo, out, err);
    if (*verify) return cmd_verify(vo, out);
    if (*bench) return cmd_bench(bo, out, err);
    if (*trace) return cmd_trace(to, out, err);
    if (*dag) return cmd_dag(dop, out, err);
  } catch (const CLI::ValidationError& e) {
    err << "tileqr: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "tileqr: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"tileqr"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace tileqr::cli
