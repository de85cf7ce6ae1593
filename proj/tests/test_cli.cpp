#include <gtest/gtest.h>

#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "commands.hpp"

using namespace tileqr;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::map<std::string, std::string> key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string key, value;
  while (in >> key >> value) kv[key] = value;
  return kv;
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("tileqr_cli_" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, FactorSyntheticTiled) {
  const Result r = run_cli({"factor", "--size", "64", "--seed", "1", "--block", "16", "--mode", "tiled", "--workers", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto kv = key_values(r.out);
  EXPECT_LE(std::stod(kv.at("backward_error")), 1e-13);
  EXPECT_EQ(kv.at("size"), "64x64");
  EXPECT_EQ(kv.at("workers"), "3");
}

TEST_F(CliTest, FactorModesAgreeOnR) {
  ASSERT_EQ(run_cli({"factor", "--size", "8", "--block", "8", "--mode", "tiled", "--out", path("rt.bin")}).code, 0);
  ASSERT_EQ(run_cli({"factor", "--size", "8", "--block", "8", "--mode", "unblocked", "--out", path("ru.csv")}).code, 0);
  const DenseMatrix rt = normalize_r_signs(load_matrix(path("rt.bin")));
  const DenseMatrix ru = normalize_r_signs(load_matrix(path("ru.csv")));
  EXPECT_LE(max_abs(subtract(rt, ru)), 1e-12);
}

TEST_F(CliTest, FactorOutputRoundTripsBitwise) {
  const DenseMatrix a = random_matrix(20, 13, 4);
  save_matrix(path("a.bin"), a);
  for (const char* mode : {"tiled", "tiled-seq", "blocked", "unblocked"}) {
    for (const char* ext : {".bin", ".csv"}) {
      const std::string out = path(std::string("r_") + mode + ext);
      const Result r = run_cli({"factor", "--input", path("a.bin"), "--block", "5", "--mode", mode, "--out", out});
      ASSERT_EQ(r.code, 0) << r.err;
      EXPECT_LE(std::stod(key_values(r.out).at("backward_error")), qr_tolerance(20, 13));
      const DenseMatrix expect = std::string(mode) == "unblocked" ? house_qr_unblocked(a).r()
                                 : std::string(mode) == "blocked" ? blocked_qr(a, 5).r()
                                                                  : tiled_qr_sequential(from_col_major(a, 5)).r();
      EXPECT_EQ(load_matrix(out), expect) << mode << ext;
    }
  }
}

TEST_F(CliTest, FactorEmitsQ) {
  const Result r = run_cli({"factor", "--size", "30x20", "--block", "7", "--out", path("r.bin"), "--emit-q", path("q.bin")});
  ASSERT_EQ(r.code, 0) << r.err;
  const DenseMatrix q = load_matrix(path("q.bin"));
  const DenseMatrix rr = load_matrix(path("r.bin"));
  ASSERT_EQ(q.rows(), 30u);
  EXPECT_LE(inf_norm(subtract(multiply(transpose(q), q), DenseMatrix::identity(30))), qr_tolerance(30, 30));
  EXPECT_LE(max_abs(subtract(multiply(q, rr), random_matrix(30, 20, 1))), 1e-13);
}

TEST_F(CliTest, FactorErrors) {
  EXPECT_EQ(run_cli({"factor", "--input", path("missing.bin")}).code, 2);
  {
    std::ofstream bad(path("bad.bin"), std::ios::binary);
    bad << "NOPE and some more bytes";
  }
  const Result hdr = run_cli({"factor", "--input", path("bad.bin")});
  EXPECT_EQ(hdr.code, 2);
  EXPECT_NE(hdr.err.find("magic"), std::string::npos);
  EXPECT_EQ(run_cli({"factor"}).code, 1);
  EXPECT_EQ(run_cli({"factor", "--size", "8", "--input", path("a.bin")}).code, 1);
  EXPECT_EQ(run_cli({"factor", "--size", "8", "--mode", "magic"}).code, 1);
  EXPECT_EQ(run_cli({"factor", "--size", "8x"}).code, 1);
  EXPECT_EQ(run_cli({"factor", "--size", "8", "--block", "0"}).code, 1);
  EXPECT_EQ(run_cli({"factor", "--size", "8", "--out", path("no/such/dir/r.bin")}).code, 2);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 1);
  EXPECT_EQ(run_cli({}).code, 1);
  EXPECT_EQ(run_cli({"--help"}).code, 0);
}

TEST_F(CliTest, WorkersFromEnvironment) {
  ::setenv("TILEQR_WORKERS", "3", 1);
  const Result r = run_cli({"factor", "--size", "16", "--block", "4"});
  ::unsetenv("TILEQR_WORKERS");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(key_values(r.out).at("workers"), "3");
}

TEST_F(CliTest, VerifySmallIsQuickAndPasses) {
  const auto t0 = std::chrono::steady_clock::now();
  const Result r = run_cli({"verify", "--max-size", "4"});
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 5.0);
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
  EXPECT_NE(r.out.find("PASS dag-serialization"), std::string::npos);
}

TEST_F(CliTest, VerifyDefaultPasses) {
  const Result r = run_cli({"verify", "--seeds", "2"});
  EXPECT_EQ(r.code, 0) << r.out;
}

TEST_F(CliTest, VerifyInjectedFaultFails) {
  const Result r = run_cli({"verify", "--max-size", "4", "--inject-fault"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.out.find("FAIL dag-serialization"), std::string::npos);
  EXPECT_NE(r.out.find("T(0,1)"), std::string::npos);
}

TEST_F(CliTest, BenchCsvSchemaAndModelRatio) {
  const Result r = run_cli({"bench", "--sizes", "40,64", "--block", "16", "--workers", "1,2", "--csv", path("b.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = lines_of(path("b.csv"));
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines[0], "m,n,b,workers,seconds,raw_gflops,relative_gflops,speedup");
  for (std::size_t k = 1; k < lines.size(); ++k) {
    std::vector<std::string> f;
    std::stringstream ss(lines[k]);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    ASSERT_EQ(f.size(), 8u);
    const std::size_t n = std::stoul(f[0]), b = std::stoul(f[2]);
    const std::size_t p = (n + b - 1) / b;
    const double model_ratio = model_flops_tiled(p, p, b) / model_flops_blocked(n, n);
    EXPECT_NEAR(std::stod(f[5]) / std::stod(f[6]), model_ratio, 1e-7);
    if (f[3] == "1") {
      EXPECT_DOUBLE_EQ(std::stod(f[7]), 1.0);
    }
  }
}

TEST_F(CliTest, BenchDefaultsAndRepeatedWorkers) {
  const Result r = run_cli({"bench", "--sizes", "300", "--workers", "1,1"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string header, row1, row2;
  std::getline(in, header);
  std::getline(in, row1);
  std::getline(in, row2);
  EXPECT_EQ(header, cli::kBenchHeader);
  EXPECT_EQ(row1.substr(0, 12), "300,300,200,");  // block defaults to 200
  const double speedup = std::stod(row2.substr(row2.rfind(',') + 1));
  EXPECT_GT(speedup, 0.5);
  EXPECT_LT(speedup, 2.0);
}

TEST_F(CliTest, BenchWeakScaling) {
  const Result r = run_cli({"bench", "--weak", "--nloc", "40", "--block", "10", "--workers", "1,4"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("\n40,40,10,1,"), std::string::npos);
  EXPECT_NE(r.out.find("\n80,80,10,4,"), std::string::npos);
}

TEST_F(CliTest, BenchRejectsBadLists) {
  EXPECT_EQ(run_cli({"bench", "--sizes", "10,x"}).code, 1);
  EXPECT_EQ(run_cli({"bench", "--sizes", "10", "--workers", "0"}).code, 1);
  EXPECT_EQ(run_cli({"bench", "--sizes", "10", "--csv", path("nope/b.csv")}).code, 2);
}

TEST_F(CliTest, TraceJsonLines) {
  const Result r = run_cli({"trace", "--size", "50", "--block", "10", "--workers", "3", "--out", path("t.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = lines_of(path("t.jsonl"));
  EXPECT_EQ(lines.size(), build_dag(5, 5).size());
  std::map<int, std::int64_t> last_end;
  for (const auto& line : lines) {
    const auto j = nlohmann::json::parse(line);
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    std::sort(keys.begin(), keys.end());
    EXPECT_EQ(keys, (std::vector<std::string>{"end_ns", "i", "j", "k", "kind", "start_ns", "worker"}));
    const int w = j["worker"];
    EXPECT_GE(j["start_ns"].get<std::int64_t>(), last_end.count(w) ? last_end[w] : 0);
    last_end[w] = j["end_ns"];
  }
  const auto kv = key_values(r.out);
  EXPECT_EQ(kv.at("records"), std::to_string(lines.size()));
  EXPECT_TRUE(kv.count("makespan_ns"));
  EXPECT_TRUE(kv.count("idle_fraction"));
}

TEST_F(CliTest, TraceSingleWorkerHasNoIdleTime) {
  const Result r = run_cli({"trace", "--size", "40", "--block", "8", "--workers", "1", "--out", path("t1.jsonl")});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(std::stod(key_values(r.out).at("idle_fraction")), 0.0);
}

TEST_F(CliTest, TraceUnwritablePath) {
  EXPECT_EQ(run_cli({"trace", "--size", "8", "--block", "4", "--out", path("missing/t.jsonl")}).code, 2);
  EXPECT_EQ(run_cli({"trace", "--size", "8"}).code, 1);
}

TEST_F(CliTest, DagExport) {
  const Result r = run_cli({"dag", "--p", "2", "--q", "2"});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("\"S(0,1,1)\" -> \"G(1)\";"), std::string::npos);
  EXPECT_EQ(run_cli({"dag", "--p", "3", "--q", "3", "--out", path("g.dot")}).code, 0);
  EXPECT_EQ(lines_of(path("g.dot")).front(), "digraph tiled_qr {");
}
