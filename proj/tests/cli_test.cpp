#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "epsketch/cli.hpp"

namespace epsketch {
namespace {

namespace fs = std::filesystem;

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

RunResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "epsketch");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string field(const std::string& line, const std::string& key) {
  const auto pos = line.find(key + "=");
  if (pos == std::string::npos) return {};
  const auto start = pos + key.size() + 1;
  const auto end = line.find_first_of(" \n", start);
  return line.substr(start, end - start);
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("epsketch_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write_csv(const std::string& name, const PointSet& p) const {
    write_points(path(name), p, PointsFormat::kCsv);
    return path(name);
  }

  fs::path dir_;
};

TEST_F(Cli, EmptyPointsFileIsAnError) {
  std::ofstream(path("empty.csv")).close();
  const RunResult r = run_cli({"encode", path("empty.csv"), "--eps", "0.2", "--out", path("s")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("need >= 2 points"), std::string::npos) << r.err;
}

TEST_F(Cli, EncodeReportsMidRegimeAndQueriesRoundTrip) {
  const PointSet x = random_ball_points(16, 4, 7);
  const std::string pts = write_csv("x.csv", x);
  const RunResult enc = run_cli({"encode", pts, "--eps", "0.2", "--seed", "3", "--out", path("x.sk")});
  ASSERT_EQ(enc.code, 0) << enc.err;
  EXPECT_EQ(field(enc.out, "regime"), "MID");
  EXPECT_EQ(field(enc.out, "n"), "16");
  EXPECT_EQ(field(enc.out, "k"), "4");

  const SketchFile f = SketchFile::load(path("x.sk"));
  EXPECT_EQ(f, encode_set(read_points(pts), 0.2, 3));
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 16; ++j) {
      if (i == j) continue;
      const RunResult q = run_cli({"query", path("x.sk"), std::to_string(i), std::to_string(j)});
      ASSERT_EQ(q.code, 0) << q.err;
      const QueryResult lib = decode_pair(f, i, j);
      char expect[128];
      std::snprintf(expect, sizeof expect, "inner=%.9g dist_sq=%.9g\n", lib.inner, lib.dist_sq);
      EXPECT_EQ(q.out, expect);
      EXPECT_LE(std::abs(lib.inner - dot(x[i], x[j])), 0.2 + 1e-8);
    }
}

TEST_F(Cli, QueryRejectsDiagonalAndOutOfRange) {
  const std::string pts = write_csv("x.csv", random_ball_points(8, 3, 1));
  ASSERT_EQ(run_cli({"encode", pts, "--eps", "0.3", "--out", path("x.sk")}).code, 0);
  const RunResult diag = run_cli({"query", path("x.sk"), "2", "2"});
  EXPECT_EQ(diag.code, 2);
  EXPECT_NE(diag.err.find("diagonal query not supported"), std::string::npos);
  const RunResult range = run_cli({"query", path("x.sk"), "0", "8"});
  EXPECT_EQ(range.code, 2);
  EXPECT_NE(range.err.find("out of range"), std::string::npos);
}

TEST_F(Cli, EncodeRejectsPointsOutsideTheBall) {
  std::ofstream(path("big.csv")) << "1,1\n0,0\n";
  EXPECT_EQ(run_cli({"encode", path("big.csv"), "--eps", "0.2", "--out", path("s")}).code, 1);
}

TEST_F(Cli, BinaryPointsRoundTrip) {
  ASSERT_EQ(run_cli({"generate", "--n", "20", "--k", "5", "--seed", "2", "--format", "bin",
                     "--out", path("g.bin")})
                .code,
            0);
  const PointSet p = read_points(path("g.bin"));
  EXPECT_EQ(p, random_ball_points(20, 5, 2));
  const RunResult enc = run_cli({"encode", path("g.bin"), "--eps", "0.25", "--out", path("g.sk")});
  ASSERT_EQ(enc.code, 0) << enc.err;
  EXPECT_EQ(SketchFile::load(path("g.sk")), encode_set(p, 0.25, 0));
}

TEST_F(Cli, BenchSingleCell) {
  const RunResult r = run_cli({"bench", "--n", "64", "--k", "64", "--eps", "0.25", "--seeds",
                               "0,1,2", "--no-timing"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  const auto rows = parse_bench_csv(in);
  ASSERT_EQ(rows.size(), 3U);
  for (const auto& row : rows) {
    EXPECT_EQ(row.violating_pairs, 0U);
    EXPECT_EQ(row.status, "ok");
    EXPECT_LE(row.max_abs_error, 0.25);
  }
  std::ostringstream again;
  write_bench_csv(again, rows);
  EXPECT_EQ(again.str(), r.out);
  EXPECT_EQ(run_cli({"bench", "--n", "64", "--k", "64", "--eps", "0.25", "--seeds", "0,1,2",
                     "--no-timing"})
                .out,
            r.out);
}

TEST_F(Cli, BenchBitsShrinkAsEpsGrows) {
  std::ofstream(path("sweep.json"))
      << R"({"n": [256], "k": [256], "eps": [0.125, 0.25, 0.5], "seeds": [0]})";
  const RunResult r =
      run_cli({"bench", "--sweep-file", path("sweep.json"), "--no-timing", "--out", path("b.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(path("b.csv"));
  const auto rows = parse_bench_csv(in);
  ASSERT_EQ(rows.size(), 3U);
  for (std::size_t i = 1; i < rows.size(); ++i)
    EXPECT_LE(rows[i].bits_per_point, rows[i - 1].bits_per_point);
}

TEST_F(Cli, BenchNeedsAGrid) {
  EXPECT_EQ(run_cli({"bench", "--n", "64"}).code, 2);
}

TEST_F(Cli, BipartiteWritesOutputs) {
  const PointSet zeros(8, std::vector<double>(8 * 8, 0.0));
  const std::string a = write_csv("a.csv", zeros);
  const RunResult r = run_cli({"bipartite", a, a, "--eps", "0.3", "--out", path("z")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(field(r.out, "achieved_eps"), "0");
  EXPECT_EQ(field(r.out, "n"), "8");
  EXPECT_EQ(read_points(path("z.x.csv")).size(), 8U);
  EXPECT_EQ(read_points(path("z.y.csv")).size(), 8U);

  const PointSet rnd = random_ball_points(64, 64, 4);
  const std::string b = write_csv("r.csv", rnd);
  const RunResult r2 = run_cli({"bipartite", b, b, "--eps", "0.5", "--C", "1", "--out", path("r")});
  ASSERT_EQ(r2.code, 0) << r2.err;
  const auto t = static_cast<std::size_t>(std::floor(std::log(2 + 0.25 * 64) / 0.25));
  EXPECT_EQ(field(r2.out, "t"), std::to_string(t));
  EXPECT_EQ(read_points(path("r.x.csv")).dim(), t);
  EXPECT_LE(std::stod(field(r2.out, "achieved_eps")), 0.5);
}

TEST_F(Cli, LowerBoundReportsImpliedBits) {
  const RunResult r = run_cli({"lowerbound", "--k", "8", "--delta", "0.5", "--eps", "0.05", "--n",
                               "512", "--net-size", "64"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(field(r.out, "net_size"), "64");
  EXPECT_EQ(field(r.out, "r_size"), "256");
  EXPECT_EQ(field(r.out, "implied_bits"), "6");

  // A negative outcome is still a successful run.
  const RunResult neg = run_cli({"lowerbound", "--k", "8", "--delta", "0.5", "--eps", "5", "--n",
                                 "16", "--net-size", "8"});
  EXPECT_EQ(neg.code, 0);
  EXPECT_EQ(field(neg.out, "distinguished"), "false");
}

TEST_F(Cli, LowerBoundPatienceExhausted) {
  const RunResult r = run_cli({"lowerbound", "--k", "1", "--delta", "0.5", "--eps", "0.1", "--n",
                               "16", "--net-size", "20"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("achieved size"), std::string::npos);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"encode"}).code, 2);
  EXPECT_EQ(run_cli({"nosuch"}).code, 2);
  EXPECT_EQ(run_cli({"query", path("missing"), "x", "1"}).code, 2);
  EXPECT_EQ(run_cli({"encode", "p", "--eps", "0.1", "--out", "o", "--format", "xml"}).code, 2);
  EXPECT_EQ(run_cli({"--help"}).code, 0);
}

}  // namespace
}  // namespace epsketch
