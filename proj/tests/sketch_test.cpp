#include <cmath>
#include <filesystem>
#include <vector>

#include <gtest/gtest.h>

#include "epsketch/bench.hpp"
#include "epsketch/sketch.hpp"

namespace epsketch {
namespace {

std::size_t max_violations(const PointSet& x, const SketchFile& f, double eps,
                           double* max_err = nullptr) {
  const auto truth = gram_and_distances(x);
  const auto decoded = decode_all_pairs(f);
  std::size_t bad = 0, idx = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j, ++idx) {
      const double e = std::abs(decoded[idx].dist_sq -
                                truth.dist_sq(static_cast<Eigen::Index>(i),
                                              static_cast<Eigen::Index>(j)));
      worst = std::max(worst, e);
      bad += e > eps;
    }
  if (max_err) *max_err = worst;
  return bad;
}

TEST(PlanSketch, RegimeShapes) {
  const SketchPlan small = plan_sketch(classify_regime(1024, 4, 0.2));
  EXPECT_FALSE(small.stochastic);
  EXPECT_EQ(small.working_dim, 4U);
  EXPECT_NEAR(small.delta, 0.2 / 3, 1e-15);

  const SketchPlan mid = plan_sketch(classify_regime(1024, 60, 0.2));
  EXPECT_TRUE(mid.stochastic);
  EXPECT_FALSE(mid.projected);
  // m_eff = ceil(40 ln 1024 / (0.2/3)^2) = 62384
  EXPECT_EQ(mid.m_eff, 62384U);
  EXPECT_NEAR(mid.delta, std::sqrt(60.0 / 62384.0), 1e-15);

  const SketchPlan large = plan_sketch(classify_regime(1024, 1024, 0.2));
  EXPECT_FALSE(large.projected);
  EXPECT_EQ(large.working_dim, 1024U);
  EXPECT_NEAR(large.grid().spacing(), 1 / std::sqrt(62384.0), 1e-15);

  SketchConfig cfg;
  cfg.rounding_constant = 1.0;
  const SketchPlan jl = plan_sketch(classify_regime(256, 256, 0.5, 1.0), cfg);
  EXPECT_TRUE(jl.projected);
  EXPECT_EQ(jl.working_dim, 200U);
  EXPECT_EQ(jl.delta, 1.0);
}

TEST(EncodeSet, IdenticalPointsDecodeToNearZeroDistance) {
  const PointSet x{{0.6, 0.0}, {0.6, 0.0}};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SketchFile f = encode_set(x, 0.2, seed);
    const QueryResult r = decode_pair(f, 0, 1);
    EXPECT_LE(std::abs(r.dist_sq), 0.2);
    EXPECT_NEAR(r.inner, 0.36, 0.1);
  }
}

TEST(EncodeSet, SmallRegimeRoundsWithinGridSpacing) {
  PointSet x = random_ball_points(16, 2, 1);
  x.row(0)[0] = 0.6;
  x.row(0)[1] = 0.8;
  const SketchFile f = encode_set(x, 0.2, 7);
  ASSERT_EQ(f.regime, Regime::kSmall);
  const auto coords = decode_point(f, 0).body.coordinates(f.grid());
  EXPECT_LE(std::abs(coords[0] - 0.6), 0.1);
  EXPECT_LE(std::abs(coords[1] - 0.8), 0.1);
  EXPECT_LE(std::abs(coords[0] - 0.6), f.grid().spacing() / 2 + 1e-15);
}

TEST(EncodeSet, OrthonormalPairInSmallRegime) {
  PointSet x = random_ball_points(16, 2, 2);
  x.row(0)[0] = 1.0;
  x.row(0)[1] = 0.0;
  x.row(1)[0] = 0.0;
  x.row(1)[1] = 1.0;
  const SketchFile f = encode_set(x, 0.2, 3);
  ASSERT_EQ(f.regime, Regime::kSmall);
  const QueryResult r = decode_pair(f, 0, 1);
  EXPECT_GE(r.dist_sq, 1.8);
  EXPECT_LE(r.dist_sq, 2.2);
}

TEST(EncodeSet, LargeRegimeBitsWithinBudget) {
  const PointSet x = random_ball_points(1024, 1024, 4);
  const SketchFile f = encode_set(x, 0.2, 4);
  const RegimeParams p = classify_regime(1024, 1024, 0.2);
  ASSERT_EQ(p.m, 6932U);
  const std::uint64_t budget = sketch_bits_budget(p);
  for (std::size_t i = 0; i < f.n; ++i) {
    EXPECT_LE(f.point_bits(i), budget);
    EXPECT_LE(f.point_bits(i), 4 * p.m + norm_level_bits(0.2));
  }
}

TEST(EncodeSet, RejectsBadInput) {
  EXPECT_THROW(encode_set(PointSet{{0.1, 0.1}}, 0.2, 0), InvalidArgument);
  EXPECT_THROW(encode_set(PointSet{{1.1}, {0.1}}, 0.2, 0), InvalidArgument);
  EXPECT_THROW(encode_set(PointSet{{0.1, 0.1, 0.1}, {0.0, 0.0, 0.0}}, 0.2, 0), InvalidArgument);
  EXPECT_THROW(encode_set(random_ball_points(8, 2, 0), 0.7, 0), InvalidArgument);
}

TEST(EncodeSet, DeterministicAcrossRunsAndThreadCounts) {
  const PointSet x = random_ball_points(100, 50, 5);
  const SketchFile a = encode_set(x, 0.25, 11);
  EXPECT_EQ(a, encode_set(x, 0.25, 11));
  SketchConfig cfg;
  cfg.threads = 4;
  EXPECT_EQ(a, encode_set(x, 0.25, 11, cfg));
  EXPECT_NE(a, encode_set(x, 0.25, 12));
}

TEST(DecodePair, RejectsDiagonalAndOutOfRange) {
  const SketchFile f = encode_set(random_ball_points(8, 2, 6), 0.25, 0);
  EXPECT_THROW(decode_pair(f, 3, 3), InvalidArgument);
  EXPECT_THROW(decode_pair(f, 0, 8), IndexError);
}

TEST(DecodePair, PureAndConsistentWithNorms) {
  const SketchFile f = encode_set(random_ball_points(32, 16, 7), 0.25, 1);
  for (std::size_t i = 0; i < 5; ++i) {
    const QueryResult a = decode_pair(f, i, i + 1);
    EXPECT_EQ(a, decode_pair(f, i, i + 1));
    const double ni = decode_point(f, i).norm.value();
    const double nj = decode_point(f, i + 1).norm.value();
    EXPECT_EQ(a.dist_sq, ni + nj - 2 * a.inner);
  }
}

TEST(DecodePair, RandomSetsMeetEpsInEverySeed) {
  const PointSet x = random_ball_points(256, 256, 8);
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    EXPECT_EQ(max_violations(x, encode_set(x, 0.25, seed), 0.25), 0U) << seed;
}

TEST(EncodeSet, GuaranteeHoldsInEveryRegime) {
  // SMALL (k=4), MID (k=6, 40), LARGE (k=89): no violating pair in any seed.
  for (std::uint64_t k : {4ULL, 6ULL, 40ULL, 89ULL}) {
    std::size_t failing_runs = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const PointSet x = random_ball_points(256, k, 100 + seed);
      const SketchFile f = encode_set(x, 0.25, seed);
      EXPECT_LE(f.payload_bit_length, f.n * sketch_bits_budget(classify_regime(256, k, 0.25)));
      failing_runs += max_violations(x, f, 0.25) > 0;
    }
    EXPECT_EQ(failing_runs, 0U) << "k=" << k;
  }
}

TEST(EncodeSet, ProjectedPathUndoesShrink) {
  SketchConfig cfg;
  cfg.rounding_constant = 1.0;
  const double eps = 0.5;
  const PointSet x = random_ball_points(256, 256, 9);
  const SketchFile f = encode_set(x, eps, 21, cfg);
  ASSERT_TRUE(f.projected());
  ASSERT_EQ(f.working_dim, 200U);

  // Rebuild the projected, unshrunk inner products independently.
  const ProjectionSpec spec{256, 200, detail::splitmix64(21 ^ stream_tag::kProjection)};
  const PointSet y = project(x, spec);
  double worst = 0.0;
  for (std::size_t i = 0; i < 20; ++i) {
    const double expected = dot(y[i], y[i + 1]);
    worst = std::max(worst, std::abs(decode_pair(f, i, i + 1).inner - expected));
  }
  // Only rounding noise remains: spacing 1/sqrt(200), two summands.
  EXPECT_LT(worst, 0.1);
}

TEST(SketchBitsBudget, SmallRegimeExample) {
  // body: min_b 2(2+b) + floor(32/2^b) = 14 at b = 3; norm field: 5 bits.
  EXPECT_EQ(sketch_bits_budget(classify_regime(1024, 2, 0.2)), 19U);
}

TEST(SketchBitsBudget, MonotoneInKWithinMid) {
  for (std::uint64_t n : {256ULL, 1024ULL, 100000ULL})
    for (double eps : {0.1, 0.2, 0.25}) {
      std::uint64_t prev = 0;
      const double log_n = std::log(static_cast<double>(n));
      for (auto k = static_cast<std::uint64_t>(std::ceil(log_n));
           static_cast<double>(k) < log_n / (eps * eps) && k <= n; ++k) {
        const RegimeParams p = classify_regime(n, k, eps);
        ASSERT_EQ(p.regime, Regime::kMid);
        const std::uint64_t b = sketch_bits_budget(p);
        EXPECT_GE(b, prev);
        prev = b;
      }
    }
}

TEST(SketchBitsBudget, LargeDominatesMidAtBoundaryWithinFactorFour) {
  for (std::uint64_t n : {64ULL, 256ULL, 1024ULL, 4096ULL, 100000ULL})
    for (double eps : {0.1, 0.15, 0.2, 0.25, 0.5}) {
      const double log_n = std::log(static_cast<double>(n));
      const auto kb = static_cast<std::uint64_t>(std::ceil(log_n / (eps * eps)));
      if (kb > n || kb < 2) continue;
      const auto large = static_cast<double>(sketch_bits_budget(classify_regime(n, kb, eps)));
      const auto mid = static_cast<double>(sketch_bits_budget(classify_regime(n, kb - 1, eps)));
      EXPECT_GE(large, mid);
      EXPECT_LE(large, 4 * mid);
    }
}

TEST(SketchFile, SerializeParseRoundTrip) {
  const PointSet x = random_ball_points(40, 20, 10);
  const SketchFile f = encode_set(x, 0.2, 5);
  const auto bytes = f.serialize();
  const SketchFile g = SketchFile::parse(bytes);
  EXPECT_EQ(f, g);
  EXPECT_EQ(g.serialize(), bytes);

  const auto path = std::filesystem::temp_directory_path() / "epsketch_roundtrip.epsk";
  f.save(path);
  const SketchFile h = SketchFile::load(path);
  std::filesystem::remove(path);
  for (std::size_t i = 0; i + 1 < x.size(); ++i)
    EXPECT_EQ(decode_pair(f, i, i + 1), decode_pair(h, i, i + 1));
}

TEST(SketchFile, HeaderLayoutIsLittleEndian) {
  const SketchFile f = encode_set(random_ball_points(16, 4, 11), 0.2, 0x0102030405060708ULL);
  const auto b = f.serialize();
  ASSERT_GE(b.size(), 46U + 16 * 8);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "EPSK");
  EXPECT_EQ(b[4], 0x01);
  EXPECT_EQ(b[5], 16);  // u32 n
  EXPECT_EQ(b[6], 0);
  EXPECT_EQ(b[9], 4);   // u32 k_original
  EXPECT_EQ(b[13], 4);  // u32 working_dim
  std::uint64_t eps_bits = 0;
  for (int i = 0; i < 8; ++i) eps_bits |= std::uint64_t{b[17 + i]} << (8 * i);
  EXPECT_EQ(std::bit_cast<double>(eps_bits), 0.2);
  EXPECT_EQ(b[25], static_cast<std::uint8_t>(Regime::kMid));
  EXPECT_EQ(b[34], 0x08);  // seed low byte
  EXPECT_EQ(b[41], 0x01);  // seed high byte
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t{b[42 + i]} << (8 * i);
  EXPECT_EQ(bits, f.payload_bit_length);
  EXPECT_EQ(b.size(), 50 + 16 * 8 + (bits + 7) / 8);
}

TEST(SketchFile, ParseRejectsCorruption) {
  const SketchFile f = encode_set(random_ball_points(16, 4, 12), 0.2, 0);
  const auto good = f.serialize();

  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(SketchFile::parse(bad_magic), DecodeError);

  auto truncated = good;
  truncated.pop_back();
  EXPECT_THROW(SketchFile::parse(truncated), DecodeError);

  auto bad_offsets = good;
  bad_offsets[50 + 8] = 0;  // offsets[1] low byte
  bad_offsets[50 + 9] = 0;
  EXPECT_THROW(SketchFile::parse(bad_offsets), DecodeError);

  SketchFile padded = f;
  if (padded.payload_bit_length % 8 != 0) {
    padded.payload.back() |= 1;
    EXPECT_THROW(SketchFile::parse(padded.serialize()), DecodeError);
  }

  auto bad_regime = good;
  bad_regime[25] = 7;
  EXPECT_THROW(SketchFile::parse(bad_regime), DecodeError);
}

TEST(SketchFile, CorruptPayloadSurfacesAsDecodeError) {
  SketchFile f = encode_set(random_ball_points(16, 4, 13), 0.2, 0);
  // Shorten point 0 by moving offset 1 back one bit.
  f.offsets[1] -= 1;
  EXPECT_THROW(decode_pair(f, 0, 1), DecodeError);
}

}  // namespace
}  // namespace epsketch
