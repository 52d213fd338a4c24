#include "common.hpp"

#include "usc/philox.hpp"

#include <cmath>
#include <filesystem>

using namespace usc;
using namespace usc::test;

namespace {

struct Entry {
  std::int32_t col;
  std::int64_t num, den;
};

WalkKernel make_kernel(const std::vector<std::vector<Entry>>& rows, std::vector<std::int64_t> pi) {
  WalkKernel K;
  for (const auto& r : rows) {
    for (const auto& e : r) {
      K.col.push_back(e.col);
      K.num.push_back(e.num);
      K.den.push_back(e.den);
      K.prob.push_back(static_cast<double>(e.num) / static_cast<double>(e.den));
    }
    K.offsets.push_back(static_cast<std::int64_t>(K.col.size()));
  }
  K.pi = std::move(pi);
  return K;
}

std::int32_t corner_cell(const CellGraph& cg) {
  CornerIndex idx(cg.lat);
  return static_cast<std::int32_t>(idx.find({0, 0, 0}));
}

}  // namespace

TEST(Philox, KnownAnswerVectors) {
  Philox4x32 zero(0);
  EXPECT_EQ(zero({0, 0, 0, 0}), (Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  Philox4x32 ones(0xffffffffffffffffull);
  EXPECT_EQ(ones({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}),
            (Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  Philox4x32 pi(0x299f31d0a4093822ull);
  EXPECT_EQ(pi({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}),
            (Philox4x32::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Philox, UniformRangeAndMean) {
  Philox4x32 rng(42);
  double sum = 0;
  for (std::uint64_t i = 0; i < 20000; ++i) {
    double u = rng.uniform(7, i);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 20000, 0.5, 0.01);
}

TEST(Kernel, CornerRowAtLevelOne) {
  auto cg = store().get(1);
  auto P = build_kernel(*cg);
  auto c = corner_cell(*cg);
  EXPECT_DOUBLE_EQ(P.entry(c, c), 0.25);
  for (auto v : cg->g.neighbors(c)) EXPECT_DOUBLE_EQ(P.entry(c, v), 0.25);
  EXPECT_EQ(P.pi[c], 4);
}

TEST(Kernel, ExactStochasticAndReversible) {
  for (int n = 1; n <= 2; ++n) {
    auto chk = verify_kernel(build_kernel(*store().get(n)));
    EXPECT_TRUE(chk.exact_row_sums);
    EXPECT_TRUE(chk.exact_detailed_balance);
    EXPECT_LE(chk.row_sum_residual, 1e-14);
    EXPECT_LE(chk.detailed_balance_residual, 1e-14);
  }
  auto g1 = store().get(1);
  auto wall = build_wall(carpet(), 1, *g1);
  auto chk = verify_kernel(build_wall_kernel(wall, *g1));
  EXPECT_TRUE(chk.exact_row_sums);
  EXPECT_TRUE(chk.exact_detailed_balance);
}

TEST(Kernel, LazyKeepsPositiveDiagonal) {
  auto P = build_kernel(*store().get(1));
  auto Q = lazy_kernel(P, 1, 2);
  for (std::int32_t v = 0; v < Q.size(); ++v) EXPECT_GT(Q.entry(v, v), 0.0);
  EXPECT_TRUE(verify_kernel(Q).exact_row_sums);
}

TEST(WallKernel, MZeroEqualsCellKernel) {
  auto gn = store().get(1);
  auto W = build_wall_kernel(build_wall(carpet(), 0, *gn), *gn);
  auto C = build_kernel(*gn);
  EXPECT_EQ(W.col, C.col);
  EXPECT_EQ(W.num, C.num);
  EXPECT_EQ(W.den, C.den);
}

TEST(WallKernel, ConductancesInTheAllowedSet) {
  auto gn = store().get(1);
  auto wall = build_wall(carpet(), 1, *gn);
  auto W = build_wall_kernel(wall, *gn);
  for (std::int32_t u = 0; u < W.size(); ++u)
    for (auto i = W.offsets[u]; i < W.offsets[u + 1]; ++i) {
      if (W.col[i] == u) continue;
      Rational c = Rational(W.pi[u]) * Rational(W.num[i], W.den[i]);
      EXPECT_TRUE(c == 1 || c == Rational(1, 2) || c == Rational(1, 3)) << format_rational(c);
    }
}

TEST(Coupling, ExactAndPerturbationDetected) {
  auto gn = store().get(1);
  auto wall = build_wall(carpet(), 1, *gn);
  auto W = build_wall_kernel(wall, *gn);
  auto C = build_kernel(*gn);
  auto ok = coupling_identity_check(W, C, wall.fold);
  EXPECT_TRUE(ok.exact);
  EXPECT_EQ(ok.exact_residual, 0.0);
  EXPECT_LT(ok.float_residual, 1e-12);

  auto bad = W;
  const auto i = bad.offsets[17];
  bad.num[i] += 1;
  bad.prob[i] = static_cast<double>(bad.num[i]) / static_cast<double>(bad.den[i]);
  auto r = coupling_identity_check(bad, C, wall.fold);
  EXPECT_FALSE(r.exact);
  EXPECT_GT(r.exact_residual, 0.0);
}

TEST(WalkForm, WallBandAndCellIdentity) {
  auto gn = store().get(1);
  auto wall = build_wall(carpet(), 1, *gn);
  auto band = lemma52_band(wall, build_wall_kernel(wall, *gn), 100, 3);
  EXPECT_EQ(band.violations, 0);
  EXPECT_GE(band.min_ratio, 1.0 / 3.0);
  EXPECT_LE(band.max_ratio, 1.0);
  for (int n = 1; n <= 2; ++n) {
    auto cg = store().get(n);
    auto id = lemma54_identity(*cg, build_kernel(*cg), 25, 5);
    EXPECT_EQ(id.failures, 0);
  }
  auto P = build_kernel(*gn);
  EXPECT_EQ(walk_form_exact(P, std::vector<std::int64_t>(gn->size(), 7)), Rational(0));
}

TEST(Hitting, TwoStateChainIsGeometric) {
  // P(a,b) = 1/4: E_a[τ_b] = 4.
  auto K = make_kernel({{{0, 3, 4}, {1, 1, 4}}, {{0, 1, 4}, {1, 3, 4}}}, {1, 1});
  auto h = mean_hitting_exact(K, {1});
  EXPECT_NEAR(h.h[0], 4.0, 1e-10);
  EXPECT_EQ(h.h[1], 0.0);
  auto q = mean_hitting_rational(K, {1});
  EXPECT_EQ(q[0], Rational(4));
}

TEST(Hitting, RationalOracleMatchesFloatSolve) {
  auto cg = store().get(1);
  auto P = build_kernel(*cg);
  auto B = cg->face_set(0, 0);
  auto h = mean_hitting_exact(P, B);
  auto q = mean_hitting_rational(P, B);
  for (std::int32_t v = 0; v < cg->size(); ++v) EXPECT_NEAR(h.h[v], to_double(q[v]), 1e-9 * (1 + h.h[v]));
  for (auto b : B) EXPECT_EQ(h.h[b], 0.0);
}

TEST(Hitting, InvariantUnderFaceStabilizer) {
  auto cg = store().get(2);
  auto P = build_kernel(*cg);
  auto h = mean_hitting_exact(P, cg->face_set(0, 0));
  for (const auto& g : {Isometry::reflect(1), Isometry::reflect(2), Isometry::swap(1, 2)}) {
    auto perm = level_permutation(carpet(), 2, g);
    for (std::int32_t v = 0; v < cg->size(); ++v) EXPECT_NEAR(h.h[perm[v]], h.h[v], 1e-8 * (1 + h.h[v]));
  }
}

TEST(Hitting, SuperharmonicOffTarget) {
  auto cg = store().get(2);
  auto P = build_kernel(*cg);
  auto B = cg->face_set(0, 0);
  auto h = mean_hitting_exact(P, B);
  std::vector<std::uint8_t> inB(cg->size(), 0);
  for (auto b : B) inB[b] = 1;
  for (std::int32_t v = 0; v < cg->size(); ++v) {
    if (inB[v]) continue;
    double Ph = 0;
    for (auto i = P.offsets[v]; i < P.offsets[v + 1]; ++i) Ph += P.prob[i] * h.h[P.col[i]];
    EXPECT_NEAR(h.h[v] - Ph, 1.0, 1e-7 * (1 + h.h[v]));
  }
}

TEST(DirichletNorm, KillingEdgeCases) {
  auto cg = store().get(1);
  auto P = build_kernel(*cg);
  std::vector<std::int32_t> all(cg->size());
  for (std::int32_t v = 0; v < cg->size(); ++v) all[v] = v;
  EXPECT_EQ(dirichlet_norm(P, all, 1.0).s, 0.0);
  auto d = dirichlet_norm(P, cg->face_set(0, 0), lambda_n(cg->g).value);
  EXPECT_LT(d.s, 1.0);
  EXPECT_GT(d.c2, 0.0);
}

TEST(Oscillation, StartOnTargetAndTwoCycle) {
  auto cg = store().get(1);
  auto P = build_kernel(*cg);
  auto A = cg->face_set(0, 0), B = cg->face_set(0, 1);
  auto tr = oscillation_run(P, A, 50, 100000, A, B, 2, 1);
  for (const auto& t : tr.times) EXPECT_EQ(t[0], 0);

  auto K = make_kernel({{{1, 1, 1}}, {{0, 1, 1}}}, {1, 1});
  auto two = oscillation_run(K, {0}, 5, 10, {0}, {1}, 3, 1);
  for (const auto& t : two.times) {
    EXPECT_EQ(t[0], 0);
    EXPECT_EQ(t[1] - t[0], 1);
    EXPECT_EQ(t[2] - t[1], 1);
  }
}

TEST(Simulation, WorkerCountIndependentAndRoundTrip) {
  auto cg = store().get(1);
  auto P = build_kernel(*cg);
  auto starts = cg->face_set(0, 1);
  auto a = simulate(P, starts, 64, 200, 99, 1);
  for (int w : {4, 8}) EXPECT_EQ(simulate(P, starts, 64, 200, 99, w).paths, a.paths);
  auto path = (std::filesystem::temp_directory_path() / "usc_batch_test.bin").string();
  save_batch(a, path);
  auto b = load_batch(path);
  EXPECT_EQ(b.paths, a.paths);
  EXPECT_EQ(b.seed, a.seed);
  EXPECT_EQ(b.kernel_hash, P.hash());
  std::filesystem::remove(path);

  auto A = cg->face_set(0, 0), B = cg->face_set(0, 1);
  auto big = simulate(P, starts, 200, 5000, 5, 2);
  auto s1 = oscillation_stats(big, A, B, 2);
  auto s2 = oscillation_run(P, starts, 200, 5000, A, B, 2, 5, 3);
  EXPECT_EQ(s1.times, s2.times);
  EXPECT_EQ(s1.mean_T1, s2.mean_T1);
}

TEST(Simulation, MonteCarloMatchesExactAtLevelOne) {
  auto cg = store().get(1);
  auto P = build_kernel(*cg);
  double lam = lambda_n(cg->g).value;
  auto h = mean_hitting_exact(P, cg->face_set(0, 0));
  hitting_mc(h, P, cg->face_set(0, 1), 4000, walk_horizon(P, lam, 50), 17, 4);
  EXPECT_EQ(h.censored, 0);
  EXPECT_LE(std::abs(h.mc_mean - h.exact_mean), 3 * h.mc_stderr);
}

TEST(Vartheta, Examples) {
  EXPECT_EQ(vartheta(0.0, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(vartheta(0.125, 0.5), 0.75);
  for (double t = 0; t <= 1.0; t += 0.05) EXPECT_LE(vartheta(t, 0.3), 1.0);
}

TEST(Prop62, EdgeConstantAtLeastOneOverTwentySeven) {
  for (int n = 1; n <= 2; ++n) {
    auto cg = store().get(n);
    auto P = build_kernel(*cg);
    double lam = lambda_n(cg->g).value;
    auto t71 = theorem71_ratios(store(), {n}).front();
    auto r = prop62_check(*cg, P, lam, t71.T, 500, 50, 3, 2);
    EXPECT_GE(r.c1_actual, 1.0 / 27.0);
    EXPECT_TRUE(r.pass);
  }
}

TEST(Lemma69, ConstantAndEstimate) {
  auto gn = store().get(1);
  auto wall = build_wall(carpet(), 1, *gn);
  auto W = build_wall_kernel(wall, *gn);
  double lam = lambda_n(gn->g).value;
  auto r = lemma69_estimate(wall, W, *gn, 2000, walk_horizon(W, lam, 50), 7, 4);
  EXPECT_EQ(r.J, 4);
  EXPECT_NEAR(r.bound, std::pow(1.0 / 55.0, 4), 1e-20);
  EXPECT_TRUE(r.pass);
  EXPECT_GE(r.wilson_lower, r.bound);
}

TEST(Theorem71, RatiosOrderedAndPositive) {
  for (const auto& r : theorem71_ratios(store(), {1, 2})) {
    EXPECT_GT(r.t, 0.0);
    EXPECT_GE(r.T, r.t);
  }
}
