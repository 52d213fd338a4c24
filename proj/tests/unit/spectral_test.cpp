#include "common.hpp"

#include <cmath>
#include <random>

using namespace usc;
using namespace usc::test;

namespace {

Graph path_graph(int n) {
  std::vector<std::pair<std::int32_t, std::int32_t>> e;
  for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return Graph::from_edges(n, e);
}

Graph relabel(const Graph& g, const std::vector<std::int32_t>& perm) {
  std::vector<std::pair<std::int32_t, std::int32_t>> e;
  for (std::int32_t u = 0; u < g.size(); ++u)
    for (auto v : g.neighbors(u))
      if (u < v) e.emplace_back(perm[u], perm[v]);
  return Graph::from_edges(g.size(), e);
}

}  // namespace

TEST(Energy, Examples) {
  auto g = path_graph(2);
  EXPECT_EQ(dirichlet_energy(g, std::vector<double>{3.0, 3.0}), 0.0);
  EXPECT_EQ(dirichlet_energy(g, std::vector<double>{0.0, 1.0}), 2.0);
}

TEST(Energy, MatchesIndependentlyAssembledLaplacian) {
  auto cg = store().get(1);
  const auto n = cg->size();
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (std::int32_t u = 0; u < n; ++u)
    for (auto v : cg->g.neighbors(u)) {
      L(u, u) += 2;
      L(u, v) -= 2;
    }
  std::mt19937 rng(3);
  std::normal_distribution<double> z;
  for (int t = 0; t < 10; ++t) {
    Vec f(n);
    for (auto i = 0; i < n; ++i) f[i] = z(rng);
    double e = dirichlet_energy(cg->g, f);
    EXPECT_NEAR(e, f.dot(L * f), 1e-12 * e);
  }
}

TEST(Lambda, SmallGraphs) {
  EXPECT_NEAR(lambda_n(path_graph(2)).value, 0.25, 1e-12);
  EXPECT_NEAR(lambda_n(path_graph(3)).value, 0.5, 1e-12);
}

TEST(Lambda, DenseAndIterativeAgree) {
  for (int n = 1; n <= 2; ++n) {
    auto g = store().get(n)->g;
    SolveOptions d, it;
    d.method = SolveOptions::Method::dense;
    it.method = SolveOptions::Method::iterative;
    it.tolerance = 1e-12;
    double a = lambda_n(g, d).value, b = lambda_n(g, it).value;
    EXPECT_NEAR(a, b, 1e-8 * a) << "n=" << n;
  }
}

TEST(Lambda, InvariantUnderIsometryRelabeling) {
  auto cg = store().get(2);
  double base = lambda_n(cg->g).value;
  for (const auto& g : {Isometry::reflect(0), Isometry::swap(0, 2), Isometry::swap(1, 2).after(Isometry::reflect(1))}) {
    auto perm = level_permutation(carpet(), 2, g);
    EXPECT_NEAR(lambda_n(relabel(cg->g, perm)).value, base, 1e-10 * base);
  }
}

TEST(Resistance, SmallCircuits) {
  EXPECT_NEAR(effective_resistance(path_graph(2), {0}, {1}).value, 0.5, 1e-12);
  EXPECT_NEAR(effective_resistance(path_graph(3), {0}, {2}).value, 1.0, 1e-10);
}

TEST(Resistance, FaceResistanceSameOnEveryAxis) {
  auto cg = store().get(1);
  double r0 = effective_resistance(cg->g, cg->face_set(0, 0), cg->face_set(0, 1)).value;
  EXPECT_NEAR(face_resistance(*cg).value, r0, 1e-12);
  for (int o = 1; o < 3; ++o)
    EXPECT_NEAR(effective_resistance(cg->g, cg->face_set(o, 0), cg->face_set(o, 1)).value, r0, 1e-10);
}

TEST(Resistance, AddingAnEdgeNeverIncreases) {
  std::mt19937 rng(9);
  for (int t = 0; t < 20; ++t) {
    std::vector<std::pair<std::int32_t, std::int32_t>> e;
    for (int i = 0; i + 1 < 12; ++i) e.emplace_back(i, i + 1);
    std::uniform_int_distribution<int> v(0, 11);
    for (int j = 0; j < 4; ++j) e.emplace_back(v(rng), v(rng));
    auto g = Graph::from_edges(12, e);
    double before = effective_resistance(g, {0}, {11}).value;
    e.emplace_back(v(rng), v(rng));
    double after = effective_resistance(Graph::from_edges(12, e), {0}, {11}).value;
    EXPECT_LE(after, before * (1 + 1e-10));
  }
}

TEST(RProbe, EnlargingTheProbeSetNeverIncreases) {
  std::vector<Word> small{{0}, {4}}, large{{0}, {4}, {9}, {13}};
  auto a = R_probe(store(), 1, small, 1);
  auto b = R_probe(store(), 1, large, 1);
  EXPECT_GT(a.value, 0.0);
  EXPECT_LE(b.value, a.value * (1 + 1e-12));
}

TEST(Sigma, SingletonPairIsHalf) {
  auto cg = store().get(1);
  auto u = cg->g.neighbors(0)[0];
  EXPECT_NEAR(sigma_pair(carpet(), 1, 0, u, 0).value, 0.5, 1e-12);
}

TEST(Sigma, SymmetricInThePair) {
  auto cg = store().get(1);
  auto u = cg->g.neighbors(0)[0];
  double a = sigma_pair(carpet(), 1, 0, u, 1).value, b = sigma_pair(carpet(), 1, u, 0, 1).value;
  EXPECT_NEAR(a, b, 1e-10 * a);
}

TEST(Sigma, MaximizerReproducesTheValue) {
  auto cg = store().get(1);
  auto u = cg->g.neighbors(0)[0];
  auto r = sigma_pair(carpet(), 1, 0, u, 1);
  auto tb = two_block_graph(carpet(), 1, 0, u, 1);
  double gap = r.a.dot(r.maximizer);
  double energy = dirichlet_energy(tb.g, r.maximizer);
  EXPECT_NEAR(26.0 * gap * gap / energy, r.value, 1e-8 * r.value);
}

TEST(ScriptR, TildeSandwich) {
  for (int n = 1; n <= 2; ++n) {
    auto s = script_R(*store().get(n));
    double q = s.R_tilde / s.R;
    EXPECT_GE(q, 0.25);
    EXPECT_LE(q, 4.0);
  }
}

TEST(Measures, ExampleBConstantAndUniformMeasure) {
  auto cg = store().get(1);
  EXPECT_LE(measure_c1(*cg, example_measure_b(*cg)), 4.0);
  MeasureSpec mu;
  mu.weight.assign(cg->size(), 1.0);
  for (std::int32_t v = 0; v < cg->size(); ++v) mu.support.push_back(v);
  auto r = averaged_bound_check(*cg, mu, lambda_n(cg->g).value, 20, 1);
  EXPECT_LT(r.max_ratio, 1e-10);
}

TEST(ScalingFit, ExactGeometricSequence) {
  std::vector<std::pair<int, double>> pts{{1, 0.5}, {2, 0.25}, {3, 0.125}};
  auto f = scaling_fit(Quantity::rnf, pts, 26, 3);
  EXPECT_NEAR(f.slope, -std::log(2.0), 1e-14);
  EXPECT_NEAR(f.residual, 0.0, 1e-14);
  EXPECT_NEAR(f.rho, 2.0, 1e-12);
}

TEST(ScalingFit, CarpetRhoAndWalkDimension) {
  std::vector<std::pair<int, double>> pts;
  for (int n = 2; n <= 3; ++n) pts.emplace_back(n, face_resistance(*store().get(n)).value);
  auto f = scaling_fit(Quantity::rnf, pts, 26, 3);
  EXPECT_GT(f.rho, 1.0);
  EXPECT_LE(f.rho, 26.0 / 9.0);
  EXPECT_GE(f.d_W, 2.0);
  EXPECT_LT(f.d_W, f.d_H);
  EXPECT_LT(f.d_H, f.d_W + 1.0);
}

TEST(FaceResistanceBound, LevelOne) {
  auto rows = lemma81_check(store(), {1, 2});
  for (const auto& r : rows) {
    EXPECT_TRUE(r.pass);
    EXPECT_NEAR(r.bound, std::pow(0.375, r.n), 1e-15);
  }
  EXPECT_LE(rows[0].rnf, 0.375);
}

TEST(ConstantsTable, CsvRoundTripAndQuantityNames) {
  auto t = compute_constants(store(), {1, 2}, {"lambda", "rnf"});
  ASSERT_EQ(t.rows.size(), 4u);
  auto back = constants_from_csv(t.to_csv());
  ASSERT_EQ(back.rows.size(), t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    EXPECT_EQ(back.rows[i].value, t.rows[i].value);
    EXPECT_EQ(back.rows[i].quantity, t.rows[i].quantity);
  }
  for (auto q : {Quantity::rnf, Quantity::lambda, Quantity::n_over_lambda, Quantity::script_r, Quantity::sigma,
                 Quantity::r_probe})
    EXPECT_EQ(parse_quantity(to_string(q)), q);
  EXPECT_THROW(parse_quantity("bogus"), Error);
}

TEST(ConstantsTable, WorkerCountDoesNotChangeRows) {
  auto a = compute_constants(store(), {1, 2}, {"lambda", "rnf", "scriptR"}, {}, 1);
  auto b = compute_constants(store(), {1, 2}, {"lambda", "rnf", "scriptR"}, {}, 4);
  EXPECT_EQ(a.to_csv(), b.to_csv());
}
