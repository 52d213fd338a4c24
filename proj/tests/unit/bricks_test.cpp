#include "common.hpp"

#include <nlohmann/json.hpp>

using namespace usc;
using namespace usc::test;

namespace {

BrickOptions lenient(int L_star = 10) {
  BrickOptions o;
  o.strict = false;
  o.L_star = L_star;
  return o;
}

void expect_certified(const BrickFunction& b) {
  for (const auto& c : b.certificates) EXPECT_TRUE(c.pass) << b.kind << b.level << " " << c.name << " " << c.detail;
}

}  // namespace

TEST(Projections, Examples) {
  const auto& s = carpet();
  auto p0 = projections(s, {});
  EXPECT_EQ(p0.a, Rational(0));
  EXPECT_EQ(p0.b, Rational(1));
  EXPECT_EQ(p0.c, Rational(1, 2));
  auto p1 = projections(s, {digit_at(s, pt(2, 0, 0))});
  EXPECT_EQ(p1.a, Rational(2, 3));
  EXPECT_EQ(p1.b, Rational(1));
  EXPECT_EQ(p1.c, Rational(5, 6));
}

TEST(Projections, LengthScalesAsPowerOfK) {
  const auto& s = carpet();
  for (Word w : {Word{0}, Word{5, 17}, Word{25, 3, 12}}) {
    auto p = projections(s, w);
    EXPECT_EQ(p.b - p.a, rational_pow(Rational(1, 3), static_cast<int>(w.size())));
    EXPECT_EQ(2 * p.c, p.a + p.b);
  }
}

TEST(Harmonic, EnergyIsReciprocalResistance) {
  BrickLadder L(store(), lenient());
  for (int m = 1; m <= 2; ++m) {
    const auto& h = L.harmonic(m);
    EXPECT_NEAR(h.energy_h * h.R_h, 1.0, 1e-6);
    EXPECT_NEAR(h.energy_hp * h.R_hp, 1.0, 1e-6);
    for (const auto& x : h.h) {
      EXPECT_GE(x, 0);
      EXPECT_LE(x, 1);
    }
  }
}

TEST(Harmonic, ReflectionSymmetric) {
  BrickLadder L(store(), lenient());
  const auto& h = L.harmonic(2);
  auto perm = level_permutation(carpet(), 2, Isometry::reflect(1));
  for (std::size_t v = 0; v < h.h.size(); ++v) EXPECT_EQ(h.h[v], h.h[perm[v]]);
  // Reflecting the x₁ axis exchanges the two faces: h ↦ 1 - h.
  auto flip = level_permutation(carpet(), 2, Isometry::reflect(0));
  for (std::size_t v = 0; v < h.h.size(); ++v) EXPECT_NEAR(to_double(h.h[v] + h.h[flip[v]]), 1.0, 1e-9);
}

TEST(Bricks, GCertificates) {
  BrickLadder L(store(), lenient());
  for (int m = 1; m <= 2; ++m) {
    const auto& g = L.g(m);
    EXPECT_TRUE(g.certified());
    expect_certified(g);
    EXPECT_FALSE(g.vertices.empty());
  }
  EXPECT_EQ(L.g(2).certificates.size(), 6u);
}

TEST(Bricks, FCertificatesAndLadder) {
  BrickLadder L(store(), lenient());
  for (int n = 1; n <= 2; ++n) {
    const auto& f = L.f(n);
    EXPECT_TRUE(f.certified());
    expect_certified(f);
    EXPECT_EQ(f.ladder.size(), static_cast<std::size_t>(n + 1));
    EXPECT_GT(f.energy, 0.0);
  }
}

TEST(Bricks, CutoffCertificatesAtShortRange) {
  BrickLadder L(store(), lenient(3));
  auto c = L.cutoff({0}, 2);
  expect_certified(c);
  EXPECT_TRUE(c.certified());
  for (double x : c.values) {
    EXPECT_GE(x, 0.0);
    EXPECT_LE(x, 1.0);
  }
}

TEST(Bricks, StrictModeThrowsOnlyOnFailure) {
  BrickOptions o;
  o.strict = true;
  EXPECT_NO_THROW(build_g(store(), 1, o));
  EXPECT_THROW(build_g(store(), 0, o), Error);
}

TEST(Bricks, JsonCarriesCertificates) {
  BrickLadder L(store(), lenient());
  auto j = nlohmann::json::parse(L.g(1).to_json());
  EXPECT_EQ(j["kind"], "g");
  EXPECT_EQ(j["level"], 1);
  EXPECT_EQ(j["certificates"].size(), L.g(1).certificates.size());
  EXPECT_EQ(j["values"].size(), L.g(1).values.size());
}
