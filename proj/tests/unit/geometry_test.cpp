#include "common.hpp"

#include <random>
#include <set>

using namespace usc;
using namespace usc::test;

namespace {

std::string grid_spec_json(bool drop_center, bool drop_face_centers) {
  std::string cells;
  for (int x = 0; x < 3; ++x)
    for (int y = 0; y < 3; ++y)
      for (int z = 0; z < 3; ++z) {
        int ones = (x == 1) + (y == 1) + (z == 1);
        if (drop_center && ones == 3) continue;
        if (drop_face_centers && ones >= 2) continue;
        if (!cells.empty()) cells += ",";
        cells += "[\"" + std::to_string(x) + "/3\",\"" + std::to_string(y) + "/3\",\"" + std::to_string(z) + "/3\"]";
      }
  return "{\"k\":3,\"cells\":[" + cells + "]}";
}

}  // namespace

TEST(Rational, ParseAndFormat) {
  EXPECT_EQ(parse_rational("2/6"), Rational(1, 3));
  EXPECT_EQ(parse_rational("-4"), Rational(-4));
  EXPECT_EQ(format_rational(Rational(3)), "3/1");
  EXPECT_THROW(parse_rational("1/0"), ParseError);
  EXPECT_THROW(parse_rational("abc"), ParseError);
  EXPECT_EQ(sqrt_lower(Rational(9, 4)), Rational(3, 2));
  EXPECT_LE(sqrt_lower(Rational(2)) * sqrt_lower(Rational(2)), Rational(2));
}

TEST(Spec, GridEnumerationMatchesShippedCarpet) {
  auto spec = parse_spec(grid_spec_json(true, false));
  EXPECT_EQ(spec.N(), 26);
  EXPECT_EQ(spec_hash(carpet()), spec_hash(parse_spec(spec_to_json(carpet()))));
  std::set<Point> a(spec.cells.begin(), spec.cells.end()), b(carpet().cells.begin(), carpet().cells.end());
  EXPECT_EQ(a, b);
}

TEST(Spec, MengerParsesOnlyLeniently) {
  EXPECT_THROW(parse_spec(grid_spec_json(true, true)), ParseError);
  ParseOptions po;
  po.enforce_n_bounds = false;
  EXPECT_EQ(parse_spec(grid_spec_json(true, true), po).N(), 20);
}

TEST(Spec, TranslationOutOfRange) {
  EXPECT_THROW(parse_spec(R"({"k":3,"cells":[["1/3","0","5/3"]]})"), ParseError);
}

TEST(CellBox, Examples) {
  const auto& s = carpet();
  auto b0 = cell_box(s, {});
  EXPECT_EQ(b0.corner, pt(0, 0, 0));
  EXPECT_EQ(b0.side, Rational(1));
  auto b1 = cell_box(s, {digit_at(s, pt(2, 2, 2))});
  EXPECT_EQ(b1.corner, pt(2, 2, 2));
  EXPECT_EQ(b1.side, Rational(1, 3));
  auto b2 = cell_box(s, {digit_at(s, pt(0, 0, 0)), digit_at(s, pt(2, 0, 0))});
  EXPECT_EQ(b2.corner, pt(2, 0, 0, 9));
  EXPECT_EQ(b2.side, Rational(1, 9));
}

TEST(CellBox, Multiplicative) {
  const auto& s = carpet();
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> digit(0, s.N() - 1);
  for (int trial = 0; trial < 50; ++trial) {
    Word w(1 + trial % 3), v(1 + trial % 2);
    for (auto& d : w) d = digit(rng);
    for (auto& d : v) d = digit(rng);
    Word wv = w;
    wv.insert(wv.end(), v.begin(), v.end());
    auto bw = cell_box(s, w), bv = cell_box(s, v), bwv = cell_box(s, wv);
    EXPECT_EQ(bwv.side, bw.side * bv.side);
    for (int a = 0; a < 3; ++a) EXPECT_EQ(bwv.corner[a], bw.corner[a] + bw.side * bv.corner[a]);
  }
}

TEST(BoxIntersection, Examples) {
  Box a{pt(0, 0, 0), Rational(1, 3)};
  auto r = box_intersection(a, {pt(1, 0, 0), Rational(1, 3)});
  EXPECT_EQ(r.kind, IntersectionKind::rectangle);
  EXPECT_EQ(r.measure, Rational(1, 9));
  auto s = box_intersection(a, {pt(1, 1, 0), Rational(1, 3)});
  EXPECT_EQ(s.kind, IntersectionKind::segment);
  EXPECT_EQ(s.measure, Rational(1, 3));
  EXPECT_EQ(box_intersection(a, {pt(2, 2, 2), Rational(1, 3)}).kind, IntersectionKind::empty);
  EXPECT_EQ(box_intersection(a, {pt(1, 1, 1), Rational(1, 3)}).kind, IntersectionKind::point);
}

TEST(BoxIntersection, SymmetricAndIsometryInvariant) {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> c(0, 6);
  auto isos = all_isometries();
  ASSERT_EQ(isos.size(), 48u);
  for (int t = 0; t < 40; ++t) {
    Box a{pt(c(rng), c(rng), c(rng), 9), Rational(1, 3)};
    Box b{pt(c(rng), c(rng), c(rng), 9), Rational(1, 3)};
    auto ab = box_intersection(a, b), ba = box_intersection(b, a);
    EXPECT_EQ(ab.kind, ba.kind);
    EXPECT_EQ(ab.measure, ba.measure);
    for (const auto& g : isos) {
      auto gi = box_intersection(g.apply(a), g.apply(b));
      EXPECT_EQ(gi.kind, ab.kind);
      EXPECT_EQ(gi.measure, ab.measure);
    }
  }
}

TEST(Validate, CarpetPassesAllFive) {
  auto rep = validate(carpet());
  EXPECT_TRUE(rep.non_overlapping.pass);
  EXPECT_TRUE(rep.face_included.pass);
  EXPECT_TRUE(rep.strong_connectivity.pass);
  EXPECT_TRUE(rep.symmetry.pass);
  EXPECT_TRUE(rep.n_bounds.pass);
}

TEST(Validate, MengerFailsFaceIncludedWithWitness) {
  auto rep = validate(menger());
  EXPECT_FALSE(rep.face_included.pass);
  EXPECT_FALSE(rep.face_included.witness.empty());
  EXPECT_FALSE(rep.pass());
}

TEST(Validate, DiagonalContactFailsStrongConnectivity) {
  ParseOptions po;
  po.enforce_n_bounds = false;
  auto rep = validate(load_spec(data_path("diagonal.json"), po));
  EXPECT_FALSE(rep.strong_connectivity.pass);
  EXPECT_FALSE(rep.strong_connectivity.witness.empty());
}

TEST(Validate, InvariantUnderIsometriesOfTheCellList) {
  for (const auto& g : all_isometries()) {
    IfsSpec s = carpet();
    for (auto& c : s.cells) c = g.apply(Box{c, Rational(1, 3)}).corner;
    EXPECT_TRUE(validate(s).pass()) << g.describe();
  }
}

TEST(Constants, CarpetThresholds) {
  auto c = lemma28_constants(carpet());
  EXPECT_EQ(c.c_prime, Rational(1));
  EXPECT_EQ(c.c, Rational(1, 81));
  EXPECT_EQ(c_star(carpet()), Rational(1, 2));
}

TEST(Constants, OffGridOverlapHalvesCPrime) {
  // A cell shifted by 1/(2k) in x₂ against its face neighbour.
  IfsSpec t;
  t.k = 3;
  t.cells = {pt(0, 0, 0), Point{Rational(1, 3), Rational(1, 6), Rational(0)}};
  EXPECT_EQ(lemma28_constants(t).c_prime, Rational(1, 2));
}

TEST(Constants, CStarOfCloseDisjointCells) {
  IfsSpec t;
  t.k = 3;
  t.cells = {pt(0, 0, 0), Point{Rational(1, 3) + Rational(1, 12), Rational(0), Rational(0)}};
  EXPECT_EQ(c_star(t), Rational(1, 4));
  IfsSpec touching;
  touching.k = 3;
  touching.cells = {pt(0, 0, 0), pt(1, 0, 0)};
  EXPECT_EQ(c_star(touching), Rational(1, 2));
}

TEST(Isometry, Examples) {
  const auto& s = carpet();
  EXPECT_EQ(apply_isometry(s, Isometry::reflect(0), {digit_at(s, pt(0, 0, 0))}),
            Word{digit_at(s, pt(2, 0, 0))});
  EXPECT_EQ(apply_isometry(s, Isometry::swap(0, 1), {digit_at(s, pt(0, 2, 1))}),
            Word{digit_at(s, pt(2, 0, 1))});
  Word w{3, 7, 19};
  EXPECT_EQ(apply_isometry(s, Isometry::identity(), w), w);
  for (const auto& g : all_isometries()) EXPECT_EQ(g.after(g.inverse()), Isometry::identity());
}

TEST(Fold, PointAndCoordinate) {
  EXPECT_EQ(fold_point({Rational(3, 2), Rational(1, 4), Rational(2)}), (Point{Rational(1, 2), Rational(1, 4), Rational(0)}));
  for (int i = -20; i <= 20; ++i) {
    Rational t(i, 7);
    auto f = fold_coordinate(t);
    EXPECT_GE(f, 0);
    EXPECT_LE(f, 1);
    EXPECT_EQ(f, fold_coordinate(-t));
    EXPECT_EQ(f, fold_coordinate(t + 2));
    EXPECT_EQ(fold_coordinate(f), f);
  }
}

TEST(Fold, WordIdentityAtMZeroAndWallExample) {
  const auto& s = carpet();
  Word w{4, 11};
  EXPECT_EQ(fold_word(s, 0, 2, w), w);
  // Prefix (1/3,0,0), suffix (1/3,0,0): x₁-extent [4/9,5/9] folds onto [1/3,2/3].
  int mid = digit_at(s, pt(1, 0, 0));
  Word u{mid, mid};
  EXPECT_EQ(cell_box(s, u).corner[0], Rational(4, 9));
  auto f = fold_word(s, 1, 1, u);
  ASSERT_EQ(f.size(), 1u);
  auto b = cell_box(s, f);
  EXPECT_EQ(b.corner[0], Rational(1, 3));
  EXPECT_EQ(b.side, Rational(1, 3));
}

TEST(Fold, BoxIdentityOnEveryWallWord) {
  const auto& s = carpet();
  for (int p = 0; p < s.N(); ++p) {
    if (s.cells[p][1] != 0) continue;
    for (int q = 0; q < s.N(); ++q) {
      Word u{p, q};
      auto b = cell_box(s, u);
      Point lo, hi;
      for (int a = 0; a < 3; ++a) {
        auto x = fold_coordinate(3 * b.corner[a]), y = fold_coordinate(3 * (b.corner[a] + b.side));
        lo[a] = x < y ? x : y;
        hi[a] = x < y ? y : x;
      }
      auto f = cell_box(s, fold_word(s, 1, 1, u));
      EXPECT_EQ(f.corner, lo);
      EXPECT_EQ(f.side, hi[0] - lo[0]);
    }
  }
}
