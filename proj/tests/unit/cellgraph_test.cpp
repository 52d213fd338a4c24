#include "common.hpp"

#include <filesystem>

using namespace usc;
using namespace usc::test;

namespace {

std::int32_t corner_cell(const CellGraph& cg, std::int64_t x, std::int64_t y, std::int64_t z) {
  CornerIndex idx(cg.lat);
  const auto s = cg.lat.side;
  return static_cast<std::int32_t>(idx.find({x * s, y * s, z * s}));
}

}  // namespace

TEST(CellGraph, LevelOneFacts) {
  auto cg = store().get(1);
  EXPECT_EQ(cg->size(), 26);
  EXPECT_TRUE(is_connected(cg->g));
  auto c = corner_cell(*cg, 0, 0, 0);
  ASSERT_GE(c, 0);
  EXPECT_EQ(cg->g.degree(c), 3);
  // Edge-sharing cells are not adjacent.
  EXPECT_FALSE(cg->g.has_edge(c, corner_cell(*cg, 1, 1, 0)));
  EXPECT_EQ(cg->face_set(0, 0).size(), 9u);
  EXPECT_EQ(cg->boundary_set().size(), 26u);
  EXPECT_EQ(middle_layers(*cg).I.size(), 8u);
  EXPECT_EQ(pi_measure(*cg)[c], 4);
}

TEST(CellGraph, LevelTwoAllGridWords) {
  auto cg = store().get(2);
  EXPECT_EQ(cg->size(), 676);
  for (auto gw : cg->grid_word) EXPECT_EQ(gw, 1);
  EXPECT_TRUE(is_connected(cg->g));
  double mu = 0;
  for (double x : mu_measure(*cg)) mu += x;
  EXPECT_EQ(mu, 676.0);
}

TEST(CellGraph, EdgesSymmetricWithoutLoops) {
  auto cg = store().get(2);
  for (std::int32_t u = 0; u < cg->size(); ++u)
    for (auto v : cg->g.neighbors(u)) {
      EXPECT_NE(u, v);
      EXPECT_TRUE(cg->g.has_edge(v, u));
    }
}

TEST(CellGraph, GridAdjacencyIsExactFaceEquality) {
  const auto& s = carpet();
  for (int n = 1; n <= 2; ++n) {
    auto cg = store().get(n);
    std::vector<Box> boxes;
    for (std::int32_t v = 0; v < cg->size(); ++v) boxes.push_back(cell_box(s, cg->word(v)));
    const Rational area = boxes[0].side * boxes[0].side;
    for (std::int32_t u = 0; u < cg->size(); ++u)
      for (std::int32_t v = u + 1; v < cg->size(); ++v) {
        auto x = box_intersection(boxes[u], boxes[v]);
        bool face = x.kind == IntersectionKind::rectangle && x.measure == area;
        ASSERT_EQ(cg->g.has_edge(u, v), face) << "n=" << n << " pair " << u << "," << v;
      }
  }
}

TEST(CellGraph, IsometriesAreAutomorphisms) {
  auto cg = store().get(2);
  for (const auto& g : all_isometries()) {
    auto perm = level_permutation(carpet(), 2, g);
    for (std::int32_t u = 0; u < cg->size(); ++u)
      for (auto v : cg->g.neighbors(u)) ASSERT_TRUE(cg->g.has_edge(perm[u], perm[v])) << g.describe();
    // Face sets go to face sets.
    for (int o = 0; o < 3; ++o)
      for (int side = 0; side < 2; ++side) {
        auto F = cg->face_set(o, side);
        std::vector<std::int32_t> img;
        for (auto v : F) img.push_back(perm[v]);
        std::sort(img.begin(), img.end());
        bool matched = false;
        for (int o2 = 0; o2 < 3 && !matched; ++o2)
          for (int s2 = 0; s2 < 2 && !matched; ++s2) matched = img == cg->face_set(o2, s2);
        EXPECT_TRUE(matched);
      }
  }
}

TEST(CellGraph, TouchingGridWordsAreWithinThreeEdges) {
  const auto& s = carpet();
  auto cg = store().get(2);
  std::vector<Box> boxes;
  for (std::int32_t v = 0; v < cg->size(); ++v) boxes.push_back(cell_box(s, cg->word(v)));
  for (std::int32_t u = 0; u < cg->size(); ++u) {
    auto d = bfs_distances(cg->g, u, 3);
    for (std::int32_t v = 0; v < cg->size(); ++v)
      if (box_intersection(boxes[u], boxes[v]).kind != IntersectionKind::empty) ASSERT_GE(d[v], 0);
  }
}

TEST(Neighborhood, Examples) {
  auto cg = store().get(1);
  auto c = corner_cell(*cg, 0, 0, 0);
  EXPECT_EQ(neighborhood(cg->g, c, 0), std::vector<std::int32_t>{c});
  EXPECT_EQ(neighborhood(cg->g, c, 1).size(), 4u);
  EXPECT_EQ(neighborhood(cg->g, c, 100).size(), 26u);
  EXPECT_EQ(graph_ball(cg->g, c, 1), std::vector<std::int32_t>{c});
  EXPECT_EQ(graph_distance(cg->g, c, c), 0);
  EXPECT_EQ(graph_distance(cg->g, c, corner_cell(*cg, 2, 2, 2)), 6);
}

TEST(LayerSets, FaceAdjacentPair) {
  auto g1 = store().get(1), g2 = store().get(2);
  auto a = corner_cell(*g1, 0, 0, 0), b = corner_cell(*g1, 1, 0, 0);
  ASSERT_TRUE(g1->g.has_edge(a, b));
  auto ls = boundary_layer_sets(*g1, *g2, a, b);
  EXPECT_EQ(ls.I.size(), 9u);
  for (auto v : ls.I) EXPECT_EQ(v / 26, a);
}

TEST(Wall, MZeroIsTheCellGraph) {
  auto gn = store().get(1);
  auto wall = build_wall(carpet(), 0, *gn);
  ASSERT_EQ(wall.size(), gn->size());
  for (std::int32_t v = 0; v < wall.size(); ++v) {
    EXPECT_EQ(wall.fold[v], v);
    EXPECT_EQ(wall.outside_degree[v], 0);
  }
}

TEST(Wall, OneOneShapeAndMeasure) {
  auto g1 = store().get(1), g2 = store().get(2);
  auto wall = build_wall(carpet(), 1, *g1);
  EXPECT_EQ(wall.size(), 234);
  auto pi = pi_measure(*g1);
  for (std::int32_t v = 0; v < wall.size(); ++v) {
    EXPECT_EQ(wall.pi[v], pi[wall.fold[v]]);
    for (auto u : wall.g.neighbors(v))
      EXPECT_TRUE(g2->g.has_edge(static_cast<std::int32_t>(wall.words[v]), static_cast<std::int32_t>(wall.words[u])));
  }
}

TEST(Budget, ExceededThrows) {
  BuildOptions o;
  o.max_vertices = 100;
  EXPECT_THROW(build_graph(carpet(), 2, o), BudgetExceeded);
}

TEST(Cache, RoundTripAndSpecMismatch) {
  auto dir = std::filesystem::temp_directory_path() / "usc_cache_test";
  std::filesystem::create_directories(dir);
  auto path = (dir / "g1.bin").string();
  auto cg = store().get(1);
  save_graph(*cg, path);
  auto back = load_graph(carpet(), 1, true, path);
  ASSERT_TRUE(back.has_value());
  EXPECT_EQ(back->g.adj, cg->g.adj);
  EXPECT_EQ(back->g.offsets, cg->g.offsets);
  EXPECT_FALSE(load_graph(menger(), 1, true, path).has_value());
  std::filesystem::remove_all(dir);
}

TEST(A3, PassesAtLStarThree) {
  EXPECT_TRUE(audit_a3(*store().get(1), 3, c_star(carpet())).pass);
}
