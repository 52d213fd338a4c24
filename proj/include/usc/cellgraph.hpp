#pragma once

#include "usc/geometry.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>

namespace usc {

// Undirected simple graph in CSR form. Neighbor lists are sorted.
struct Graph {
  std::vector<std::int64_t> offsets{0};
  std::vector<std::int32_t> adj;

  std::int32_t size() const { return static_cast<std::int32_t>(offsets.size() - 1); }
  int degree(std::int32_t v) const { return static_cast<int>(offsets[v + 1] - offsets[v]); }
  std::span<const std::int32_t> neighbors(std::int32_t v) const {
    return {adj.data() + offsets[v], adj.data() + offsets[v + 1]};
  }
  std::int64_t edge_count() const { return static_cast<std::int64_t>(adj.size()) / 2; }
  bool has_edge(std::int32_t u, std::int32_t v) const;
  int max_degree() const;

  // Edges may be listed once or twice; duplicates and self-loops are dropped.
  static Graph from_edges(std::int32_t n, std::vector<std::pair<std::int32_t, std::int32_t>> edges);
};

struct BuildOptions {
  bool point_contact_edges = true;
  std::int64_t max_vertices = 500000;
};

// Face index for F̃_{n,o,s}: 2*o + s with o 0-based.
inline int face_id(int o, int s) { return 2 * o + s; }

struct CellGraph {
  IfsSpec spec;
  int level = 0;
  Lattice lat;
  Rational C;  // intersection-measure threshold
  bool point_contact_edges = true;
  Graph g;
  std::vector<std::uint8_t> grid_word;
  std::array<std::vector<std::uint8_t>, 6> face;
  std::vector<std::uint8_t> boundary;

  std::int32_t size() const { return g.size(); }
  std::array<std::int64_t, 3> corner(std::int32_t v) const { return lat.corner(v); }
  Word word(std::int32_t v) const { return index_word(v, level, spec.N()); }
  std::vector<std::int32_t> face_set(int o, int s) const;
  std::vector<std::int32_t> boundary_set() const;
};

// Adjacency among an arbitrary subset of level-L cells, same rules as the cell graph.
// Vertex i of the result is indices[i].
Graph build_adjacency(const IfsSpec& spec, const Lattice& lat, const Rational& C,
                      const std::vector<std::int64_t>& indices, bool point_contact_edges);

bool is_grid_word(const std::vector<std::uint8_t>& level1_boundary, std::int64_t index,
                  int level, int N);

CellGraph build_graph(const IfsSpec& spec, int n, const BuildOptions& opts = {});

struct MiddleLayers {
  std::vector<std::int32_t> I, I_plus, I_minus;
};
MiddleLayers middle_layers(const CellGraph& cg);

std::vector<std::int32_t> bfs_distances(const Graph& g, std::int32_t source, int max_dist = -1);
std::vector<std::int32_t> bfs_distances(const Graph& g, const std::vector<std::int32_t>& sources,
                                        int max_dist = -1);
std::vector<std::int32_t> neighborhood(const Graph& g, std::int32_t w, int L_star);
std::vector<std::int32_t> graph_ball(const Graph& g, std::int32_t w, int r);  // d < r
int graph_distance(const Graph& g, std::int32_t a, std::int32_t b);  // -1 if disconnected
bool is_connected(const Graph& g);

// μₙ ≡ 1, πₙ = deg + 1 on ∂Wₙ and deg elsewhere.
std::vector<double> mu_measure(const CellGraph& cg);
std::vector<std::int64_t> pi_measure(const CellGraph& cg);

struct LayerSets {
  std::vector<std::int32_t> J;  // suffix indices in W_{n-m}
  std::vector<std::int32_t> I;  // w·J as level-n indices
};
LayerSets boundary_layer_sets(const CellGraph& gm, const CellGraph& gn, std::int32_t w,
                              std::int32_t w_prime);

struct WallGraph {
  int m = 0, n = 0;
  std::vector<std::int32_t> prefixes;   // F̃_{m,2,0} in lexicographic order
  std::vector<std::int64_t> words;      // level-(m+n) index per vertex
  Graph g;                              // level-(m+n) adjacency restricted to the wall
  std::vector<std::int32_t> fold;       // vertex -> Wₙ index
  std::vector<std::int64_t> pi;         // π_{m,n}
  std::vector<int> outside_degree;

  std::int64_t block_size = 1;           // Nⁿ

  std::int32_t size() const { return g.size(); }
  std::int32_t block_of(std::int32_t v) const {
    return static_cast<std::int32_t>(v / block_size);
  }
};

WallGraph build_wall(const IfsSpec& spec, int m, const CellGraph& gn,
                     const BuildOptions& opts = {});

// (A3)(b) audit: every pair further than L_star edges apart has cube distance
// at least c_* k^{-n}. Returns the first violating pair if any.
struct A3Audit {
  bool pass = true;
  std::int64_t pairs_checked = 0;
  std::int32_t u = -1, v = -1;
};
A3Audit audit_a3(const CellGraph& cg, int L_star, const Rational& cstar);

// Binary cache: magic, version, spec hash, level, C, flags, CSR, bitmaps.
void save_graph(const CellGraph& cg, const std::string& path);
std::optional<CellGraph> load_graph(const IfsSpec& spec, int n, bool point_contact_edges,
                                    const std::string& path);
std::string graph_to_json(const CellGraph& cg);

// Per-level memo with an optional on-disk cache directory.
class GraphStore {
 public:
  explicit GraphStore(IfsSpec spec, BuildOptions opts = {}, std::string cache_dir = {});
  std::shared_ptr<const CellGraph> get(int n);
  const IfsSpec& spec() const { return spec_; }
  const BuildOptions& options() const { return opts_; }

 private:
  IfsSpec spec_;
  BuildOptions opts_;
  std::string cache_dir_;
  std::mutex mu_;
  std::map<int, std::shared_ptr<const CellGraph>> graphs_;
};

}  // namespace usc
