#include "usc/cellgraph.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <queue>
#include <thread>

namespace usc {

bool Graph::has_edge(std::int32_t u, std::int32_t v) const {
  auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

int Graph::max_degree() const {
  int d = 0;
  for (std::int32_t v = 0; v < size(); ++v) d = std::max(d, degree(v));
  return d;
}

Graph Graph::from_edges(std::int32_t n,
                        std::vector<std::pair<std::int32_t, std::int32_t>> edges) {
  std::vector<std::pair<std::int32_t, std::int32_t>> both;
  both.reserve(edges.size() * 2);
  for (auto [u, v] : edges) {
    if (u == v) continue;
    both.emplace_back(u, v);
    both.emplace_back(v, u);
  }
  std::sort(both.begin(), both.end());
  both.erase(std::unique(both.begin(), both.end()), both.end());
  Graph g;
  g.offsets.assign(static_cast<std::size_t>(n) + 1, 0);
  g.adj.reserve(both.size());
  for (auto [u, v] : both) {
    ++g.offsets[u + 1];
    g.adj.push_back(v);
  }
  for (std::int32_t i = 0; i < n; ++i) g.offsets[i + 1] += g.offsets[i];
  return g;
}

std::vector<std::int32_t> CellGraph::face_set(int o, int s) const {
  std::vector<std::int32_t> out;
  const auto& f = face[face_id(o, s)];
  for (std::int32_t v = 0; v < size(); ++v)
    if (f[v]) out.push_back(v);
  return out;
}

std::vector<std::int32_t> CellGraph::boundary_set() const {
  std::vector<std::int32_t> out;
  for (std::int32_t v = 0; v < size(); ++v)
    if (boundary[v]) out.push_back(v);
  return out;
}

namespace {

std::vector<std::uint8_t> level1_boundary(const IfsSpec& spec) {
  Rational top = Rational(1) - Rational(1, spec.k);
  std::vector<std::uint8_t> out(spec.N(), 0);
  for (int i = 0; i < spec.N(); ++i)
    for (int o = 0; o < 3; ++o)
      if (spec.cells[i][o] == 0 || spec.cells[i][o] == top) out[i] = 1;
  return out;
}

std::int64_t small_int(const BigInt& v, const char* what) {
  if (v > BigInt(std::numeric_limits<std::int64_t>::max()))
    throw Error(std::string(what) + " does not fit in 64 bits");
  return v.convert_to<std::int64_t>();
}

struct ContactRule {
  std::int64_t q;
  std::int64_t cn, cd;  // C = cn / cd
  bool point_edges;

  bool edge(const std::array<std::int64_t, 3>& a, const std::array<std::int64_t, 3>& b,
            bool both_grid) const {
    int dims = 0;
    std::int64_t len[3];
    for (int o = 0; o < 3; ++o) {
      std::int64_t lo = std::max(a[o], b[o]);
      std::int64_t hi = std::min(a[o], b[o]) + q;
      if (hi < lo) return false;
      len[o] = hi - lo;
      if (len[o] > 0) ++dims;
    }
    if (dims == 3) throw Error("overlapping cells in graph construction");
    if (both_grid) {
      if (dims != 2) return false;
      for (int o = 0; o < 3; ++o)
        if (len[o] != 0 && len[o] != q) return false;
      return true;
    }
    if (dims == 0) return point_edges;
    __int128 measure = 1;
    for (int o = 0; o < 3; ++o)
      if (len[o] > 0) measure *= len[o];
    __int128 scale = dims == 1 ? q : static_cast<__int128>(q) * q;
    return measure * cd > static_cast<__int128>(cn) * scale;
  }
};

}  // namespace

bool is_grid_word(const std::vector<std::uint8_t>& b1, std::int64_t index, int level, int N) {
  for (int j = 0; j < level; ++j) {
    if (!b1[index % N]) return false;
    index /= N;
  }
  return true;
}

Graph build_adjacency(const IfsSpec& spec, const Lattice& lat, const Rational& C,
                      const std::vector<std::int64_t>& indices, bool point_contact_edges) {
  const auto n = static_cast<std::int32_t>(indices.size());
  const auto b1 = level1_boundary(spec);
  ContactRule rule{lat.q, small_int(boost::multiprecision::numerator(C), "C"),
                   small_int(boost::multiprecision::denominator(C), "C"), point_contact_edges};

  std::vector<std::array<std::int64_t, 3>> corners(n);
  std::vector<std::uint8_t> grid(n);
  for (std::int32_t i = 0; i < n; ++i) {
    corners[i] = lat.corner(indices[i]);
    grid[i] = is_grid_word(b1, indices[i], lat.level, lat.N);
  }
  const std::uint64_t span = static_cast<std::uint64_t>(lat.extent / lat.q) + 3;
  auto bucket_key = [&](std::int64_t bx, std::int64_t by, std::int64_t bz) {
    return (static_cast<std::uint64_t>(bx + 1) * span + static_cast<std::uint64_t>(by + 1)) * span +
           static_cast<std::uint64_t>(bz + 1);
  };
  std::vector<std::pair<std::uint64_t, std::int32_t>> buckets(n);
  for (std::int32_t i = 0; i < n; ++i) {
    const auto& c = corners[i];
    buckets[i] = {bucket_key(c[0] / lat.q, c[1] / lat.q, c[2] / lat.q), i};
  }
  std::sort(buckets.begin(), buckets.end());

  unsigned workers = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  if (n < 4096) workers = 1;
  std::vector<std::vector<std::pair<std::int32_t, std::int32_t>>> parts(workers);
  auto run = [&](unsigned part) {
    std::int32_t lo = static_cast<std::int32_t>(static_cast<std::int64_t>(n) * part / workers);
    std::int32_t hi = static_cast<std::int32_t>(static_cast<std::int64_t>(n) * (part + 1) / workers);
    auto& out = parts[part];
    for (std::int32_t i = lo; i < hi; ++i) {
      const auto& c = corners[i];
      std::int64_t b[3] = {c[0] / lat.q, c[1] / lat.q, c[2] / lat.q};
      for (int dx = -1; dx <= 1; ++dx)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dz = -1; dz <= 1; ++dz) {
            std::uint64_t key = bucket_key(b[0] + dx, b[1] + dy, b[2] + dz);
            auto it = std::lower_bound(buckets.begin(), buckets.end(),
                                       std::make_pair(key, std::int32_t{-1}));
            for (; it != buckets.end() && it->first == key; ++it) {
              std::int32_t j = it->second;
              if (j <= i) continue;
              if (rule.edge(c, corners[j], grid[i] && grid[j])) out.emplace_back(i, j);
            }
          }
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> threads;
    for (unsigned p = 0; p < workers; ++p) threads.emplace_back(run, p);
    for (auto& t : threads) t.join();
  }
  std::vector<std::pair<std::int32_t, std::int32_t>> edges;
  for (auto& p : parts) edges.insert(edges.end(), p.begin(), p.end());
  return Graph::from_edges(n, std::move(edges));
}

namespace {

void fill_faces(CellGraph& cg) {
  const auto n = cg.size();
  for (auto& f : cg.face) f.assign(n, 0);
  cg.boundary.assign(n, 0);
  for (std::int32_t v = 0; v < n; ++v) {
    auto c = cg.lat.corner(v);
    for (int o = 0; o < 3; ++o) {
      if (c[o] == 0) cg.face[face_id(o, 0)][v] = 1;
      if (c[o] + cg.lat.side == cg.lat.extent) cg.face[face_id(o, 1)][v] = 1;
    }
    for (const auto& f : cg.face)
      if (f[v]) cg.boundary[v] = 1;
  }
}

void check_budget(std::int64_t vertices, std::int64_t budget, const std::string& what) {
  if (budget > 0 && vertices > budget)
    throw BudgetExceeded(what + " needs " + std::to_string(vertices) +
                         " vertices, above the budget of " + std::to_string(budget) +
                         "; use a smaller level or raise --max-vertices");
}

}  // namespace

CellGraph build_graph(const IfsSpec& spec, int n, const BuildOptions& opts) {
  if (n < 0) throw Error("negative level");
  std::int64_t size = int_pow(spec.N(), n);
  check_budget(size, opts.max_vertices, "level-" + std::to_string(n) + " cell graph");
  CellGraph cg;
  cg.spec = spec;
  cg.level = n;
  cg.lat = make_lattice(spec, n);
  cg.C = lemma28_constants(spec).c;
  cg.point_contact_edges = opts.point_contact_edges;
  std::vector<std::int64_t> all(size);
  for (std::int64_t i = 0; i < size; ++i) all[i] = i;
  cg.g = build_adjacency(spec, cg.lat, cg.C, all, opts.point_contact_edges);
  auto b1 = level1_boundary(spec);
  cg.grid_word.resize(size);
  for (std::int64_t i = 0; i < size; ++i) cg.grid_word[i] = is_grid_word(b1, i, n, spec.N());
  fill_faces(cg);
  return cg;
}

MiddleLayers middle_layers(const CellGraph& cg) {
  MiddleLayers out;
  const auto E = cg.lat.extent;
  for (std::int32_t v = 0; v < cg.size(); ++v) {
    auto c = cg.lat.corner(v);
    std::int64_t lo2 = 2 * c[0], hi2 = 2 * (c[0] + cg.lat.side);
    if (lo2 <= E && E <= hi2) out.I.push_back(v);
    if (hi2 >= E) out.I_plus.push_back(v);
    if (lo2 <= E) out.I_minus.push_back(v);
  }
  return out;
}

std::vector<std::int32_t> bfs_distances(const Graph& g, const std::vector<std::int32_t>& sources,
                                        int max_dist) {
  std::vector<std::int32_t> d(g.size(), -1);
  std::vector<std::int32_t> frontier;
  for (auto s : sources) {
    if (d[s] < 0) frontier.push_back(s);
    d[s] = 0;
  }
  for (std::size_t head = 0; head < frontier.size(); ++head) {
    auto u = frontier[head];
    if (max_dist >= 0 && d[u] >= max_dist) continue;
    for (auto v : g.neighbors(u))
      if (d[v] < 0) {
        d[v] = d[u] + 1;
        frontier.push_back(v);
      }
  }
  return d;
}

std::vector<std::int32_t> bfs_distances(const Graph& g, std::int32_t source, int max_dist) {
  return bfs_distances(g, std::vector<std::int32_t>{source}, max_dist);
}

std::vector<std::int32_t> neighborhood(const Graph& g, std::int32_t w, int L_star) {
  auto d = bfs_distances(g, w, L_star);
  std::vector<std::int32_t> out;
  for (std::int32_t v = 0; v < g.size(); ++v)
    if (d[v] >= 0) out.push_back(v);
  return out;
}

std::vector<std::int32_t> graph_ball(const Graph& g, std::int32_t w, int r) {
  if (r <= 0) return {};
  auto d = bfs_distances(g, w, r - 1);
  std::vector<std::int32_t> out;
  for (std::int32_t v = 0; v < g.size(); ++v)
    if (d[v] >= 0 && d[v] < r) out.push_back(v);
  return out;
}

int graph_distance(const Graph& g, std::int32_t a, std::int32_t b) {
  return bfs_distances(g, a)[b];
}

bool is_connected(const Graph& g) {
  if (g.size() == 0) return true;
  auto d = bfs_distances(g, 0);
  return std::none_of(d.begin(), d.end(), [](std::int32_t x) { return x < 0; });
}

std::vector<double> mu_measure(const CellGraph& cg) { return std::vector<double>(cg.size(), 1.0); }

std::vector<std::int64_t> pi_measure(const CellGraph& cg) {
  std::vector<std::int64_t> pi(cg.size());
  for (std::int32_t v = 0; v < cg.size(); ++v) {
    pi[v] = cg.g.degree(v) + (cg.boundary[v] ? 1 : 0);
    if (pi[v] == 0)
      throw Error("vertex " + std::to_string(v) + " has zero degree off the boundary");
  }
  return pi;
}

LayerSets boundary_layer_sets(const CellGraph& gm, const CellGraph& gn, std::int32_t w,
                              std::int32_t w_prime) {
  if (gn.level <= gm.level) throw Error("boundary_layer_sets needs n > m");
  if (!gm.g.has_edge(w, w_prime))
    throw Error("boundary_layer_sets: words are not adjacent at level " +
                std::to_string(gm.level));
  const std::int64_t block = int_pow(gn.spec.N(), gn.level - gm.level);
  LayerSets out;
  for (std::int64_t eta = 0; eta < block; ++eta) {
    auto v = static_cast<std::int32_t>(w * block + eta);
    for (auto u : gn.g.neighbors(v))
      if (u / block == w_prime) {
        out.J.push_back(static_cast<std::int32_t>(eta));
        out.I.push_back(v);
        break;
      }
  }
  return out;
}

WallGraph build_wall(const IfsSpec& spec, int m, const CellGraph& gn, const BuildOptions& opts) {
  const int n = gn.level;
  const int N = spec.N();
  WallGraph wall;
  wall.m = m;
  wall.n = n;
  wall.block_size = int_pow(N, n);
  Lattice lat_m = make_lattice(spec, m);
  for (std::int64_t i = 0; i < lat_m.size(); ++i)
    if (lat_m.corner(i)[1] == 0) wall.prefixes.push_back(static_cast<std::int32_t>(i));
  check_budget(static_cast<std::int64_t>(wall.prefixes.size()) * wall.block_size,
               opts.max_vertices, "wall (" + std::to_string(m) + "," + std::to_string(n) + ")");
  for (auto p : wall.prefixes)
    for (std::int64_t w = 0; w < wall.block_size; ++w) wall.words.push_back(p * wall.block_size + w);

  Lattice lat = make_lattice(spec, m + n);
  wall.g = build_adjacency(spec, lat, gn.C, wall.words, opts.point_contact_edges);

  // Scaling by k^m turns level-(m+n) units into level-n units, so folding is
  // a tent map with period 2·extent_n on the raw corner values.
  CornerIndex index(gn.lat);
  const std::int64_t E = gn.lat.extent;
  auto theta = [E](std::int64_t t) {
    std::int64_t r = t % (2 * E);
    return r > E ? 2 * E - r : r;
  };
  auto pi_n = pi_measure(gn);
  wall.fold.resize(wall.words.size());
  wall.pi.resize(wall.words.size());
  wall.outside_degree.resize(wall.words.size());
  for (std::size_t v = 0; v < wall.words.size(); ++v) {
    auto c = lat.corner(wall.words[v]);
    std::array<std::int64_t, 3> lo;
    for (int o = 0; o < 3; ++o) {
      std::int64_t a = theta(c[o]), b = theta(c[o] + lat.side);
      if (std::abs(a - b) != lat.side)
        throw Error("fold: wall cell " + std::to_string(wall.words[v]) + " straddles a fold line");
      lo[o] = std::min(a, b);
    }
    auto target = index.find(lo);
    if (target < 0)
      throw Error("fold: wall cell " + std::to_string(wall.words[v]) +
                  " matches no level-" + std::to_string(n) + " cell");
    wall.fold[v] = static_cast<std::int32_t>(target);
    wall.pi[v] = pi_n[target];
    wall.outside_degree[v] =
        wall.g.degree(static_cast<std::int32_t>(v)) - gn.g.degree(static_cast<std::int32_t>(target));
  }
  return wall;
}

A3Audit audit_a3(const CellGraph& cg, int L_star, const Rational& cstar) {
  A3Audit out;
  const auto q = cg.lat.q;
  // Squared distance threshold (c_* q)^2 in lattice units.
  Rational thr = cstar * cstar * q * q;
  for (std::int32_t u = 0; u < cg.size() && out.pass; ++u) {
    auto d = bfs_distances(cg.g, u, L_star);
    auto cu = cg.lat.corner(u);
    for (std::int32_t v = u + 1; v < cg.size(); ++v) {
      if (d[v] >= 0) continue;
      ++out.pairs_checked;
      auto cv = cg.lat.corner(v);
      std::int64_t d2 = 0;
      for (int o = 0; o < 3; ++o) {
        std::int64_t gap = std::max<std::int64_t>({0, cv[o] - (cu[o] + q), cu[o] - (cv[o] + q)});
        d2 += gap * gap;
      }
      if (Rational(d2) < thr) {
        out.pass = false;
        out.u = u;
        out.v = v;
        break;
      }
    }
  }
  return out;
}

namespace {

constexpr char kMagic[4] = {'U', 'S', 'C', 'G'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
bool get(std::istream& is, T& v) {
  return static_cast<bool>(is.read(reinterpret_cast<char*>(&v), sizeof(T)));
}
template <class T>
void put_vec(std::ostream& os, const std::vector<T>& v) {
  put<std::uint64_t>(os, v.size());
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}
template <class T>
bool get_vec(std::istream& is, std::vector<T>& v) {
  std::uint64_t n;
  if (!get(is, n) || n > (std::uint64_t{1} << 34)) return false;
  v.resize(n);
  return static_cast<bool>(
      is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T))));
}

}  // namespace

void save_graph(const CellGraph& cg, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::ios_base::failure("cannot write " + path);
  os.write(kMagic, 4);
  put(os, kVersion);
  put(os, spec_hash(cg.spec));
  put<std::int32_t>(os, cg.level);
  std::string c = format_rational(cg.C);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(c.size()));
  os.write(c.data(), static_cast<std::streamsize>(c.size()));
  put<std::uint8_t>(os, cg.point_contact_edges);
  put_vec(os, cg.g.offsets);
  put_vec(os, cg.g.adj);
  put_vec(os, cg.grid_word);
  for (const auto& f : cg.face) put_vec(os, f);
}

std::optional<CellGraph> load_graph(const IfsSpec& spec, int n, bool point_contact_edges,
                                    const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return std::nullopt;
  char magic[4];
  std::uint32_t version;
  std::uint64_t hash;
  std::int32_t level;
  std::uint32_t clen;
  std::uint8_t pce;
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) return std::nullopt;
  if (!get(is, version) || version != kVersion) return std::nullopt;
  if (!get(is, hash) || hash != spec_hash(spec)) return std::nullopt;
  if (!get(is, level) || level != n) return std::nullopt;
  if (!get(is, clen) || clen > 4096) return std::nullopt;
  std::string c(clen, '\0');
  if (!is.read(c.data(), clen)) return std::nullopt;
  if (!get(is, pce) || static_cast<bool>(pce) != point_contact_edges) return std::nullopt;
  CellGraph cg;
  cg.spec = spec;
  cg.level = n;
  cg.lat = make_lattice(spec, n);
  cg.point_contact_edges = point_contact_edges;
  try {
    cg.C = parse_rational(c);
  } catch (const ParseError&) {
    return std::nullopt;
  }
  if (!get_vec(is, cg.g.offsets) || !get_vec(is, cg.g.adj) || !get_vec(is, cg.grid_word))
    return std::nullopt;
  std::vector<std::uint8_t> stored[6];
  for (auto& f : stored)
    if (!get_vec(is, f)) return std::nullopt;
  if (cg.g.size() != cg.lat.size()) return std::nullopt;
  fill_faces(cg);
  for (int i = 0; i < 6; ++i)
    if (stored[i] != cg.face[i]) return std::nullopt;
  return cg;
}

std::string graph_to_json(const CellGraph& cg) {
  nlohmann::json doc;
  doc["level"] = cg.level;
  doc["vertices"] = cg.size();
  doc["C"] = format_rational(cg.C);
  nlohmann::json edges = nlohmann::json::array();
  for (std::int32_t u = 0; u < cg.size(); ++u)
    for (auto v : cg.g.neighbors(u))
      if (u < v) edges.push_back({u, v});
  doc["edges"] = std::move(edges);
  nlohmann::json faces;
  static const char* names[] = {"F1_0", "F1_1", "F2_0", "F2_1", "F3_0", "F3_1"};
  for (int f = 0; f < 6; ++f) faces[names[f]] = cg.face_set(f / 2, f % 2);
  doc["faces"] = std::move(faces);
  return doc.dump();
}

GraphStore::GraphStore(IfsSpec spec, BuildOptions opts, std::string cache_dir)
    : spec_(std::move(spec)), opts_(opts), cache_dir_(std::move(cache_dir)) {}

std::shared_ptr<const CellGraph> GraphStore::get(int n) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = graphs_.find(n);
  if (it != graphs_.end()) return it->second;
  std::string path;
  if (!cache_dir_.empty()) {
    char name[96];
    std::snprintf(name, sizeof name, "graph-%016llx-n%d-p%d.bin",
                  static_cast<unsigned long long>(spec_hash(spec_)), n,
                  opts_.point_contact_edges ? 1 : 0);
    path = (std::filesystem::path(cache_dir_) / name).string();
    if (auto cached = load_graph(spec_, n, opts_.point_contact_edges, path)) {
      auto ptr = std::make_shared<const CellGraph>(std::move(*cached));
      graphs_[n] = ptr;
      return ptr;
    }
  }
  auto ptr = std::make_shared<const CellGraph>(build_graph(spec_, n, opts_));
  if (!path.empty()) {
    std::filesystem::create_directories(cache_dir_);
    save_graph(*ptr, path);
  }
  graphs_[n] = ptr;
  return ptr;
}

}  // namespace usc
