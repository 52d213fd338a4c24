#include "usc/spectral.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace usc {

double dirichlet_energy(const Graph& g, const std::vector<double>& f,
                        const std::vector<std::uint8_t>& A) {
  double e = 0.0;
  for (std::int32_t u = 0; u < g.size(); ++u) {
    if (!A.empty() && !A[u]) continue;
    for (auto v : g.neighbors(u)) {
      if (!A.empty() && !A[v]) continue;
      double d = f[u] - f[v];
      e += d * d;
    }
  }
  return e;
}

double dirichlet_energy(const Graph& g, const Vec& f) {
  return dirichlet_energy(g, std::vector<double>(f.data(), f.data() + f.size()));
}

LambdaResult lambda_n(const Graph& g, const SolveOptions& opts) {
  const auto n = g.size();
  if (n < 2) throw Error("lambda_n needs at least two vertices");
  if (!is_connected(g)) throw Error("lambda_n: graph is disconnected");
  LambdaResult out;
  SpMat L = laplacian(g);
  bool dense = opts.method == SolveOptions::Method::dense ||
               (opts.method == SolveOptions::Method::automatic && n <= opts.dense_limit);
  if (dense) {
    Eigen::MatrixXd D = Eigen::MatrixXd(L);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D);
    if (es.info() != Eigen::Success) throw SolverError("dense eigensolver failed");
    double mu2 = es.eigenvalues()[1];
    out.value = 1.0 / mu2;
    out.eigenvector = es.eigenvectors().col(1);
    out.residual = (L * out.eigenvector - mu2 * out.eigenvector).norm();
    out.method = "dense";
    out.iterations = 1;
    return out;
  }
  // λₙ is the top eigenvalue of L⁺ on the mean-zero subspace.
  PinvSolver solver(g, opts);
  Vec ones = Vec::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  auto op = [&](const Vec& x) { return solver.solve(x); };
  auto res = lanczos_largest(op, n, &ones, std::max(opts.tolerance, 1e-12), 300);
  if (!res.converged) throw SolverError("Lanczos did not converge for lambda_n");
  out.value = res.value;
  out.eigenvector = res.vector;
  out.residual = (L * res.vector - res.vector / res.value).norm();
  out.method = "lanczos";
  out.iterations = res.iterations;
  return out;
}

ResistanceResult effective_resistance(const Graph& g, const std::vector<std::int32_t>& A,
                                      const std::vector<std::int32_t>& B,
                                      const SolveOptions& opts) {
  if (A.empty() || B.empty()) throw Error("effective_resistance: empty terminal set");
  const auto n = g.size();
  std::vector<std::int8_t> role(n, 0);
  for (auto a : A) role[a] = 1;
  for (auto b : B) {
    if (role[b] == 1) throw Error("effective_resistance: A and B intersect");
    role[b] = 2;
  }
  std::vector<std::int32_t> interior;
  for (std::int32_t v = 0; v < n; ++v)
    if (role[v] == 0) interior.push_back(v);
  SpMat L = laplacian(g);
  ResistanceResult out;
  out.potential = Vec::Zero(n);
  for (auto b : B) out.potential[b] = 1.0;
  if (!interior.empty()) {
    std::vector<std::int32_t> pos(n, -1);
    for (std::size_t i = 0; i < interior.size(); ++i) pos[interior[i]] = static_cast<std::int32_t>(i);
    Vec rhs = Vec::Zero(static_cast<Eigen::Index>(interior.size()));
    for (std::size_t i = 0; i < interior.size(); ++i)
      for (auto v : g.neighbors(interior[i]))
        if (role[v] == 2) rhs[static_cast<Eigen::Index>(i)] += 2.0;
    SubsetSolver solver(L, interior, opts);
    Vec x = solver.solve(rhs, &out.stats);
    for (std::size_t i = 0; i < interior.size(); ++i) out.potential[interior[i]] = x[static_cast<Eigen::Index>(i)];
  } else {
    out.stats.method = "none";
  }
  double e = dirichlet_energy(g, out.potential);
  if (e <= 0) throw SolverError("effective_resistance: A and B are disconnected");
  out.value = 1.0 / e;
  return out;
}

ResistanceResult face_resistance(const CellGraph& cg, const SolveOptions& opts) {
  return effective_resistance(cg.g, cg.face_set(0, 0), cg.face_set(0, 1), opts);
}

std::vector<Word> default_probes(const IfsSpec& spec, int sample, std::uint64_t seed) {
  std::vector<Word> out;
  for (int i = 0; i < spec.N(); ++i) out.push_back({i});
  std::mt19937_64 rng(seed);
  std::vector<std::int64_t> all(spec.N() * spec.N());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<std::int64_t>(i);
  std::shuffle(all.begin(), all.end(), rng);
  for (int i = 0; i < sample && i < static_cast<int>(all.size()); ++i)
    out.push_back(index_word(all[i], 2, spec.N()));
  return out;
}

RProbeReport R_probe(GraphStore& store, int m, const std::vector<Word>& probes, int L_star,
                     const SolveOptions& opts) {
  const auto& spec = store.spec();
  const std::int64_t block = int_pow(spec.N(), m);
  RProbeReport out;
  bool any = false;
  for (const auto& w : probes) {
    ProbeValue pv;
    pv.word = w;
    int lw = static_cast<int>(w.size());
    auto gw = store.get(lw);
    auto wi = static_cast<std::int32_t>(word_index(w, spec.N()));
    auto d = bfs_distances(gw->g, wi);
    // Blocks within L_star form 𝒩_w; one more ring supplies the B terminals
    // that touch it. Farther blocks cannot meet 𝒩_w·W_m.
    std::vector<std::int32_t> near, ring;
    for (std::int32_t v = 0; v < gw->size(); ++v) {
      if (d[v] >= 0 && d[v] <= L_star) near.push_back(v);
    }
    if (static_cast<std::int32_t>(near.size()) == gw->size()) {
      pv.skipped = true;
      out.probes.push_back(pv);
      continue;
    }
    std::vector<std::uint8_t> in_near(gw->size(), 0);
    for (auto v : near) in_near[v] = 1;
    {
      std::vector<std::uint8_t> mark(gw->size(), 0);
      for (auto u : near)
        for (std::int32_t v = 0; v < gw->size(); ++v) {
          if (in_near[v] || mark[v]) continue;
          // cube contact at level |w|, independent of adjacency rules
          auto a = gw->lat.corner(u), b = gw->lat.corner(v);
          bool touch = true;
          for (int o = 0; o < 3; ++o)
            if (std::max(a[o], b[o]) > std::min(a[o], b[o]) + gw->lat.side) touch = false;
          if (touch) {
            mark[v] = 1;
            ring.push_back(v);
          }
        }
      std::sort(ring.begin(), ring.end());
    }
    std::vector<std::int32_t> blocks = near;
    blocks.insert(blocks.end(), ring.begin(), ring.end());
    std::sort(blocks.begin(), blocks.end());
    std::int64_t total = static_cast<std::int64_t>(blocks.size()) * block;
    if (store.options().max_vertices > 0 && total > store.options().max_vertices)
      throw BudgetExceeded("R_probe at m=" + std::to_string(m) + " needs " +
                           std::to_string(total) + " vertices");
    std::vector<std::int64_t> idx;
    idx.reserve(total);
    for (auto b : blocks)
      for (std::int64_t s = 0; s < block; ++s) idx.push_back(b * block + s);
    Lattice lat = make_lattice(spec, lw + m);
    Graph g = build_adjacency(spec, lat, gw->C, idx, store.options().point_contact_edges);
    std::vector<std::int32_t> A, B;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      auto b = static_cast<std::int32_t>(idx[i] / block);
      if (b == wi) A.push_back(static_cast<std::int32_t>(i));
      else if (!in_near[b]) B.push_back(static_cast<std::int32_t>(i));
    }
    pv.value = effective_resistance(g, A, B, opts).value;
    if (!any || pv.value < out.value) out.value = pv.value;
    any = true;
    out.probes.push_back(pv);
  }
  if (!any) out.value = std::numeric_limits<double>::quiet_NaN();
  return out;
}

TwoBlock two_block_graph(const IfsSpec& spec, int level, std::int64_t w, std::int64_t w_prime,
                         int m, const BuildOptions& bopts) {
  const std::int64_t block = int_pow(spec.N(), m);
  if (bopts.max_vertices > 0 && 2 * block > bopts.max_vertices)
    throw BudgetExceeded("two-block graph needs " + std::to_string(2 * block) + " vertices");
  std::vector<std::int64_t> idx;
  idx.reserve(2 * block);
  for (std::int64_t s = 0; s < block; ++s) idx.push_back(w * block + s);
  for (std::int64_t s = 0; s < block; ++s) idx.push_back(w_prime * block + s);
  Lattice lat = make_lattice(spec, level + m);
  TwoBlock tb;
  tb.g = build_adjacency(spec, lat, lemma28_constants(spec).c, idx, bopts.point_contact_edges);
  tb.block = static_cast<std::int32_t>(block);
  return tb;
}

SigmaResult sigma_pair(const IfsSpec& spec, int level, std::int64_t w, std::int64_t w_prime, int m,
                       const SolveOptions& opts, const BuildOptions& bopts) {
  auto tb = two_block_graph(spec, level, w, w_prime, m, bopts);
  if (!is_connected(tb.g))
    throw Error("two-block graph is disconnected: cells " + std::to_string(w) + " and " +
                std::to_string(w_prime) + " at level " + std::to_string(level));
  const auto n = tb.g.size();
  SigmaResult out;
  out.a = Vec::Zero(n);
  for (std::int32_t i = 0; i < n; ++i) out.a[i] = i < tb.block ? 1.0 / tb.block : -1.0 / tb.block;
  PinvSolver solver(tb.g, opts);
  out.maximizer = solver.solve(out.a);
  out.value = static_cast<double>(int_pow(spec.N(), m)) * out.a.dot(out.maximizer);
  return out;
}

std::vector<CensusPair> pair_census(GraphStore& store, int max_level) {
  std::vector<CensusPair> out;
  std::map<std::string, bool> seen;
  for (int L = 1; L <= max_level; ++L) {
    auto g = store.get(L);
    for (std::int32_t u = 0; u < g->size(); ++u)
      for (auto v : g->g.neighbors(u)) {
        if (v < u) continue;
        auto a = g->lat.corner(u), b = g->lat.corner(v);
        std::array<std::int64_t, 3> d;
        for (int o = 0; o < 3; ++o) d[o] = std::abs(b[o] - a[o]);
        std::sort(d.begin(), d.end());
        int ga = g->grid_word[u], gb = g->grid_word[v];
        std::ostringstream key;
        key << "d=(" << Rational(d[0], g->lat.side) << "," << Rational(d[1], g->lat.side) << ","
            << Rational(d[2], g->lat.side) << ") grid=" << std::min(ga, gb) << std::max(ga, gb);
        if (seen.emplace(key.str(), true).second) out.push_back({L, u, v, key.str()});
      }
  }
  return out;
}

SigmaReport sigma_m(const IfsSpec& spec, int m, const std::vector<CensusPair>& census,
                    const SolveOptions& opts, const BuildOptions& bopts) {
  if (census.empty()) throw Error("sigma_m: empty pair census");
  SigmaReport out;
  for (const auto& p : census) {
    double s = sigma_pair(spec, p.level, p.w, p.w_prime, m, opts, bopts).value;
    out.entries.emplace_back(p, s);
    out.value = std::max(out.value, s);
  }
  return out;
}

double pinv_quadratic(const PinvSolver& solver, const Vec& v) { return v.dot(solver.solve(v)); }

Vec average_difference(std::int32_t n, const std::vector<std::int32_t>& A,
                       const std::vector<std::int32_t>& B) {
  Vec v = Vec::Zero(n);
  for (auto a : A) v[a] += 1.0 / static_cast<double>(A.size());
  for (auto b : B) v[b] -= 1.0 / static_cast<double>(B.size());
  return v;
}

ScriptR script_R(const CellGraph& cg, const SolveOptions& opts) {
  PinvSolver solver(cg.g, opts);
  ScriptR out;
  auto f10 = cg.face_set(0, 0), f11 = cg.face_set(0, 1), f20 = cg.face_set(1, 0);
  out.R = pinv_quadratic(solver, average_difference(cg.size(), f10, f20));
  out.R_tilde = pinv_quadratic(solver, average_difference(cg.size(), f10, f11));
  return out;
}

BarScriptR bar_script_R(const CellGraph& cg, const SolveOptions& opts) {
  BarScriptR out;
  auto f20 = cg.face_set(1, 0);
  const auto& pinned = cg.face[face_id(0, 0)];
  std::vector<std::int32_t> interior;
  for (std::int32_t v = 0; v < cg.size(); ++v)
    if (!pinned[v]) interior.push_back(v);
  std::vector<std::int32_t> pos(cg.size(), -1);
  for (std::size_t i = 0; i < interior.size(); ++i) pos[interior[i]] = static_cast<std::int32_t>(i);
  Vec a = Vec::Zero(static_cast<Eigen::Index>(interior.size()));
  for (auto v : f20)
    if (pos[v] >= 0) a[pos[v]] = 1.0 / static_cast<double>(f20.size());
  if (a.norm() == 0.0) {
    out.degenerate = true;
    return out;
  }
  SubsetSolver solver(laplacian(cg.g), interior, opts);
  out.value = a.dot(solver.solve(a));
  return out;
}

MeasureSpec example_measure_a(const CellGraph& gm, const CellGraph& gn, std::int32_t w,
                              std::int32_t w_prime) {
  auto ls = boundary_layer_sets(gm, gn, w, w_prime);
  MeasureSpec nu;
  nu.weight.assign(gn.size(), 0.0);
  for (auto v : ls.I) nu.weight[v] = 1.0;
  nu.support = ls.I;
  return nu;
}

MeasureSpec example_measure_b(const CellGraph& cg) {
  auto top = cg.face_set(0, 1);
  auto layers = middle_layers(cg);
  std::vector<std::uint8_t> in_I(cg.size(), 0);
  for (auto v : layers.I) in_I[v] = 1;
  // BFS from the top face; first vertex of Iₙ reached closes a shortest path.
  std::vector<std::int32_t> parent(cg.size(), -2);
  std::vector<std::int32_t> queue;
  for (auto v : top) {
    parent[v] = -1;
    queue.push_back(v);
  }
  std::int32_t hit = -1;
  for (std::size_t h = 0; h < queue.size() && hit < 0; ++h) {
    auto u = queue[h];
    if (in_I[u]) {
      hit = u;
      break;
    }
    for (auto v : cg.g.neighbors(u))
      if (parent[v] == -2) {
        parent[v] = u;
        queue.push_back(v);
      }
  }
  if (hit < 0) throw Error("example measure (b): no path from the top face to the middle layer");
  std::vector<std::int32_t> B;
  for (auto v = hit; v >= 0; v = parent[v]) B.push_back(v);
  const std::int64_t kn = int_pow(cg.spec.k, cg.level);
  const std::int64_t q = cg.lat.q;
  MeasureSpec nu;
  nu.weight.assign(cg.size(), 0.0);
  for (std::int64_t i = 1; i <= kn / 2; ++i) {
    std::int32_t chosen = -1;
    for (auto v : B) {
      auto a = cg.lat.corner(v)[0];
      if ((kn - i) * q <= a && a < (kn - i + 1) * q) {
        chosen = v;
        break;
      }
    }
    if (chosen < 0)
      throw Error("example measure (b): no word at height index i=" + std::to_string(i));
    nu.weight[chosen] += 1.0;
    nu.support.push_back(chosen);
  }
  return nu;
}

double measure_c1(const CellGraph& cg, const MeasureSpec& nu) {
  double total = 0.0;
  for (double x : nu.weight) total += x;
  double c1 = 0.0;
  for (int m = 1; m <= cg.level; ++m) {
    const std::int64_t block = int_pow(cg.spec.N(), cg.level - m);
    std::map<std::int64_t, double> sums;
    for (std::int32_t v = 0; v < cg.size(); ++v)
      if (nu.weight[v] > 0) sums[v / block] += nu.weight[v];
    double mx = 0.0;
    for (auto& [b, s] : sums) mx = std::max(mx, s);
    c1 = std::max(c1, mx / total * std::pow(cg.spec.k, m));
  }
  return c1;
}

AveragedBound averaged_bound_check(const CellGraph& cg, const MeasureSpec& nu, double lambda,
                                   int samples, std::uint64_t seed) {
  AveragedBound out;
  out.c1 = measure_c1(cg, nu);
  const auto n = cg.size();
  double nu_total = 0.0;
  for (double x : nu.weight) nu_total += x;
  const double scale = std::pow(static_cast<double>(cg.spec.N()), -cg.level) * lambda;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> f(n);
  for (int s = 0; s < samples; ++s) {
    switch (s % 3) {
      case 0:
        for (auto& x : f) x = normal(rng);
        break;
      case 1: {
        double fr[3] = {unif(rng) * 3, unif(rng) * 3, unif(rng) * 3};
        for (std::int32_t v = 0; v < n; ++v) {
          auto c = cg.lat.corner(v);
          double arg = 0;
          for (int o = 0; o < 3; ++o) arg += fr[o] * static_cast<double>(c[o]) / static_cast<double>(cg.lat.extent);
          f[v] = std::cos(6.283185307179586 * arg);
        }
        break;
      }
      default: {
        std::int64_t block = int_pow(cg.spec.N(), std::max(0, cg.level - 1));
        std::int64_t pick = static_cast<std::int64_t>(unif(rng) * static_cast<double>(n / block));
        for (std::int32_t v = 0; v < n; ++v) f[v] = v / block == pick ? 1.0 : 0.0;
      }
    }
    double e = dirichlet_energy(cg.g, f);
    if (e <= 0) continue;
    double avg_mu = 0.0, avg_nu = 0.0;
    for (std::int32_t v = 0; v < n; ++v) {
      avg_mu += f[v];
      avg_nu += f[v] * nu.weight[v];
    }
    avg_mu /= n;
    avg_nu /= nu_total;
    out.max_ratio = std::max(out.max_ratio, std::abs(avg_nu - avg_mu) / std::sqrt(scale * e));
    ++out.samples;
  }
  return out;
}

const char* to_string(Quantity q) {
  switch (q) {
    case Quantity::rnf: return "rnf";
    case Quantity::lambda: return "lambda";
    case Quantity::n_over_lambda: return "n_over_lambda";
    case Quantity::script_r: return "scriptR";
    case Quantity::sigma: return "sigma";
    case Quantity::r_probe: return "rprobe";
  }
  return "?";
}

Quantity parse_quantity(const std::string& s) {
  for (auto q : {Quantity::rnf, Quantity::lambda, Quantity::n_over_lambda, Quantity::script_r,
                 Quantity::sigma, Quantity::r_probe})
    if (s == to_string(q)) return q;
  throw Error("unknown quantity '" + s + "'");
}

ScalingFit scaling_fit(Quantity q, const std::vector<std::pair<int, double>>& points, int N, int k) {
  if (points.size() < 2) throw Error("scaling_fit needs at least two levels");
  ScalingFit fit;
  fit.quantity = q;
  fit.points = points;
  const double m = static_cast<double>(points.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [n, v] : points) {
    if (!(v > 0)) throw Error("scaling_fit: non-positive value at level " + std::to_string(n));
    double y = std::log(v);
    sx += n;
    sy += y;
    sxx += static_cast<double>(n) * n;
    sxy += n * y;
  }
  double den = m * sxx - sx * sx;
  if (den == 0) throw Error("scaling_fit: levels must differ");
  fit.slope = (m * sxy - sx * sy) / den;
  fit.intercept = (sy - fit.slope * sx) / m;
  double rss = 0;
  for (auto [n, v] : points) {
    double r = std::log(v) - (fit.intercept + fit.slope * n);
    rss += r * r;
  }
  fit.residual = std::sqrt(rss);
  switch (q) {
    case Quantity::rnf:
    case Quantity::script_r:
    case Quantity::r_probe: fit.rho = std::exp(-fit.slope); break;
    case Quantity::lambda:
    case Quantity::sigma: fit.rho = N * std::exp(-fit.slope); break;
    case Quantity::n_over_lambda: fit.rho = std::exp(fit.slope); break;
  }
  fit.d_H = std::log(static_cast<double>(N)) / std::log(static_cast<double>(k));
  fit.d_W = fit.d_H - std::log(fit.rho) / std::log(static_cast<double>(k));
  return fit;
}

std::vector<Lemma81Row> lemma81_check(GraphStore& store, const std::vector<int>& levels,
                                      const SolveOptions& opts) {
  const int k = store.spec().k;
  const double alpha = static_cast<double>(k) / (4.0 * k - 4.0);
  std::vector<Lemma81Row> rows;
  for (int n : levels) {
    Lemma81Row r;
    r.n = n;
    r.rnf = face_resistance(*store.get(n), opts).value;
    r.bound = std::pow(alpha, n);
    r.pass = r.rnf <= r.bound;
    rows.push_back(r);
  }
  return rows;
}

std::vector<std::pair<int, double>> ConstantsTable::series(const std::string& quantity) const {
  std::vector<std::pair<int, double>> out;
  for (const auto& r : rows)
    if (r.quantity == quantity) out.emplace_back(r.level, r.value);
  std::sort(out.begin(), out.end());
  return out;
}

std::string ConstantsTable::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "level,quantity,value,method,tolerance,iterations\n";
  for (const auto& r : rows)
    os << r.level << ',' << r.quantity << ',' << r.value << ',' << r.method << ','
       << r.tolerance << ',' << r.iterations << '\n';
  return os.str();
}

std::string ConstantsTable::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows)
    arr.push_back({{"level", r.level},
                   {"quantity", r.quantity},
                   {"value", r.value},
                   {"method", r.method},
                   {"tolerance", r.tolerance},
                   {"iterations", r.iterations}});
  return nlohmann::json{{"rows", arr}}.dump(2);
}

namespace {

ConstantRow compute_one(GraphStore& store, int n, const std::string& q, const SolveOptions& opts) {
  ConstantRow row;
  row.level = n;
  row.quantity = q;
  row.tolerance = opts.tolerance;
  if (q == "lambda") {
    auto r = lambda_n(store.get(n)->g, opts);
    row.value = r.value;
    row.method = r.method;
    row.iterations = r.iterations;
  } else if (q == "rnf") {
    auto r = face_resistance(*store.get(n), opts);
    row.value = r.value;
    row.method = r.stats.method;
    row.iterations = r.stats.iterations;
  } else if (q == "scriptR" || q == "scriptR_tilde") {
    auto r = script_R(*store.get(n), opts);
    row.value = q == "scriptR" ? r.R : r.R_tilde;
    row.method = "pinv";
  } else if (q == "barR") {
    auto r = bar_script_R(*store.get(n), opts);
    row.value = r.value;
    row.method = r.degenerate ? "degenerate" : "dirichlet";
  } else if (q == "sigma") {
    auto census = pair_census(store, std::min(2, std::max(1, n)));
    BuildOptions b = store.options();
    row.value = sigma_m(store.spec(), n, census, opts, b).value;
    row.method = "census:" + std::to_string(census.size());
  } else if (q == "rprobe") {
    auto r = R_probe(store, n, default_probes(store.spec(), 8, 1), 10, opts);
    row.value = r.value;
    row.method = "probes:" + std::to_string(r.probes.size());
  } else {
    throw Error("unknown quantity '" + q + "'");
  }
  return row;
}

}  // namespace

ConstantsTable compute_constants(GraphStore& store, const std::vector<int>& levels,
                                 const std::vector<std::string>& quantities,
                                 const SolveOptions& opts, int workers) {
  std::vector<std::pair<int, std::string>> jobs;
  for (int n : levels)
    for (const auto& q : quantities) jobs.emplace_back(n, q);
  // Build graphs up front so workers only read them.
  for (int n : levels) store.get(n);
  ConstantsTable table;
  table.rows.resize(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::size_t next = 0;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      std::size_t j;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= jobs.size()) return;
        j = next++;
      }
      try {
        table.rows[j] = compute_one(store, jobs[j].first, jobs[j].second, opts);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  for (int t = 0; t < std::max(1, workers); ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return table;
}

}  // namespace usc
