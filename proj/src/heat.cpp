#include "usc/heat.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace usc {

namespace {

template <class F>
void parallel_for(int count, int workers, F&& body) {
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> threads;
  for (int w = 0; w < workers; ++w)
    threads.emplace_back([&] {
      for (int i = next++; i < count; i = next++) body(i);
    });
  for (auto& t : threads) t.join();
}

struct LineFit {
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxx > 0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  f.r2 = (sxx > 0 && syy > 0) ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

// Subgraph induced on `verts` (sorted), relabelled 0..|verts|-1.
Graph induced(const Graph& g, const std::vector<std::int32_t>& verts, std::vector<std::int32_t>& local) {
  std::fill(local.begin(), local.end(), -1);
  for (std::size_t i = 0; i < verts.size(); ++i) local[verts[i]] = static_cast<std::int32_t>(i);
  std::vector<std::pair<std::int32_t, std::int32_t>> edges;
  for (std::size_t i = 0; i < verts.size(); ++i)
    for (auto v : g.neighbors(verts[i]))
      if (local[v] > static_cast<std::int32_t>(i)) edges.emplace_back(static_cast<std::int32_t>(i), local[v]);
  return Graph::from_edges(static_cast<std::int32_t>(verts.size()), std::move(edges));
}

// Minimal-energy potential: 1 on `one`, 0 off `one ∪ interior`.
std::vector<double> equilibrium(const Graph& g, const SpMat& L, const std::vector<std::int32_t>& one,
                                const std::vector<std::int32_t>& interior,
                                const std::vector<std::uint8_t>& in_one) {
  std::vector<double> f(g.size(), 0.0);
  for (auto v : one) f[v] = 1.0;
  if (interior.empty()) return f;
  Vec rhs(static_cast<Eigen::Index>(interior.size()));
  for (std::size_t i = 0; i < interior.size(); ++i) {
    int c = 0;
    for (auto v : g.neighbors(interior[i])) c += in_one[v];
    rhs[static_cast<Eigen::Index>(i)] = 2.0 * c;
  }
  SubsetSolver solver(L, interior, {});
  Vec x = solver.solve(rhs);
  for (std::size_t i = 0; i < interior.size(); ++i) f[interior[i]] = x[static_cast<Eigen::Index>(i)];
  return f;
}

// max Var_π,B(f) / 𝒟_{2B}(f) over f on 2B.
double ball_poincare(const Graph& g2, const std::vector<std::int32_t>& B_local,
                     const std::vector<double>& piB) {
  const auto m = g2.size();
  const auto b = static_cast<Eigen::Index>(B_local.size());
  if (b < 2) return 0.0;
  SpMat L = laplacian(g2);
  std::vector<std::int32_t> rest(m - 1);
  std::iota(rest.begin(), rest.end(), 1);
  Eigen::SimplicialLDLT<SpMat> ldlt(submatrix(L, rest));
  if (ldlt.info() != Eigen::Success) throw SolverError("ball Poincaré: factorization failed");
  Vec sq(b);
  for (Eigen::Index i = 0; i < b; ++i) sq[i] = std::sqrt(piB[static_cast<std::size_t>(i)]);
  Vec u = sq / sq.norm();
  auto op = [&](const Vec& y) {
    Vec z = sq.cwiseProduct(y - u * u.dot(y));
    Vec x = Vec::Zero(m);
    for (Eigen::Index i = 0; i < b; ++i) x[B_local[static_cast<std::size_t>(i)]] = z[i];
    Vec sol = ldlt.solve(x.tail(m - 1));
    Vec full = Vec::Zero(m);
    full.tail(m - 1) = sol;
    Vec out(b);
    for (Eigen::Index i = 0; i < b; ++i) out[i] = sq[i] * full[B_local[static_cast<std::size_t>(i)]];
    return Vec(out - u * u.dot(out));
  };
  if (b <= 400) {
    Eigen::MatrixXd M(b, b);
    for (Eigen::Index j = 0; j < b; ++j) M.col(j) = op(Vec::Unit(b, j));
    Eigen::MatrixXd S = 0.5 * (M + M.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
    return es.eigenvalues()[b - 1];
  }
  auto r = lanczos_largest(op, static_cast<std::int32_t>(b), &u, 1e-10, 500);
  return r.value;
}

}  // namespace

void heat_step(const WalkKernel& P, double theta, std::vector<double>& row, std::int64_t steps) {
  std::vector<double> next(row.size());
  for (std::int64_t s = 0; s < steps; ++s) {
    for (std::size_t v = 0; v < row.size(); ++v) next[v] = (1.0 - theta) * row[v];
    for (std::int32_t u = 0; u < P.size(); ++u) {
      const double a = theta * row[u];
      if (a == 0.0) continue;
      for (auto i = P.offsets[u]; i < P.offsets[u + 1]; ++i) next[P.col[i]] += a * P.prob[i];
    }
    row.swap(next);
  }
}

std::vector<KernelSnapshot> heat_rows(const WalkKernel& P, const std::vector<std::int32_t>& sources,
                                      const std::vector<std::int64_t>& times, const HeatOptions& opts) {
  if (!(opts.theta > 0.0 && opts.theta <= 1.0)) throw Error("heat_rows: theta must lie in (0,1]");
  if (!std::is_sorted(times.begin(), times.end())) throw Error("heat_rows: times must be sorted");
  if (!times.empty() && times.front() < 0) throw Error("heat_rows: negative time");
  if (!times.empty() && times.back() > opts.max_time)
    throw BudgetExceeded("heat_rows: time " + std::to_string(times.back()) + " exceeds the budget " +
                         std::to_string(opts.max_time));
  for (auto s : sources)
    if (s < 0 || s >= P.size()) throw Error("heat_rows: source out of range");

  std::vector<KernelSnapshot> out(times.size());
  for (std::size_t t = 0; t < times.size(); ++t) {
    auto& snap = out[t];
    snap.level = opts.level;
    snap.theta = opts.theta;
    snap.time = times[t];
    snap.sources = sources;
    snap.rows.resize(sources.size());
    snap.time_scale = opts.time_scale;
    snap.space_scale = opts.space_scale;
  }
  std::vector<std::vector<double>> drift(sources.size(), std::vector<double>(times.size(), 0.0));
  parallel_for(static_cast<int>(sources.size()), opts.workers, [&](int s) {
    std::vector<double> row(P.size(), 0.0);
    row[sources[s]] = 1.0;
    std::int64_t now = 0;
    for (std::size_t t = 0; t < times.size(); ++t) {
      heat_step(P, opts.theta, row, times[t] - now);
      now = times[t];
      double sum = std::accumulate(row.begin(), row.end(), 0.0);
      drift[s][t] = std::abs(sum - 1.0);
      if (drift[s][t] > 1e-14)
        for (auto& x : row) x /= sum;
      out[t].rows[s] = row;
    }
  });
  for (std::size_t t = 0; t < times.size(); ++t)
    for (std::size_t s = 0; s < sources.size(); ++s) out[t].drift = std::max(out[t].drift, drift[s][t]);
  return out;
}

std::vector<std::int64_t> dyadic_times(std::int64_t hi) {
  std::vector<std::int64_t> t;
  for (std::int64_t x = 1; x <= hi; x *= 2) t.push_back(x);
  return t;
}

WalkKernel graph_kernel(const Graph& g) {
  WalkKernel K;
  K.kind = WalkKernel::Kind::cell;
  for (std::int32_t v = 0; v < g.size(); ++v) {
    const int d = g.degree(v);
    if (d == 0) throw Error("graph_kernel: isolated vertex " + std::to_string(v));
    for (auto w : g.neighbors(v)) {
      K.col.push_back(w);
      K.num.push_back(1);
      K.den.push_back(d);
      K.prob.push_back(1.0 / d);
    }
    K.offsets.push_back(static_cast<std::int64_t>(K.col.size()));
    K.pi.push_back(d);
  }
  return K;
}

Graph torus_graph(int L) {
  if (L < 3) throw Error("torus_graph: L must be at least 3");
  auto id = [L](int x, int y, int z) { return static_cast<std::int32_t>((z * L + y) * L + x); };
  std::vector<std::pair<std::int32_t, std::int32_t>> edges;
  for (int z = 0; z < L; ++z)
    for (int y = 0; y < L; ++y)
      for (int x = 0; x < L; ++x) {
        edges.emplace_back(id(x, y, z), id((x + 1) % L, y, z));
        edges.emplace_back(id(x, y, z), id(x, (y + 1) % L, z));
        edges.emplace_back(id(x, y, z), id(x, y, (z + 1) % L));
      }
  return Graph::from_edges(L * L * L, std::move(edges));
}

Graph complete_graph(int n) {
  std::vector<std::pair<std::int32_t, std::int32_t>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  return Graph::from_edges(n, std::move(edges));
}

std::pair<std::int64_t, std::int64_t> diffusive_window(const WalkKernel& P, double lambda, double theta,
                                                      std::int64_t floor) {
  double mean_pi = 0.0;
  for (auto p : P.pi) mean_pi += static_cast<double>(p);
  mean_pi /= std::max<std::int32_t>(1, P.size());
  return {floor, static_cast<std::int64_t>(std::floor(mean_pi * lambda / theta))};
}

SubGaussianFit subgaussian_fit(const std::vector<KernelSnapshot>& snapshots,
                               const std::vector<std::int64_t>& pi,
                               const std::vector<std::vector<std::int32_t>>& distances, double d_H,
                               double d_W, std::int64_t window_lo, std::int64_t window_hi) {
  SubGaussianFit fit;
  fit.d_H = d_H;
  fit.d_W = d_W;
  fit.predicted = -d_H / d_W;
  fit.window_lo = window_lo;
  fit.window_hi = window_hi;
  std::vector<const KernelSnapshot*> in;
  for (const auto& s : snapshots)
    if (s.time >= window_lo && s.time <= window_hi && s.time > 0) {
      if (!in.empty() && in.back()->time == s.time) continue;
      in.push_back(&s);
      fit.times.push_back(s.time);
    }
  if (in.size() < 5)
    throw Error("subgaussian_fit: only " + std::to_string(in.size()) + " snapshot times in [" +
                std::to_string(window_lo) + ", " + std::to_string(window_hi) +
                "]; the level is too small, use a larger n");
  const auto& sources = in.front()->sources;
  if (distances.size() != sources.size()) throw Error("subgaussian_fit: one distance row per source");

  double s_slope = 0, s_int = 0, s_r2 = 0;
  for (std::size_t s = 0; s < sources.size(); ++s) {
    std::vector<double> x, y;
    for (auto* snap : in) {
      double p = snap->rows[s][sources[s]] / static_cast<double>(pi[sources[s]]);
      x.push_back(std::log(static_cast<double>(snap->time)));
      y.push_back(std::log(p));
    }
    auto f = fit_line(x, y);
    fit.source_slopes.push_back(f.slope);
    s_slope += f.slope;
    s_int += f.intercept;
    s_r2 += f.r2;
  }
  const double ns = static_cast<double>(sources.size());
  fit.on_slope = s_slope / ns;
  fit.on_intercept = s_int / ns;
  fit.on_r2 = s_r2 / ns;

  const auto* last = in.back();
  fit.off_time = last->time;
  const double t = static_cast<double>(last->time);
  std::vector<double> x, y;
  for (std::size_t s = 0; s < sources.size(); ++s) {
    const auto& d = distances[s];
    int dmax = *std::max_element(d.begin(), d.end());
    std::vector<double> sum(dmax + 1, 0.0);
    std::vector<int> cnt(dmax + 1, 0);
    for (std::size_t v = 0; v < d.size(); ++v) {
      if (d[v] < 0) continue;
      sum[d[v]] += last->rows[s][v] / static_cast<double>(pi[v]);
      ++cnt[d[v]];
    }
    double prev = -1.0;
    for (int r = 0; r <= dmax; ++r) {
      if (cnt[r] == 0) continue;
      double avg = sum[r] / cnt[r];
      if (prev >= 0.0 && avg > prev * (1.0 + 1e-9)) ++fit.monotone_violations;
      prev = avg;
      if (r == 0 || r > t || !(avg > 1e-280)) continue;
      x.push_back(std::pow(std::pow(r, d_W) / t, 1.0 / (d_W - 1.0)));
      y.push_back(std::log(avg));
    }
  }
  fit.off_points = static_cast<int>(x.size());
  if (x.size() >= 2) {
    auto f = fit_line(x, y);
    fit.off_slope = f.slope;
    fit.off_intercept = f.intercept;
    fit.off_r2 = f.r2;
  }
  return fit;
}

BallCheckReport ball_checks(GraphStore& store, int n, double d_H, double d_W, const BallOptions& opts) {
  auto cg = store.get(n);
  const Graph& g = cg->g;
  const auto V = g.size();
  auto pi = pi_measure(*cg);
  SpMat L = laplacian(g);

  std::vector<std::int32_t> order(V);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(opts.seed);
  std::shuffle(order.begin(), order.end(), rng);
  const int nc = std::min<int>(opts.centers, V);
  if (nc == 0) throw Error("ball_checks: no admissible centres");
  std::vector<std::int32_t> centers(order.begin(), order.begin() + nc);

  // Coarser graphs for the block tent, levels n-m for m = 1..n-1.
  std::vector<std::shared_ptr<const CellGraph>> coarse(n + 1);
  for (int m = 1; m < n; ++m) coarse[m] = store.get(n - m);
  const int N = cg->spec.N();

  BallCheckReport rep;
  rep.level = n;
  rep.d_H = d_H;
  rep.d_W = d_W;
  std::vector<std::vector<BallSample>> per(nc);
  std::vector<int> skipped(nc, 0);

  parallel_for(nc, opts.workers, [&](int ci) {
    const auto c = centers[ci];
    auto d = bfs_distances(g, c);
    std::vector<std::int32_t> local(V, -1);
    for (int r : opts.radii) {
      std::vector<std::int32_t> B, B2, ring;
      for (std::int32_t v = 0; v < V; ++v) {
        if (d[v] < 0) continue;
        if (d[v] < r) B.push_back(v);
        if (d[v] < 2 * r) B2.push_back(v);
        if (d[v] >= r && d[v] < 2 * r) ring.push_back(v);
      }
      if (static_cast<std::int32_t>(B2.size()) == V) {
        ++skipped[ci];
        continue;
      }
      BallSample s;
      s.center = c;
      s.r = r;
      s.size = static_cast<std::int32_t>(B.size());
      s.size2 = static_cast<std::int32_t>(B2.size());
      double vol = 0.0;
      std::vector<double> piB;
      for (auto v : B) {
        vol += static_cast<double>(pi[v]);
        piB.push_back(static_cast<double>(pi[v]));
      }
      s.volume = vol / std::pow(r, d_H);

      Graph g2 = induced(g, B2, local);
      std::vector<std::int32_t> B_local;
      for (auto v : B) B_local.push_back(local[v]);
      s.poincare = ball_poincare(g2, B_local, piB) / std::pow(r, d_W);

      std::vector<std::uint8_t> inB(V, 0);
      for (auto v : B) inB[v] = 1;
      auto psi = equilibrium(g, L, B, ring, inB);
      s.capacity = dirichlet_energy(g, psi) / std::pow(r, d_H - d_W);

      // Block tent: coarsest m whose L*-neighbourhoods of the blocks meeting B stay in 2B.
      std::vector<std::uint8_t> in2(V, 0);
      for (auto v : B2) in2[v] = 1;
      for (int m = n - 1; m >= 0; --m) {
        const std::int64_t bs = int_pow(N, m);
        std::vector<std::int32_t> blocks;
        for (auto v : B) blocks.push_back(static_cast<std::int32_t>(v / bs));
        std::sort(blocks.begin(), blocks.end());
        blocks.erase(std::unique(blocks.begin(), blocks.end()), blocks.end());
        const Graph& gb = m == 0 ? g : coarse[m]->g;
        std::vector<std::vector<std::int32_t>> nbhd;
        bool ok = true;
        for (auto w : blocks) {
          auto nb = neighborhood(gb, w, opts.tent_L_star);
          for (auto u : nb)
            for (std::int64_t v = u * bs; v < (u + 1) * bs && ok; ++v) ok = in2[v] != 0;
          if (!ok) break;
          nbhd.push_back(std::move(nb));
        }
        if (!ok) continue;
        std::vector<double> tent(V, 0.0);
        for (std::size_t i = 0; i < blocks.size(); ++i) {
          std::vector<std::int32_t> one, inner;
          std::vector<std::uint8_t> in_one(V, 0);
          for (std::int64_t v = blocks[i] * bs; v < (blocks[i] + 1) * bs; ++v) {
            one.push_back(static_cast<std::int32_t>(v));
            in_one[v] = 1;
          }
          for (auto u : nbhd[i])
            if (u != blocks[i])
              for (std::int64_t v = u * bs; v < (u + 1) * bs; ++v) inner.push_back(static_cast<std::int32_t>(v));
          std::sort(inner.begin(), inner.end());
          auto f = equilibrium(g, L, one, inner, in_one);
          for (std::int32_t v = 0; v < V; ++v) tent[v] = std::max(tent[v], f[v]);
        }
        s.tent = dirichlet_energy(g, tent) / std::pow(r, d_H - d_W);
        s.tent_depth = m;
        break;
      }
      per[ci].push_back(s);
    }
  });

  auto widen = [](Band& b, double x, bool first) {
    if (first) {
      b.min = b.max = x;
    } else {
      b.min = std::min(b.min, x);
      b.max = std::max(b.max, x);
    }
  };
  bool first = true, first_tent = true;
  for (int ci = 0; ci < nc; ++ci) {
    rep.skipped += skipped[ci];
    for (auto& s : per[ci]) {
      widen(rep.volume, s.volume, first);
      if (s.size >= 2) widen(rep.poincare, s.poincare, first);
      widen(rep.capacity, s.capacity, first);
      if (s.tent_depth >= 0) {
        widen(rep.tent, s.tent, first_tent);
        first_tent = false;
      }
      first = false;
      rep.samples.push_back(s);
    }
  }
  if (rep.samples.empty()) throw Error("ball_checks: every ball covers the graph; use a larger level");
  return rep;
}

HolderEstimate holder_estimate(const std::vector<KernelSnapshot>& snapshots, const Graph& g,
                               const std::vector<std::int64_t>& pi, double d_W, int source) {
  if (snapshots.size() < 2) throw Error("holder_estimate: need at least two snapshot times");
  const auto& last = snapshots.back();
  const double t0 = static_cast<double>(last.time);
  if (t0 <= 0) throw Error("holder_estimate: the latest snapshot must have positive time");
  const auto x = last.sources.at(static_cast<std::size_t>(source));
  auto d = bfs_distances(g, x);
  const double ref = last.rows[source][x] / static_cast<double>(pi[x]);

  HolderEstimate est;
  std::vector<double> lx, ly;
  for (double delta = 0.5; delta * t0 >= 1.0; delta /= 2.0) {
    const double rad = std::pow(delta * t0, 1.0 / d_W);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    int times = 0;
    for (const auto& snap : snapshots) {
      if (std::abs(static_cast<double>(snap.time) - t0) > delta * t0) continue;
      ++times;
      const auto& row = snap.rows[source];
      for (std::size_t v = 0; v < row.size(); ++v) {
        if (d[v] < 0 || d[v] > rad) continue;
        double p = row[v] / static_cast<double>(pi[v]);
        lo = std::min(lo, p);
        hi = std::max(hi, p);
      }
    }
    if (times == 0) continue;
    double osc = (hi - lo) / ref;
    est.profile.emplace_back(delta, osc);
    if (osc > 1e-12) {
      lx.push_back(std::log(delta));
      ly.push_back(std::log(osc));
    }
  }
  constexpr double kCap = 2.0;
  if (lx.size() < 2) {
    est.beta = kCap;
    est.degenerate = true;
    return est;
  }
  est.beta = fit_line(lx, ly).slope;
  if (est.beta > kCap) {
    est.beta = kCap;
    est.degenerate = true;
  }
  return est;
}

std::vector<double> besov_radii(int k, int n) {
  std::vector<double> r;
  for (int j = 0; j <= n; ++j) r.push_back(1.0 / static_cast<double>(int_pow(k, j)));
  return r;
}

BesovReport besov_energy(const CellGraph& cg, const std::vector<double>& f,
                         const std::vector<double>& r_list, double d_H, double d_W) {
  const auto V = cg.size();
  if (static_cast<std::int32_t>(f.size()) != V) throw Error("besov_energy: f has the wrong size");
  const double res = 1.0 / static_cast<double>(int_pow(cg.spec.k, cg.level));
  for (double r : r_list)
    if (r < res * (1.0 - 1e-12) || r > 1.0 + 1e-12)
      throw Error("besov_energy: radius " + std::to_string(r) + " outside [k^-n, 1]");
  std::vector<double> radii = r_list;
  std::sort(radii.begin(), radii.end());
  std::vector<double> r2(radii.size());
  for (std::size_t i = 0; i < radii.size(); ++i) r2[i] = radii[i] * radii[i];

  std::vector<std::array<double, 3>> c(V);
  const double ext = static_cast<double>(cg.lat.extent), half = 0.5 * static_cast<double>(cg.lat.side);
  for (std::int32_t v = 0; v < V; ++v) {
    auto corner = cg.corner(v);
    for (int a = 0; a < 3; ++a) c[v][a] = (static_cast<double>(corner[a]) + half) / ext;
  }
  // bucket[i] collects pairs with r_{i-1} ≤ |Δ| < r_i; prefix sums give I_r.
  const int workers = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  std::vector<std::vector<double>> part(workers, std::vector<double>(radii.size() + 1, 0.0));
  parallel_for(workers, workers, [&](int w) {
    auto& acc = part[w];
    for (std::int32_t x = w; x < V; x += workers)
      for (std::int32_t y = x + 1; y < V; ++y) {
        double dd = 0;
        for (int a = 0; a < 3; ++a) dd += (c[x][a] - c[y][a]) * (c[x][a] - c[y][a]);
        auto i = static_cast<std::size_t>(std::upper_bound(r2.begin(), r2.end(), dd) - r2.begin());
        double df = f[x] - f[y];
        acc[i] += 2.0 * df * df;
      }
  });
  const double mu = 1.0 / static_cast<double>(int_pow(cg.spec.N(), cg.level));
  BesovReport rep;
  double cum = 0.0;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    for (int w = 0; w < workers; ++w) cum += part[w][i];
    double I = std::pow(radii[i], -d_H - d_W) * cum * mu * mu;
    rep.profile.emplace_back(radii[i], I);
    if (I > rep.sup) {
      rep.sup = I;
      rep.r_sup = radii[i];
    }
  }
  rep.energy = dirichlet_energy(cg.g, f);
  rep.normalized = std::pow(static_cast<double>(cg.spec.k), cg.level * (d_W - d_H)) * rep.energy;
  rep.ratio = rep.normalized > 0 ? rep.sup / rep.normalized : 0.0;
  return rep;
}

std::string snapshots_to_csv(const std::vector<KernelSnapshot>& snapshots) {
  std::string out = "source,target,time,value\n";
  char buf[96];
  for (const auto& snap : snapshots)
    for (std::size_t s = 0; s < snap.sources.size(); ++s)
      for (std::size_t v = 0; v < snap.rows[s].size(); ++v) {
        double p = snap.rows[s][v];
        if (p == 0.0) continue;
        std::snprintf(buf, sizeof buf, "%d,%zu,%lld,%.17g\n", snap.sources[s], v,
                      static_cast<long long>(snap.time), p);
        out += buf;
      }
  return out;
}

}  // namespace usc
