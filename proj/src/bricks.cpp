#include "usc/bricks.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace usc {

namespace {

Rational exact_of(double x) { return Rational(x); }

std::vector<double> to_doubles(const std::vector<Rational>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = to_double(v[i]);
  return out;
}

// Group average over the orbits of `perms`, summed in sorted order so every
// orbit member receives the identical double, then clamped to [0,1].
std::vector<double> symmetrize(const std::vector<double>& f,
                               const std::vector<std::vector<std::int32_t>>& perms) {
  const auto n = static_cast<std::int32_t>(f.size());
  std::vector<std::int32_t> orbit_of(n, -1);
  std::vector<double> out(n);
  std::vector<std::int32_t> orbit;
  for (std::int32_t v = 0; v < n; ++v) {
    if (orbit_of[v] >= 0) continue;
    orbit = {v};
    orbit_of[v] = v;
    for (std::size_t h = 0; h < orbit.size(); ++h)
      for (const auto& p : perms) {
        auto u = p[orbit[h]];
        if (orbit_of[u] < 0) {
          orbit_of[u] = v;
          orbit.push_back(u);
        }
      }
    std::vector<double> vals;
    for (auto u : orbit) vals.push_back(f[u]);
    std::sort(vals.begin(), vals.end());
    double s = 0.0;
    for (double x : vals) s += x;
    double avg = std::clamp(s / static_cast<double>(vals.size()), 0.0, 1.0);
    for (auto u : orbit) out[u] = avg;
  }
  return out;
}

Certificate cert(const std::string& name) {
  Certificate c;
  c.name = name;
  return c;
}

void fail(Certificate& c, std::int64_t v, const std::string& detail) {
  if (c.pass) {
    c.pass = false;
    c.vertex = v;
    c.detail = detail;
  }
}

void enforce(const BrickFunction& b, const BrickOptions& opts) {
  if (!opts.strict) return;
  if (auto* c = b.first_failure())
    throw CertificateError(b.kind + " level " + std::to_string(b.level) + ": certificate '" +
                           c->name + "' fails at vertex " + std::to_string(c->vertex) +
                           (c->detail.empty() ? "" : " (" + c->detail + ")"));
}

std::vector<std::uint8_t> prefix_in_face(const CellGraph& g1, int level, int N, int face) {
  // Level-`level` vertices whose first digit lies in the given level-1 face.
  std::vector<std::uint8_t> out(int_pow(N, level), 0);
  const std::int64_t block = int_pow(N, level - 1);
  for (std::int64_t v = 0; v < static_cast<std::int64_t>(out.size()); ++v)
    out[v] = g1.face[face][v / block];
  return out;
}

const Rational& lookup_exact(const BrickFunction& b, std::int64_t v) {
  auto it = std::lower_bound(b.vertices.begin(), b.vertices.end(), v);
  if (it == b.vertices.end() || *it != v) throw Error(b.kind + ": vertex outside the domain");
  return b.exact[it - b.vertices.begin()];
}

}  // namespace

Projections projections(const IfsSpec& spec, const Word& w) {
  Rational a = 0, scale = 1;
  for (int d : w) {
    a += spec.cells.at(d)[0] * scale;
    scale /= spec.k;
  }
  return {a, a + scale, a + scale / 2};
}

std::vector<std::int32_t> level_permutation(const IfsSpec& spec, int level, const Isometry& g) {
  auto sigma = digit_permutation(spec, g);
  const int N = spec.N();
  const std::int64_t size = int_pow(N, level);
  std::vector<std::int32_t> perm(size);
  for (std::int64_t v = 0; v < size; ++v) {
    std::int64_t x = v, out = 0, mult = 1;
    for (int j = 0; j < level; ++j) {
      out += sigma[x % N] * mult;
      x /= N;
      mult *= N;
    }
    perm[v] = static_cast<std::int32_t>(out);
  }
  return perm;
}

bool BrickFunction::certified() const { return first_failure() == nullptr; }

const Certificate* BrickFunction::first_failure() const {
  for (const auto& c : certificates)
    if (!c.pass) return &c;
  return nullptr;
}

std::string BrickFunction::to_json() const {
  nlohmann::json vals = nlohmann::json::array();
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    nlohmann::json e{{"v", vertices[i]}, {"x", values[i]}};
    if (!exact.empty()) e["q"] = format_rational(exact[i]);
    vals.push_back(e);
  }
  nlohmann::json certs = nlohmann::json::array();
  for (const auto& c : certificates)
    certs.push_back({{"name", c.name}, {"pass", c.pass}, {"vertex", c.vertex}, {"detail", c.detail}});
  nlohmann::json j{{"kind", kind},           {"level", level},   {"energy", energy},
                   {"energy_ratio", energy_ratio}, {"certificates", certs}, {"values", vals}};
  if (!ladder.empty()) j["ladder"] = ladder;
  return j.dump(2);
}

BrickLadder::BrickLadder(GraphStore& store, BrickOptions opts) : store_(store), opts_(opts) {}

double BrickLadder::lambda(int n) {
  auto it = lambda_.find(n);
  if (it != lambda_.end()) return it->second;
  double l = lambda_n(store_.get(n)->g, opts_.solve).value;
  lambda_[n] = l;
  return l;
}

const HarmonicPair& BrickLadder::harmonic(int m) {
  auto it = h_.find(m);
  if (it != h_.end()) return it->second;
  const auto& spec = store_.spec();
  auto cg = store_.get(m);
  auto g1 = store_.get(1);
  HarmonicPair hp;
  hp.m = m;

  auto r = face_resistance(*cg, opts_.solve);
  std::vector<double> h(r.potential.data(), r.potential.data() + r.potential.size());
  h = symmetrize(h, {level_permutation(spec, m, Isometry::reflect(1)),
                     level_permutation(spec, m, Isometry::reflect(2))});
  hp.R_h = r.value;

  auto bottom = prefix_in_face(*g1, m, spec.N(), face_id(2, 0));
  std::vector<std::int32_t> A;
  for (std::int32_t v = 0; v < cg->size(); ++v)
    if (bottom[v]) A.push_back(v);
  auto r2 = effective_resistance(cg->g, A, cg->face_set(2, 1), opts_.solve);
  std::vector<double> h2(r2.potential.data(), r2.potential.data() + r2.potential.size());
  h2 = symmetrize(h2, {level_permutation(spec, m, Isometry::reflect(0)),
                       level_permutation(spec, m, Isometry::reflect(1))});
  hp.R_hp = r2.value;

  hp.energy_h = dirichlet_energy(cg->g, h);
  hp.energy_hp = dirichlet_energy(cg->g, h2);
  hp.h.resize(h.size());
  hp.hp.resize(h2.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    hp.h[i] = exact_of(h[i]);
    hp.hp[i] = exact_of(h2[i]);
  }
  return h_.emplace(m, std::move(hp)).first->second;
}

const BrickFunction& BrickLadder::g(int m) {
  if (m < 1) throw Error("g_m needs m >= 1");
  auto it = g_.find(m);
  if (it != g_.end()) return it->second;
  const auto& spec = store_.spec();
  const int N = spec.N();
  const int k = spec.k;
  auto g1 = store_.get(1);
  auto cg = store_.get(m);
  const auto& Hm = harmonic(m);
  const std::int64_t block = int_pow(N, m - 1);

  BrickFunction b;
  b.kind = "g";
  b.level = m;
  auto in_dom = prefix_in_face(*g1, m, N, face_id(2, 0));
  for (std::int64_t v = 0; v < cg->size(); ++v)
    if (in_dom[v]) b.vertices.push_back(v);
  std::vector<Rational> a1(N);
  for (int i = 0; i < N; ++i) a1[i] = g1->lat.to_rational(g1->lat.corner(i)[0]);

  if (m == 1) {
    for (auto v : b.vertices) b.exact.push_back(Hm.h[v]);
  } else {
    const auto& Hp = harmonic(m - 1);
    for (auto v : b.vertices) {
      auto i = v / block, w = v % block;
      const Rational& hpw = Hp.hp[w];
      b.exact.push_back(Hm.h[v] * hpw + (a1[i] + Hp.h[w] / k) * (1 - hpw));
    }
  }
  b.values = to_doubles(b.exact);

  // (a) symmetry, range and boundary values
  Certificate sym = cert("a:symmetry_G2"), range = cert("a:range"), zero = cert("a:zero_on_a=0"),
              one = cert("a:one_on_b=1");
  auto perm = level_permutation(spec, m, Isometry::reflect(1));
  for (std::size_t j = 0; j < b.vertices.size(); ++j) {
    auto v = b.vertices[j];
    const auto& x = b.exact[j];
    if (x != lookup_exact(b, perm[v])) fail(sym, v, "g(w) != g(G2 w)");
    if (x < 0 || x > 1) fail(range, v, format_rational(x));
    auto c = cg->lat.corner(v)[0];
    if (c == 0 && x != 0) fail(zero, v, format_rational(x));
    if (c + cg->lat.side == cg->lat.extent && x != 1) fail(one, v, format_rational(x));
  }
  b.certificates = {sym, range, zero, one};

  if (m >= 2) {
    // (c) recursion on i·F̃_{1,3,0}·F̃_{m-2,3,1}
    const auto& gprev = g(m - 1);
    Certificate rec = cert("c:recursion");
    auto prev_dom = prefix_in_face(*g1, m - 1, N, face_id(2, 0));
    std::vector<std::uint8_t> top_m2;
    if (m - 2 >= 1) top_m2 = store_.get(m - 2)->face[face_id(2, 1)];
    const std::int64_t inner = int_pow(N, m - 2);
    std::int64_t checked = 0;
    for (std::size_t j = 0; j < b.vertices.size(); ++j) {
      auto v = b.vertices[j];
      auto i = v / block, w = v % block;
      if (!prev_dom[w]) continue;
      if (!top_m2.empty() && !top_m2[w % inner]) continue;
      ++checked;
      if (b.exact[j] != a1[i] + lookup_exact(gprev, w) / k) fail(rec, v, "g_m != a_i + g_{m-1}/k");
    }
    rec.detail = rec.pass ? "checked " + std::to_string(checked) : rec.detail;
    b.certificates.push_back(rec);

    // (d) grid-plane slices of F̃_{2,3,0}·W_{m-2}
    Certificate grid = cert("d:grid_slices");
    const std::int64_t block2 = int_pow(N, m - 2);
    checked = 0;
    for (std::size_t j = 0; j < b.vertices.size(); ++j) {
      auto v = b.vertices[j];
      auto second = (v / block2) % N;
      if (!g1->face[face_id(2, 0)][second]) continue;
      auto c = cg->lat.corner(v)[0];
      Rational a = cg->lat.to_rational(c), bb = cg->lat.to_rational(c + cg->lat.side);
      for (int l = 1; l < k; ++l) {
        Rational t(l, k);
        if (a == t || bb == t) {
          ++checked;
          if (b.exact[j] != t) fail(grid, v, "expected " + format_rational(t));
        }
      }
    }
    grid.detail = grid.pass ? "checked " + std::to_string(checked) : grid.detail;
    b.certificates.push_back(grid);
  }

  std::vector<std::uint8_t> mask(cg->size(), 0);
  std::vector<double> full(cg->size(), 0.0);
  for (std::size_t j = 0; j < b.vertices.size(); ++j) {
    mask[b.vertices[j]] = 1;
    full[b.vertices[j]] = b.values[j];
  }
  b.energy = dirichlet_energy(cg->g, full, mask);
  b.energy_ratio = b.energy * lambda(m) / std::pow(static_cast<double>(N), m);
  enforce(b, opts_);
  return g_.emplace(m, std::move(b)).first->second;
}

const BrickFunction& BrickLadder::f(int n) {
  if (n < 1) throw Error("f_n needs n >= 1");
  auto it = f_.find(n);
  if (it != f_.end()) return it->second;
  const auto& spec = store_.spec();
  const int N = spec.N();
  const int k = spec.k;
  auto cg = store_.get(n);
  auto g1 = store_.get(1);
  const auto size = cg->size();
  const auto& lat = cg->lat;

  BrickFunction b;
  b.kind = "f";
  b.level = n;
  std::vector<Rational> fp = harmonic(n).h;  // f′_{n,0}
  b.ladder.push_back(dirichlet_energy(cg->g, to_doubles(fp)));
  for (int m = 1; m <= n; ++m) {
    const auto& gm = g(n - m + 1);
    const std::int64_t tail = int_pow(N, n - m + 1), tail1 = int_pow(N, n - m);
    std::shared_ptr<const CellGraph> gw;
    if (m - 1 >= 1) gw = store_.get(m - 1);
    Rational scale = rational_pow(Rational(1, k), m - 1);
    for (std::int32_t v = 0; v < size; ++v) {
      auto w = v / tail, tau = v % tail;
      if (gw && !gw->face[face_id(2, 0)][w]) continue;
      if (!g1->face[face_id(2, 0)][tau / tail1]) continue;
      Rational aw = gw ? gw->lat.to_rational(gw->lat.corner(w)[0]) : Rational(0);
      fp[v] = aw + lookup_exact(gm, tau) * scale;
    }
    b.ladder.push_back(dirichlet_energy(cg->g, to_doubles(fp)));
  }
  const Rational kn = rational_pow(Rational(k), n);
  for (auto& x : fp) x = (kn - 1) / kn * x + 1 / (2 * kn);

  if (n >= 2) {
    Certificate sand = cert("sandwich");
    auto gw = n - 2 >= 1 ? store_.get(n - 2) : nullptr;
    const std::int64_t tail = int_pow(N, 2);
    for (std::int32_t v = 0; v < size; ++v) {
      auto w = v / tail;
      if (gw && !gw->face[face_id(2, 0)][w]) continue;
      if (!g1->face[face_id(2, 0)][(v % tail) / N]) continue;
      Rational aw = gw ? gw->lat.to_rational(gw->lat.corner(w)[0]) : Rational(0);
      Rational bw = aw + rational_pow(Rational(1, k), n - 2);
      if (fp[v] < aw - 1 / (2 * kn) || fp[v] > bw + 1 / (2 * kn)) fail(sand, v, format_rational(fp[v]));
    }
    b.certificates.push_back(sand);
  }

  // f″: snap to c_v on F̃_{n,3,0}
  auto c_of = [&](std::int32_t v) {
    return lat.to_rational(lat.corner(v)[0]) + Rational(lat.side, 2 * lat.extent);
  };
  for (std::int32_t v = 0; v < size; ++v)
    if (cg->face[face_id(2, 0)][v]) fp[v] = c_of(v);

  auto R2 = level_permutation(spec, n, Isometry::reflect(1));
  auto R3 = level_permutation(spec, n, Isometry::reflect(2));
  auto S23 = level_permutation(spec, n, Isometry::swap(1, 2));
  b.exact.resize(size);
  std::int64_t ties = 0;
  for (std::int32_t v = 0; v < size; ++v) {
    auto c = lat.corner(v);
    // tie order (2,0), (2,1), (3,0), (3,1)
    std::array<std::int64_t, 4> d{c[1], lat.extent - c[1] - lat.side, c[2],
                                  lat.extent - c[2] - lat.side};
    int best = 0;
    for (int i = 1; i < 4; ++i)
      if (d[i] < d[best]) best = i;
    if (std::count(d.begin(), d.end(), d[best]) > 1) ++ties;
    switch (best) {
      case 0: b.exact[v] = fp[S23[v]]; break;
      case 1: b.exact[v] = fp[S23[R2[v]]]; break;
      case 2: b.exact[v] = fp[v]; break;
      default: b.exact[v] = fp[R3[v]]; break;
    }
  }
  b.vertices.resize(size);
  std::iota(b.vertices.begin(), b.vertices.end(), 0);
  b.values = to_doubles(b.exact);

  Certificate bnd = cert("boundary_c_w");
  for (std::int32_t v = 0; v < size; ++v)
    if (cg->boundary[v] && b.exact[v] != c_of(v))
      fail(bnd, v, format_rational(b.exact[v]) + " != " + format_rational(c_of(v)));
  Certificate tie = cert("region_ties");
  tie.detail = std::to_string(ties) + " tied vertices, lexicographic (o,s)";
  b.certificates.push_back(bnd);
  b.certificates.push_back(tie);

  b.energy = dirichlet_energy(cg->g, b.values);
  b.energy_ratio = b.energy * lambda(n) / std::pow(static_cast<double>(N), n);
  enforce(b, opts_);
  return f_.emplace(n, std::move(b)).first->second;
}

BrickFunction BrickLadder::cutoff(const Word& w, int n) {
  const auto& spec = store_.spec();
  const int N = spec.N();
  const int m = static_cast<int>(w.size());
  if (m < 1) throw Error("cut-off needs a non-empty word");
  const int L = m + n;
  auto gm = store_.get(m);
  auto gL = store_.get(L);
  auto gn = store_.get(n);
  const auto& fn = f(n);
  const auto wi = static_cast<std::int32_t>(word_index(w, N));

  std::array<std::vector<std::int32_t>, 3> rot;
  rot[0].resize(gn->size());
  std::iota(rot[0].begin(), rot[0].end(), 0);
  rot[1] = level_permutation(spec, n, Isometry::swap(0, 1));
  rot[2] = level_permutation(spec, n, Isometry::swap(0, 2));

  auto near = neighborhood(gm->g, wi, opts_.L_star);
  std::vector<std::uint8_t> in_near(gm->size(), 0);
  for (auto v : near) in_near[v] = 1;

  const Rational cstar = c_star(spec);
  const Rational cs2 = cstar * cstar;
  const double cs = to_double(cstar);
  const double slope = std::sqrt(3.0) / cs;
  const double thr = cs / std::sqrt(3.0);
  // x·√3/c_* ≤ -1 exactly iff x < 0 and 3x² ≥ c_*²; decided in floats away
  // from the threshold and in rationals near it.
  auto clipped = [&](double xd, const Rational& x) {
    if (xd < -thr - 1e-9) return true;
    if (xd > -thr + 1e-9) return false;
    return x < 0 && 3 * x * x >= cs2;
  };

  BrickFunction b;
  b.kind = "cutoff";
  b.level = L;
  b.vertices.resize(gL->size());
  std::iota(b.vertices.begin(), b.vertices.end(), 0);
  b.values.resize(gL->size());
  Certificate plateau = cert("plateau"), support = cert("support"), range = cert("range");
  const std::int64_t block = int_pow(N, n);
  const auto cw = gm->lat.corner(wi);
  for (std::int64_t x = 0; x < gL->size(); ++x) {
    auto v = static_cast<std::int32_t>(x / block);
    auto tau = static_cast<std::int32_t>(x % block);
    auto cv = gm->lat.corner(v);
    double val = 0.0;
    bool any_clip = false, all_nonneg = true;
    for (int o = 0; o < 3; ++o) {
      Rational delta(cv[o] - cw[o], gm->lat.q);
      const Rational& fo = fn.exact[rot[o][tau]];
      Rational xs[2] = {fo + delta, 1 - fo - delta};
      for (const auto& xr : xs) {
        double xd = to_double(xr);
        double t;
        if (clipped(xd, xr)) {
          t = -1.0;
          any_clip = true;
        } else {
          t = std::max(-1.0, slope * xd);
        }
        if (xr < 0) all_nonneg = false;
        val = std::min(val, t);
      }
    }
    val += 1.0;
    b.values[x] = val;
    if (v == wi && !all_nonneg) fail(plateau, x, "a term is negative on w·W_n");
    if (!in_near[v] && !any_clip) fail(support, x, "positive outside N_w·W_n");
    if (val < 0.0 || val > 1.0) fail(range, x, std::to_string(val));
  }
  b.certificates = {plateau, support, range};

  b.energy = dirichlet_energy(gL->g, b.values);
  b.energy_ratio = b.energy * lambda(n) / std::pow(static_cast<double>(N), n);

  Certificate res = cert("resistance_lower_bound");
  std::vector<std::int32_t> A, B;
  for (std::int32_t x = 0; x < gL->size(); ++x) {
    auto v = x / block;
    if (v == wi) A.push_back(x);
    else if (!in_near[v]) B.push_back(x);
  }
  if (B.empty()) {
    res.detail = "N_w covers W_m; resistance infinite";
  } else {
    double R = effective_resistance(gL->g, A, B, opts_.solve).value;
    double lower = 1.0 / b.energy;
    res.detail = "1/D = " + std::to_string(lower) + ", R = " + std::to_string(R);
    if (lower > R * (1.0 + 1e-9)) fail(res, -1, res.detail);
  }
  b.certificates.push_back(res);
  enforce(b, opts_);
  return b;
}

HarmonicPair harmonic_pair(GraphStore& store, int m, const BrickOptions& opts) {
  BrickLadder ladder(store, opts);
  return ladder.harmonic(m);
}

BrickFunction build_g(GraphStore& store, int m, const BrickOptions& opts) {
  BrickLadder ladder(store, opts);
  return ladder.g(m);
}

BrickFunction build_f(GraphStore& store, int n, const BrickOptions& opts) {
  BrickLadder ladder(store, opts);
  return ladder.f(n);
}

BrickFunction build_cutoff(GraphStore& store, const Word& w, int n, const BrickOptions& opts) {
  BrickLadder ladder(store, opts);
  return ladder.cutoff(w, n);
}

}  // namespace usc
