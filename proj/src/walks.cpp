#include "usc/walks.hpp"

#include "usc/philox.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <thread>

namespace usc {

namespace {

using i128 = __int128;

struct RowBuilder {
  WalkKernel& K;
  std::vector<std::tuple<std::int32_t, std::int64_t, std::int64_t>> row;

  void add(std::int32_t v, std::int64_t num, std::int64_t den) { row.emplace_back(v, num, den); }
  void flush() {
    std::sort(row.begin(), row.end());
    for (auto [v, a, b] : row) {
      auto g = std::gcd(a, b);
      K.col.push_back(v);
      K.num.push_back(a / g);
      K.den.push_back(b / g);
      K.prob.push_back(static_cast<double>(a) / static_cast<double>(b));
    }
    K.offsets.push_back(static_cast<std::int64_t>(K.col.size()));
    row.clear();
  }
};

void require_stochastic(const WalkKernel& K, const char* what) {
  auto chk = verify_kernel(K);
  if (!chk.exact_row_sums)
    throw Error(std::string(what) + ": row " + std::to_string(chk.bad_row) + " does not sum to 1");
  if (!chk.exact_detailed_balance)
    throw Error(std::string(what) + ": detailed balance fails at row " + std::to_string(chk.bad_row));
}

std::vector<std::uint8_t> membership(std::int32_t n, const std::vector<std::int32_t>& S) {
  std::vector<std::uint8_t> m(n, 0);
  for (auto v : S) m[v] = 1;
  return m;
}

// Inverse-CDF step along a sparse row.
inline std::int32_t step(const WalkKernel& P, std::int32_t v, double u) {
  double acc = 0.0;
  const auto b = P.offsets[v], e = P.offsets[v + 1];
  for (auto i = b; i < e; ++i) {
    acc += P.prob[i];
    if (u < acc) return P.col[i];
  }
  return P.col[e - 1];
}

constexpr std::uint64_t kStartIndex = std::numeric_limits<std::uint64_t>::max();

std::int32_t draw_start(const Philox4x32& rng, std::uint64_t t, const std::vector<std::int32_t>& starts) {
  auto i = static_cast<std::size_t>(rng.uniform(t, kStartIndex) * static_cast<double>(starts.size()));
  return starts[std::min(i, starts.size() - 1)];
}

template <class F>
void parallel_chunks(int count, int workers, F&& body) {
  workers = std::max(1, std::min(workers, count));
  std::vector<std::thread> threads;
  for (int w = 0; w < workers; ++w) {
    int lo = static_cast<int>(static_cast<std::int64_t>(count) * w / workers);
    int hi = static_cast<int>(static_cast<std::int64_t>(count) * (w + 1) / workers);
    threads.emplace_back([&, lo, hi] {
      for (int i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& t : threads) t.join();
}

// Tracks 𝒯₁..𝒯_J for one path: odd indices look for A, even for B.
struct OscTracker {
  const std::vector<std::uint8_t>& inA;
  const std::vector<std::uint8_t>& inB;
  int J;
  std::vector<std::int64_t> times;
  explicit OscTracker(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b, int j)
      : inA(a), inB(b), J(j), times(j, -1) {}
  int found = 0;
  bool done() const { return found >= J; }
  // Several times can coincide only if A and B meet; they are disjoint here.
  void visit(std::int32_t v, std::int64_t i) {
    while (found < J) {
      bool want_A = found % 2 == 0;
      if (want_A ? inA[v] : inB[v]) {
        times[found++] = i;
      } else {
        break;
      }
    }
  }
};

void aggregate(OscillationTrace& tr) {
  double s1 = 0, q1 = 0, s2 = 0, q2 = 0;
  int n1 = 0, n2 = 0;
  for (const auto& t : tr.times) {
    if (t[0] >= 0) {
      double x = static_cast<double>(t[0]);
      s1 += x;
      q1 += x * x;
      ++n1;
    } else {
      ++tr.censored_T1;
    }
    if (tr.J >= 2) {
      if (t[1] >= 0) {
        double x = static_cast<double>(t[1] - t[0]);
        s2 += x;
        q2 += x * x;
        ++n2;
      } else {
        ++tr.censored_T2;
      }
    }
  }
  auto finish = [](double s, double q, int n, double& mean, double& se) {
    if (n == 0) return;
    mean = s / n;
    double var = n > 1 ? (q - n * mean * mean) / (n - 1) : 0.0;
    se = std::sqrt(std::max(var, 0.0) / n);
  };
  finish(s1, q1, n1, tr.mean_T1, tr.se_T1);
  finish(s2, q2, n2, tr.mean_T21, tr.se_T21);
  int ref = tr.J >= 2 ? tr.censored_T2 : tr.censored_T1;
  tr.censored = tr.paths > 0 && ref * 20 >= tr.paths && ref > 0;
}

}  // namespace

double WalkKernel::entry(std::int32_t u, std::int32_t v) const {
  auto b = col.begin() + offsets[u], e = col.begin() + offsets[u + 1];
  auto it = std::lower_bound(b, e, v);
  return it != e && *it == v ? prob[it - col.begin()] : 0.0;
}

std::uint64_t WalkKernel::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t x) {
    for (int i = 0; i < 8; ++i) {
      h ^= (x >> (8 * i)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  mix(static_cast<std::uint64_t>(size()));
  for (std::size_t i = 0; i < col.size(); ++i) {
    mix(static_cast<std::uint64_t>(col[i]));
    mix(static_cast<std::uint64_t>(num[i]));
    mix(static_cast<std::uint64_t>(den[i]));
  }
  return h;
}

const char* to_string(WalkKernel::Kind kind) {
  switch (kind) {
    case WalkKernel::Kind::cell: return "cell";
    case WalkKernel::Kind::wall: return "wall";
    case WalkKernel::Kind::lazy: return "lazy";
  }
  return "?";
}

WalkKernel build_kernel(const CellGraph& cg) {
  WalkKernel K;
  K.kind = WalkKernel::Kind::cell;
  K.pi = pi_measure(cg);
  RowBuilder rb{K, {}};
  for (std::int32_t u = 0; u < cg.size(); ++u) {
    const auto pi = K.pi[u];
    for (auto v : cg.g.neighbors(u)) rb.add(v, 1, pi);
    if (cg.boundary[u]) rb.add(u, 1, pi);
    rb.flush();
  }
  require_stochastic(K, "cell kernel");
  return K;
}

WalkKernel build_wall_kernel(const WallGraph& wall, const CellGraph& gn) {
  WalkKernel K;
  K.kind = WalkKernel::Kind::wall;
  K.pi = wall.pi;
  RowBuilder rb{K, {}};
  for (std::int32_t u = 0; u < wall.size(); ++u) {
    const auto pi = wall.pi[u];
    const std::int64_t cross = (wall.outside_degree[u] + 1) * pi;
    if (gn.boundary[wall.fold[u]]) rb.add(u, 1, cross);
    for (auto v : wall.g.neighbors(u)) rb.add(v, 1, wall.block_of(v) == wall.block_of(u) ? pi : cross);
    rb.flush();
  }
  require_stochastic(K, "wall kernel");
  return K;
}

WalkKernel lazy_kernel(const WalkKernel& P, std::int64_t p, std::int64_t q) {
  if (p <= 0 || p > q) throw Error("lazy_kernel: θ must lie in (0,1]");
  WalkKernel K;
  K.kind = WalkKernel::Kind::lazy;
  K.theta = static_cast<double>(p) / static_cast<double>(q);
  K.pi = P.pi;
  RowBuilder rb{K, {}};
  for (std::int32_t u = 0; u < P.size(); ++u) {
    bool diag = false;
    for (auto i = P.offsets[u]; i < P.offsets[u + 1]; ++i) {
      if (P.col[i] == u) {
        diag = true;
        rb.add(u, (q - p) * P.den[i] + p * P.num[i], q * P.den[i]);
      } else {
        rb.add(P.col[i], p * P.num[i], q * P.den[i]);
      }
    }
    if (!diag && p != q) rb.add(u, q - p, q);
    rb.flush();
  }
  require_stochastic(K, "lazy kernel");
  return K;
}

KernelCheck verify_kernel(const WalkKernel& P) {
  KernelCheck out;
  for (std::int32_t u = 0; u < P.size(); ++u) {
    Rational sum = 0;
    double fsum = 0.0;
    for (auto i = P.offsets[u]; i < P.offsets[u + 1]; ++i) {
      sum += Rational(P.num[i], P.den[i]);
      fsum += P.prob[i];
      const auto v = P.col[i];
      if (v == u) continue;
      auto b = P.col.begin() + P.offsets[v], e = P.col.begin() + P.offsets[v + 1];
      auto it = std::lower_bound(b, e, u);
      if (it == e || *it != u) {
        if (out.exact_detailed_balance && out.exact_row_sums) out.bad_row = u;
        out.exact_detailed_balance = false;
        out.detailed_balance_residual = std::max(out.detailed_balance_residual,
                                                 static_cast<double>(P.pi[u]) * P.prob[i]);
        continue;
      }
      auto j = it - P.col.begin();
      i128 lhs = static_cast<i128>(P.pi[u]) * P.num[i] * P.den[j];
      i128 rhs = static_cast<i128>(P.pi[v]) * P.num[j] * P.den[i];
      if (lhs != rhs) {
        if (out.exact_detailed_balance && out.exact_row_sums) out.bad_row = u;
        out.exact_detailed_balance = false;
      }
      out.detailed_balance_residual =
          std::max(out.detailed_balance_residual,
                   std::abs(static_cast<double>(P.pi[u]) * P.prob[i] -
                            static_cast<double>(P.pi[v]) * P.prob[j]));
    }
    if (sum != 1) {
      if (out.exact_detailed_balance && out.exact_row_sums) out.bad_row = u;
      out.exact_row_sums = false;
    }
    out.row_sum_residual = std::max(out.row_sum_residual, std::abs(fsum - 1.0));
  }
  return out;
}

CouplingResult coupling_identity_check(const WalkKernel& W, const WalkKernel& C,
                                       const std::vector<std::int32_t>& fold) {
  if (static_cast<std::int32_t>(fold.size()) != W.size())
    throw Error("coupling check: fold table size differs from the wall kernel");
  for (auto f : fold)
    if (f < 0 || f >= C.size()) throw Error("coupling check: fold target outside the cell kernel");
  CouplingResult out;
  Rational worst = 0;
  for (std::int32_t u = 0; u < W.size(); ++u) {
    std::map<std::int32_t, std::pair<Rational, double>> agg;
    for (auto i = W.offsets[u]; i < W.offsets[u + 1]; ++i) {
      auto& slot = agg[fold[W.col[i]]];
      slot.first += Rational(W.num[i], W.den[i]);
      slot.second += W.prob[i];
    }
    const auto f = fold[u];
    for (auto i = C.offsets[f]; i < C.offsets[f + 1]; ++i) {
      auto& slot = agg[C.col[i]];
      slot.first -= Rational(C.num[i], C.den[i]);
      slot.second -= C.prob[i];
    }
    for (auto& [v, d] : agg) {
      Rational a = abs(d.first);
      if (a > worst) {
        worst = a;
        out.worst_vertex = u;
      }
      out.float_residual = std::max(out.float_residual, std::abs(d.second));
    }
  }
  out.exact = worst == 0;
  out.exact_residual = to_double(worst);
  return out;
}

double walk_form(const WalkKernel& P, const std::vector<double>& f) {
  double s = 0.0;
  for (std::int32_t u = 0; u < P.size(); ++u) {
    double pf = 0.0;
    for (auto i = P.offsets[u]; i < P.offsets[u + 1]; ++i) pf += P.prob[i] * f[P.col[i]];
    s += static_cast<double>(P.pi[u]) * f[u] * (f[u] - pf);
  }
  return s;
}

Rational walk_form_exact(const WalkKernel& P, const std::vector<std::int64_t>& f) {
  Rational s = 0;
  for (std::int32_t u = 0; u < P.size(); ++u) {
    Rational pf = 0;
    for (auto i = P.offsets[u]; i < P.offsets[u + 1]; ++i)
      pf += Rational(P.num[i] * f[P.col[i]], P.den[i]);
    s += Rational(P.pi[u] * f[u]) * (Rational(f[u]) - pf);
  }
  return s;
}

BandReport lemma52_band(const WallGraph& wall, const WalkKernel& P, int samples, std::uint64_t seed) {
  BandReport out;
  out.min_ratio = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto n = wall.size();
  std::vector<double> f(n);
  for (int s = 0; s < samples; ++s) {
    switch (s % 3) {
      case 0:
        for (auto& x : f) x = normal(rng);
        break;
      case 1: {
        // blockwise levels plus noise: weights cross-block edges heavily
        std::vector<double> lvl(wall.prefixes.size());
        for (auto& x : lvl) x = normal(rng);
        for (std::int32_t v = 0; v < n; ++v) f[v] = lvl[wall.block_of(v)] + 0.1 * normal(rng);
        break;
      }
      default: {
        double a = unif(rng) * 0.05, b = unif(rng) * 6.28;
        for (std::int32_t v = 0; v < n; ++v) f[v] = std::sin(a * v + b) + 0.01 * normal(rng);
      }
    }
    double e = dirichlet_energy(wall.g, f) / 2.0;
    if (e <= 0) continue;
    double r = walk_form(P, f) / e;
    out.min_ratio = std::min(out.min_ratio, r);
    out.max_ratio = std::max(out.max_ratio, r);
    if (r < 1.0 / 3.0 - 1e-12 || r > 1.0 + 1e-12) ++out.violations;
    ++out.samples;
  }
  return out;
}

IdentityReport lemma54_identity(const CellGraph& cg, const WalkKernel& P, int samples,
                                std::uint64_t seed) {
  IdentityReport out;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int64_t> dist(-5, 5);
  std::vector<std::int64_t> f(cg.size());
  for (int s = 0; s < samples; ++s) {
    for (auto& x : f) x = dist(rng);
    std::int64_t e = 0;
    for (std::int32_t u = 0; u < cg.size(); ++u)
      for (auto v : cg.g.neighbors(u))
        if (v > u) e += (f[u] - f[v]) * (f[u] - f[v]);
    if (walk_form_exact(P, f) != Rational(e)) ++out.failures;
    ++out.samples;
  }
  return out;
}

HittingReport mean_hitting_exact(const WalkKernel& P, const std::vector<std::int32_t>& B,
                                 const SolveOptions& opts) {
  if (B.empty()) throw Error("mean_hitting_exact: empty target set");
  const auto n = P.size();
  HittingReport out;
  out.target = B;
  auto inB = membership(n, B);
  {
    // Reversible chains have symmetric support, so undirected reachability suffices.
    std::vector<std::uint8_t> seen = inB;
    std::vector<std::int32_t> queue(B.begin(), B.end());
    for (std::size_t h = 0; h < queue.size(); ++h)
      for (auto i = P.offsets[queue[h]]; i < P.offsets[queue[h] + 1]; ++i)
        if (!seen[P.col[i]]) {
          seen[P.col[i]] = 1;
          queue.push_back(P.col[i]);
        }
    if (static_cast<std::int32_t>(queue.size()) < n)
      throw Error("mean_hitting_exact: target set unreachable from some vertex");
  }
  std::vector<Eigen::Triplet<double>> t;
  for (std::int32_t u = 0; u < n; ++u) {
    const double pi = static_cast<double>(P.pi[u]);
    double diag = pi;
    for (auto i = P.offsets[u]; i < P.offsets[u + 1]; ++i) {
      if (P.col[i] == u) diag -= pi * P.prob[i];
      else t.emplace_back(u, P.col[i], -pi * P.prob[i]);
    }
    t.emplace_back(u, u, diag);
  }
  SpMat M(n, n);
  M.setFromTriplets(t.begin(), t.end());
  std::vector<std::int32_t> interior;
  for (std::int32_t v = 0; v < n; ++v)
    if (!inB[v]) interior.push_back(v);
  out.h.assign(n, 0.0);
  if (interior.empty()) return out;
  Vec rhs(static_cast<Eigen::Index>(interior.size()));
  for (std::size_t i = 0; i < interior.size(); ++i)
    rhs[static_cast<Eigen::Index>(i)] = static_cast<double>(P.pi[interior[i]]);
  SubsetSolver solver(M, interior, opts);
  Vec x = solver.solve(rhs, &out.stats);
  for (std::size_t i = 0; i < interior.size(); ++i) out.h[interior[i]] = x[static_cast<Eigen::Index>(i)];
  return out;
}

std::vector<Rational> mean_hitting_rational(const WalkKernel& P, const std::vector<std::int32_t>& B,
                                            std::int32_t max_unknowns) {
  const auto n = P.size();
  auto inB = membership(n, B);
  std::vector<std::int32_t> interior, pos(n, -1);
  for (std::int32_t v = 0; v < n; ++v)
    if (!inB[v]) {
      pos[v] = static_cast<std::int32_t>(interior.size());
      interior.push_back(v);
    }
  const auto m = static_cast<std::int32_t>(interior.size());
  if (m > max_unknowns) throw BudgetExceeded("rational hitting solve limited to " +
                                             std::to_string(max_unknowns) + " unknowns");
  // (I - P_B) h = 1
  std::vector<std::vector<Rational>> A(m, std::vector<Rational>(m + 1, Rational(0)));
  for (std::int32_t r = 0; r < m; ++r) {
    auto u = interior[r];
    A[r][r] = 1;
    A[r][m] = 1;
    for (auto i = P.offsets[u]; i < P.offsets[u + 1]; ++i)
      if (pos[P.col[i]] >= 0) A[r][pos[P.col[i]]] -= Rational(P.num[i], P.den[i]);
  }
  for (std::int32_t c = 0; c < m; ++c) {
    std::int32_t piv = c;
    while (piv < m && A[piv][c] == 0) ++piv;
    if (piv == m) throw SolverError("mean_hitting_rational: singular system");
    std::swap(A[c], A[piv]);
    for (std::int32_t r = 0; r < m; ++r) {
      if (r == c || A[r][c] == 0) continue;
      Rational f = A[r][c] / A[c][c];
      for (std::int32_t j = c; j <= m; ++j) A[r][j] -= f * A[c][j];
    }
  }
  std::vector<Rational> h(n, Rational(0));
  for (std::int32_t r = 0; r < m; ++r) h[interior[r]] = A[r][m] / A[r][r];
  return h;
}

DirichletNorm dirichlet_norm(const WalkKernel& P, const std::vector<std::int32_t>& B, double lambda,
                             const SolveOptions& opts) {
  DirichletNorm out;
  const auto n = P.size();
  auto inB = membership(n, B);
  std::vector<std::int32_t> I;
  for (std::int32_t v = 0; v < n; ++v)
    if (!inB[v]) I.push_back(v);
  if (I.empty()) {
    out.c2 = lambda;
    return out;
  }
  const auto m = static_cast<Eigen::Index>(I.size());
  std::vector<std::int32_t> pos(n, -1);
  for (Eigen::Index i = 0; i < m; ++i) pos[I[i]] = static_cast<std::int32_t>(i);
  // K = Π^{-1/2} π(I - P) Π^{-1/2} on I; s = 1 - λ_min(K).
  std::vector<Eigen::Triplet<double>> t;
  Vec sq(m);
  for (Eigen::Index r = 0; r < m; ++r) sq[r] = std::sqrt(static_cast<double>(P.pi[I[r]]));
  for (Eigen::Index r = 0; r < m; ++r) {
    auto u = I[r];
    const double pi = static_cast<double>(P.pi[u]);
    double diag = pi;
    for (auto i = P.offsets[u]; i < P.offsets[u + 1]; ++i) {
      auto c = pos[P.col[i]];
      if (P.col[i] == u) diag -= pi * P.prob[i];
      else if (c >= 0) t.emplace_back(r, c, -pi * P.prob[i]);
    }
    t.emplace_back(r, r, diag);
  }
  SpMat M(m, m);
  M.setFromTriplets(t.begin(), t.end());
  double mu_min;
  if (m <= opts.dense_limit) {
    Eigen::MatrixXd K = sq.cwiseInverse().asDiagonal() * Eigen::MatrixXd(M) * sq.cwiseInverse().asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
    if (es.info() != Eigen::Success) throw SolverError("dirichlet_norm: eigensolver failed");
    mu_min = es.eigenvalues()[0];
    out.iterations = 1;
  } else {
    std::vector<std::int32_t> all(static_cast<std::size_t>(m));
    std::iota(all.begin(), all.end(), 0);
    SubsetSolver solver(M, all, opts);
    auto op = [&](const Vec& x) -> Vec {
      Vec y = sq.cwiseProduct(x);
      return sq.cwiseProduct(solver.solve(y));
    };
    auto r = lanczos_largest(op, static_cast<std::int32_t>(m), nullptr, 1e-10, 400);
    if (!r.converged) throw SolverError("dirichlet_norm: Lanczos did not converge");
    mu_min = 1.0 / r.value;
    out.iterations = r.iterations;
  }
  out.s = 1.0 - mu_min;
  out.c2 = mu_min * lambda;
  return out;
}

double nash_kappa(const std::vector<std::pair<int, double>>& lambdas, int N, int k) {
  std::vector<std::pair<int, double>> pts;
  for (auto [n, l] : lambdas) pts.emplace_back(n, std::pow(static_cast<double>(N), n) * l);
  double d_H = std::log(static_cast<double>(N)) / std::log(static_cast<double>(k));
  if (pts.size() < 2) return d_H;
  auto fit = scaling_fit(Quantity::rnf, pts, N, k);
  return std::max(d_H, fit.slope / std::log(static_cast<double>(k)) - 2.0);
}

NashReport nash_check(const CellGraph& cg, double lambda, double kappa, int samples,
                      std::uint64_t seed, const Vec* eigenvector) {
  NashReport out;
  out.kappa = kappa;
  const auto n = cg.size();
  auto pi = pi_measure(cg);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> f(n);
  const double logN = std::log(static_cast<double>(cg.spec.N()));
  auto eval = [&] {
    double l2 = 0, l1 = 0;
    for (std::int32_t v = 0; v < n; ++v) {
      l2 += static_cast<double>(pi[v]) * f[v] * f[v];
      l1 += static_cast<double>(pi[v]) * std::abs(f[v]);
    }
    if (l2 <= 0) return;
    double e = dirichlet_energy(cg.g, f);
    double log_lhs = (1.0 + 2.0 / kappa) * std::log(l2);
    double log_rhs = std::log(lambda * e + l2) - 2.0 * cg.level * logN / kappa +
                     4.0 / kappa * std::log(l1);
    out.max_ratio = std::max(out.max_ratio, std::exp(log_lhs - log_rhs));
    ++out.samples;
  };
  std::fill(f.begin(), f.end(), 1.0);
  eval();
  if (eigenvector) {
    for (std::int32_t v = 0; v < n; ++v) f[v] = (*eigenvector)[v];
    eval();
  }
  for (int s = 0; s < samples; ++s) {
    std::fill(f.begin(), f.end(), 0.0);
    switch (s % 3) {
      case 0:
        f[static_cast<std::int32_t>(unif(rng) * n) % n] = 1.0;
        break;
      case 1: {
        int depth = 1 + static_cast<int>(unif(rng) * std::max(1, cg.level));
        std::int64_t block = int_pow(cg.spec.N(), cg.level - std::min(depth, cg.level));
        for (int j = 0; j < 3; ++j) {
          std::int64_t b = static_cast<std::int64_t>(unif(rng) * static_cast<double>(n / block));
          double w = unif(rng);
          for (std::int64_t v = b * block; v < (b + 1) * block && v < n; ++v) f[v] += w;
        }
        break;
      }
      default: {
        auto c0 = cg.lat.corner(static_cast<std::int32_t>(unif(rng) * n) % n);
        double r = (0.1 + 0.4 * unif(rng)) * static_cast<double>(cg.lat.extent);
        for (std::int32_t v = 0; v < n; ++v) {
          auto c = cg.lat.corner(v);
          double d2 = 0;
          for (int o = 0; o < 3; ++o) d2 += std::pow(static_cast<double>(c[o] - c0[o]), 2);
          f[v] = std::exp(-d2 / (r * r));
        }
      }
    }
    eval();
  }
  return out;
}

TrajectoryBatch simulate(const WalkKernel& P, const std::vector<std::int32_t>& starts, int paths,
                         std::int64_t horizon, std::uint64_t seed, int workers) {
  if (horizon < 1) throw Error("simulate: horizon must be at least 1");
  if (starts.empty()) throw Error("simulate: empty start set");
  TrajectoryBatch batch;
  batch.seed = seed;
  batch.kernel_hash = P.hash();
  batch.horizon = horizon;
  batch.paths.resize(paths);
  Philox4x32 rng(seed);
  parallel_chunks(paths, workers, [&](int t) {
    auto& path = batch.paths[t];
    path.reserve(static_cast<std::size_t>(horizon) + 1);
    auto v = draw_start(rng, static_cast<std::uint64_t>(t), starts);
    path.push_back(v);
    for (std::int64_t i = 0; i < horizon; ++i) {
      v = step(P, v, rng.uniform(static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(i)));
      path.push_back(v);
    }
  });
  return batch;
}

void save_batch(const TrajectoryBatch& batch, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::ios_base::failure("cannot write " + path);
  auto put = [&os](auto x) { os.write(reinterpret_cast<const char*>(&x), sizeof(x)); };
  os.write("USCT", 4);
  put(std::uint32_t{1});
  put(batch.seed);
  put(batch.kernel_hash);
  put(batch.horizon);
  put(static_cast<std::uint64_t>(batch.paths.size()));
  for (const auto& p : batch.paths) {
    put(static_cast<std::uint64_t>(p.size()));
    for (auto v : p) put(static_cast<std::uint32_t>(v));
  }
}

TrajectoryBatch load_batch(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::ios_base::failure("cannot read " + path);
  auto get = [&is](auto& x) {
    is.read(reinterpret_cast<char*>(&x), sizeof(x));
    if (!is) throw ParseError("truncated trajectory log");
  };
  char magic[4];
  is.read(magic, 4);
  std::uint32_t version = 0;
  get(version);
  if (!is || std::string(magic, 4) != "USCT" || version != 1)
    throw ParseError("not a trajectory log: " + path);
  TrajectoryBatch b;
  get(b.seed);
  get(b.kernel_hash);
  get(b.horizon);
  std::uint64_t count = 0;
  get(count);
  b.paths.resize(count);
  for (auto& p : b.paths) {
    std::uint64_t len = 0;
    get(len);
    p.resize(len);
    for (auto& v : p) {
      std::uint32_t x;
      get(x);
      v = static_cast<std::int32_t>(x);
    }
  }
  return b;
}

OscillationTrace oscillation_stats(const TrajectoryBatch& batch, const std::vector<std::int32_t>& A,
                                   const std::vector<std::int32_t>& B, int J) {
  std::int32_t n = 0;
  for (const auto& p : batch.paths)
    for (auto v : p) n = std::max(n, v + 1);
  for (auto v : A) n = std::max(n, v + 1);
  for (auto v : B) n = std::max(n, v + 1);
  auto inA = membership(n, A), inB = membership(n, B);
  OscillationTrace tr;
  tr.paths = static_cast<int>(batch.paths.size());
  tr.J = J;
  for (const auto& p : batch.paths) {
    OscTracker osc(inA, inB, J);
    for (std::size_t i = 0; i < p.size() && !osc.done(); ++i) osc.visit(p[i], static_cast<std::int64_t>(i));
    tr.times.push_back(osc.times);
  }
  aggregate(tr);
  return tr;
}

OscillationTrace oscillation_run(const WalkKernel& P, const std::vector<std::int32_t>& starts,
                                 int paths, std::int64_t horizon, const std::vector<std::int32_t>& A,
                                 const std::vector<std::int32_t>& B, int J, std::uint64_t seed,
                                 int workers) {
  if (horizon < 1) throw Error("oscillation_run: horizon must be at least 1");
  if (starts.empty()) throw Error("oscillation_run: empty start set");
  auto inA = membership(P.size(), A), inB = membership(P.size(), B);
  OscillationTrace tr;
  tr.paths = paths;
  tr.J = J;
  tr.times.resize(paths);
  Philox4x32 rng(seed);
  parallel_chunks(paths, workers, [&](int t) {
    OscTracker osc(inA, inB, J);
    auto v = draw_start(rng, static_cast<std::uint64_t>(t), starts);
    osc.visit(v, 0);
    for (std::int64_t i = 0; i < horizon && !osc.done(); ++i) {
      v = step(P, v, rng.uniform(static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(i)));
      osc.visit(v, i + 1);
    }
    tr.times[t] = osc.times;
  });
  aggregate(tr);
  return tr;
}

std::int64_t walk_horizon(const WalkKernel& P, double lambda, double mult) {
  double mean_pi = 0.0;
  for (auto p : P.pi) mean_pi += static_cast<double>(p);
  mean_pi /= std::max<std::int32_t>(1, P.size());
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(mult * lambda * 2.0 * mean_pi)));
}

void hitting_mc(HittingReport& report, const WalkKernel& P, const std::vector<std::int32_t>& starts,
                int paths, std::int64_t horizon, std::uint64_t seed, int workers) {
  auto tr = oscillation_run(P, starts, paths, horizon, report.target, {}, 1, seed, workers);
  report.mc_mean = tr.mean_T1;
  report.mc_stderr = tr.se_T1;
  report.seed = seed;
  report.samples = paths;
  report.censored = tr.censored_T1;
  double s = 0.0;
  for (auto v : starts) s += report.h[v];
  report.exact_mean = s / static_cast<double>(starts.size());
}

double vartheta(double t, double C1) {
  if (t <= 0) return 0.0;
  double best = 1.0;  // L = 0
  double decay = 1.0;
  for (int L = 1;; ++L) {
    decay *= 1.0 - C1;
    double lin = L * t / C1;
    if (lin >= best) break;
    best = std::min(best, lin + decay);
  }
  return best;
}

double vartheta_m(double t, double theta_C1, double q, double C2, int m, int k) {
  const std::int64_t K = int_pow(k, m) + 1;
  const double norm = C2 / (1.0 - q);
  // Σ over i ≥ i0 of q^{l(i)-1} with l(i) = ⌈(i+1)/K⌉
  auto tail = [&](std::int64_t i0) {
    std::int64_t l0 = i0 / K + 1;
    double ql = std::pow(q, static_cast<double>(l0 - 1));
    return static_cast<double>(l0 * K - i0) * ql + static_cast<double>(K) * ql * q / (1.0 - q);
  };
  double sum = 0.0, val = t;
  for (std::int64_t i = 0;; ++i) {
    if (val >= 1.0) return sum + norm * tail(i);
    if (norm * tail(i) < 1e-12) return sum;
    sum += norm * std::pow(q, static_cast<double>(i / K)) * val;
    val = vartheta(val, theta_C1);
  }
}

Prop62Check prop62_check(const CellGraph& cg, const WalkKernel& P, double lambda, double C_hat,
                         int paths, double horizon_mult, std::uint64_t seed, int workers,
                         bool start_on_I_plus) {
  Prop62Check out;
  out.C_hat = C_hat;
  auto starts = start_on_I_plus ? middle_layers(cg).I_plus : cg.face_set(0, 1);
  auto tr = oscillation_run(P, starts, paths, walk_horizon(P, lambda, horizon_mult), cg.face_set(0, 0),
                            cg.face_set(0, 1), 2, seed, workers);
  out.mean_T1 = tr.mean_T1;
  out.lhs = tr.mean_T21;
  out.censored = tr.censored;
  double c1 = 1.0;
  for (std::int32_t u = 0; u < P.size(); ++u)
    for (auto i = P.offsets[u]; i < P.offsets[u + 1]; ++i)
      if (P.col[i] != u) c1 = std::min(c1, P.prob[i] / (1.0 + P.prob[i]));
  out.c1_actual = c1;
  out.rhs = vartheta(tr.mean_T1 / (C_hat * lambda), 1.0 / 27.0) * C_hat * lambda;
  out.pass = !out.censored && out.lhs <= out.rhs;
  return out;
}

WallHitting wall_hitting(const WallGraph& wall, const WalkKernel& P, const CellGraph& gn,
                         double lambda, const SolveOptions& opts) {
  WallHitting out;
  Lattice lat = make_lattice(gn.spec, wall.m + wall.n);
  for (std::int32_t v = 0; v < wall.size(); ++v)
    if (lat.corner(wall.words[v])[0] == 0) out.A0.push_back(v);
  out.h = mean_hitting_exact(P, out.A0, opts).h;
  for (double x : out.h) out.max_over_lambda = std::max(out.max_over_lambda, x / lambda);
  return out;
}

Lemma69Report lemma69_estimate(const WallGraph& wall, const WalkKernel& P, const CellGraph& gn,
                               int paths, std::int64_t horizon, std::uint64_t seed, int workers) {
  Lemma69Report out;
  out.J = static_cast<int>(int_pow(gn.spec.k, wall.m)) + 1;
  out.paths = paths;
  out.bound = std::pow(1.0 / 55.0, out.J);
  Lattice lat = make_lattice(gn.spec, wall.m + wall.n);
  std::vector<std::uint8_t> inA0(wall.size(), 0);
  std::vector<std::int32_t> top;
  for (std::int32_t v = 0; v < wall.size(); ++v) {
    auto c = lat.corner(wall.words[v])[0];
    if (c == 0) inA0[v] = 1;
    if (c + lat.side == lat.extent) top.push_back(v);
  }
  // Oscillation sets pulled back through the fold.
  std::vector<std::uint8_t> inA(wall.size()), inB(wall.size());
  for (std::int32_t v = 0; v < wall.size(); ++v) {
    inA[v] = gn.face[face_id(0, 0)][wall.fold[v]];
    inB[v] = gn.face[face_id(0, 1)][wall.fold[v]];
  }
  std::vector<std::int8_t> result(paths, 0);  // 1 success, 0 failure, -1 censored
  Philox4x32 rng(seed);
  parallel_chunks(paths, workers, [&](int t) {
    OscTracker osc(inA, inB, out.J);
    auto v = draw_start(rng, static_cast<std::uint64_t>(t), top);
    for (std::int64_t i = 0;; ++i) {
      if (inA0[v]) {
        result[t] = 1;
        return;
      }
      osc.visit(v, i);
      if (osc.done()) return;
      if (i == horizon) {
        result[t] = -1;
        return;
      }
      v = step(P, v, rng.uniform(static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(i)));
    }
  });
  for (auto r : result) {
    if (r == 1) ++out.successes;
    if (r == -1) ++out.censored;
  }
  // Censored paths count as failures.
  const double nn = paths, p = out.successes / nn, z = 1.959963984540054;
  out.estimate = p;
  out.wilson_lower = (p + z * z / (2 * nn) - z * std::sqrt(p * (1 - p) / nn + z * z / (4 * nn * nn))) /
                     (1 + z * z / nn);
  out.pass = out.wilson_lower >= out.bound;
  return out;
}

std::vector<Thm71Row> theorem71_ratios(GraphStore& store, const std::vector<int>& levels,
                                       const SolveOptions& opts) {
  std::vector<Thm71Row> rows;
  for (int n : levels) {
    auto cg = store.get(n);
    auto P = build_kernel(*cg);
    Thm71Row r;
    r.n = n;
    r.lambda = lambda_n(cg->g, opts).value;
    auto h = mean_hitting_exact(P, cg->face_set(0, 0), opts).h;
    r.t = std::numeric_limits<double>::infinity();
    for (auto w : cg->face_set(0, 1))
      if (h[w] / r.lambda < r.t) {
        r.t = h[w] / r.lambda;
        r.argmin = w;
      }
    for (double x : h) r.T = std::max(r.T, x / r.lambda);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace usc
