// Acceptance run on the 26-cell carpet: one PASS/FAIL line per criterion.

#include "usc/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <thread>

using namespace usc;

namespace {

// Pinned tolerances.
constexpr double kValidateSeconds = 1.0;
constexpr double kCouplingFloat = 1e-12;
constexpr double kCouplingSeconds = 30.0;
constexpr double kBandLo = 1.0 / 3.0, kBandHi = 1.0;
constexpr int kBandSamples = 200;
constexpr double kScriptRLo = 0.25, kScriptRHi = 4.0;
constexpr double kRhoAgreement = 0.10;
constexpr double kFitSeconds = 600.0;
constexpr double kLevelFactor = 3.0;
constexpr int kMcPaths = 10000;
constexpr double kMcSigmas = 3.0;
constexpr int kLemma69Paths = 20000;
constexpr double kEnergyRatioFactor = 3.0;
constexpr double kTorusSlope = -1.5, kTorusTol = 0.10;
constexpr double kCarpetSlopeTol = 0.15;
constexpr double kBallBand = 10.0;
constexpr double kBesovBand = 10.0;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::printf("[%s] %2d %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
}

void guarded(int id, const std::string& name, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, name, false, std::string("exception: ") + e.what());
  }
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

template <class T>
double spread(const std::vector<T>& xs) {
  auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  return *lo > 0 ? *hi / *lo : INFINITY;
}

std::string data(const std::string& name) { return std::string(USC_DATA_DIR) + "/" + name; }

}  // namespace

int main() {
  const int workers = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  const IfsSpec spec = load_spec(data("carpet26.json"));
  GraphStore store(spec);
  const int N = spec.N(), k = spec.k;

  guarded(1, "validation", [&] {
    ParseOptions lenient;
    lenient.enforce_n_bounds = false;
    double worst = 0;
    Timer t;
    bool carpet_ok = validate(spec).pass();
    worst = std::max(worst, t.seconds());
    t = Timer();
    auto menger = validate(load_spec(data("menger.json"), lenient));
    worst = std::max(worst, t.seconds());
    t = Timer();
    auto diag = validate(load_spec(data("diagonal.json"), lenient));
    worst = std::max(worst, t.seconds());
    bool pass = carpet_ok && !menger.face_included.pass && !menger.face_included.witness.empty() &&
                !diag.strong_connectivity.pass && !diag.strong_connectivity.witness.empty() &&
                worst < kValidateSeconds;
    report(1, "validation", pass,
           std::string("carpet ") + (carpet_ok ? "passes" : "fails") + "; Menger witness '" +
               menger.face_included.witness + "'; diagonal witness '" + diag.strong_connectivity.witness +
               "'; slowest " + fmt("%.3f s", worst));
  });

  guarded(2, "exact coupling", [&] {
    Timer t;
    bool pass = true;
    std::string detail;
    for (auto [m, n] : std::vector<std::pair<int, int>>{{1, 1}, {1, 2}, {2, 1}}) {
      auto gn = store.get(n);
      auto wall = build_wall(spec, m, *gn);
      auto c = coupling_identity_check(build_wall_kernel(wall, *gn), build_kernel(*gn), wall.fold);
      pass = pass && c.exact && c.exact_residual == 0.0 && c.float_residual < kCouplingFloat;
      detail += "(" + std::to_string(m) + "," + std::to_string(n) + ") exact " + fmt("%g", c.exact_residual) +
                " float " + fmt("%.1e", c.float_residual) + "; ";
    }
    pass = pass && t.seconds() < kCouplingSeconds;
    report(2, "exact coupling", pass, detail + fmt("%.1f s", t.seconds()));
  });

  guarded(3, "reversibility and stochasticity", [&] {
    bool pass = true;
    double worst = 0;
    std::vector<WalkKernel> kernels;
    for (int n = 1; n <= 3; ++n) kernels.push_back(build_kernel(*store.get(n)));
    auto g2 = store.get(2);
    kernels.push_back(build_wall_kernel(build_wall(spec, 1, *g2), *g2));
    for (const auto& P : kernels) {
      auto c = verify_kernel(P);
      pass = pass && c.exact_row_sums && c.exact_detailed_balance;
      worst = std::max({worst, c.row_sum_residual, c.detailed_balance_residual});
    }
    report(3, "reversibility and stochasticity", pass,
           "levels 1..3 and wall (1,2) exact; largest float residual " + fmt("%.1e", worst));
  });

  guarded(4, "walk-form band on wall (1,2)", [&] {
    auto g2 = store.get(2);
    auto wall = build_wall(spec, 1, *g2);
    auto b = lemma52_band(wall, build_wall_kernel(wall, *g2), kBandSamples, 1);
    bool pass = b.violations == 0 && b.samples == kBandSamples && b.min_ratio >= kBandLo && b.max_ratio <= kBandHi;
    report(4, "walk-form band on wall (1,2)", pass,
           fmt("ratio in [%.4f, ", b.min_ratio) + fmt("%.4f]", b.max_ratio) + ", violations " +
               std::to_string(b.violations));
  });

  guarded(5, "face-average sandwich", [&] {
    bool pass = true;
    std::string detail;
    for (int n = 1; n <= 3; ++n) {
      auto s = script_R(*store.get(n));
      double q = s.R_tilde / s.R;
      pass = pass && q >= kScriptRLo && q <= kScriptRHi;
      detail += "n=" + std::to_string(n) + fmt(" %.4f; ", q);
    }
    report(5, "face-average sandwich", pass, detail);
  });

  guarded(6, "face resistance bound (3/8)^n", [&] {
    bool pass = true;
    std::string detail;
    for (const auto& r : lemma81_check(store, {1, 2, 3})) {
      pass = pass && r.pass && r.rnf <= r.bound;
      detail += "n=" + std::to_string(r.n) + fmt(" %.5f", r.rnf) + fmt(" <= %.5f; ", r.bound);
    }
    report(6, "face resistance bound (3/8)^n", pass, detail);
  });

  double d_W = 0.0, d_H = 0.0;
  guarded(7, "scaling consistency", [&] {
    Timer t;
    auto fits = [&](const std::vector<int>& levels) {
      std::vector<std::pair<int, double>> r, nl;
      for (int n : levels) {
        auto cg = store.get(n);
        r.emplace_back(n, face_resistance(*cg).value);
        nl.emplace_back(n, std::pow(static_cast<double>(N), n) / lambda_n(cg->g).value);
      }
      return std::make_pair(scaling_fit(Quantity::rnf, r, N, k), scaling_fit(Quantity::n_over_lambda, nl, N, k));
    };
    auto [fr, fl] = fits({2, 3});
    auto [fr13, fl13] = fits({1, 2, 3});
    d_W = fr.d_W;
    d_H = fr.d_H;
    double gap = std::abs(fr.rho - fl.rho) / std::max(fr.rho, fl.rho);
    bool pass = gap <= kRhoAgreement && fr.rho > 1.0 && fr.rho <= 26.0 / 9.0 && fl.rho > 1.0 &&
                fl.rho <= 26.0 / 9.0 && d_W >= 2.0 && d_W < d_H && d_H < d_W + 1.0 && t.seconds() < kFitSeconds;
    report(7, "scaling consistency", pass,
           "levels 2..3: rho " + fmt("%.4f", fr.rho) + " (R_F) vs " + fmt("%.4f", fl.rho) + " (N^n/lambda), gap " +
               fmt("%.1f%%", 100 * gap) + ", d_W " + fmt("%.4f", d_W) + ", d_H " + fmt("%.4f", d_H) +
               "; levels 1..3 for reference: " + fmt("%.4f", fr13.rho) + " vs " + fmt("%.4f", fl13.rho));
  });

  guarded(8, "hitting-time bands", [&] {
    auto rows = theorem71_ratios(store, {1, 2, 3});
    bool pass = true;
    std::string detail;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      pass = pass && rows[i].t > 0.0;
      if (i > 0) {
        double a = rows[i].T / rows[i - 1].T, b = rows[i].t / rows[i - 1].t;
        pass = pass && a < kLevelFactor && a > 1 / kLevelFactor && b < kLevelFactor && b > 1 / kLevelFactor;
      }
      detail += "n=" + std::to_string(rows[i].n) + fmt(" t %.4f", rows[i].t) + fmt(" T %.4f; ", rows[i].T);
    }
    report(8, "hitting-time bands", pass, detail);
  });

  guarded(9, "Monte Carlo calibration", [&] {
    auto g2 = store.get(2);
    auto P = build_kernel(*g2);
    double lam = lambda_n(g2->g).value;
    auto h = mean_hitting_exact(P, g2->face_set(0, 0));
    std::vector<double> means;
    HittingReport first;
    for (int w : {1, 4, 8}) {
      hitting_mc(h, P, g2->face_set(0, 1), kMcPaths, walk_horizon(P, lam, 50), 11, w);
      means.push_back(h.mc_mean);
      if (w == 1) first = h;
    }
    bool same = means[0] == means[1] && means[1] == means[2];
    double z = std::abs(first.mc_mean - first.exact_mean) / first.mc_stderr;
    bool pass = same && z <= kMcSigmas && first.censored == 0;
    report(9, "Monte Carlo calibration", pass,
           fmt("MC %.3f", first.mc_mean) + fmt(" +- %.3f", first.mc_stderr) + fmt(" vs exact %.3f", first.exact_mean) +
               fmt(" (%.2f se)", z) + "; workers 1/4/8 " + (same ? "identical" : "differ"));
  });

  guarded(10, "layer-crossing probability on wall (1,2)", [&] {
    auto g2 = store.get(2);
    auto wall = build_wall(spec, 1, *g2);
    auto W = build_wall_kernel(wall, *g2);
    auto r = lemma69_estimate(wall, W, *g2, kLemma69Paths, walk_horizon(W, lambda_n(g2->g).value, 50), 7, workers);
    report(10, "layer-crossing probability on wall (1,2)", r.pass && r.wilson_lower >= r.bound,
           fmt("estimate %.4f", r.estimate) + fmt(", 95%% lower %.4f", r.wilson_lower) +
               fmt(" >= (1/55)^4 = %.3e", r.bound));
  });

  guarded(11, "brick certificates", [&] {
    bool pass = true;
    std::string detail;
    BrickOptions o;
    o.strict = false;
    BrickLadder L(store, o);
    std::vector<double> g_ratio, f_ratio;
    for (int m = 1; m <= 3; ++m) {
      const auto& g = L.g(m);
      pass = pass && g.certified();
      g_ratio.push_back(g.energy_ratio);
      if (!g.certified()) detail += "g" + std::to_string(m) + " " + g.first_failure()->name + "; ";
    }
    for (int n = 1; n <= 3; ++n) {
      const auto& f = L.f(n);
      pass = pass && f.certified();
      f_ratio.push_back(f.energy_ratio);
      if (!f.certified()) detail += "f" + std::to_string(n) + " " + f.first_failure()->name + "; ";
    }
    pass = pass && spread(g_ratio) < kEnergyRatioFactor && spread(f_ratio) < kEnergyRatioFactor;
    detail += "g ratio spread " + fmt("%.3f", spread(g_ratio)) + ", f ratio spread " + fmt("%.3f", spread(f_ratio));

    for (int L_star : {10, 3}) {
      BrickOptions oc = o;
      oc.L_star = L_star;
      BrickLadder C(store, oc);
      int bad = 0, finite = 0, total = 0;
      for (int n = 1; n <= 2; ++n)
        for (int w = 0; w < N; ++w) {
          auto c = C.cutoff({w}, n);
          ++total;
          if (!c.certified()) ++bad;
          if (c.certificates.back().detail.rfind("1/D", 0) == 0) ++finite;
        }
      pass = pass && bad == 0;
      detail += "; L*=" + std::to_string(L_star) + " cut-offs " + std::to_string(total - bad) + "/" +
                std::to_string(total) + " certified, " + std::to_string(finite) + " finite resistance bounds";
    }
    report(11, "brick certificates", pass, detail);
  });

  guarded(12, "heat kernel shape", [&] {
    auto tg = torus_graph(64);
    auto TP = graph_kernel(tg);
    HeatOptions ho;
    ho.workers = workers;
    auto ts = heat_rows(TP, {0}, dyadic_times(256), ho);
    auto tf = subgaussian_fit(ts, TP.pi, {bfs_distances(tg, 0)}, 3.0, 2.0, 16, 256);
    bool torus_ok = std::abs(tf.on_slope - kTorusSlope) <= kTorusTol * std::abs(kTorusSlope);

    if (d_W <= 0.0) throw Error("d_W unavailable from criterion 7");
    auto cg = store.get(3);
    auto P = build_kernel(*cg);
    auto [lo, hi] = diffusive_window(P, lambda_n(cg->g).value, ho.theta);
    CornerIndex ci(cg->lat);
    const auto s = cg->lat.side, mid = (cg->lat.extent - s) / 2;
    std::vector<std::int32_t> src;
    for (auto c : {std::array<std::int64_t, 3>{0, 0, 0}, {mid, mid, 0}, {mid, 0, 0}})
      src.push_back(static_cast<std::int32_t>(ci.find(c)));
    auto snaps = heat_rows(P, src, dyadic_times(hi), ho);
    std::vector<std::vector<std::int32_t>> dist;
    for (auto v : src) dist.push_back(bfs_distances(cg->g, v));
    auto sg = subgaussian_fit(snaps, P.pi, dist, d_H, d_W, lo, hi);
    double rel = std::abs(sg.on_slope - sg.predicted) / std::abs(sg.predicted);
    bool pass = torus_ok && rel <= kCarpetSlopeTol;
    report(12, "heat kernel shape", pass,
           fmt("torus slope %.4f", tf.on_slope) + fmt("; carpet level 3 slope %.4f", sg.on_slope) +
               fmt(" vs %.4f", sg.predicted) + fmt(" (%.1f%%)", 100 * rel) + ", window [" + std::to_string(lo) +
               ", " + std::to_string(hi) + "]");
  });

  guarded(13, "ball bands at level 3", [&] {
    if (d_W <= 0.0) throw Error("d_W unavailable from criterion 7");
    BallOptions bo;
    bo.workers = workers;
    auto br = ball_checks(store, 3, d_H, d_W, bo);
    bool pass = br.volume.ratio() < kBallBand && br.poincare.ratio() < kBallBand &&
                br.capacity.ratio() < kBallBand && br.volume.ratio() > 0 && br.poincare.ratio() > 0 &&
                br.capacity.ratio() > 0;
    report(13, "ball bands at level 3", pass,
           std::to_string(br.samples.size()) + " balls: volume " + fmt("%.3f", br.volume.ratio()) + ", Poincare " +
               fmt("%.3f", br.poincare.ratio()) + ", capacity " + fmt("%.3f", br.capacity.ratio()) +
               " (block tent " + fmt("%.3f", br.tent.ratio()) + ", reported only)");
  });

  guarded(14, "Besov cross-check", [&] {
    if (d_W <= 0.0) throw Error("d_W unavailable from criterion 7");
    BrickOptions o;
    o.strict = false;
    BrickLadder L(store, o);
    std::vector<double> ratios;
    std::string detail;
    for (int n = 1; n <= 3; ++n) {
      auto rep = besov_energy(*store.get(n), L.f(n).values, besov_radii(k, n), d_H, d_W);
      ratios.push_back(rep.ratio);
      detail += "n=" + std::to_string(n) + fmt(" %.4f; ", rep.ratio);
    }
    report(14, "Besov cross-check", spread(ratios) < kBesovBand, detail + "spread " + fmt("%.3f", spread(ratios)));
  });

  std::printf("%d of 14 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
