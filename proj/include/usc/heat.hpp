#pragma once

#include "usc/walks.hpp"

namespace usc {

// Rows of ((1-θ)I + θP)ⁱ for a set of sources at one time i.
struct KernelSnapshot {
  int level = 0;
  double theta = 0.5;
  std::int64_t time = 0;
  std::vector<std::int32_t> sources;
  std::vector<std::vector<double>> rows;  // rows[s][v] = pᵢ(sources[s], v)
  double time_scale = 0.0;   // λₙ
  double space_scale = 0.0;  // k^{-n}
  double drift = 0.0;        // largest |Σ row - 1| before renormalization
};

struct HeatOptions {
  double theta = 0.5;
  std::int64_t max_time = 1 << 20;
  int workers = 1;
  int level = 0;
  double time_scale = 0.0, space_scale = 0.0;
};

// One snapshot per requested time (sorted, duplicates allowed), evolved by
// repeated sparse multiplication.
std::vector<KernelSnapshot> heat_rows(const WalkKernel& P, const std::vector<std::int32_t>& sources,
                                      const std::vector<std::int64_t>& times,
                                      const HeatOptions& opts = {});

// row ← row·((1-θ)I + θP)^steps.
void heat_step(const WalkKernel& P, double theta, std::vector<double>& row, std::int64_t steps = 1);

// 1, 2, 4, ... up to hi.
std::vector<std::int64_t> dyadic_times(std::int64_t hi);

// Simple random walk on an arbitrary graph, π = degree.
WalkKernel graph_kernel(const Graph& g);
Graph torus_graph(int L);  // ℤ_L³, nearest neighbours
Graph complete_graph(int n);

// Diffusive window [16, π̄λₙ/θ] in lazy steps.
std::pair<std::int64_t, std::int64_t> diffusive_window(const WalkKernel& P, double lambda, double theta,
                                                      std::int64_t floor = 16);

struct SubGaussianFit {
  double d_H = 0.0, d_W = 0.0;
  double predicted = 0.0;  // -d_H/d_W
  std::int64_t window_lo = 0, window_hi = 0;
  std::vector<std::int64_t> times;
  // On-diagonal: log(pᵢ(w,w)/π(w)) = intercept + slope·log i, averaged over sources.
  double on_slope = 0.0, on_intercept = 0.0, on_r2 = 0.0;
  std::vector<double> source_slopes;
  // Off-diagonal at the last window time: log p̄(d)/π against z = (d^{d_W}/t)^{1/(d_W-1)}.
  std::int64_t off_time = 0;
  double off_slope = 0.0, off_intercept = 0.0, off_r2 = 0.0;
  int off_points = 0;
  int monotone_violations = 0;  // increases of the shell-averaged profile along d
};

// distances[s][v] = graph distance from sources[s]. Throws when fewer than
// five snapshot times fall inside [window_lo, window_hi].
SubGaussianFit subgaussian_fit(const std::vector<KernelSnapshot>& snapshots,
                               const std::vector<std::int64_t>& pi,
                               const std::vector<std::vector<std::int32_t>>& distances, double d_H,
                               double d_W, std::int64_t window_lo, std::int64_t window_hi);

struct BallSample {
  std::int32_t center = 0;
  int r = 0;
  std::int32_t size = 0, size2 = 0;  // |B(x,r)|, |B(x,2r)|
  double volume = 0.0;     // π(B)/r^{d_H}
  double poincare = 0.0;   // max Var_π,B(f)/𝒟_{2B}(f), over r^{d_W}
  double capacity = 0.0;   // equilibrium potential energy over r^{d_H-d_W}
  double tent = 0.0;       // max of block cut-offs, same scaling
  int tent_depth = -1;     // block level m used for the tent
};

struct Band {
  double min = 0.0, max = 0.0;
  double ratio() const { return min > 0.0 ? max / min : 0.0; }
};

struct BallCheckReport {
  int level = 0;
  double d_H = 0.0, d_W = 0.0;
  std::vector<BallSample> samples;
  int skipped = 0;  // balls whose 2r-ball is the whole graph
  Band volume, poincare, capacity, tent;
};

struct BallOptions {
  int centers = 20;
  std::vector<int> radii{2, 3, 4, 6, 8, 12, 16, 20};
  std::uint64_t seed = 1;
  int tent_L_star = 1;
  int workers = 1;
};

// Intrinsic graph balls B(x,r) = {d < r} on the level-n cell graph.
BallCheckReport ball_checks(GraphStore& store, int n, double d_H, double d_W,
                            const BallOptions& opts = {});

struct HolderEstimate {
  double beta = 0.0;
  bool degenerate = false;  // oscillation below round-off; beta capped
  std::vector<std::pair<double, double>> profile;  // (δ, relative oscillation)
};

// Space-time boxes {|t-t₀| ≤ δt₀, d(y,y₀)^{d_W} ≤ δt₀} around (t₀, source) for
// dyadic δ, with t₀ the latest snapshot; β̂ is the log-log slope of the
// oscillation of pₜ(x,·)/π in δ.
HolderEstimate holder_estimate(const std::vector<KernelSnapshot>& snapshots, const Graph& g,
                               const std::vector<std::int64_t>& pi, double d_W, int source = 0);

struct BesovReport {
  std::vector<std::pair<double, double>> profile;  // (r, I_r)
  double sup = 0.0, r_sup = 0.0;
  double energy = 0.0;      // 𝒟ₙ(f), ordered pairs
  double normalized = 0.0;  // k^{n(d_W-d_H)}·𝒟ₙ(f)
  double ratio = 0.0;       // sup / normalized
};

// I_r(f) = r^{-d_H-d_W} ΣΣ_{|c(x)-c(y)|<r} (f(x)-f(y))² μ(x)μ(y), μ ≡ N^{-n},
// with c the cell centres.
BesovReport besov_energy(const CellGraph& cg, const std::vector<double>& f,
                         const std::vector<double>& r_list, double d_H, double d_W);
std::vector<double> besov_radii(int k, int n);  // k^{-j}, j = 0..n

// "source,target,time,value", one line per nonzero entry.
std::string snapshots_to_csv(const std::vector<KernelSnapshot>& snapshots);

}  // namespace usc
