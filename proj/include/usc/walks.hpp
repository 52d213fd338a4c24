#pragma once

#include "usc/spectral.hpp"

namespace usc {

// Sparse Markov kernel with exact rational entries num/den. Each row lists its
// columns in increasing order, the self-loop included when present.
struct WalkKernel {
  enum class Kind { cell, wall, lazy };
  Kind kind = Kind::cell;
  double theta = 1.0;  // lazy holding parameter: P_θ = (1-θ)I + θP
  std::vector<std::int64_t> offsets{0};
  std::vector<std::int32_t> col;
  std::vector<std::int64_t> num, den;
  std::vector<double> prob;
  std::vector<std::int64_t> pi;  // reversing measure

  std::int32_t size() const { return static_cast<std::int32_t>(offsets.size() - 1); }
  double entry(std::int32_t u, std::int32_t v) const;
  std::uint64_t hash() const;
};

const char* to_string(WalkKernel::Kind kind);

// p₁⁽ⁿ⁾: 1/πₙ(w) to each neighbour and as a self-loop on ∂Wₙ.
WalkKernel build_kernel(const CellGraph& cg);
// p₁⁽ᵐ′ⁿ⁾ on the wall graph, with πₙ and deg taken at the folded image.
WalkKernel build_wall_kernel(const WallGraph& wall, const CellGraph& gn);
// (1-θ)I + θP with θ = p/q rational.
WalkKernel lazy_kernel(const WalkKernel& P, std::int64_t p, std::int64_t q);

struct KernelCheck {
  bool exact_row_sums = true;
  bool exact_detailed_balance = true;
  double row_sum_residual = 0.0;  // float
  double detailed_balance_residual = 0.0;
  std::int32_t bad_row = -1;
};
KernelCheck verify_kernel(const WalkKernel& P);

struct CouplingResult {
  bool exact = true;              // folded rows equal cell rows as rationals
  double exact_residual = 0.0;    // max |difference|, evaluated exactly
  double float_residual = 0.0;    // same comparison on double entries
  std::int32_t worst_vertex = -1;
};
CouplingResult coupling_identity_check(const WalkKernel& wall_kernel, const WalkKernel& cell_kernel,
                                       const std::vector<std::int32_t>& fold);

// ⟨f - Pf, f⟩_π.
double walk_form(const WalkKernel& P, const std::vector<double>& f);
Rational walk_form_exact(const WalkKernel& P, const std::vector<std::int64_t>& f);

struct BandReport {
  double min_ratio = 0.0, max_ratio = 0.0;
  int samples = 0;
  int violations = 0;
};
// ⟨f - Pf, f⟩_π over the per-edge wall energy, checked against [1/3, 1].
BandReport lemma52_band(const WallGraph& wall, const WalkKernel& P, int samples, std::uint64_t seed);

// Exact check of ⟨f - P⁽ⁿ⁾f, f⟩_πₙ = per-edge energy on integer-valued f.
struct IdentityReport {
  int samples = 0;
  int failures = 0;
};
IdentityReport lemma54_identity(const CellGraph& cg, const WalkKernel& P, int samples,
                                std::uint64_t seed);

struct HittingReport {
  std::vector<std::int32_t> target;
  std::vector<double> h;  // E_w[τ_B], zero on B
  SolveStats stats;
  double lambda = 0.0;
  // Monte Carlo part, filled by hitting_mc
  double mc_mean = 0.0, mc_stderr = 0.0, exact_mean = 0.0;
  std::uint64_t seed = 0;
  int samples = 0, censored = 0;
};

// Solves (I - P_B)h = 1 off B through the symmetric system π(I - P)h = π.
HittingReport mean_hitting_exact(const WalkKernel& P, const std::vector<std::int32_t>& B,
                                 const SolveOptions& opts = {});
// Dense rational elimination; small chains only.
std::vector<Rational> mean_hitting_rational(const WalkKernel& P, const std::vector<std::int32_t>& B,
                                            std::int32_t max_unknowns = 400);

struct DirichletNorm {
  double s = 0.0;        // largest eigenvalue of the killed kernel
  double c2 = 0.0;       // (1 - s)·λ
  int iterations = 0;
};
DirichletNorm dirichlet_norm(const WalkKernel& P, const std::vector<std::int32_t>& B, double lambda,
                             const SolveOptions& opts = {});

struct NashReport {
  double kappa = 0.0;
  double max_ratio = 0.0;  // LHS / RHS without the constant
  int samples = 0;
};
// κ from the growth of Nⁿλₙ: smallest κ ≥ d_H with k^{2+κ} ≥ the fitted rate.
double nash_kappa(const std::vector<std::pair<int, double>>& lambdas, int N, int k);
NashReport nash_check(const CellGraph& cg, double lambda, double kappa, int samples,
                      std::uint64_t seed, const Vec* eigenvector = nullptr);

struct TrajectoryBatch {
  std::uint64_t seed = 0;
  std::uint64_t kernel_hash = 0;
  std::int64_t horizon = 0;
  std::vector<std::vector<std::int32_t>> paths;
};

// Step i of trajectory t draws uniform(t, i); the start draws uniform(t, 2⁶⁴-1).
// Results do not depend on the worker count.
TrajectoryBatch simulate(const WalkKernel& P, const std::vector<std::int32_t>& starts, int paths,
                         std::int64_t horizon, std::uint64_t seed, int workers = 1);
void save_batch(const TrajectoryBatch& batch, const std::string& path);
TrajectoryBatch load_batch(const std::string& path);

struct OscillationTrace {
  int paths = 0, J = 0;
  std::vector<std::vector<std::int64_t>> times;  // per path 𝒯₁..𝒯_J, -1 when censored
  double mean_T1 = 0.0, se_T1 = 0.0;
  double mean_T21 = 0.0, se_T21 = 0.0;  // 𝒯₂ - 𝒯₁ over paths with 𝒯₂ observed
  int censored_T1 = 0, censored_T2 = 0;
  bool censored = false;  // ≥ 5% of 𝒯₂ censored
};

// 𝒯₁ = first visit to A, then alternating visits to B and A.
OscillationTrace oscillation_stats(const TrajectoryBatch& batch, const std::vector<std::int32_t>& A,
                                   const std::vector<std::int32_t>& B, int J = 2);
// Same statistics without storing paths; identical to simulate + oscillation_stats.
OscillationTrace oscillation_run(const WalkKernel& P, const std::vector<std::int32_t>& starts,
                                 int paths, std::int64_t horizon, const std::vector<std::int32_t>& A,
                                 const std::vector<std::int32_t>& B, int J, std::uint64_t seed,
                                 int workers = 1);

// Step cap: mult·λₙ·2π̄ₙ.
std::int64_t walk_horizon(const WalkKernel& P, double lambda, double mult);

// Monte Carlo E[τ_B] from uniform starts, compared with the exact mean.
void hitting_mc(HittingReport& report, const WalkKernel& P, const std::vector<std::int32_t>& starts,
                int paths, std::int64_t horizon, std::uint64_t seed, int workers = 1);

double vartheta(double t, double C1);
// Layer-crossing series with ϑ(·; theta_C1), the tail rate q and constant C2.
double vartheta_m(double t, double theta_C1, double q, double C2, int m, int k);

struct Prop62Check {
  double lhs = 0.0, rhs = 0.0, C_hat = 0.0, mean_T1 = 0.0;
  double c1_actual = 0.0;  // min over edges of p/(1+p)
  bool pass = false;
  bool censored = false;
};
Prop62Check prop62_check(const CellGraph& cg, const WalkKernel& P, double lambda, double C_hat,
                         int paths, double horizon_mult, std::uint64_t seed, int workers,
                         bool start_on_I_plus = false);

struct WallHitting {
  std::vector<std::int32_t> A0;  // F̃_{m+n} ∩ L̃_{m,n}
  std::vector<double> h;         // E[τ_{A0}] per wall vertex
  double max_over_lambda = 0.0;
};
WallHitting wall_hitting(const WallGraph& wall, const WalkKernel& P, const CellGraph& gn, double lambda,
                         const SolveOptions& opts = {});

struct Lemma69Report {
  int J = 0;  // k^m + 1
  int paths = 0, successes = 0, censored = 0;
  double estimate = 0.0, wilson_lower = 0.0;
  double bound = 0.0;  // (1/55)^J
  bool pass = false;
};
// Walks start uniformly on the top layer A_{k^m}; success is τ_{A0} ≤ 𝒯_{k^m+1}
// with 𝒯ⱼ read off the folded walk.
Lemma69Report lemma69_estimate(const WallGraph& wall, const WalkKernel& P, const CellGraph& gn,
                               int paths, std::int64_t horizon, std::uint64_t seed, int workers = 1);

struct Thm71Row {
  int n = 0;
  double lambda = 0.0;
  double t = 0.0, T = 0.0;  // min over F̃_{n,1,1}, max over Wₙ, of φ⁽ⁿ⁾/λₙ
  std::int32_t argmin = -1;
};
std::vector<Thm71Row> theorem71_ratios(GraphStore& store, const std::vector<int>& levels,
                                       const SolveOptions& opts = {});

}  // namespace usc
