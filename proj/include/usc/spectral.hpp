#pragma once

#include "usc/linalg.hpp"

namespace usc {

// Ordered-pair energy Σ_{w~w', both in A} (f(w) - f(w'))², each edge counted
// twice. An empty A means all vertices.
double dirichlet_energy(const Graph& g, const std::vector<double>& f,
                        const std::vector<std::uint8_t>& A = {});
double dirichlet_energy(const Graph& g, const Vec& f);

struct LambdaResult {
  double value = 0.0;  // λₙ = 1/μ₂
  double residual = 0.0;
  std::string method;
  int iterations = 0;
  Vec eigenvector;  // unit, mean zero
};

LambdaResult lambda_n(const Graph& g, const SolveOptions& opts = {});

struct ResistanceResult {
  double value = 0.0;
  Vec potential;  // minimizer, 0 on A and 1 on B
  SolveStats stats;
};

ResistanceResult effective_resistance(const Graph& g, const std::vector<std::int32_t>& A,
                                      const std::vector<std::int32_t>& B,
                                      const SolveOptions& opts = {});

// R_{n,F} = R(F̃_{n,1,0}, F̃_{n,1,1}).
ResistanceResult face_resistance(const CellGraph& cg, const SolveOptions& opts = {});

struct ProbeValue {
  Word word;
  double value = 0.0;
  bool skipped = false;  // 𝒩_w covers W_{|w|}
};
struct RProbeReport {
  double value = 0.0;  // min over non-skipped probes
  std::vector<ProbeValue> probes;
};

// min over probes w of R_{|w|+m}(w·W_m, 𝒩_w^c·W_m).
RProbeReport R_probe(GraphStore& store, int m, const std::vector<Word>& probes, int L_star,
                     const SolveOptions& opts = {});
// W₁ plus `sample` seeded words of W₂.
std::vector<Word> default_probes(const IfsSpec& spec, int sample, std::uint64_t seed);

// Two-block graph {w,w'}·W_m at level |w|+m.
struct TwoBlock {
  Graph g;
  std::int32_t block = 0;  // vertices [0,block) are w·W_m, the rest w'·W_m
};
TwoBlock two_block_graph(const IfsSpec& spec, int level, std::int64_t w, std::int64_t w_prime,
                         int m, const BuildOptions& bopts = {});

struct SigmaResult {
  double value = 0.0;
  Vec maximizer;  // L⁺a, a maximizer of the Rayleigh quotient
  Vec a;          // signed averaging vector
};
SigmaResult sigma_pair(const IfsSpec& spec, int level, std::int64_t w, std::int64_t w_prime, int m,
                       const SolveOptions& opts = {}, const BuildOptions& bopts = {});

struct CensusPair {
  int level = 0;
  std::int32_t w = 0, w_prime = 0;
  std::string orbit;  // canonical relative displacement and grid flags
};
// One adjacent pair per isometry orbit of the contact geometry, levels 1..max_level.
std::vector<CensusPair> pair_census(GraphStore& store, int max_level);

struct SigmaReport {
  double value = 0.0;
  std::vector<std::pair<CensusPair, double>> entries;
};
SigmaReport sigma_m(const IfsSpec& spec, int m, const std::vector<CensusPair>& census,
                    const SolveOptions& opts = {}, const BuildOptions& bopts = {});

// vᵀL⁺v for a signed vector v with Σv = 0.
double pinv_quadratic(const PinvSolver& solver, const Vec& v);
// Normalized indicator of A minus normalized indicator of B.
Vec average_difference(std::int32_t n, const std::vector<std::int32_t>& A,
                       const std::vector<std::int32_t>& B);

struct ScriptR {
  double R = 0.0;        // faces (1,0) vs (2,0)
  double R_tilde = 0.0;  // faces (1,0) vs (1,1)
};
ScriptR script_R(const CellGraph& cg, const SolveOptions& opts = {});

struct BarScriptR {
  double value = 0.0;
  bool degenerate = false;  // a vanishes after pinning
};
BarScriptR bar_script_R(const CellGraph& cg, const SolveOptions& opts = {});

struct MeasureSpec {
  std::vector<double> weight;  // per vertex, ≥ 0
  std::vector<std::int32_t> support;
};
// Example (a): counting measure on 𝓘ₙ(w,w').
MeasureSpec example_measure_a(const CellGraph& gm, const CellGraph& gn, std::int32_t w,
                              std::int32_t w_prime);
// Example (b): δ-sum over height-indexed words of a connected B meeting
// F̃_{n,1,1} and Iₙ (B = a shortest path between them).
MeasureSpec example_measure_b(const CellGraph& cg);

// Smallest C₁ with max_{w∈W_m} ν(w·W_{n-m})/ν(Wₙ) ≤ C₁k^{-m} for 1 ≤ m ≤ n.
double measure_c1(const CellGraph& cg, const MeasureSpec& nu);

struct AveragedBound {
  double c1 = 0.0;
  double max_ratio = 0.0;  // max over f of |⨍f dν - ⨍f dμ| / √(N^{-n}λₙ𝒟ₙ(f))
  int samples = 0;
};
AveragedBound averaged_bound_check(const CellGraph& cg, const MeasureSpec& nu, double lambda,
                                   int samples, std::uint64_t seed);

enum class Quantity { rnf, lambda, n_over_lambda, script_r, sigma, r_probe };
const char* to_string(Quantity q);
Quantity parse_quantity(const std::string& s);

struct ScalingFit {
  Quantity quantity = Quantity::rnf;
  std::vector<std::pair<int, double>> points;
  double slope = 0.0, intercept = 0.0, residual = 0.0;
  double rho = 0.0, d_H = 0.0, d_W = 0.0;
};

ScalingFit scaling_fit(Quantity q, const std::vector<std::pair<int, double>>& points, int N, int k);

struct Lemma81Row {
  int n = 0;
  double rnf = 0.0;
  double bound = 0.0;  // (k/(4k-4))^n
  bool pass = false;
};
std::vector<Lemma81Row> lemma81_check(GraphStore& store, const std::vector<int>& levels,
                                      const SolveOptions& opts = {});

struct ConstantRow {
  int level = 0;
  std::string quantity;
  double value = 0.0;
  std::string method;
  double tolerance = 0.0;
  int iterations = 0;
};

struct ConstantsTable {
  std::vector<ConstantRow> rows;
  std::vector<std::pair<int, double>> series(const std::string& quantity) const;
  std::string to_csv() const;
  std::string to_json() const;
};

ConstantsTable compute_constants(GraphStore& store, const std::vector<int>& levels,
                                 const std::vector<std::string>& quantities,
                                 const SolveOptions& opts = {}, int workers = 1);

}  // namespace usc
