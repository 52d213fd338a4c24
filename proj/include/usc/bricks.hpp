#pragma once

#include "usc/spectral.hpp"

namespace usc {

struct Projections {
  Rational a, b, c;  // P₁Ψ_w at (0,0,0), (1,0,0), (1/2,0,0)
};
Projections projections(const IfsSpec& spec, const Word& w);

// perm[v] = index of the level-L cell g(Ψ_v□).
std::vector<std::int32_t> level_permutation(const IfsSpec& spec, int level, const Isometry& g);

struct Certificate {
  std::string name;
  bool pass = true;
  std::int64_t vertex = -1;  // first violating vertex
  std::string detail;
};

struct BrickFunction {
  std::string kind;
  int level = 0;
  std::vector<std::int64_t> vertices;  // level indices, sorted
  std::vector<double> values;
  std::vector<Rational> exact;         // empty when the values are float-only
  std::vector<Certificate> certificates;
  double energy = 0.0;                 // ordered-pair energy on the vertex set
  double energy_ratio = 0.0;           // energy·λ/N^level (λ of the matching level)
  std::vector<double> ladder;          // f only: 𝒟(f′_{n,m}) for m = 0..n

  bool certified() const;
  const Certificate* first_failure() const;
  std::string to_json() const;
};

struct BrickOptions {
  SolveOptions solve;
  bool strict = true;  // throw CertificateError on the first failed certificate
  int L_star = 10;
};

struct HarmonicPair {
  int m = 0;
  std::vector<Rational> h, hp;      // h_m and h′_m on W_m
  double energy_h = 0.0, energy_hp = 0.0;
  double R_h = 0.0, R_hp = 0.0;     // effective resistances from the solver
};

// Memoizes h, h′, g, f per level; the f ladder consumes every g below it.
class BrickLadder {
 public:
  BrickLadder(GraphStore& store, BrickOptions opts = {});
  const HarmonicPair& harmonic(int m);
  const BrickFunction& g(int m);
  const BrickFunction& f(int n);
  BrickFunction cutoff(const Word& w, int n);
  double lambda(int n);
  const BrickOptions& options() const { return opts_; }

 private:
  GraphStore& store_;
  BrickOptions opts_;
  std::map<int, HarmonicPair> h_;
  std::map<int, BrickFunction> g_, f_;
  std::map<int, double> lambda_;
};

HarmonicPair harmonic_pair(GraphStore& store, int m, const BrickOptions& opts = {});
BrickFunction build_g(GraphStore& store, int m, const BrickOptions& opts = {});
BrickFunction build_f(GraphStore& store, int n, const BrickOptions& opts = {});
BrickFunction build_cutoff(GraphStore& store, const Word& w, int n, const BrickOptions& opts = {});

}  // namespace usc
