#pragma once

#include "usc/cellgraph.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <memory>

namespace usc {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

struct SolveOptions {
  enum class Method { automatic, dense, iterative };
  Method method = Method::automatic;
  double tolerance = 1e-10;  // relative residual
  int max_iterations = 200000;
  // automatic: dense eigensolves up to this size, sparse direct factorizations
  // up to direct_limit, conjugate gradient above.
  std::int32_t dense_limit = 2000;
  std::int32_t direct_limit = 60000;
};

struct SolveStats {
  std::string method;
  int iterations = 0;
  double residual = 0.0;
};

// Ordered-pair Laplacian: L = scale·(D - A). scale = 2 matches 𝒟ₙ(f) = fᵀLf.
SpMat laplacian(const Graph& g, double scale = 2.0);

// Solves L x = b on the mean-zero subspace (b is projected first); x has mean zero.
class PinvSolver {
 public:
  PinvSolver(const Graph& g, const SolveOptions& opts);
  ~PinvSolver();
  Vec solve(const Vec& b, SolveStats* stats = nullptr) const;
  std::int32_t size() const { return n_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::int32_t n_;
};

// Solves L_II x = rhs for the principal submatrix of a sparse SPD-on-I matrix.
class SubsetSolver {
 public:
  SubsetSolver(const SpMat& L, const std::vector<std::int32_t>& interior, const SolveOptions& opts);
  ~SubsetSolver();
  Vec solve(const Vec& rhs, SolveStats* stats = nullptr) const;
  const std::vector<std::int32_t>& interior() const { return interior_; }
  const SpMat& matrix() const { return A_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::vector<std::int32_t> interior_;
  SpMat A_;
};

// Principal submatrix L[idx, idx].
SpMat submatrix(const SpMat& L, const std::vector<std::int32_t>& idx);

struct EigenResult {
  double value = 0.0;
  Vec vector;
  int iterations = 0;
  double residual = 0.0;  // ‖Av - θv‖ for the returned unit vector
  bool converged = false;
};

// Largest eigenpair of a symmetric operator by Lanczos with full
// reorthogonalization. Vectors are kept orthogonal to `deflate` (unit norm) if given.
EigenResult lanczos_largest(const std::function<Vec(const Vec&)>& op, std::int32_t n,
                            const Vec* deflate, double tol, int max_iter, std::uint64_t seed = 1);

}  // namespace usc
