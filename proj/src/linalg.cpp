#include "usc/linalg.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <random>

namespace usc {

SpMat laplacian(const Graph& g, double scale) {
  const auto n = g.size();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(g.adj.size() + n);
  for (std::int32_t u = 0; u < n; ++u) {
    t.emplace_back(u, u, scale * g.degree(u));
    for (auto v : g.neighbors(u)) t.emplace_back(u, v, -scale);
  }
  SpMat L(n, n);
  L.setFromTriplets(t.begin(), t.end());
  return L;
}

SpMat submatrix(const SpMat& L, const std::vector<std::int32_t>& idx) {
  std::vector<std::int32_t> pos(L.rows(), -1);
  for (std::size_t i = 0; i < idx.size(); ++i) pos[idx[i]] = static_cast<std::int32_t>(i);
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t c = 0; c < idx.size(); ++c)
    for (SpMat::InnerIterator it(L, idx[c]); it; ++it)
      if (pos[it.row()] >= 0) t.emplace_back(pos[it.row()], static_cast<int>(c), it.value());
  SpMat S(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(idx.size()));
  S.setFromTriplets(t.begin(), t.end());
  return S;
}

namespace {

using Ldlt = Eigen::SimplicialLDLT<SpMat>;
using Cg = Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper,
                                    Eigen::DiagonalPreconditioner<double>>;

bool use_direct(const SolveOptions& opts, std::int64_t n) {
  switch (opts.method) {
    case SolveOptions::Method::dense: return true;
    case SolveOptions::Method::iterative: return false;
    case SolveOptions::Method::automatic: return n <= opts.direct_limit;
  }
  return true;
}

void project_mean_zero(Vec& x) { x.array() -= x.mean(); }

}  // namespace

struct PinvSolver::Impl {
  SpMat L;
  bool direct = true;
  Ldlt ldlt;
  Cg cg;
  double tol = 1e-10;
};

PinvSolver::PinvSolver(const Graph& g, const SolveOptions& opts)
    : impl_(std::make_unique<Impl>()), n_(g.size()) {
  impl_->L = laplacian(g);
  impl_->tol = opts.tolerance;
  impl_->direct = use_direct(opts, n_);
  if (n_ <= 1) return;
  if (impl_->direct) {
    std::vector<std::int32_t> rest(n_ - 1);
    for (std::int32_t i = 1; i < n_; ++i) rest[i - 1] = i;
    impl_->ldlt.compute(submatrix(impl_->L, rest));
    if (impl_->ldlt.info() != Eigen::Success)
      throw SolverError("grounded Laplacian factorization failed (graph disconnected?)");
  } else {
    impl_->cg.setTolerance(opts.tolerance);
    impl_->cg.setMaxIterations(opts.max_iterations);
    impl_->cg.compute(impl_->L);
  }
}

PinvSolver::~PinvSolver() = default;

Vec PinvSolver::solve(const Vec& b_in, SolveStats* stats) const {
  Vec b = b_in;
  project_mean_zero(b);
  Vec x = Vec::Zero(n_);
  if (n_ <= 1) return x;
  if (impl_->direct) {
    x.tail(n_ - 1) = impl_->ldlt.solve(b.tail(n_ - 1));
    project_mean_zero(x);
    if (stats) {
      stats->method = "ldlt";
      stats->iterations = 1;
    }
  } else {
    x = impl_->cg.solve(b);
    if (impl_->cg.info() != Eigen::Success)
      throw SolverError("conjugate gradient did not converge (error " +
                        std::to_string(impl_->cg.error()) + ")");
    project_mean_zero(x);
    if (stats) {
      stats->method = "cg";
      stats->iterations = static_cast<int>(impl_->cg.iterations());
    }
  }
  if (stats) {
    double bn = b.norm();
    stats->residual = bn > 0 ? (impl_->L * x - b).norm() / bn : 0.0;
  }
  return x;
}

struct SubsetSolver::Impl {
  bool direct = true;
  Ldlt ldlt;
  Cg cg;
};

SubsetSolver::SubsetSolver(const SpMat& L, const std::vector<std::int32_t>& interior,
                           const SolveOptions& opts)
    : impl_(std::make_unique<Impl>()), interior_(interior), A_(submatrix(L, interior)) {
  impl_->direct = use_direct(opts, static_cast<std::int64_t>(interior.size()));
  if (interior.empty()) return;
  if (impl_->direct) {
    impl_->ldlt.compute(A_);
    if (impl_->ldlt.info() != Eigen::Success)
      throw SolverError("Dirichlet system is singular (target set unreachable?)");
  } else {
    impl_->cg.setTolerance(opts.tolerance);
    impl_->cg.setMaxIterations(opts.max_iterations);
    impl_->cg.compute(A_);
  }
}

SubsetSolver::~SubsetSolver() = default;

Vec SubsetSolver::solve(const Vec& rhs, SolveStats* stats) const {
  if (interior_.empty()) return Vec();
  Vec x;
  if (impl_->direct) {
    x = impl_->ldlt.solve(rhs);
    if (stats) {
      stats->method = "ldlt";
      stats->iterations = 1;
    }
  } else {
    x = impl_->cg.solve(rhs);
    if (impl_->cg.info() != Eigen::Success)
      throw SolverError("conjugate gradient did not converge on the Dirichlet system");
    if (stats) {
      stats->method = "cg";
      stats->iterations = static_cast<int>(impl_->cg.iterations());
    }
  }
  if (stats) {
    double rn = rhs.norm();
    stats->residual = rn > 0 ? (A_ * x - rhs).norm() / rn : 0.0;
  }
  return x;
}

EigenResult lanczos_largest(const std::function<Vec(const Vec&)>& op, std::int32_t n,
                            const Vec* deflate, double tol, int max_iter, std::uint64_t seed) {
  EigenResult out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vec v(n);
  for (std::int32_t i = 0; i < n; ++i) v[i] = normal(rng);
  auto orth = [&](Vec& x) {
    if (deflate) x -= deflate->dot(x) * *deflate;
  };
  orth(v);
  if (v.norm() == 0.0) return out;
  v.normalize();

  const int cap = std::min<int>(max_iter, n);
  std::vector<Vec> basis{v};
  std::vector<double> alpha, beta;
  Eigen::VectorXd ritz;
  double theta = 0.0;
  for (int j = 0; j < cap; ++j) {
    Vec w = op(basis[j]);
    double a = basis[j].dot(w);
    alpha.push_back(a);
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : basis) w -= b.dot(w) * b;
      orth(w);
    }
    double bnorm = w.norm();
    int m = j + 1;
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      T(i, i) = alpha[i];
      if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    theta = es.eigenvalues()[m - 1];
    ritz = es.eigenvectors().col(m - 1);
    double est = bnorm * std::abs(ritz[m - 1]);
    out.iterations = m;
    bool done = est <= tol * std::max(std::abs(theta), 1e-300) || bnorm < 1e-14 || m == cap;
    if (done) {
      out.converged = est <= tol * std::max(std::abs(theta), 1e-300) || bnorm < 1e-14;
      break;
    }
    beta.push_back(bnorm);
    basis.push_back(w / bnorm);
  }
  Vec y = Vec::Zero(n);
  for (int i = 0; i < ritz.size(); ++i) y += ritz[i] * basis[i];
  y.normalize();
  out.value = theta;
  out.vector = y;
  out.residual = (op(y) - theta * y).norm();
  return out;
}

}  // namespace usc
