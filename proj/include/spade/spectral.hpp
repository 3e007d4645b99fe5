#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "spade/errors.hpp"
#include "spade/graph.hpp"

// Generalized eigenanalysis of the Laplacian pencil (L_in, L_out): the top-k
// pairs of L_in v = lambda L_out v restricted to the subspace orthogonal to
// the per-component constant vectors of the output graph. On that subspace
// the pairs coincide with eigenpairs of pinv(L_out) * L_in, so the deflation
// realizes the pseudoinverse without ever forming it.

namespace spade {

/// Top-k pencil eigenpairs. Eigenvalues are sorted descending; eigenvectors
/// are L_out-orthonormal (v^T L_out v = 1) with the largest-magnitude entry
/// of each vector made positive. v_k_matrix column m is v_m * sqrt(lambda_m).
struct EigenSubspace {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
  Eigen::MatrixXd v_k_matrix;
  int k = 0;
};

struct PencilOptions {
  /// Added to the deflated L_out block (equivalent to shifting the L_out
  /// diagonal as seen by the pencil). Fallback for numerically semidefinite
  /// output graphs; keep 0 unless the factorization fails.
  double diagonal_shift = 0.0;
  /// Relative residual bound checked on every returned pair.
  double residual_tol = 1e-6;
};

/// Eq.-style scaled eigensubspace matrix: column m = v_m * sqrt(lambda_m).
/// Eigenvalues within roundoff below zero contribute a zero column.
inline Eigen::MatrixXd build_vk(const EigenSubspace& es) {
  Eigen::MatrixXd vk(es.eigenvectors.rows(), es.k);
  for (int m = 0; m < es.k; ++m)
    vk.col(m) =
        es.eigenvectors.col(m) * std::sqrt(std::max(es.eigenvalues[m], 0.0));
  return vk;
}

namespace detail {

/// Orthonormal basis of the complement of the per-component constant vectors,
/// held implicitly as one Householder reflector per component block. Reducing
/// an N x N matrix costs O(c N^2); no N x (N - c) basis is ever materialized.
class DeflationBasis {
public:
  DeflationBasis(const std::vector<int>& components, int num_components)
      : n_(static_cast<int>(components.size())), c_(num_components) {
    // positions grouped by component, ascending node index inside each block
    block_begin_.assign(c_ + 1, 0);
    for (int comp : components) ++block_begin_[comp + 1];
    for (int b = 0; b < c_; ++b) block_begin_[b + 1] += block_begin_[b];
    position_.resize(n_);
    std::vector<int> cursor(block_begin_.begin(), block_begin_.end() - 1);
    for (int node = 0; node < n_; ++node)
      position_[node] = cursor[components[node]]++;
    for (int b = 0; b < c_; ++b)
      for (int p = block_begin_[b] + 1; p < block_begin_[b + 1]; ++p)
        kept_.push_back(p);
    // Householder vector per block mapping e_1 to ones/sqrt(s); blocks of
    // size 1 need no reflection and contribute no deflated coordinate.
    reflectors_.resize(c_);
    for (int b = 0; b < c_; ++b) {
      int s = block_size(b);
      if (s < 2) continue;
      Eigen::VectorXd u = Eigen::VectorXd::Constant(s, -1.0 / std::sqrt(s));
      u[0] += 1.0;
      reflectors_[b] = u;
    }
  }

  int full_dim() const { return n_; }
  int reduced_dim() const { return n_ - c_; }
  int block_size(int b) const { return block_begin_[b + 1] - block_begin_[b]; }

  /// Q^T M Q for sparse symmetric M, via dense conjugation by the block
  /// reflectors and removal of each block's leading row/column.
  Eigen::MatrixXd reduce(const Eigen::SparseMatrix<double>& m) const {
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n_, n_);
    for (int col = 0; col < m.outerSize(); ++col)
      for (Eigen::SparseMatrix<double>::InnerIterator it(m, col); it; ++it)
        dense(position_[it.row()], position_[it.col()]) = it.value();
    for (int b = 0; b < c_; ++b) {
      if (block_size(b) < 2) continue;
      const Eigen::VectorXd& u = reflectors_[b];
      const int lo = block_begin_[b], s = block_size(b);
      const double beta = 2.0 / u.squaredNorm();
      dense.middleRows(lo, s).noalias() -=
          (beta * u) * (u.transpose() * dense.middleRows(lo, s));
      dense.middleCols(lo, s).noalias() -=
          (dense.middleCols(lo, s) * u) * (beta * u).transpose();
    }
    const int r = reduced_dim();
    Eigen::MatrixXd red(r, r);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) red(i, j) = dense(kept_[i], kept_[j]);
    return 0.5 * (red + red.transpose());
  }

  /// v = Q y: embed the reduced coordinates and run the reflections back.
  Eigen::VectorXd lift(const Eigen::VectorXd& y) const {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n_);
    for (int i = 0; i < reduced_dim(); ++i) z[kept_[i]] = y[i];
    for (int b = 0; b < c_; ++b) {
      if (block_size(b) < 2) continue;
      const Eigen::VectorXd& u = reflectors_[b];
      const int lo = block_begin_[b], s = block_size(b);
      auto seg = z.segment(lo, s);
      seg -= (2.0 * u.dot(seg) / u.squaredNorm()) * u;
    }
    Eigen::VectorXd v(n_);
    for (int node = 0; node < n_; ++node) v[node] = z[position_[node]];
    return v;
  }

private:
  int n_;
  int c_;
  std::vector<int> block_begin_;
  std::vector<int> position_;
  std::vector<int> kept_;
  std::vector<Eigen::VectorXd> reflectors_;
};

/// Largest-magnitude entry positive; among equal magnitudes the lowest index
/// decides.
inline void fix_sign(Eigen::VectorXd& v) {
  int best = 0;
  double mag = std::abs(v[0]);
  for (int i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > mag) {
      mag = std::abs(v[i]);
      best = i;
    }
  if (v[best] < 0.0) v = -v;
}

/// Removes the per-component mean: projection onto the complement of the
/// component indicator vectors.
inline void project_out_indicators(Eigen::VectorXd& x,
                                   const std::vector<int>& components,
                                   int num_components) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(num_components);
  Eigen::VectorXd cnt = Eigen::VectorXd::Zero(num_components);
  for (int i = 0; i < x.size(); ++i) {
    sum[components[i]] += x[i];
    cnt[components[i]] += 1.0;
  }
  for (int i = 0; i < x.size(); ++i)
    x[i] -= sum[components[i]] / cnt[components[i]];
}

} // namespace detail

/// Top-k eigenpairs of the pencil L_in v = lambda L_out v on the deflated
/// subspace. Symmetric-definite reduction: deflate both Laplacians with the
/// output graph's component reflectors, Cholesky-factor the reduced L_out,
/// and solve one dense symmetric eigenproblem.
inline EigenSubspace pencil_topk(const Laplacian& l_in, const Laplacian& l_out,
                                 int k, const PencilOptions& opts = {}) {
  const int n = l_out.size();
  if (l_in.size() != n)
    throw UsageError("pencil: Laplacians have different node counts");
  detail::DeflationBasis basis(l_out.components(), l_out.component_count());
  const int r = basis.reduced_dim();
  if (k < 1) throw UsageError("pencil: k must be >= 1");
  if (k > r)
    throw UsageError("pencil: k=" + std::to_string(k) +
                     " exceeds the deflated dimension " + std::to_string(r) +
                     " (N - components of the output graph)");

  Eigen::MatrixXd a = basis.reduce(l_in.matrix());
  Eigen::MatrixXd b = basis.reduce(l_out.matrix());
  if (opts.diagonal_shift != 0.0)
    b.diagonal().array() += opts.diagonal_shift;

  Eigen::LLT<Eigen::MatrixXd> llt(b);
  if (llt.info() != Eigen::Success)
    throw NumericError(
        "pencil: deflated output Laplacian is not positive definite; "
        "consider the diagonal_shift fallback");

  // C = L^{-1} A L^{-T}, eigenpairs of C map back through y = L^{-T} u
  Eigen::MatrixXd half = llt.matrixL().solve(a);
  Eigen::MatrixXd c = llt.matrixL().solve(half.transpose()).transpose();
  c = (0.5 * (c + c.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
  if (es.info() != Eigen::Success)
    throw NumericError("pencil: dense symmetric eigensolve did not converge");

  EigenSubspace out;
  out.k = k;
  out.eigenvalues.resize(k);
  out.eigenvectors.resize(n, k);
  for (int m = 0; m < k; ++m) {
    const int src = r - 1 - m; // ascending order inside the solver
    out.eigenvalues[m] = es.eigenvalues()[src];
    Eigen::VectorXd y = llt.matrixU().solve(es.eigenvectors().col(src));
    Eigen::VectorXd v = basis.lift(y);
    detail::fix_sign(v);
    out.eigenvectors.col(m) = v;
  }
  out.v_k_matrix = build_vk(out);

  // residual audit in the deflated metric
  for (int m = 0; m < k; ++m) {
    Eigen::VectorXd v = out.eigenvectors.col(m);
    Eigen::VectorXd resid =
        l_in.matrix() * v - out.eigenvalues[m] * (l_out.matrix() * v);
    detail::project_out_indicators(resid, l_out.components(),
                                   l_out.component_count());
    double scale = (l_in.matrix() * v).norm();
    if (resid.norm() > opts.residual_tol * scale + 1e-12)
      throw NumericError("pencil: eigenpair " + std::to_string(m) +
                         " residual " + std::to_string(resid.norm()) +
                         " exceeds tolerance (|L_in v| = " +
                         std::to_string(scale) + ")");
  }
  return out;
}

} // namespace spade
