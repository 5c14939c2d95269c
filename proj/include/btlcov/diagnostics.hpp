// Copyright 2026 The btlcov Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BTLCOV_DIAGNOSTICS_HPP_
#define BTLCOV_DIAGNOSTICS_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "btlcov/model.hpp"
#include "btlcov/types.hpp"

namespace btlcov {

namespace detail {

// [1 | X], the intercept-augmented covariate matrix.
inline Matrix augmented_covariates(const Matrix& x) {
  Matrix xbar(x.rows(), x.cols() + 1);
  xbar.col(0).setOnes();
  xbar.rightCols(x.cols()) = x;
  return xbar;
}

// Numerical rank via singular values with relative cutoff rtol * sigma_max.
inline int numerical_rank(const Matrix& m, double rtol) {
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 0;
  const double cutoff = rtol * sv[0];
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > cutoff) ++rank;
  }
  return rank;
}

}  // namespace detail

// Identifiability check: the sparse-score model is identifiable on the
// budget-k parameter space when 2k + d + 1 <= n and [1 | X] has full
// column rank. Returns a verdict, never throws.
inline IdentifiabilityVerdict check_identifiability(
    int n, int d, const SparsityBudget& budget, const Matrix& covariates) {
  IdentifiabilityVerdict v;
  v.count_condition_ok = (2 * budget.k + d + 1 <= n);
  const Matrix xbar = detail::augmented_covariates(covariates);
  v.rank = detail::numerical_rank(xbar, 1e-10);
  v.rank_condition_ok = (v.rank == d + 1);
  v.pass = v.count_condition_ok && v.rank_condition_ok;
  if (v.pass) {
    v.detail = "identifiable";
  } else if (!v.count_condition_ok) {
    v.detail = "sparsity budget too large: 2k+d+1 = " +
               std::to_string(2 * budget.k + d + 1) + " > n = " +
               std::to_string(n);
  } else {
    v.detail = "[1 | X] is rank-degenerate: rank " + std::to_string(v.rank) +
               " < " + std::to_string(d + 1);
  }
  return v;
}

// Condition numbers of the parameter vector plus spectrum diagnostics of
// Sigma = sum_{i>j over all pairs} (xt_i - xt_j)(xt_i - xt_j)^T. The
// extremal quadratic-form values are taken on the subspace
// { v : Xbar' v_{1:n} = 0 }, obtained by eigendecomposing P Sigma P with P
// the orthogonal projector onto that subspace.
inline ModelDiagnostics compute_diagnostics(const Params& params,
                                            const ComparisonDataset& data) {
  const int n = data.n();
  const int d = data.d();
  ModelDiagnostics diag;

  const Vector scores = params.scores(data);
  diag.kappa1 = std::exp(scores.maxCoeff() - scores.minCoeff());
  diag.kappa2 = params.alpha.size() > 0
                    ? params.alpha.cwiseAbs().maxCoeff()
                    : 0.0;
  diag.kappa3 = params.stacked().norm() / std::sqrt(static_cast<double>(n));

  const Matrix xbar = detail::augmented_covariates(data.covariates());
  Eigen::JacobiSVD<Matrix> svd(xbar, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const double cutoff = sv.size() > 0 ? 1e-10 * sv[0] : 0.0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > cutoff) ++rank;
  }
  const Matrix q = svd.matrixU().leftCols(rank);  // basis of col(Xbar)

  // Row norms of the projection onto col(Xbar), scaled to report the
  // incoherence ratio directly comparable to 1.
  double max_row = 0.0;
  for (int i = 0; i < n; ++i) max_row = std::max(max_row, q.row(i).norm());
  diag.incoherence =
      max_row * std::sqrt(static_cast<double>(n) / static_cast<double>(d + 1));

  // Sigma over all pairs collapses to n * S1 - s0 s0^T with
  // S1 = sum_i xt_i xt_i^T and s0 = sum_i xt_i.
  const Matrix& x = data.covariates();
  Matrix sigma = Matrix::Zero(n + d, n + d);
  sigma.topLeftCorner(n, n) = static_cast<double>(n) * Matrix::Identity(n, n);
  if (d > 0) {
    sigma.topRightCorner(n, d) = static_cast<double>(n) * x;
    sigma.bottomLeftCorner(d, n) = static_cast<double>(n) * x.transpose();
    sigma.bottomRightCorner(d, d) =
        static_cast<double>(n) * x.transpose() * x;
  }
  Vector s0(n + d);
  s0.head(n).setOnes();
  if (d > 0) s0.tail(d) = x.colwise().sum().transpose();
  sigma.noalias() -= s0 * s0.transpose();

  Eigen::SelfAdjointEigenSolver<Matrix> sigma_eig(sigma);
  diag.sigma_max = sigma_eig.eigenvalues().maxCoeff();

  // P = blockdiag(I - QQ', I_d); the complement of the constraint
  // subspace contributes exactly `rank` zero eigenvalues of P Sigma P,
  // so the subspace minimum is the (rank+1)-th smallest.
  Matrix proj = Matrix::Identity(n + d, n + d);
  proj.topLeftCorner(n, n).noalias() -= q * q.transpose();
  const Matrix psp = proj * sigma * proj;
  Eigen::SelfAdjointEigenSolver<Matrix> psp_eig(psp);
  Vector evs = psp_eig.eigenvalues();  // ascending
  diag.sigma_min_perp = rank < evs.size() ? evs[rank] : 0.0;
  return diag;
}

}  // namespace btlcov

#endif  // BTLCOV_DIAGNOSTICS_HPP_
