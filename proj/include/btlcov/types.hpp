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

#ifndef BTLCOV_TYPES_HPP_
#define BTLCOV_TYPES_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace btlcov {

class InvalidInputError : public std::runtime_error {
 public:
  explicit InvalidInputError(const std::string& what)
      : std::runtime_error(what) {}
};

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

class InferenceError : public std::runtime_error {
 public:
  explicit InferenceError(const std::string& what)
      : std::runtime_error(what) {}
};

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// One comparison pair. Pairs are stored canonically with i > j, sorted
// lexicographically. `wins` counts the trials won by item i (the
// larger-index endpoint), so wins / trials is the sufficient statistic
// whose expectation is the probability that i beats j.
struct Edge {
  int i = 0;
  int j = 0;
  long wins = 0;
  long trials = 0;
};

// Pairwise comparison data over n items with d covariates per item.
// Covariates are stored post-rescaling (max row norm <= sqrt((d+1)/n)).
// Immutable after construction; safe to share read-only across threads.
class ComparisonDataset {
 public:
  ComparisonDataset(Matrix covariates, std::vector<Edge> edges, long l_ref)
      : covariates_(std::move(covariates)),
        edges_(std::move(edges)),
        l_ref_(l_ref) {
    validate();
    y_.resize(edges_.size());
    weight_.resize(edges_.size());
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      y_[e] = static_cast<double>(edges_[e].wins) /
              static_cast<double>(edges_[e].trials);
      weight_[e] = static_cast<double>(edges_[e].trials) /
                   static_cast<double>(l_ref_);
    }
  }

  int n() const { return static_cast<int>(covariates_.rows()); }
  int d() const { return static_cast<int>(covariates_.cols()); }
  const Matrix& covariates() const { return covariates_; }
  const std::vector<Edge>& edges() const { return edges_; }
  long num_edges() const { return static_cast<long>(edges_.size()); }
  long l_ref() const { return l_ref_; }

  // Fraction of trials on edge e won by the larger-index endpoint.
  double y(std::size_t e) const { return y_[e]; }
  // Edge weight trials/L_ref; identically 1 for homogeneous trial counts.
  double weight(std::size_t e) const { return weight_[e]; }

  // Mean trial count over the edges incident to item `i`; the per-item
  // trial scale used to standardize inference statistics. Equals L_ref
  // when trial counts are homogeneous.
  double incident_mean_trials(int i) const {
    double total = 0.0;
    long count = 0;
    for (const Edge& e : edges_) {
      if (e.i == i || e.j == i) {
        total += static_cast<double>(e.trials);
        ++count;
      }
    }
    if (count == 0) return static_cast<double>(l_ref_);
    return total / static_cast<double>(count);
  }

 private:
  void validate() const {
    const int nn = n();
    if (nn < 1) throw InvalidInputError("dataset: need at least one item");
    if (d() >= nn) {
      throw InvalidInputError("dataset: covariate dimension d=" +
                              std::to_string(d()) + " must be < n=" +
                              std::to_string(nn));
    }
    if (l_ref_ < 1) {
      throw InvalidInputError("dataset: reference trial count must be >= 1");
    }
    if (!covariates_.allFinite()) {
      throw InvalidInputError("dataset: covariates must be finite");
    }
    const double bound =
        std::sqrt(static_cast<double>(d() + 1) / static_cast<double>(nn));
    for (int i = 0; i < nn; ++i) {
      if (covariates_.row(i).norm() > bound + 1e-12) {
        throw InvalidInputError(
            "dataset: covariate row " + std::to_string(i) +
            " exceeds the rescaled norm bound; apply rescale_covariates");
      }
    }
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const Edge& edge = edges_[e];
      if (edge.i <= edge.j) {
        throw InvalidInputError("dataset: edge must satisfy i > j, got (" +
                                std::to_string(edge.i) + ", " +
                                std::to_string(edge.j) + ")");
      }
      if (edge.i >= nn || edge.j < 0) {
        throw InvalidInputError("dataset: edge endpoint out of range");
      }
      if (edge.trials <= 0) {
        throw InvalidInputError("dataset: edge (" + std::to_string(edge.i) +
                                ", " + std::to_string(edge.j) +
                                ") must have positive trials");
      }
      if (edge.wins < 0 || edge.wins > edge.trials) {
        throw InvalidInputError("dataset: edge (" + std::to_string(edge.i) +
                                ", " + std::to_string(edge.j) +
                                ") has wins outside [0, trials]");
      }
      if (e > 0) {
        const Edge& prev = edges_[e - 1];
        if (prev.i > edge.i || (prev.i == edge.i && prev.j >= edge.j)) {
          throw InvalidInputError(
              "dataset: edges must be sorted lexicographically without "
              "duplicates");
        }
      }
    }
  }

  Matrix covariates_;
  std::vector<Edge> edges_;
  long l_ref_;
  std::vector<double> y_;
  std::vector<double> weight_;
};

// Model parameters: intrinsic scores alpha (length n, sparse in the fitted
// estimator) and covariate coefficients beta (length d). The solver
// produces hard zeros in alpha, so support() is exact.
struct Params {
  Vector alpha;
  Vector beta;

  Params() = default;
  Params(Vector a, Vector b) : alpha(std::move(a)), beta(std::move(b)) {}

  static Params zero(int n, int d) {
    return Params(Vector::Zero(n), Vector::Zero(d));
  }

  int n() const { return static_cast<int>(alpha.size()); }
  int d() const { return static_cast<int>(beta.size()); }

  // The stacked (n+d)-vector (alpha, beta).
  Vector stacked() const {
    Vector theta(alpha.size() + beta.size());
    theta << alpha, beta;
    return theta;
  }

  static Params from_stacked(const Vector& theta, int n) {
    return Params(theta.head(n), theta.tail(theta.size() - n));
  }

  // Latent score of item i: alpha_i + x_i' beta.
  double score(const ComparisonDataset& data, int i) const {
    return alpha[i] + data.covariates().row(i).dot(beta);
  }

  // All item scores alpha + X beta.
  Vector scores(const ComparisonDataset& data) const {
    return alpha + data.covariates() * beta;
  }

  std::vector<int> support() const {
    std::vector<int> s;
    for (int i = 0; i < alpha.size(); ++i) {
      if (alpha[i] != 0.0) s.push_back(i);
    }
    return s;
  }

  bool all_finite() const { return alpha.allFinite() && beta.allFinite(); }
};

// Sparsity budget k for the intrinsic scores; identifiability requires
// 2k + d + 1 <= n.
struct SparsityBudget {
  int k = 0;
};

struct IdentifiabilityVerdict {
  bool pass = false;
  bool count_condition_ok = false;  // 2k + d + 1 <= n
  bool rank_condition_ok = false;   // [1 | X] has full column rank d + 1
  int rank = 0;
  std::string detail;
};

// Measured condition numbers and spectrum diagnostics. These are reported,
// never enforced: the corresponding population constants are existential.
struct ModelDiagnostics {
  double kappa1 = 1.0;       // exp(max score gap)
  double kappa2 = 0.0;       // max |alpha_i|
  double kappa3 = 0.0;       // ||theta||_2 / sqrt(n)
  double incoherence = 0.0;  // ||P_Xbar||_{2,inf} * sqrt(n/(d+1))
  double sigma_min_perp = 0.0;
  double sigma_max = 0.0;
};

}  // namespace btlcov

#endif  // BTLCOV_TYPES_HPP_
