// Copyright 2026 The putmech Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "putmech/measures.hpp"
#include "putmech/types.hpp"

namespace putmech {

// Perturbation model around a perfect-privacy mechanism W0 (all rows equal
// to an interior output distribution w0):
//
//   W = W0 + A [sqrt(w0)],   i.e.  W_ij = w0_j + A_ij sqrt(w0_j),
//
// where A has rows orthogonal to sqrt(w0) (row stochasticity) and entries
// bounded by |A_ij| <= rho sqrt(w0_j) for a neighborhood radius rho < 1.
// In this neighborhood, relative entropy between output distributions and
// mutual information are second-order (chi-squared) quadratic forms in A.

/// Interior output distribution w0, the common row of a perfect-privacy
/// mechanism W0.
class ReferenceOutput {
 public:
  explicit ReferenceOutput(Vec w0) : w0_(std::move(w0)) {
    double sum = 0.0;
    for (double v : w0_) {
      if (!(v > 0.0)) throw NotInterior("reference output: entries must be positive");
      sum += v;
    }
    if (std::fabs(sum - 1.0) > kSimplexTol)
      throw ValidationError("reference output: entries sum to " + std::to_string(sum));
    sqrt_w0_.resize(w0_.size());
    for (size_t j = 0; j < w0_.size(); ++j) sqrt_w0_[j] = std::sqrt(w0_[j]);
  }

  static ReferenceOutput uniform(int n) {
    return ReferenceOutput(Vec(n, 1.0 / n));
  }

  int size() const { return static_cast<int>(w0_.size()); }
  double operator[](int j) const { return w0_[j]; }
  const Vec& probs() const { return w0_; }
  /// Entrywise square root of w0; a unit vector since w0 sums to one.
  const Vec& sqrt_probs() const { return sqrt_w0_; }

 private:
  Vec w0_;
  Vec sqrt_w0_;
};

/// Normalized perturbation A together with the smallest neighborhood
/// radius it fits in: radius = max_ij |A_ij| / sqrt(w0_j).
struct Perturbation {
  Matrix a;
  double radius = 0.0;
};

inline constexpr double kOrthogonalityTol = 1e-10;

/// Validates row orthogonality A (sqrt w0)^T = 0 and computes the radius.
inline Perturbation make_perturbation(const ReferenceOutput& w0, Matrix a) {
  if (a.cols() != w0.size())
    throw DimensionMismatch("perturbation: column count differs from |w0|");
  double radius = 0.0;
  for (int i = 0; i < a.rows(); ++i) {
    double along = 0.0;
    for (int j = 0; j < a.cols(); ++j) {
      along += a(i, j) * w0.sqrt_probs()[j];
      radius = std::max(radius, std::fabs(a(i, j)) / w0.sqrt_probs()[j]);
    }
    if (std::fabs(along) > kOrthogonalityTol)
      throw ValidationError("perturbation: row " + std::to_string(i) +
                            " not orthogonal to sqrt(w0)");
  }
  return Perturbation{std::move(a), radius};
}

/// The rank-1 row-stochastic mechanism with every row equal to w0. Leaks
/// zero mutual information for every input distribution.
inline Mechanism perfect_mechanism(const ReferenceOutput& w0, int input_size) {
  Matrix rows(input_size, w0.size());
  for (int i = 0; i < input_size; ++i)
    for (int j = 0; j < w0.size(); ++j) rows(i, j) = w0[j];
  return Mechanism(rows);
}

/// W = W0 + A [sqrt(w0)]. Negative entries are a hard error rather than
/// being clipped: clipping would silently break row orthogonality and the
/// leakage certificate of the quadratic forms.
inline Mechanism assemble(const ReferenceOutput& w0, const Matrix& a) {
  if (a.cols() != w0.size())
    throw DimensionMismatch("assemble: column count differs from |w0|");
  Matrix rows(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < a.cols(); ++j) {
      double wij = w0[j] + a(i, j) * w0.sqrt_probs()[j];
      if (wij < -kSimplexTol)
        throw NegativeEntry("assemble: entry (" + std::to_string(i) + "," +
                            std::to_string(j) + ") = " + std::to_string(wij) +
                            "; perturbation too large for this w0");
      rows(i, j) = std::max(wij, 0.0);
    }
  }
  return Mechanism(rows);
}

inline Mechanism assemble(const ReferenceOutput& w0, const Perturbation& p) {
  return assemble(w0, p.a);
}

/// Extracts A = (W - W0) [w0^{-1/2}]; inverse of assemble.
inline Perturbation decompose(const Mechanism& w, const ReferenceOutput& w0) {
  if (w.output_size() != w0.size())
    throw DimensionMismatch("decompose: output size differs from |w0|");
  Matrix a(w.input_size(), w.output_size());
  for (int i = 0; i < w.input_size(); ++i)
    for (int j = 0; j < w.output_size(); ++j)
      a(i, j) = (w(i, j) - w0[j]) / w0.sqrt_probs()[j];
  return make_perturbation(w0, std::move(a));
}

/// Second-order approximation of D(p_k W || p_1 W), in bits:
/// (1/2) ||(p_k - p_1) A||^2 converted from nats.
inline double approx_relative_entropy(const Distribution& pk, const Distribution& p1,
                                      const Matrix& a) {
  if (pk.size() != p1.size() || pk.size() != a.rows())
    throw DimensionMismatch("approx_relative_entropy: sizes differ");
  Vec diff(pk.size());
  for (int i = 0; i < pk.size(); ++i) diff[i] = pk[i] - p1[i];
  const Vec img = vecmat(diff, a);
  return 0.5 * dot(img, img) * kLog2E;
}

/// Second-order approximation of I(p_k, W), in bits:
/// (1/2) sum_i p_ki ||A_i||^2 converted from nats.
inline double approx_mutual_information(const Distribution& pk, const Matrix& a) {
  if (pk.size() != a.rows())
    throw DimensionMismatch("approx_mutual_information: sizes differ");
  double s = 0.0;
  for (int i = 0; i < a.rows(); ++i) {
    double row_sq = 0.0;
    for (int j = 0; j < a.cols(); ++j) row_sq += a(i, j) * a(i, j);
    s += pk[i] * row_sq;
  }
  return 0.5 * s * kLog2E;
}

/// A mechanism-design instance: hypothesis distributions (the first one
/// distinguished), per-hypothesis leakage budgets in bits, and the
/// reference output distribution used for assembly.
class EitProblem {
 public:
  EitProblem(std::vector<Distribution> hypotheses, Vec budgets_bits,
             ReferenceOutput reference = ReferenceOutput::uniform(2))
      : hypotheses_(std::move(hypotheses)),
        budgets_bits_(std::move(budgets_bits)),
        reference_(std::move(reference)) {
    if (hypotheses_.size() < 2)
      throw ValidationError("problem: needs at least two hypotheses");
    if (budgets_bits_.size() != hypotheses_.size())
      throw ValidationError("problem: one budget per hypothesis required");
    const int m_size = hypotheses_.front().size();
    for (size_t k = 0; k < hypotheses_.size(); ++k) {
      if (hypotheses_[k].size() != m_size)
        throw DimensionMismatch("problem: hypothesis sizes differ");
      if (!hypotheses_[k].interior())
        throw NotInterior("problem: hypothesis " + std::to_string(k + 1) +
                          " must be interior");
      if (budgets_bits_[k] < 0.0)
        throw ValidationError("problem: negative budget");
      if (budgets_bits_[k] > entropy(hypotheses_[k]) + 1e-12)
        throw BudgetExceedsEntropy("problem: budget " + std::to_string(k + 1) +
                                   " exceeds H(p_" + std::to_string(k + 1) + ")");
    }
  }

  int num_hypotheses() const { return static_cast<int>(hypotheses_.size()); }
  int source_size() const { return hypotheses_.front().size(); }
  const Distribution& hypothesis(int k) const { return hypotheses_[k]; }
  const std::vector<Distribution>& hypotheses() const { return hypotheses_; }
  double budget_bits(int k) const { return budgets_bits_[k]; }
  double budget_nats(int k) const { return budgets_bits_[k] * kLn2; }
  const ReferenceOutput& reference() const { return reference_; }

  double min_entropy_bits() const {
    double h = entropy(hypotheses_[0]);
    for (size_t k = 1; k < hypotheses_.size(); ++k)
      h = std::min(h, entropy(hypotheses_[k]));
    return h;
  }

 private:
  std::vector<Distribution> hypotheses_;
  Vec budgets_bits_;
  ReferenceOutput reference_;
};

/// Worst-case exact leakage max_k I(p_k, W) in bits. This is the leakage
/// level at which a designed mechanism is compared against the exact
/// optimum.
inline double effective_leakage(const EitProblem& problem, const Mechanism& w) {
  double worst = 0.0;
  for (int k = 0; k < problem.num_hypotheses(); ++k)
    worst = std::max(worst, mutual_information(problem.hypothesis(k), w));
  return worst;
}

}  // namespace putmech
