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
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "putmech/linalg.hpp"

namespace putmech {

inline constexpr double kLog2E = 1.4426950408889634074;  // log2(e)
inline constexpr double kLn2 = 0.69314718055994530942;   // ln(2)

// Tolerance for "sums to one" checks on probability vectors and rows.
inline constexpr double kSimplexTol = 1e-12;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A malformed input object (probability vector, mechanism, config).
struct ValidationError : Error {
  using Error::Error;
};
struct DimensionMismatch : Error {
  using Error::Error;
};
/// Relative entropy style divergence requested with p_i > 0 where q_i = 0.
struct AbsoluteContinuityViolated : Error {
  using Error::Error;
};
struct NotInterior : Error {
  using Error::Error;
};
/// Assembling a mechanism produced a negative entry: the perturbation is
/// too large for the reference output distribution.
struct NegativeEntry : Error {
  using Error::Error;
};
struct BudgetExceedsEntropy : Error {
  using Error::Error;
};
struct NoConvergence : Error {
  using Error::Error;
};
struct NumericalFailure : Error {
  using Error::Error;
};
struct DimensionTooLarge : Error {
  using Error::Error;
};

/// Probability mass function over a finite alphabet.
class Distribution {
 public:
  explicit Distribution(Vec probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw ValidationError("distribution: empty");
    double sum = 0.0;
    for (double p : probs_) {
      if (!(p >= 0.0)) throw ValidationError("distribution: negative entry");
      sum += p;
    }
    if (std::fabs(sum - 1.0) > kSimplexTol)
      throw ValidationError("distribution: entries sum to " + std::to_string(sum));
  }

  int size() const { return static_cast<int>(probs_.size()); }
  double operator[](int i) const { return probs_[i]; }
  const Vec& probs() const { return probs_; }

  bool interior() const {
    for (double p : probs_)
      if (p <= 0.0) return false;
    return true;
  }

 private:
  Vec probs_;
};

/// Row-stochastic conditional probability matrix: a privacy channel
/// mapping an input alphabet of size rows() to an output alphabet of
/// size cols().
class Mechanism {
 public:
  Mechanism() = default;
  explicit Mechanism(Matrix rows) : w_(std::move(rows)) {
    for (int i = 0; i < w_.rows(); ++i) {
      double sum = 0.0;
      for (int j = 0; j < w_.cols(); ++j) {
        if (!(w_(i, j) >= 0.0))
          throw ValidationError("mechanism: negative entry at row " + std::to_string(i));
        sum += w_(i, j);
      }
      if (std::fabs(sum - 1.0) > kSimplexTol)
        throw ValidationError("mechanism: row " + std::to_string(i) + " sums to " +
                              std::to_string(sum));
    }
  }

  int input_size() const { return w_.rows(); }
  int output_size() const { return w_.cols(); }
  double operator()(int i, int j) const { return w_(i, j); }
  const Matrix& matrix() const { return w_; }

  /// Output distribution induced by input p, i.e. the row vector p W.
  Distribution output_distribution(const Distribution& p) const {
    if (p.size() != input_size())
      throw DimensionMismatch("mechanism: input size " + std::to_string(input_size()) +
                              ", distribution size " + std::to_string(p.size()));
    Vec out(output_size(), 0.0);
    for (int i = 0; i < input_size(); ++i)
      for (int j = 0; j < output_size(); ++j) out[j] += p[i] * w_(i, j);
    // Guard the simplex validation against accumulated roundoff.
    double sum = 0.0;
    for (double v : out) sum += v;
    for (double& v : out) v /= sum;
    return Distribution(out);
  }

 private:
  Matrix w_;
};

/// Order of a Renyi or Hellinger divergence, restricted to (0, 1).
/// beta = alpha / (1 - alpha) is the weight trade-off between the two
/// error exponents associated with this order.
struct RenyiOrder {
  double alpha;
  double beta;

  explicit RenyiOrder(double a) : alpha(a), beta(a / (1.0 - a)) {
    if (!(a > 0.0 && a < 1.0))
      throw ValidationError("renyi order: alpha must lie in (0,1)");
  }
};

}  // namespace putmech
