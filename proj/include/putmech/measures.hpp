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

#include "putmech/types.hpp"

namespace putmech {

// All information measures are reported in bits. The 0 log 0 = 0 and
// 0^2/0 = 0 conventions are applied term-wise.

/// Shannon entropy H(p) in bits.
inline double entropy(const Distribution& p) {
  double h = 0.0;
  for (int i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) h -= p[i] * std::log2(p[i]);
  return h;
}

namespace detail {

/// Mass defect sum(p) - 1 via Neumaier-compensated summation; exact to
/// well below one ulp of 1. Vectors produced by finite arithmetic sum to
/// 1 only within ~1e-16, and divergences of nearby distributions are
/// sensitive to exactly that defect.
inline double mass_defect(const Distribution& p) {
  double sum = -1.0, comp = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    const double x = p[i];
    const double t = sum + x;
    comp += std::fabs(sum) >= std::fabs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

}  // namespace detail

/// Relative entropy D(p || q) in bits. Requires q_i = 0 => p_i = 0.
///
/// Terms are evaluated as p log1p((p-q)/q), which stays accurate when p
/// and q are close; the naive p log(p/q) form loses the entire signal to
/// rounding once D drops below ~1e-12. Inputs are treated as the
/// distributions they normalize to, so ~1e-16 mass defects from upstream
/// arithmetic do not contaminate tiny divergences.
inline double relative_entropy(const Distribution& p, const Distribution& q) {
  if (p.size() != q.size()) throw DimensionMismatch("relative_entropy: sizes differ");
  double raw = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0)
      throw AbsoluteContinuityViolated("relative_entropy: p" + std::to_string(i) +
                                       " > 0 but q is 0");
    raw += p[i] * std::log1p((p[i] - q[i]) / q[i]);
  }
  const double lp = detail::mass_defect(p), lq = detail::mass_defect(q);
  const double corr = std::log1p(lp) - std::log1p(lq);
  const double nats = (raw - (1.0 + lp) * corr) / (1.0 + lp);
  return std::max(nats, 0.0) * kLog2E;
}

/// Mutual information I(p, W) in bits between an input X ~ p and the
/// output of the channel W.
inline double mutual_information(const Distribution& p, const Mechanism& w) {
  if (p.size() != w.input_size())
    throw DimensionMismatch("mutual_information: sizes differ");
  const Distribution out = w.output_distribution(p);
  double nats = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    for (int j = 0; j < w.output_size(); ++j) {
      const double wij = w(i, j);
      if (wij == 0.0) continue;
      nats += p[i] * wij * std::log1p((wij - out[j]) / out[j]);
    }
  }
  return std::max(nats, 0.0) * kLog2E;
}

namespace detail {

/// sum_i (p_i/sp)^alpha (q_i/sq)^{1-alpha} - 1 for the normalized inputs,
/// computed without cancellation: the raw power sum equals
/// sum_i p_i expm1((1-alpha) log1p((q_i-p_i)/p_i)) + sp, and normalization
/// rescales it by sp^-alpha sq^(alpha-1) (homogeneity).
inline double power_sum_minus_one(const Distribution& p, const Distribution& q,
                                  double alpha) {
  if (p.size() != q.size()) throw DimensionMismatch("divergence: sizes differ");
  double raw = 0.0;  // power sum minus sum(p)
  for (int i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;  // contributes p_i^alpha q^{1-alpha} - p_i = 0
    if (q[i] == 0.0)
      throw AbsoluteContinuityViolated("divergence: p" + std::to_string(i) +
                                       " > 0 but q is 0");
    raw += p[i] * std::expm1((1.0 - alpha) * std::log1p((q[i] - p[i]) / p[i]));
  }
  const double lp = mass_defect(p), lq = mass_defect(q);
  const double log_norm = std::log1p(raw / (1.0 + lp)) +
                          (1.0 - alpha) * (std::log1p(lp) - std::log1p(lq));
  return std::expm1(log_norm);
}

}  // namespace detail

/// Order-alpha Hellinger divergence (sum p^a q^{1-a} - 1)/(a - 1), a f-divergence;
/// dimensionless.
inline double hellinger_divergence(const Distribution& p, const Distribution& q,
                                   const RenyiOrder& order) {
  const double h = detail::power_sum_minus_one(p, q, order.alpha) / (order.alpha - 1.0);
  return std::max(h, 0.0);
}

/// Order-alpha Renyi divergence in bits, via its exact logarithmic
/// relation to the Hellinger divergence of the same order.
inline double renyi_divergence(const Distribution& p, const Distribution& q,
                               const RenyiOrder& order) {
  const double s_minus_1 = detail::power_sum_minus_one(p, q, order.alpha);
  const double d = std::log1p(s_minus_1) / (order.alpha - 1.0);
  return std::max(d, 0.0) * kLog2E;
}

/// Half chi-squared divergence (1/2) sum (p_i - q_i)^2 / q_i: the
/// second-order expansion of D(p||q) in nats around p = q.
inline double chi_squared_divergence(const Distribution& p, const Distribution& q) {
  if (p.size() != q.size()) throw DimensionMismatch("chi_squared: sizes differ");
  if (!q.interior()) throw NotInterior("chi_squared: q must be interior");
  double s = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    const double d = p[i] - q[i];
    s += d * d / q[i];
  }
  return 0.5 * s;
}

/// Bound function sandwiching D(p||q) / H_alpha(p||q) between its values
/// at the extreme likelihood ratios. Continuous, with kappa(alpha, 0) =
/// log2 e and kappa(alpha, 1) = log2(e)/alpha; near t = 1 the closed form
/// is 0/0 and a guarded branch returns the limit. Result in bits.
inline double kappa(double alpha, double t) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("kappa: alpha outside (0,1)");
  if (!(t >= 0.0)) throw ValidationError("kappa: t must be nonnegative");
  if (t == 0.0) return kLog2E;
  const double h = t - 1.0;
  if (std::fabs(h) < 1e-6) return kLog2E / alpha;
  if (std::fabs(h) < 1e-4) {
    // Both numerator and denominator of the closed form are O(h^2) here
    // and cancel catastrophically in doubles; use the series instead.
    return kLog2E / alpha * (1.0 - (3.0 - alpha) * h / 3.0);
  }
  const double numer = (1.0 - alpha) * (t * std::log(t) - t + 1.0);
  const double denom = 1.0 - std::pow(t, alpha) + alpha * t - alpha;
  return numer / denom * kLog2E;
}

}  // namespace putmech
