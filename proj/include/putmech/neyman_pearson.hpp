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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "putmech/measures.hpp"
#include "putmech/types.hpp"

namespace putmech {

// Finite-sample verification of the error-exponent utility semantics. The
// hypotheses are H1: X ~ q1 against H2: X ~ q2, with
//   beta1 = P(decide H1 | H2)  (false alarm for H1, bounded by delta)
//   beta2 = P(decide H2 | H1)  (missed detection of H1, minimized).
// The minimized beta2(delta) decays exponentially with rate D(q2 || q1).

struct TestResult {
  long long n = 0;
  double delta = 0.0;
  /// Exact false-alarm probability of the randomized test; equals delta.
  double beta1 = 0.0;
  /// Smallest missed-detection probability subject to beta1 <= delta.
  /// May underflow to zero as a double; log2_beta2 stays exact.
  double beta2 = 0.0;
  double log2_beta2 = 0.0;
  /// -(1/n) log2 beta2, bits per sample.
  double exponent_bits = 0.0;
  bool exact = true;
  /// Wilson 95% confidence bounds on beta2 (Monte Carlo path only).
  double ci_low = std::numeric_limits<double>::quiet_NaN();
  double ci_high = std::numeric_limits<double>::quiet_NaN();
};

/// Exact randomized Neyman-Pearson test for binary output alphabets.
///
/// The count of the first symbol is a sufficient statistic with binomial
/// law under either hypothesis. Outcomes are taken into the decide-H2
/// region in order of decreasing likelihood ratio q2/q1 until its q2-mass
/// reaches 1 - delta, randomizing at the marginal count so that beta1
/// equals delta exactly; beta2 is the q1-mass of that region, accumulated
/// in the log domain (it underflows doubles long before n reaches 1e5).
inline TestResult exact_np_binary(const Distribution& q1, const Distribution& q2,
                                  long long n, double delta) {
  if (q1.size() != 2 || q2.size() != 2)
    throw DimensionMismatch("exact_np_binary: binary alphabets only");
  if (!q1.interior() || !q2.interior())
    throw NotInterior("exact_np_binary: distributions must be interior");
  if (!(delta > 0.0 && delta < 1.0))
    throw ValidationError("exact_np_binary: delta must lie in (0,1)");
  if (n < 1 || n > 100000) throw ValidationError("exact_np_binary: n out of range");

  const size_t count = static_cast<size_t>(n) + 1;
  std::vector<double> log_p1(count), log_p2(count), llr(count);
  for (size_t k = 0; k < count; ++k) {
    const double kk = static_cast<double>(k);
    const double log_choose = std::lgamma(n + 1.0) - std::lgamma(kk + 1.0) -
                              std::lgamma(n - kk + 1.0);
    log_p1[k] = log_choose + kk * std::log(q1[0]) + (n - kk) * std::log(q1[1]);
    log_p2[k] = log_choose + kk * std::log(q2[0]) + (n - kk) * std::log(q2[1]);
    llr[k] = kk * std::log(q2[0] / q1[0]) + (n - kk) * std::log(q2[1] / q1[1]);
  }

  std::vector<size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return llr[a] > llr[b]; });

  // Fill the decide-H2 region greedily by likelihood ratio until its
  // q2-mass reaches 1 - delta; gamma is the randomization weight at the
  // marginal outcome.
  const double target = 1.0 - delta;
  double q2_mass = 0.0;
  std::vector<double> log_terms;
  log_terms.reserve(count);
  double gamma = 0.0;
  size_t marginal = count;
  for (size_t pos = 0; pos < count; ++pos) {
    const size_t k = order[pos];
    const double pk2 = std::exp(log_p2[k]);
    if (q2_mass + pk2 < target || pk2 == 0.0) {
      q2_mass += pk2;
      log_terms.push_back(log_p1[k]);
      continue;
    }
    gamma = (target - q2_mass) / pk2;
    marginal = k;
    break;
  }
  double log_beta2;
  if (marginal < count && gamma > 0.0) {
    log_terms.push_back(std::log(gamma) + log_p1[marginal]);
    log_beta2 = log_sum_exp(log_terms);
  } else {
    log_beta2 = log_sum_exp(log_terms);
  }

  TestResult out;
  out.n = n;
  out.delta = delta;
  out.beta1 = delta;
  out.log2_beta2 = log_beta2 * kLog2E;
  out.beta2 = std::exp(log_beta2);
  out.exponent_bits = std::max(-out.log2_beta2 / static_cast<double>(n), 0.0);
  out.exact = true;
  return out;
}

/// Error exponent of distinguishing p1 from p2 through the mechanism W.
/// Binary outputs use the exact test on the output distributions; larger
/// output alphabets fall back to seeded Monte Carlo with a Wilson
/// confidence interval (intended for moderate n, where beta2 is not yet
/// astronomically small).
inline TestResult mechanism_exponent(const Distribution& p1, const Distribution& p2,
                                     const Mechanism& w, long long n, double delta,
                                     uint64_t seed = 7, int trials = 20000) {
  const Distribution q1 = w.output_distribution(p1);
  const Distribution q2 = w.output_distribution(p2);
  if (w.output_size() == 2) return exact_np_binary(q1, q2, n, delta);

  if (!q1.interior() || !q2.interior())
    throw NotInterior("mechanism_exponent: output distributions must be interior");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vec cdf1(q1.size()), cdf2(q2.size()), step_llr(q1.size());
  double acc1 = 0.0, acc2 = 0.0;
  for (int j = 0; j < q1.size(); ++j) {
    acc1 += q1[j];
    acc2 += q2[j];
    cdf1[j] = acc1;
    cdf2[j] = acc2;
    step_llr[j] = std::log(q2[j] / q1[j]);
  }
  auto draw = [&](const Vec& cdf) {
    const double u = unif(rng);
    return static_cast<int>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
  };
  auto sample_llr = [&](const Vec& cdf) {
    double s = 0.0;
    for (long long t = 0; t < n; ++t) s += step_llr[std::min(draw(cdf), q1.size() - 1)];
    return s;
  };

  // Threshold: lower delta-quantile of the statistic under H2, so the
  // decide-H2 region {llr >= tau} keeps q2-mass about 1 - delta.
  std::vector<double> h2_stats(trials);
  for (int t = 0; t < trials; ++t) h2_stats[t] = sample_llr(cdf2);
  std::sort(h2_stats.begin(), h2_stats.end());
  const double tau = h2_stats[static_cast<size_t>(delta * (trials - 1))];

  long long hits = 0;
  for (int t = 0; t < trials; ++t)
    if (sample_llr(cdf1) >= tau) ++hits;
  const double p_hat = static_cast<double>(hits) / trials;

  const double z = 1.959963984540054;  // 95%
  const double z2 = z * z;
  const double denom = 1.0 + z2 / trials;
  const double center = (p_hat + z2 / (2.0 * trials)) / denom;
  const double half =
      z * std::sqrt(p_hat * (1.0 - p_hat) / trials + z2 / (4.0 * trials * trials)) /
      denom;

  TestResult out;
  out.n = n;
  out.delta = delta;
  out.beta1 = delta;
  out.beta2 = p_hat;
  out.log2_beta2 = p_hat > 0.0 ? std::log2(p_hat) : -std::numeric_limits<double>::infinity();
  out.exponent_bits = p_hat > 0.0 ? std::max(-out.log2_beta2 / n, 0.0)
                                  : std::numeric_limits<double>::infinity();
  out.exact = false;
  out.ci_low = std::max(center - half, 0.0);
  out.ci_high = std::min(center + half, 1.0);
  return out;
}

}  // namespace putmech
