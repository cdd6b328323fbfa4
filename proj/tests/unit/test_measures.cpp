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

#include "putmech/measures.hpp"

#include <cmath>
#include <random>

#include <catch2/catch_amalgamated.hpp>

#include "putmech/types.hpp"

using namespace putmech;

namespace {

// Long-double reference implementations, independent of the library path.
long double ld_entropy(const Vec& p) {
  long double h = 0.0L;
  for (double x : p)
    if (x > 0.0) h -= static_cast<long double>(x) * std::log2(static_cast<long double>(x));
  return h;
}

long double ld_kl(const Vec& p, const Vec& q) {
  long double d = 0.0L;
  for (size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0)
      d += static_cast<long double>(p[i]) *
           std::log2(static_cast<long double>(p[i]) / static_cast<long double>(q[i]));
  return d;
}

long double ld_power_sum(const Vec& p, const Vec& q, long double alpha) {
  long double s = 0.0L;
  for (size_t i = 0; i < p.size(); ++i)
    s += std::pow(static_cast<long double>(p[i]), alpha) *
         std::pow(static_cast<long double>(q[i]), 1.0L - alpha);
  return s;
}

Distribution random_interior(std::mt19937_64& rng, int size) {
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  Vec p(size);
  double sum = 0.0;
  for (double& x : p) sum += (x = unif(rng));
  for (double& x : p) x /= sum;
  return Distribution(p);
}

}  // namespace

TEST_CASE("entropy") {
  CHECK(entropy(Distribution({0.5, 0.5})) == Catch::Approx(1.0).margin(1e-15));
  CHECK(entropy(Distribution({1.0, 0.0})) == Catch::Approx(0.0).margin(1e-15));
  const double h = entropy(Distribution({0.95, 0.05}));
  CHECK(h == Catch::Approx(0.28640).margin(5e-6));
  CHECK(h == Catch::Approx(static_cast<double>(ld_entropy({0.95, 0.05}))).epsilon(1e-13));
  CHECK(entropy(Distribution({0.25, 0.25, 0.25, 0.25})) <= std::log2(4.0) + 1e-12);
}

TEST_CASE("relative entropy") {
  const Distribution p({0.3, 0.7});
  CHECK(relative_entropy(p, p) == 0.0);
  const double d = relative_entropy(Distribution({0.5, 0.5}), Distribution({0.25, 0.75}));
  CHECK(d == Catch::Approx(0.20752).margin(5e-6));
  CHECK(d == Catch::Approx(static_cast<double>(ld_kl({0.5, 0.5}, {0.25, 0.75}))).epsilon(1e-13));
  CHECK_THROWS_AS(relative_entropy(Distribution({0.5, 0.5}), Distribution({0.0, 1.0})),
                  AbsoluteContinuityViolated);
  CHECK_THROWS_AS(relative_entropy(Distribution({0.5, 0.5}), Distribution({0.3, 0.3, 0.4})),
                  DimensionMismatch);
}

TEST_CASE("mutual information") {
  Matrix rank1(3, 2);
  for (int i = 0; i < 3; ++i) {
    rank1(i, 0) = 0.3;
    rank1(i, 1) = 0.7;
  }
  CHECK(mutual_information(Distribution({0.2, 0.3, 0.5}), Mechanism(rank1)) <= 1e-12);

  CHECK(mutual_information(Distribution({0.5, 0.5}), Mechanism(Matrix::identity(2))) ==
        Catch::Approx(1.0).margin(1e-12));

  Matrix bsc(2, 2);
  bsc(0, 0) = 0.9; bsc(0, 1) = 0.1; bsc(1, 0) = 0.1; bsc(1, 1) = 0.9;
  const double i = mutual_information(Distribution({0.5, 0.5}), Mechanism(bsc));
  const double expected = 1.0 + 0.9 * std::log2(0.9) + 0.1 * std::log2(0.1);
  CHECK(i == Catch::Approx(0.53101).margin(5e-6));
  CHECK(i == Catch::Approx(expected).epsilon(1e-12));

  CHECK_THROWS_AS(mutual_information(Distribution({0.5, 0.5}), Mechanism(Matrix::identity(3))),
                  DimensionMismatch);
}

TEST_CASE("renyi divergence") {
  const RenyiOrder half(0.5);
  const Distribution p({0.3, 0.7}), q({0.6, 0.4});
  CHECK(renyi_divergence(p, p, half) == 0.0);
  CHECK(renyi_divergence(p, p, RenyiOrder(0.25)) == 0.0);
  // order 1/2 is symmetric
  CHECK(renyi_divergence(p, q, half) ==
        Catch::Approx(renyi_divergence(q, p, half)).epsilon(1e-12));

  const Vec pv = {0.45, 0.55}, qv = {0.5, 0.5};
  const long double expected =
      std::log2(ld_power_sum(pv, qv, 0.5L)) / (0.5L - 1.0L);
  CHECK(renyi_divergence(Distribution(pv), Distribution(qv), half) ==
        Catch::Approx(static_cast<double>(expected)).epsilon(1e-10));
}

TEST_CASE("hellinger divergence and renyi identity") {
  const RenyiOrder half(0.5);
  const Distribution p({0.3, 0.7});
  CHECK(hellinger_divergence(p, p, half) == 0.0);

  const Vec pv = {0.45, 0.55}, qv = {0.5, 0.5};
  const long double expected = (ld_power_sum(pv, qv, 0.5L) - 1.0L) / (0.5L - 1.0L);
  CHECK(hellinger_divergence(Distribution(pv), Distribution(qv), half) ==
        Catch::Approx(static_cast<double>(expected)).epsilon(1e-10));

  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> alpha_dist(0.1, 0.9);
  for (int trial = 0; trial < 50; ++trial) {
    const RenyiOrder order(alpha_dist(rng));
    const Distribution a = random_interior(rng, 3), b = random_interior(rng, 3);
    const double h = hellinger_divergence(a, b, order);
    const double d = renyi_divergence(a, b, order);
    const double via_h =
        std::log2(1.0 + (order.alpha - 1.0) * h) / (order.alpha - 1.0);
    CHECK(d == Catch::Approx(via_h).margin(1e-10));
  }
}

TEST_CASE("kappa bound function") {
  CHECK(kappa(0.5, 1.0) == Catch::Approx(2.0 * kLog2E).margin(1e-10));
  CHECK(kappa(0.5, 1.0) == Catch::Approx(2.88539).margin(5e-6));
  CHECK(kappa(0.5, 0.0) == Catch::Approx(kLog2E).margin(1e-12));
  CHECK(kappa(0.5, 0.0) == Catch::Approx(1.44270).margin(5e-6));

  // direct long-double evaluation of the closed form
  const long double t = 2.0L, a = 0.5L;
  const long double num = (1.0L - a) * (t * std::log(t) - t + 1.0L);
  const long double den = 1.0L - std::pow(t, a) + a * t - a;
  CHECK(kappa(0.5, 2.0) ==
        Catch::Approx(static_cast<double>(num / den * 1.442695040888963L)).epsilon(1e-12));

  // continuity across the guarded branches
  CHECK(kappa(0.3, 1.0 + 2e-6) == Catch::Approx(kappa(0.3, 1.0)).epsilon(1e-5));
  CHECK(kappa(0.3, 1.0 - 2e-6) == Catch::Approx(kappa(0.3, 1.0)).epsilon(1e-5));
  CHECK(kappa(0.3, 1.0 + 2e-4) == Catch::Approx(kappa(0.3, 1.0 + 0.99e-4)).epsilon(1e-3));
}

TEST_CASE("chi squared divergence") {
  const Distribution q({0.25, 0.75});
  CHECK(chi_squared_divergence(q, q) == 0.0);
  CHECK(chi_squared_divergence(Distribution({0.5, 0.5}), q) ==
        Catch::Approx(0.5 * (0.0625 / 0.25 + 0.0625 / 0.75)).epsilon(1e-14));
  CHECK_THROWS_AS(chi_squared_divergence(q, Distribution({1.0, 0.0})), NotInterior);

  // |D ln2 - chi2| shrinks cubically as p -> q
  const Vec base = {0.4, 0.6};
  double prev = std::numeric_limits<double>::infinity();
  for (double t : {1e-1, 5e-2, 2.5e-2, 1.25e-2}) {
    const Distribution p({0.4 + t, 0.6 - t});
    const Distribution qd(base);
    const double gap =
        std::fabs(relative_entropy(p, qd) * kLn2 - chi_squared_divergence(p, qd));
    if (std::isfinite(prev)) CHECK(gap < prev / 6.0);
    prev = gap;
  }
}

TEST_CASE("divergence nonnegativity and identity of indiscernibles") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> alpha_dist(0.1, 0.9);
  for (int trial = 0; trial < 100; ++trial) {
    const int size = 2 + static_cast<int>(trial % 4);
    const Distribution a = random_interior(rng, size), b = random_interior(rng, size);
    const RenyiOrder order(alpha_dist(rng));
    CHECK(relative_entropy(a, b) >= 0.0);
    CHECK(renyi_divergence(a, b, order) >= 0.0);
    CHECK(hellinger_divergence(a, b, order) >= 0.0);
    CHECK(chi_squared_divergence(a, b) >= 0.0);
    CHECK(relative_entropy(a, a) <= 1e-10);
    CHECK(renyi_divergence(a, a, order) <= 1e-10);
    CHECK(hellinger_divergence(a, a, order) <= 1e-10);
  }
}

TEST_CASE("identical-row mechanisms leak nothing") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 2 + trial % 4, n = 2 + (trial / 2) % 4;
    const Distribution row = random_interior(rng, n);
    Matrix w(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) w(i, j) = row[j];
    const Distribution p = random_interior(rng, m);
    CHECK(mutual_information(p, Mechanism(w)) <= 1e-12);
  }
}

TEST_CASE("kappa sandwich of the relative-to-Hellinger ratio") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> alpha_dist(0.15, 0.85);
  for (int trial = 0; trial < 80; ++trial) {
    const int size = 2 + trial % 3;
    const Distribution p = random_interior(rng, size), q = random_interior(rng, size);
    double max_pq = 0.0, max_qp = 0.0;
    for (int i = 0; i < size; ++i) {
      max_pq = std::max(max_pq, p[i] / q[i]);
      max_qp = std::max(max_qp, q[i] / p[i]);
    }
    if (max_pq <= 1.0 + 1e-9) continue;  // p == q up to noise
    const double alpha = alpha_dist(rng);
    const double ratio = relative_entropy(p, q) /
                         hellinger_divergence(p, q, RenyiOrder(alpha));
    CHECK(kappa(alpha, 1.0 / max_qp) <= ratio * (1.0 + 1e-9) + 1e-12);
    CHECK(ratio <= kappa(alpha, max_pq) * (1.0 + 1e-9) + 1e-12);
  }
}

TEST_CASE("limit ratio of relative entropy to Renyi divergence") {
  const Distribution q({0.3, 0.2, 0.5});
  const Vec r = {0.5, 0.3, 0.2};
  for (double alpha : {0.25, 0.5, 0.75}) {
    const RenyiOrder order(alpha);
    const double target = kLog2E / alpha;
    double prev_dev = std::numeric_limits<double>::infinity();
    for (double t : {1e-2, 5e-3, 2.5e-3, 1.25e-3}) {
      Vec pt(3);
      for (int i = 0; i < 3; ++i) pt[i] = (1.0 - t) * q[i] + t * r[i];
      const Distribution p(pt);
      const double d = relative_entropy(p, q);
      const double da = renyi_divergence(p, q, order);
      const double ratio =
          (1.0 - alpha) * d / std::expm1((1.0 - alpha) * da * kLn2);
      const double dev = std::fabs(ratio - target);
      CHECK(dev < prev_dev);
      prev_dev = dev;
    }
    CHECK(prev_dev / target < 1e-3);
  }
}
