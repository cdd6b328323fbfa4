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
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "putmech/binary_design.hpp"
#include "putmech/mary_design.hpp"
#include "putmech/measures.hpp"
#include "putmech/perturbation.hpp"
#include "putmech/types.hpp"

namespace putmech {

// Brute-force reference solvers. These are deliberately simple and slow:
// they are the ground truth every closed form and solver in this library
// is validated against.

/// Grid search parameters. For the exact 2x2 search, resolution is the
/// absolute step of the two free mechanism parameters; for the vector
/// search it is the step as a fraction of each axis half-range. Each
/// refinement round shrinks the step by 10 around the incumbent.
struct GridSpec {
  double resolution = 0.01;
  int refine_rounds = 3;
};

/// Utility metric of a search: relative entropy or order-alpha Renyi.
struct Utility {
  enum class Kind { kKl, kRenyi };
  Kind kind = Kind::kKl;
  double alpha = 0.5;

  static Utility kl() { return Utility{Kind::kKl, 0.0}; }
  static Utility renyi(double alpha) { return Utility{Kind::kRenyi, alpha}; }

  std::string name() const {
    if (kind == Kind::kKl) return "kl";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "renyi:%.12g", alpha);
    return buf;
  }
};

struct OracleResult {
  Mechanism mechanism;
  double utility_bits = 0.0;
  double x = 0.0;  // W = [[1-x, x], [y, 1-y]]
  double y = 0.0;
};

namespace detail {

inline double output_divergence(const Distribution& q2, const Distribution& q1,
                                const Utility& utility) {
  if (utility.kind == Utility::Kind::kKl) return relative_entropy(q2, q1);
  return renyi_divergence(q2, q1, RenyiOrder(utility.alpha));
}

/// min over non-distinguished hypotheses of the output divergence.
inline double mechanism_utility(const std::vector<Distribution>& hypotheses,
                                const Mechanism& w, const Utility& utility) {
  const Distribution q1 = w.output_distribution(hypotheses[0]);
  double u = std::numeric_limits<double>::infinity();
  for (size_t k = 1; k < hypotheses.size(); ++k)
    u = std::min(u, output_divergence(w.output_distribution(hypotheses[k]), q1, utility));
  return u;
}

}  // namespace detail

/// Exhaustive search for the exact optimum over 2x2 mechanisms
/// W = [[1-x, x], [y, 1-y]], subject to the exact mutual-information
/// budgets. The perfect-privacy mechanism is always feasible. Ties are
/// broken to the lexicographically smallest (x, y).
inline OracleResult exact_put_2x2(const EitProblem& problem, const GridSpec& grid,
                                  const Utility& utility) {
  if (problem.source_size() != 2)
    throw DimensionTooLarge("exact_put_2x2: binary sources only");
  const int m = problem.num_hypotheses();

  auto feasible_utility = [&](double x, double y, double& value) {
    Matrix rows(2, 2);
    rows(0, 0) = 1.0 - x;
    rows(0, 1) = x;
    rows(1, 0) = y;
    rows(1, 1) = 1.0 - y;
    const Mechanism w(rows);
    for (int k = 0; k < m; ++k)
      if (mutual_information(problem.hypothesis(k), w) >
          problem.budget_bits(k) + 1e-12)
        return false;
    value = detail::mechanism_utility(problem.hypotheses(), w, utility);
    return true;
  };

  double best_x = 0.0, best_y = 0.0;
  double best = -1.0;
  auto scan = [&](double x_lo, double x_hi, double y_lo, double y_hi, double step) {
    const int nx = static_cast<int>(std::floor((x_hi - x_lo) / step + 0.5)) + 1;
    const int ny = static_cast<int>(std::floor((y_hi - y_lo) / step + 0.5)) + 1;
    for (int ix = 0; ix < nx; ++ix) {
      const double x = std::min(x_lo + ix * step, 1.0);
      for (int iy = 0; iy < ny; ++iy) {
        const double y = std::min(y_lo + iy * step, 1.0);
        double value;
        if (feasible_utility(x, y, value) && value > best) {
          best = value;
          best_x = x;
          best_y = y;
        }
      }
    }
  };

  scan(0.0, 1.0, 0.0, 1.0, grid.resolution);
  if (best < 0.0) {
    // Cannot happen for valid problems, but keep the perfect mechanism as
    // a safe fallback against a degenerate grid.
    best_x = problem.reference().size() == 2 ? problem.reference()[1] : 0.5;
    best_y = best_x == 1.0 ? 1.0 : 1.0 - best_x;
    best = 0.0;
  }
  double step = grid.resolution;
  for (int round = 0; round < grid.refine_rounds; ++round) {
    const double window = step;
    step /= 10.0;
    scan(std::max(best_x - window, 0.0), std::min(best_x + window, 1.0),
         std::max(best_y - window, 0.0), std::min(best_y + window, 1.0), step);
  }

  Matrix rows(2, 2);
  rows(0, 0) = 1.0 - best_x;
  rows(0, 1) = best_x;
  rows(1, 0) = best_y;
  rows(1, 1) = 1.0 - best_y;
  return OracleResult{Mechanism(rows), std::max(best, 0.0), best_x, best_y};
}

struct QcqpResult {
  Vec weights;
  double value_bits = 0.0;
};

/// Grid search over the weight vector of the reduced quadratic program:
/// maximize (1/2)||a (p2-p1)^T||^2 over the box bounding the feasibility
/// ellipsoids, with refinement around the incumbent. Sources of up to
/// four symbols only.
inline QcqpResult grid_qcqp(const EitProblem& problem, const GridSpec& grid) {
  const int n = problem.source_size();
  if (n > 4) throw DimensionTooLarge("grid_qcqp: sources of more than 4 symbols");
  const int m = problem.num_hypotheses();

  Vec eps_nats(m);
  for (int k = 0; k < m; ++k) eps_nats[k] = problem.budget_nats(k);
  Vec half(n, std::numeric_limits<double>::infinity());
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < m; ++k)
      half[i] = std::min(half[i],
                         std::sqrt(2.0 * eps_nats[k] / problem.hypothesis(k)[i]));

  Vec diff(n);
  for (int i = 0; i < n; ++i)
    diff[i] = problem.hypothesis(1)[i] - problem.hypothesis(0)[i];
  // For binary sources with several hypotheses all difference vectors are
  // collinear; in general the objective is the worst pair.
  std::vector<Vec> diffs;
  for (int k = 1; k < m; ++k) {
    Vec d(n);
    for (int i = 0; i < n; ++i)
      d[i] = problem.hypothesis(k)[i] - problem.hypothesis(0)[i];
    diffs.push_back(std::move(d));
  }

  auto feasible_value = [&](const Vec& a, double& value) {
    for (int k = 0; k < m; ++k) {
      double f = 0.0;
      for (int i = 0; i < n; ++i) f += problem.hypothesis(k)[i] * a[i] * a[i];
      if (0.5 * f > eps_nats[k] * (1.0 + 1e-12) + 1e-300) return false;
    }
    double worst = std::numeric_limits<double>::infinity();
    for (const Vec& d : diffs) {
      const double proj = dot(a, d);
      worst = std::min(worst, 0.5 * proj * proj);
    }
    value = worst;
    return true;
  };

  Vec best_a(n, 0.0);
  double best = 0.0;
  auto scan = [&](const Vec& lo, const Vec& hi, const Vec& step) {
    std::vector<int> counts(n);
    for (int i = 0; i < n; ++i)
      counts[i] = static_cast<int>(std::floor((hi[i] - lo[i]) / step[i] + 0.5)) + 1;
    std::vector<int> idx(n, 0);
    Vec a(n);
    while (true) {
      for (int i = 0; i < n; ++i)
        a[i] = std::clamp(lo[i] + idx[i] * step[i], -half[i], half[i]);
      double value;
      if (feasible_value(a, value) && value > best) {
        best = value;
        best_a = a;
      }
      int pos = n - 1;
      while (pos >= 0 && ++idx[pos] >= counts[pos]) idx[pos--] = 0;
      if (pos < 0) break;
    }
  };

  Vec lo(n), hi(n), step(n);
  for (int i = 0; i < n; ++i) {
    lo[i] = -half[i];
    hi[i] = half[i];
    step[i] = std::max(grid.resolution * half[i], 1e-300);
  }
  scan(lo, hi, step);
  for (int round = 0; round < grid.refine_rounds; ++round) {
    for (int i = 0; i < n; ++i) {
      const double window = step[i];
      step[i] /= 10.0;
      lo[i] = std::max(best_a[i] - window, -half[i]);
      hi[i] = std::min(best_a[i] + window, half[i]);
    }
    scan(lo, hi, step);
  }
  return QcqpResult{best_a, best * kLog2E};
}

/// One row of the comparison protocol.
struct CompareRow {
  double eps_tilde = 0.0;      // design budget, bits
  double eps_effective = 0.0;  // max_k I(p_k, W'), bits
  double eps_norm = 0.0;       // eps_effective / min_k H(p_k)
  double util_eit = 0.0;       // exact utility of the designed mechanism
  double util_oracle = 0.0;    // exact utility of the exhaustive optimum
  double ratio = 0.0;
  std::string utility_kind;
};

/// Designs W'(eps_tilde) with equal budgets, measures its exact leakage,
/// and pits it against the exhaustive 2x2 optimum at the same exact
/// leakage. Binary sources only (the oracle's limit). Rows are ordered by
/// the input budgets; the whole pipeline is deterministic.
inline std::vector<CompareRow> compare_protocol(
    const std::vector<Distribution>& hypotheses, const Vec& eps_tilde_bits,
    const Utility& utility, const GridSpec& grid,
    const ReferenceOutput& w0 = ReferenceOutput::uniform(2)) {
  if (hypotheses.empty() || hypotheses.front().size() != 2)
    throw DimensionTooLarge("compare_protocol: binary sources only");
  std::vector<CompareRow> rows;
  double min_h = std::numeric_limits<double>::infinity();
  for (const Distribution& p : hypotheses) min_h = std::min(min_h, entropy(p));

  for (double eps : eps_tilde_bits) {
    const EitProblem design_problem(hypotheses, Vec(hypotheses.size(), eps), w0);
    const BinarySolution designed = hypotheses.size() == 2
                                        ? solve_binary(design_problem)
                                        : solve_binary_source(design_problem);
    CompareRow row;
    row.eps_tilde = eps;
    row.utility_kind = utility.name();
    row.eps_effective = effective_leakage(design_problem, designed.mechanism);
    row.eps_norm = row.eps_effective / min_h;
    row.util_eit =
        detail::mechanism_utility(hypotheses, designed.mechanism, utility);

    const EitProblem oracle_problem(
        hypotheses, Vec(hypotheses.size(), std::min(row.eps_effective, min_h)), w0);
    const OracleResult oracle = exact_put_2x2(oracle_problem, grid, utility);
    row.util_oracle = oracle.utility_bits;
    row.ratio = row.util_oracle > 0.0 ? row.util_eit / row.util_oracle
                : row.util_eit > 0.0  ? std::numeric_limits<double>::infinity()
                                      : 1.0;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace putmech
