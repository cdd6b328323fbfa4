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
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "putmech/measures.hpp"
#include "putmech/perturbation.hpp"
#include "putmech/types.hpp"

namespace putmech {

// Closed-form mechanism design for two hypotheses in the high-privacy
// regime. The quadratic program
//
//   max (1/2) ||a (p2 - p1)^T||^2   s.t.  (1/2) a [p_k] a^T <= eps_k
//
// over the row-magnitude vector a is solved through its KKT system: either
// one budget constraint is active (closed form) or both are (a 2x2 dual
// root solve). The mechanism is then W0 + a^T v [sqrt(w0)] for any unit v
// orthogonal to sqrt(w0); a binary output alphabet always suffices.
//
// Budgets enter in bits and are converted to natural units for the
// quadratic-form algebra; utilities are converted back to bits once.

enum class ActiveCase { kFirstActive, kSecondActive, kBothActive, kDegenerate };

inline const char* to_string(ActiveCase c) {
  switch (c) {
    case ActiveCase::kFirstActive: return "FirstActive";
    case ActiveCase::kSecondActive: return "SecondActive";
    case ActiveCase::kBothActive: return "BothActive";
    case ActiveCase::kDegenerate: return "Degenerate";
  }
  return "?";
}

struct BinarySolution {
  /// Signed per-input-symbol perturbation magnitudes (natural units).
  Vec weights;
  /// Unit output-space direction, orthogonal to sqrt(w0).
  Vec direction;
  /// Squared Euclidean norm of p2 - p1 (the lone eigenvalue of the
  /// objective's rank-1 quadratic form).
  double gap_norm_sq = 0.0;
  /// Unit vector along p2 - p1.
  Vec gap_direction;
  /// Dual variables of the active budget constraints (natural units);
  /// one entry per hypothesis, zero where inactive.
  Vec duals;
  ActiveCase active_case = ActiveCase::kDegenerate;
  /// Indices (0-based) of budget constraints met with equality.
  std::vector<int> active_set;
  /// Index k of the hypothesis pair (p_1, p_k) realizing the objective;
  /// 1 for the two-hypothesis problem.
  int pair_index = 1;
  double predicted_utility_bits = 0.0;
  Mechanism mechanism;
  double kkt_residual = 0.0;
};

/// Unit vector orthogonal to sqrt(w0). For a binary output this is
/// (sqrt(w0_2), -sqrt(w0_1)), already unit norm, first entry positive.
inline Vec orthogonal_direction(const ReferenceOutput& w0) {
  if (w0.size() == 2) return {w0.sqrt_probs()[1], -w0.sqrt_probs()[0]};
  const Matrix basis = orthonormal_basis_ending_with(w0.sqrt_probs());
  Vec v(w0.size());
  for (int i = 0; i < w0.size(); ++i) v[i] = basis(i, 0);
  return v;
}

namespace detail {

struct QcqpGeometry {
  Vec gap_direction;    // (p2 - p1) / ||p2 - p1||
  double gap_norm_sq;   // ||p2 - p1||^2
};

inline QcqpGeometry pair_geometry(const Distribution& p1, const Distribution& pk) {
  Vec d(p1.size());
  for (int i = 0; i < p1.size(); ++i) d[i] = pk[i] - p1[i];
  const double len = norm(d);
  QcqpGeometry g;
  g.gap_norm_sq = len * len;
  if (len > 0.0)
    for (double& x : d) x /= len;
  g.gap_direction = d;
  return g;
}

/// (1/2) a [p] a^T, the quadratic leakage form in natural units.
inline double leakage_form(const Vec& a, const Distribution& p) {
  double s = 0.0;
  for (int i = 0; i < p.size(); ++i) s += p[i] * a[i] * a[i];
  return 0.5 * s;
}

/// Residuals of the active-set dual system: for every active k,
///   sum_i v_i^2 p_ki / D_i^2 = 8 eps_k / lambda^2,   D = sum_k eta_k [p_k].
inline Vec dual_residuals(const std::vector<const Distribution*>& active,
                          const Vec& eta, const Vec& v, double lambda,
                          const Vec& eps_nats) {
  const int n = static_cast<int>(v.size());
  Vec dinv2(n);
  for (int i = 0; i < n; ++i) {
    double di = 0.0;
    for (size_t k = 0; k < active.size(); ++k) di += eta[k] * (*active[k])[i];
    dinv2[i] = 1.0 / (di * di);
  }
  Vec g(active.size());
  for (size_t k = 0; k < active.size(); ++k) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += v[i] * v[i] * (*active[k])[i] * dinv2[i];
    g[k] = s - 8.0 * eps_nats[k] / (lambda * lambda);
  }
  return g;
}

/// Damped Newton in log(eta) for the dual system above. Returns true on
/// convergence; eta holds the solution.
inline bool newton_duals(const std::vector<const Distribution*>& active, Vec& eta,
                         const Vec& v, double lambda, const Vec& eps_nats) {
  const int s = static_cast<int>(active.size());
  const int n = static_cast<int>(v.size());
  double scale = 0.0;
  for (double e : eps_nats) scale = std::max(scale, 8.0 * e / (lambda * lambda));
  const double tol = 1e-13 * scale;

  Vec g = dual_residuals(active, eta, v, lambda, eps_nats);
  for (int iter = 0; iter < 200; ++iter) {
    if (max_abs(g) <= tol) return true;
    Vec d(n);
    for (int i = 0; i < n; ++i) {
      double di = 0.0;
      for (int k = 0; k < s; ++k) di += eta[k] * (*active[k])[i];
      d[i] = di;
    }
    Matrix jac(s, s);
    for (int k = 0; k < s; ++k)
      for (int l = 0; l < s; ++l) {
        double jkl = 0.0;
        for (int i = 0; i < n; ++i)
          jkl += -2.0 * v[i] * v[i] * (*active[k])[i] * (*active[l])[i] /
                 (d[i] * d[i] * d[i]);
        jac(k, l) = jkl * eta[l];  // chain rule for x_l = log eta_l
      }
    Vec step;
    try {
      Vec rhs(s);
      for (int k = 0; k < s; ++k) rhs[k] = -g[k];
      step = lu_solve(jac, rhs);
    } catch (const std::runtime_error&) {
      return false;
    }
    const double g0 = max_abs(g);
    double alpha = 1.0;
    bool improved = false;
    for (int bt = 0; bt < 50; ++bt) {
      Vec trial(s);
      bool ok = true;
      for (int k = 0; k < s; ++k) {
        const double x = std::log(eta[k]) + alpha * step[k];
        if (x < -700.0 || x > 700.0) { ok = false; break; }
        trial[k] = std::exp(x);
      }
      if (ok) {
        const Vec gt = dual_residuals(active, trial, v, lambda, eps_nats);
        if (max_abs(gt) < g0) {
          eta = trial;
          g = gt;
          improved = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!improved) return max_abs(g) <= tol;
  }
  return max_abs(g) <= tol;
}

/// Bisection fallback for exactly two active constraints: eliminate the
/// overall dual scale through the first equation and bracket the ratio
/// eta_2 / eta_1.
inline bool bisect_two_duals(const Distribution& p1, const Distribution& p2, Vec& eta,
                             const Vec& v, double lambda, const Vec& eps_nats) {
  const int n = static_cast<int>(v.size());
  const double c1 = 8.0 * eps_nats[0] / (lambda * lambda);
  const double c2 = 8.0 * eps_nats[1] / (lambda * lambda);
  auto eta1_for = [&](double r) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      const double di = p1[i] + r * p2[i];
      s += v[i] * v[i] * p1[i] / (di * di);
    }
    return std::sqrt(s / c1);
  };
  auto h = [&](double r) {
    const double e1 = eta1_for(r);
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      const double di = e1 * (p1[i] + r * p2[i]);
      s += v[i] * v[i] * p2[i] / (di * di);
    }
    return s - c2;
  };
  double lo = 1e-14, hi = 1e14;
  double hlo = h(lo), hhi = h(hi);
  if (hlo == 0.0) { eta = {eta1_for(lo), lo * eta1_for(lo)}; return true; }
  if (hhi == 0.0) { eta = {eta1_for(hi), hi * eta1_for(hi)}; return true; }
  if (hlo * hhi > 0.0) return false;
  for (int it = 0; it < 200; ++it) {
    const double mid = std::sqrt(lo * hi);  // geometric: r spans many decades
    const double hm = h(mid);
    if (hm == 0.0) { lo = hi = mid; break; }
    if (hm * hlo > 0.0) { lo = mid; hlo = hm; } else { hi = mid; }
  }
  const double r = std::sqrt(lo * hi);
  const double e1 = eta1_for(r);
  eta = {e1, r * e1};
  return true;
}

}  // namespace detail

/// Solves the two-active-constraint dual system for (eta_1, eta_2) > 0 to
/// residual <= 1e-10. Budgets in bits. Throws NoConvergence when the
/// system has no positive root (the instance belongs to a single-active
/// branch).
inline std::pair<double, double> solve_both_active_duals(
    const Distribution& p1, const Distribution& p2, double eps1_bits, double eps2_bits,
    double gap_norm_sq, const Vec& gap_direction) {
  const Vec eps_nats = {eps1_bits * kLn2, eps2_bits * kLn2};
  std::vector<const Distribution*> active = {&p1, &p2};
  const double lambda = gap_norm_sq;
  Vec eta(2);
  for (int k = 0; k < 2; ++k) {
    double s = 0.0;
    for (int i = 0; i < p1.size(); ++i)
      s += gap_direction[i] * gap_direction[i] / (*active[k])[i];
    eta[k] = 0.5 * std::sqrt(lambda * lambda * s / (8.0 * eps_nats[k]));
  }
  if (!detail::newton_duals(active, eta, gap_direction, lambda, eps_nats)) {
    if (!detail::bisect_two_duals(p1, p2, eta, gap_direction, lambda, eps_nats))
      throw NoConvergence("dual solve: no positive root; case mis-detected");
    detail::newton_duals(active, eta, gap_direction, lambda, eps_nats);  // polish
  }
  const Vec g = detail::dual_residuals(active, eta, gap_direction, lambda, eps_nats);
  const double scale =
      std::max(8.0 * eps_nats[0], 8.0 * eps_nats[1]) / (lambda * lambda);
  if (max_abs(g) > 1e-10 * std::max(1.0, scale))
    throw NoConvergence("dual solve: residual " + std::to_string(max_abs(g)));
  return {eta[0], eta[1]};
}

namespace detail {

/// KKT residual of the original quadratic program at (a, duals): largest
/// violation among stationarity, complementary slackness, primal and dual
/// feasibility. The stationarity multipliers of the squared objective are
/// 2 |a v_p^T| times the linear-objective duals.
inline double qcqp_kkt_residual(const std::vector<Distribution>& hypotheses,
                                const Vec& eps_nats, const BinarySolution& sol) {
  const int n = static_cast<int>(sol.weights.size());
  if (sol.gap_norm_sq == 0.0) return 0.0;
  const double s = dot(sol.weights, sol.gap_direction);
  double res = 0.0;
  for (int i = 0; i < n; ++i) {
    double grad = sol.gap_norm_sq * s * sol.gap_direction[i];
    for (size_t k = 0; k < hypotheses.size(); ++k)
      grad -= 2.0 * std::fabs(s) * sol.duals[k] * sol.weights[i] * hypotheses[k][i];
    res = std::max(res, std::fabs(grad));
  }
  for (size_t k = 0; k < hypotheses.size(); ++k) {
    const double fk = leakage_form(sol.weights, hypotheses[k]);
    const double mu = 2.0 * std::fabs(s) * sol.duals[k];
    res = std::max(res, std::fabs(mu * (eps_nats[k] - fk)));
    res = std::max(res, std::max(0.0, fk - eps_nats[k]));
    res = std::max(res, std::max(0.0, -mu));
  }
  return res;
}

inline void canonicalize_sign(Vec& a) {
  for (double x : a) {
    if (x != 0.0) {
      if (x < 0.0)
        for (double& y : a) y = -y;
      return;
    }
  }
}

inline BinarySolution degenerate_solution(const EitProblem& problem) {
  BinarySolution sol;
  sol.weights.assign(problem.source_size(), 0.0);
  sol.direction = orthogonal_direction(problem.reference());
  sol.gap_direction.assign(problem.source_size(), 0.0);
  sol.duals.assign(problem.num_hypotheses(), 0.0);
  sol.active_case = ActiveCase::kDegenerate;
  sol.mechanism = perfect_mechanism(problem.reference(), problem.source_size());
  return sol;
}

/// Shared tail: assemble the mechanism from a and compute diagnostics.
inline BinarySolution finish_solution(const EitProblem& problem, Vec a,
                                      const QcqpGeometry& geom, Vec duals,
                                      ActiveCase active_case, int pair_index) {
  canonicalize_sign(a);
  BinarySolution sol;
  sol.weights = std::move(a);
  sol.direction = orthogonal_direction(problem.reference());
  sol.gap_norm_sq = geom.gap_norm_sq;
  sol.gap_direction = geom.gap_direction;
  sol.duals = std::move(duals);
  sol.active_case = active_case;
  sol.pair_index = pair_index;
  const double proj = dot(sol.weights, sol.gap_direction);
  sol.predicted_utility_bits = 0.5 * geom.gap_norm_sq * proj * proj * kLog2E;

  Vec eps_nats(problem.num_hypotheses());
  std::vector<int> active;
  for (int k = 0; k < problem.num_hypotheses(); ++k) {
    eps_nats[k] = problem.budget_nats(k);
    const double fk = leakage_form(sol.weights, problem.hypothesis(k));
    if (std::fabs(fk - eps_nats[k]) <= 1e-9 * std::max(1.0, eps_nats[k]))
      active.push_back(k);
  }
  sol.active_set = std::move(active);

  Matrix amat(problem.source_size(), static_cast<int>(sol.direction.size()));
  for (int i = 0; i < amat.rows(); ++i)
    for (int j = 0; j < amat.cols(); ++j) amat(i, j) = sol.weights[i] * sol.direction[j];
  sol.mechanism = assemble(problem.reference(), amat);
  sol.kkt_residual = qcqp_kkt_residual(problem.hypotheses(), eps_nats, sol);
  return sol;
}

}  // namespace detail

/// Optimal mechanism for the two-hypothesis trade-off. Detects the active
/// budget constraints (ties route to the both-active branch), applies the
/// matching closed form or dual root solve, and assembles the mechanism.
/// Of the two optimal signings of the weights, the one whose first nonzero
/// entry is positive is returned.
inline BinarySolution solve_binary(const EitProblem& problem) {
  if (problem.num_hypotheses() != 2)
    throw ValidationError("solve_binary: exactly two hypotheses required");
  const Distribution& p1 = problem.hypothesis(0);
  const Distribution& p2 = problem.hypothesis(1);
  const detail::QcqpGeometry geom = detail::pair_geometry(p1, p2);
  if (geom.gap_norm_sq == 0.0 || problem.budget_bits(0) == 0.0 ||
      problem.budget_bits(1) == 0.0)
    return detail::degenerate_solution(problem);

  const double e1 = problem.budget_nats(0);
  const double e2 = problem.budget_nats(1);
  const int n = problem.source_size();
  const Vec& vp = geom.gap_direction;

  // Condition quantities of the two single-active branches.
  double s1 = 0.0, s2 = 0.0, cross12 = 0.0, cross21 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v2 = vp[i] * vp[i];
    s1 += v2 / p1[i];
    s2 += v2 / p2[i];
    cross12 += v2 * p2[i] / (p1[i] * p1[i]);
    cross21 += v2 * p1[i] / (p2[i] * p2[i]);
  }

  const double r1 = cross12 / s1;   // < e2/e1  <=> only the first is active
  const double r2 = cross21 / s2;   // < e1/e2  <=> only the second is active
  const double tol = 1e-12;
  Vec a(n);
  if (r1 < e2 / e1 - tol * std::max(1.0, e2 / e1)) {
    const double scale = std::sqrt(2.0 * e1 / s1);
    for (int i = 0; i < n; ++i) a[i] = scale * vp[i] / p1[i];
    return detail::finish_solution(problem, std::move(a), geom, {std::sqrt(geom.gap_norm_sq * geom.gap_norm_sq * s1 / (8.0 * e1)), 0.0},
                                   ActiveCase::kFirstActive, 1);
  }
  if (r2 < e1 / e2 - tol * std::max(1.0, e1 / e2)) {
    const double scale = std::sqrt(2.0 * e2 / s2);
    for (int i = 0; i < n; ++i) a[i] = scale * vp[i] / p2[i];
    return detail::finish_solution(problem, std::move(a), geom, {0.0, std::sqrt(geom.gap_norm_sq * geom.gap_norm_sq * s2 / (8.0 * e2))},
                                   ActiveCase::kSecondActive, 1);
  }

  const auto [eta1, eta2] = solve_both_active_duals(
      p1, p2, problem.budget_bits(0), problem.budget_bits(1), geom.gap_norm_sq, vp);
  for (int i = 0; i < n; ++i)
    a[i] = 0.5 * geom.gap_norm_sq * vp[i] / (eta1 * p1[i] + eta2 * p2[i]);
  return detail::finish_solution(problem, std::move(a), geom, {eta1, eta2},
                                 ActiveCase::kBothActive, 1);
}

struct RenyiBinarySolution {
  BinarySolution solution;
  /// Exact order-alpha Renyi divergence between the output distributions.
  double renyi_utility_bits = 0.0;
  /// Exact relative entropy between the output distributions.
  double kl_utility_bits = 0.0;
  /// (1-a) D / (2^{(1-a) D_a} - 1); approaches log2(e)/alpha in the
  /// high-privacy limit.
  double limit_ratio = 0.0;
};

/// Renyi-divergence setting in the high-privacy regime: the optimizing
/// mechanism coincides with the relative-entropy one, so this is a
/// passthrough that additionally reports the exact Renyi utility and the
/// convergence diagnostic of the limit ratio.
inline RenyiBinarySolution solve_binary_renyi(const EitProblem& problem,
                                              const RenyiOrder& order) {
  RenyiBinarySolution out;
  out.solution = solve_binary(problem);
  const Distribution q1 = out.solution.mechanism.output_distribution(problem.hypothesis(0));
  const Distribution q2 = out.solution.mechanism.output_distribution(problem.hypothesis(1));
  out.kl_utility_bits = relative_entropy(q2, q1);
  out.renyi_utility_bits = renyi_divergence(q2, q1, order);
  const double denom = std::expm1((1.0 - order.alpha) * out.renyi_utility_bits * kLn2);
  out.limit_ratio = denom > 0.0
                        ? (1.0 - order.alpha) * out.kl_utility_bits / denom
                        : kLog2E / order.alpha;  // exact limit at D = 0
  return out;
}

/// m-ary design for binary sources. All difference vectors p_k - p1 are
/// collinear, so the objective collapses to the pair of minimal gap norm
/// (ties broken to the smallest index) while every budget constraint is
/// kept. Solved by active-set enumeration; each candidate set is solved by
/// the Newton dual method and verified against the KKT conditions.
inline BinarySolution solve_binary_source(const EitProblem& problem) {
  if (problem.source_size() != 2)
    throw ValidationError("solve_binary_source: binary sources only");
  if (problem.num_hypotheses() == 2) return solve_binary(problem);

  const int m = problem.num_hypotheses();
  int pair = 1;
  detail::QcqpGeometry geom = detail::pair_geometry(problem.hypothesis(0),
                                                    problem.hypothesis(1));
  for (int k = 2; k < m; ++k) {
    const detail::QcqpGeometry g =
        detail::pair_geometry(problem.hypothesis(0), problem.hypothesis(k));
    if (g.gap_norm_sq < geom.gap_norm_sq - 1e-15) {
      geom = g;
      pair = k;
    }
  }
  if (geom.gap_norm_sq == 0.0) return detail::degenerate_solution(problem);
  for (int k = 0; k < m; ++k)
    if (problem.budget_bits(k) == 0.0) return detail::degenerate_solution(problem);

  Vec eps_nats(m);
  for (int k = 0; k < m; ++k) eps_nats[k] = problem.budget_nats(k);
  const Vec& vp = geom.gap_direction;
  const double lambda = geom.gap_norm_sq;
  const int n = problem.source_size();

  BinarySolution best;
  bool found = false;
  // Subsets ordered by size then lexicographically; the convex program has
  // a unique optimum, so the first verified KKT point already is it, but
  // we keep scanning and prefer the largest objective for robustness.
  std::vector<std::vector<int>> subsets;
  for (int size = 1; size <= m; ++size) {
    std::vector<int> idx(size);
    std::function<void(int, int)> rec = [&](int start, int depth) {
      if (depth == size) {
        subsets.push_back(idx);
        return;
      }
      for (int k = start; k < m; ++k) {
        idx[depth] = k;
        rec(k + 1, depth + 1);
      }
    };
    rec(0, 0);
  }

  for (const std::vector<int>& set : subsets) {
    std::vector<const Distribution*> active;
    Vec sub_eps;
    for (int k : set) {
      active.push_back(&problem.hypothesis(k));
      sub_eps.push_back(eps_nats[k]);
    }
    Vec eta(set.size());
    for (size_t k = 0; k < set.size(); ++k) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += vp[i] * vp[i] / (*active[k])[i];
      eta[k] = std::sqrt(lambda * lambda * s / (8.0 * sub_eps[k])) /
               static_cast<double>(set.size());
    }
    if (!detail::newton_duals(active, eta, vp, lambda, sub_eps)) {
      if (set.size() == 2) {
        if (!detail::bisect_two_duals(*active[0], *active[1], eta, vp, lambda, sub_eps))
          continue;
      } else {
        continue;
      }
    }
    Vec a(n);
    for (int i = 0; i < n; ++i) {
      double di = 0.0;
      for (size_t k = 0; k < set.size(); ++k) di += eta[k] * (*active[k])[i];
      a[i] = 0.5 * lambda * vp[i] / di;
    }
    bool feasible = true;
    for (int k = 0; k < m && feasible; ++k) {
      const double fk = detail::leakage_form(a, problem.hypothesis(k));
      if (fk > eps_nats[k] * (1.0 + 1e-9) + 1e-18) feasible = false;
    }
    if (!feasible) continue;

    Vec duals(m, 0.0);
    for (size_t k = 0; k < set.size(); ++k) duals[set[k]] = eta[k];
    ActiveCase tag = set.size() >= 2 ? ActiveCase::kBothActive
                     : set[0] == 0   ? ActiveCase::kFirstActive
                                     : ActiveCase::kSecondActive;
    BinarySolution cand =
        detail::finish_solution(problem, std::move(a), geom, std::move(duals), tag, pair);
    if (!found || cand.predicted_utility_bits > best.predicted_utility_bits + 1e-15) {
      best = std::move(cand);
      found = true;
    }
  }
  if (!found) throw NoConvergence("solve_binary_source: no active set verified");
  return best;
}

}  // namespace putmech
