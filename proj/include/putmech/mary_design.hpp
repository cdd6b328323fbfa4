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
#include <string>
#include <utility>
#include <vector>

#include "putmech/binary_design.hpp"
#include "putmech/perturbation.hpp"
#include "putmech/types.hpp"

namespace putmech {

// m-ary design through the semidefinite reformulation in B = A A^T:
//
//   max t   s.t.  (1/2) Tr((p_k-p_1)^T (p_k-p_1) B) >= t   k = 2..m
//                 (1/2) Tr([p_k] B) <= eps_k               k = 1..m
//                 B >= 0.
//
// The solver is a bespoke log-det barrier path-following method: problem
// sizes are tiny (source alphabets of at most ~10 symbols), a dense
// Newton step per centering is microseconds, and every piece is testable
// against the binary closed forms.

/// SDP data: one rank-1 utility matrix per non-distinguished hypothesis
/// and one diagonal trace weight per budget constraint.
struct SdpProblem {
  int source_size = 0;
  std::vector<Matrix> utility_mats;            // (p_k-p_1)^T (p_k-p_1), k = 2..m
  std::vector<Vec> trace_weights;              // diag(p_k), k = 1..m
  Vec budgets_nats;
};

inline SdpProblem build_sdp(const EitProblem& problem) {
  SdpProblem sdp;
  const int n = problem.source_size();
  sdp.source_size = n;
  for (int k = 1; k < problem.num_hypotheses(); ++k) {
    Matrix pk(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        pk(i, j) = (problem.hypothesis(k)[i] - problem.hypothesis(0)[i]) *
                   (problem.hypothesis(k)[j] - problem.hypothesis(0)[j]);
    sdp.utility_mats.push_back(std::move(pk));
  }
  for (int k = 0; k < problem.num_hypotheses(); ++k) {
    sdp.trace_weights.push_back(problem.hypothesis(k).probs());
    sdp.budgets_nats.push_back(problem.budget_nats(k));
  }
  return sdp;
}

struct SdpSolution {
  /// Optimal Gram matrix B = A A^T.
  Matrix gram;
  /// Optimal worst-case utility, natural units.
  double value_nats = 0.0;
  /// Numerical rank of the Gram matrix (eigenvalues below 1e-9 of the
  /// largest count as zero).
  int rank = 0;
  /// All eigenvalues of the Gram matrix, descending.
  Vec eigenvalues;
  /// Orthonormal eigenvectors of the kept (positive) eigenvalues,
  /// one per column.
  Matrix basis;
  /// Perturbation recovered by reconstruct(); empty until then.
  Matrix perturbation;
  /// Multipliers of the trace (budget) constraints at termination.
  Vec duals;
  /// Multipliers of the worst-case utility constraints; they sum to one
  /// at the optimum and certify the value through weak duality.
  Vec utility_duals;
  /// Barrier suboptimality bound at termination, natural units.
  double gap = 0.0;
  int newton_iterations = 0;

  double value_bits() const { return value_nats * kLog2E; }
};

namespace detail {

/// Newton solve with symmetric diagonal equilibration and one round of
/// iterative refinement; the barrier Hessian's conditioning grows like
/// 1/mu^2 and plain LU loses the duals' digits below mu ~ 1e-5.
inline Vec scaled_newton_solve(const Matrix& h, const Vec& rhs) {
  const int n = h.rows();
  Vec d(n);
  for (int i = 0; i < n; ++i) d[i] = 1.0 / std::sqrt(std::max(h(i, i), 1e-300));
  Matrix hs(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) hs(i, j) = h(i, j) * d[i] * d[j];
  Vec bs(n);
  for (int i = 0; i < n; ++i) bs[i] = rhs[i] * d[i];
  Vec ys = lu_solve(hs, bs);
  // refinement in the scaled system, residuals in extended precision
  for (int round = 0; round < 2; ++round) {
    Vec residual(n);
    for (int i = 0; i < n; ++i) {
      long double r = bs[i];
      for (int j = 0; j < n; ++j) r -= static_cast<long double>(hs(i, j)) * ys[j];
      residual[i] = static_cast<double>(r);
    }
    const Vec corr = lu_solve(hs, residual);
    for (int i = 0; i < n; ++i) ys[i] += corr[i];
  }
  Vec x(n);
  for (int i = 0; i < n; ++i) x[i] = ys[i] * d[i];
  return x;
}

inline int svec_dim(int n) { return n * (n + 1) / 2; }

/// Scaled symmetric vectorization: off-diagonal entries carry sqrt(2) so
/// that Tr(X Y) = svec(X) . svec(Y).
inline Vec svec(const Matrix& x) {
  const int n = x.rows();
  Vec v(svec_dim(n));
  int idx = 0;
  const double rt2 = std::sqrt(2.0);
  for (int i = 0; i < n; ++i) {
    v[idx++] = x(i, i);
    for (int j = i + 1; j < n; ++j) v[idx++] = rt2 * x(i, j);
  }
  return v;
}

inline Matrix smat(const Vec& v, int n) {
  Matrix x(n, n);
  int idx = 0;
  const double inv_rt2 = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < n; ++i) {
    x(i, i) = v[idx++];
    for (int j = i + 1; j < n; ++j) {
      x(i, j) = v[idx] * inv_rt2;
      x(j, i) = v[idx] * inv_rt2;
      ++idx;
    }
  }
  return x;
}

/// Hessian of -log det(S) with respect to svec(B), i.e. the symmetric
/// Kronecker square of Q = S^{-1}.
inline Matrix logdet_hessian(const Matrix& q) {
  const int n = q.rows();
  const int d = svec_dim(n);
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(d);
  for (int i = 0; i < n; ++i) {
    pairs.emplace_back(i, i);
    for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  Matrix h(d, d);
  const double rt2 = std::sqrt(2.0);
  for (int a = 0; a < d; ++a) {
    const auto [i, j] = pairs[a];
    for (int b = a; b < d; ++b) {
      const auto [k, l] = pairs[b];
      double val;
      if (i == j && k == l) val = q(i, k) * q(i, k);
      else if (i == j) val = rt2 * q(i, k) * q(i, l);
      else if (k == l) val = rt2 * q(k, i) * q(k, j);
      else val = q(i, k) * q(j, l) + q(i, l) * q(j, k);
      h(a, b) = val;
      h(b, a) = val;
    }
  }
  return h;
}

}  // namespace detail

/// Barrier path-following solver for the trade-off SDP: maximizes
/// t + mu (log det(B + delta I) + sum log slack) over (B, t) with Newton
/// inner steps, shrinking mu by 10 per round until the suboptimality
/// bound falls below 1e-9 in scaled units. B = 0, t = 0 is always
/// feasible; budgets of zero force B = 0 outright.
inline SdpSolution solve_sdp(const SdpProblem& sdp) {
  const int n = sdp.source_size;
  const int m = static_cast<int>(sdp.trace_weights.size());
  const int mu_count = static_cast<int>(sdp.utility_mats.size());
  SdpSolution sol;
  sol.duals.assign(m, 0.0);

  double max_eps = 0.0, min_eps = std::numeric_limits<double>::infinity();
  for (double e : sdp.budgets_nats) {
    max_eps = std::max(max_eps, e);
    min_eps = std::min(min_eps, e);
  }
  if (min_eps <= 0.0) {
    // A zero budget with an interior hypothesis forces diag(B) = 0, and a
    // PSD matrix with zero diagonal is zero.
    sol.gram = Matrix(n, n);
    sol.eigenvalues.assign(n, 0.0);
    sol.rank = 0;
    sol.basis = Matrix(n, 0);
    sol.utility_duals.assign(mu_count, 0.0);
    return sol;
  }

  // Homogeneity: scaling all budgets scales (B, t) linearly. Solve with
  // budgets normalized to max 1 and unscale at the end.
  const double scale = 1.0 / max_eps;
  Vec eps(m);
  for (int k = 0; k < m; ++k) eps[k] = sdp.budgets_nats[k] * scale;

  const int d = detail::svec_dim(n);
  const int dim = d + 1;  // svec(B) and t
  const double delta = 1e-12;

  // Linear barrier terms c^T x + b > 0.
  struct LinearTerm {
    Vec coef;
    double offset;
  };
  std::vector<LinearTerm> terms;
  for (int k = 0; k < mu_count; ++k) {
    LinearTerm lt;
    lt.coef = detail::svec(sdp.utility_mats[k]);
    for (double& c : lt.coef) c *= 0.5;
    lt.coef.push_back(-1.0);
    lt.offset = 0.0;
    terms.push_back(std::move(lt));
  }
  const int trace_term_begin = static_cast<int>(terms.size());
  for (int k = 0; k < m; ++k) {
    Matrix diag(n, n);
    for (int i = 0; i < n; ++i) diag(i, i) = sdp.trace_weights[k][i];
    LinearTerm lt;
    lt.coef = detail::svec(diag);
    for (double& c : lt.coef) c *= -0.5;
    lt.coef.push_back(0.0);
    lt.offset = eps[k];
    terms.push_back(std::move(lt));
  }

  Vec x(dim, 0.0);
  {
    const double gamma = 0.5 * min_eps * scale;
    Matrix b0 = Matrix::identity(n);
    for (int i = 0; i < n; ++i) b0(i, i) = gamma;
    const Vec sv = detail::svec(b0);
    std::copy(sv.begin(), sv.end(), x.begin());
    double min_u = std::numeric_limits<double>::infinity();
    for (int k = 0; k < mu_count; ++k) {
      double u = 0.0;
      for (int i = 0; i < d; ++i) u += terms[k].coef[i] * x[i];
      min_u = std::min(min_u, u);
    }
    x[d] = min_u - 1.0;
  }

  auto eval_slacks = [&](const Vec& xx, Vec& slacks) {
    slacks.resize(terms.size());
    for (size_t a = 0; a < terms.size(); ++a) {
      double g = terms[a].offset;
      for (int i = 0; i < dim; ++i) g += terms[a].coef[i] * xx[i];
      slacks[a] = g;
    }
  };

  auto barrier_value = [&](const Vec& xx, double mu, double& value, Matrix& chol_l) {
    Matrix b = detail::smat(Vec(xx.begin(), xx.begin() + d), n);
    for (int i = 0; i < n; ++i) b(i, i) += delta;
    if (!cholesky(b, chol_l)) return false;
    Vec slacks;
    eval_slacks(xx, slacks);
    double logs = logdet_from_cholesky(chol_l);
    for (double s : slacks) {
      if (s <= 0.0) return false;
      logs += std::log(s);
    }
    value = -xx[d] - mu * logs;
    return true;
  };

  // Duals are read off the central path at mu_dual, where the Newton
  // system is still well conditioned; the primal continues to mu_final so
  // that spurious eigenvalues of B fall well below the rank threshold.
  const double mu_final = 1e-12;
  const double mu_dual = 1e-9;
  int total_newton = 0;
  Vec dual_snapshot;
  for (double mu = 1.0;; mu *= 0.1) {
    const bool last = mu <= mu_final * 9.9;
    const double center_tol = mu <= mu_dual * 9.9 ? 1e-13 : 1e-9;
    bool centered = false;
    Vec pending_step;
    for (int inner = 0; inner < 300; ++inner) {
      Matrix b = detail::smat(Vec(x.begin(), x.begin() + d), n);
      for (int i = 0; i < n; ++i) b(i, i) += delta;
      Matrix l;
      if (!cholesky(b, l))
        throw NumericalFailure("sdp: iterate left the PSD cone");
      const Matrix q = spd_inverse(l);
      Vec slacks;
      eval_slacks(x, slacks);

      Vec grad(dim, 0.0);
      const Vec qv = detail::svec(q);
      for (int i = 0; i < d; ++i) grad[i] = -mu * qv[i];
      grad[d] = -1.0;
      Matrix hess(dim, dim);
      const Matrix hld = detail::logdet_hessian(q);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) hess(i, j) = mu * hld(i, j);
      for (size_t a = 0; a < terms.size(); ++a) {
        const double g = slacks[a];
        for (int i = 0; i < dim; ++i) {
          grad[i] -= mu * terms[a].coef[i] / g;
          for (int j = 0; j < dim; ++j)
            hess(i, j) += mu * terms[a].coef[i] * terms[a].coef[j] / (g * g);
        }
      }
      for (int i = 0; i < dim; ++i) hess(i, i) += 1e-14 * mu;

      Vec rhs(dim);
      for (int i = 0; i < dim; ++i) rhs[i] = -grad[i];
      Vec step;
      try {
        step = detail::scaled_newton_solve(hess, rhs);
      } catch (const std::runtime_error&) {
        throw NumericalFailure("sdp: singular Newton system");
      }
      double decrement = 0.0;
      for (int i = 0; i < dim; ++i) decrement -= grad[i] * step[i];
      ++total_newton;
      if (decrement * 0.5 <= center_tol) {
        centered = true;
        pending_step = step;
        break;
      }

      double phi0;
      Matrix unused;
      barrier_value(x, mu, phi0, unused);
      double alpha = 1.0;
      bool moved = false;
      for (int bt = 0; bt < 60; ++bt) {
        Vec xt(dim);
        for (int i = 0; i < dim; ++i) xt[i] = x[i] + alpha * step[i];
        double phit;
        if (barrier_value(xt, mu, phit, unused) &&
            phit <= phi0 - 0.25 * alpha * decrement) {
          x = std::move(xt);
          moved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!moved) {
        // Numerical centering limit: acceptable late on the path, fatal
        // while the iterate is still far from centered.
        centered = decrement * 0.5 <= 1e-11;
        if (centered) pending_step = step;
        if (!centered && mu > mu_dual)
          throw NumericalFailure("sdp: line search stalled at mu " +
                                 std::to_string(mu));
        break;
      }
    }
    // Multipliers are read off centered points, with slacks evaluated at
    // the predicted center x + step (they are linear in x, so this pins
    // the estimates to second order in the Newton decrement). The exact
    // center satisfies sum_k mu/u_k = 1; that identity is the computable
    // witness of whether the point is still trustworthy, and the snapshot
    // keeps the smallest mu whose witness holds.
    if (centered) {
      Vec slacks;
      eval_slacks(x, slacks);
      Vec candidate(terms.size());
      double witness = 0.0;
      for (size_t a = 0; a < terms.size(); ++a) {
        double corrected = slacks[a];
        if (!pending_step.empty()) {
          double shift = 0.0;
          for (int i = 0; i < dim; ++i) shift += terms[a].coef[i] * pending_step[i];
          if (slacks[a] + shift > 0.0) corrected = slacks[a] + shift;
        }
        candidate[a] = mu / corrected;
        if (a < static_cast<size_t>(mu_count)) witness += candidate[a];
      }
      if (std::fabs(witness - 1.0) <= 1e-7) dual_snapshot = std::move(candidate);
    }
    if (last) break;
  }
  if (dual_snapshot.empty())
    throw NumericalFailure("sdp: no centered point reached for the duals");
  sol.utility_duals.assign(dual_snapshot.begin(), dual_snapshot.begin() + mu_count);
  sol.duals.assign(dual_snapshot.begin() + trace_term_begin, dual_snapshot.end());
  sol.newton_iterations = total_newton;

  Matrix b = detail::smat(Vec(x.begin(), x.begin() + d), n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) /= scale;
  sol.gram = b;

  double t_report = std::numeric_limits<double>::infinity();
  for (const Matrix& pk : sdp.utility_mats) {
    double u = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) u += pk(i, j) * b(j, i);
    t_report = std::min(t_report, 0.5 * u);
  }
  sol.value_nats = std::max(t_report, 0.0);

  // A posteriori optimality bound from weak duality: any feasible value is
  // at most sum_k duals_k eps_k.
  double dual_value = 0.0;
  for (int k = 0; k < m; ++k) dual_value += sol.duals[k] * sdp.budgets_nats[k];
  sol.gap = std::max(dual_value - sol.value_nats, 0.0);

  const EigenDecomposition eig = jacobi_eigen(b);
  sol.eigenvalues = eig.values;
  const double lambda_max = std::max(eig.values.empty() ? 0.0 : eig.values[0], 0.0);
  int rank = 0;
  for (double v : eig.values)
    if (v > 1e-9 * lambda_max && v > 0.0) ++rank;
  sol.rank = rank;
  sol.basis = Matrix(n, std::max(rank, 0));
  for (int c = 0; c < rank; ++c)
    for (int i = 0; i < n; ++i) sol.basis(i, c) = eig.vectors(i, c);
  return sol;
}

/// Recovers a mechanism from a solved SDP: with l the rank of the Gram
/// matrix, an output alphabet of l + 1 symbols suffices. The perturbation
/// is U [sqrt(lambda) | 0] V^T with V an orthonormal basis whose last
/// column is parallel to sqrt(w0); a rank-0 solution is lifted to l = 1
/// with a zero eigenvalue. Fills solution.perturbation.
inline Mechanism reconstruct(SdpSolution& solution, const ReferenceOutput& w0) {
  const int n = solution.gram.rows();
  const int l = std::max(solution.rank, 1);
  if (w0.size() != l + 1)
    throw DimensionMismatch("reconstruct: w0 must have rank+1 = " +
                            std::to_string(l + 1) + " entries");
  Matrix u(n, l);
  Vec roots(l, 0.0);
  for (int c = 0; c < l; ++c) {
    if (c < solution.rank) {
      roots[c] = std::sqrt(std::max(solution.eigenvalues[c], 0.0));
      for (int i = 0; i < n; ++i) u(i, c) = solution.basis(i, c);
    } else {
      u(0, c) = 1.0;  // arbitrary unit column against the zero eigenvalue
    }
  }
  const Matrix v = orthonormal_basis_ending_with(w0.sqrt_probs());
  Matrix a(n, l + 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < l + 1; ++j) {
      double s = 0.0;
      for (int c = 0; c < l; ++c) s += u(i, c) * roots[c] * v(j, c);
      a(i, j) = s;
    }
  solution.perturbation = a;
  return assemble(w0, a);
}

/// reconstruct() with the uniform reference output over rank + 1 symbols.
inline Mechanism reconstruct(SdpSolution& solution) {
  const int l = std::max(solution.rank, 1);
  return reconstruct(solution, ReferenceOutput::uniform(l + 1));
}

}  // namespace putmech
