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
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace putmech {

using Vec = std::vector<double>;

/// Dense row-major matrix. All problems in this library are desk scale
/// (dimensions below ~100), so no effort is spent on blocking or views.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {}

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(int i, int j) { return data_[static_cast<size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return data_[static_cast<size_t>(i) * cols_ + j]; }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::fabs(v));
    return m;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

inline Vec vecmat(const Vec& x, const Matrix& a) {
  Vec y(a.cols(), 0.0);
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) y[j] += x[i] * a(i, j);
  return y;
}

inline double dot(const Vec& x, const Vec& y) {
  return std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
}

inline double norm(const Vec& x) { return std::sqrt(dot(x, x)); }

inline double max_abs(const Vec& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::fabs(v));
  return m;
}

/// Solves a x = b by LU with partial pivoting. Throws on (numerically)
/// singular systems.
inline Vec lu_solve(Matrix a, Vec b) {
  const int n = a.rows();
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::fabs(a(r, col)) > std::fabs(a(pivot, col))) pivot = r;
    if (a(pivot, col) == 0.0) throw std::runtime_error("lu_solve: singular matrix");
    if (pivot != col) {
      for (int j = 0; j < n; ++j) std::swap(a(col, j), a(pivot, j));
      std::swap(b[col], b[pivot]);
    }
    for (int r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      if (f == 0.0) continue;
      a(r, col) = 0.0;
      for (int j = col + 1; j < n; ++j) a(r, j) -= f * a(col, j);
      b[r] -= f * b[col];
    }
  }
  Vec x(n);
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
    x[i] = s / a(i, i);
  }
  return x;
}

/// Cholesky factor of a symmetric positive definite matrix (lower
/// triangular). Returns false if the matrix is not numerically PD.
inline bool cholesky(const Matrix& a, Matrix& l) {
  const int n = a.rows();
  l = Matrix(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s <= 0.0 || !std::isfinite(s)) return false;
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return true;
}

inline double logdet_from_cholesky(const Matrix& l) {
  double s = 0.0;
  for (int i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

/// Inverse of an SPD matrix from its Cholesky factor.
inline Matrix spd_inverse(const Matrix& l) {
  const int n = l.rows();
  // Invert L by forward substitution, then Q = L^-T L^-1.
  Matrix linv(n, n);
  for (int col = 0; col < n; ++col) {
    linv(col, col) = 1.0 / l(col, col);
    for (int i = col + 1; i < n; ++i) {
      double s = 0.0;
      for (int k = col; k < i; ++k) s -= l(i, k) * linv(k, col);
      linv(i, col) = s / l(i, i);
    }
  }
  Matrix q(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      double s = 0.0;
      for (int k = i; k < n; ++k) s += linv(k, i) * linv(k, j);
      q(i, j) = s;
      q(j, i) = s;
    }
  return q;
}

struct EigenDecomposition {
  Vec values;      // descending
  Matrix vectors;  // column k is the eigenvector for values[k]
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Off-diagonal
/// threshold is relative to the Frobenius norm; eigenvectors are
/// canonicalized so the entry of largest magnitude is positive.
inline EigenDecomposition jacobi_eigen(Matrix a, double rel_threshold = 1e-14,
                                       int max_sweeps = 100) {
  const int n = a.rows();
  Matrix v = Matrix::identity(n);
  double fro = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) fro += a(i, j) * a(i, j);
  fro = std::sqrt(fro);
  const double stop = std::max(rel_threshold * fro, 1e-300);

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += 2.0 * a(i, j) * a(i, j);
    if (std::sqrt(off) <= stop) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::fabs(apq) <= stop / (n * n)) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Vec diag(n);
  for (int i = 0; i < n; ++i) diag[i] = a(i, i);
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return diag[x] > diag[y]; });

  EigenDecomposition out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (int k = 0; k < n; ++k) {
    const int src = order[k];
    out.values[k] = diag[src];
    int arg = 0;
    for (int i = 1; i < n; ++i)
      if (std::fabs(v(i, src)) > std::fabs(v(arg, src))) arg = i;
    const double sign = v(arg, src) < 0.0 ? -1.0 : 1.0;
    for (int i = 0; i < n; ++i) out.vectors(i, k) = sign * v(i, src);
  }
  return out;
}

/// Orthonormal basis of R^n whose LAST column is the given unit vector;
/// the remaining columns are built by Gram-Schmidt over standard basis
/// vectors, skipping candidates nearly parallel to what is already chosen.
inline Matrix orthonormal_basis_ending_with(const Vec& unit) {
  const int n = static_cast<int>(unit.size());
  std::vector<Vec> cols;
  cols.reserve(n);
  cols.push_back(unit);
  for (int j = 0; j < n && static_cast<int>(cols.size()) < n; ++j) {
    Vec cand(n, 0.0);
    cand[j] = 1.0;
    if (std::fabs(dot(cand, unit)) > 1.0 - 1e-8) continue;  // nearly parallel
    for (const Vec& c : cols) {
      const double proj = dot(cand, c);
      for (int i = 0; i < n; ++i) cand[i] -= proj * c[i];
    }
    const double len = norm(cand);
    if (len < 1e-8) continue;
    for (double& x : cand) x /= len;
    cols.push_back(cand);
  }
  if (static_cast<int>(cols.size()) != n)
    throw std::runtime_error("orthonormal_basis_ending_with: completion failed");
  Matrix basis(n, n);
  for (int k = 1; k < n; ++k)
    for (int i = 0; i < n; ++i) basis(i, k - 1) = cols[k][i];
  for (int i = 0; i < n; ++i) basis(i, n - 1) = unit[i];
  return basis;
}

/// log(sum(exp(x_i))) with pairwise (tree) summation of the shifted terms.
inline double log_sum_exp(const Vec& log_terms) {
  if (log_terms.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(log_terms.begin(), log_terms.end());
  if (!std::isfinite(m)) return m;
  // Pairwise summation keeps the rounding error O(log n) ulps.
  std::vector<double> terms(log_terms.size());
  for (size_t i = 0; i < log_terms.size(); ++i) terms[i] = std::exp(log_terms[i] - m);
  while (terms.size() > 1) {
    std::vector<double> next((terms.size() + 1) / 2);
    for (size_t i = 0; i + 1 < terms.size(); i += 2) next[i / 2] = terms[i] + terms[i + 1];
    if (terms.size() % 2 == 1) next.back() = terms.back();
    terms.swap(next);
  }
  return m + std::log(terms[0]);
}

}  // namespace putmech
