// Copyright 2026 The Authors.
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

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>
#include <vector>

#include "mersp/errors.hpp"

namespace mersp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using IndexSet = std::vector<int>;

// Relative tolerances shared by every definiteness and rank decision.
inline constexpr double kPdTol = 1e-10;
inline constexpr double kPsdTol = 1e-9;
inline constexpr double kRankTol = 1e-9;

/// Dense real symmetric matrix. Symmetrized on construction by averaging
/// with the transpose, which absorbs round-off from Schur-complement and
/// congruence arithmetic.
class SymMatrix {
 public:
  explicit SymMatrix(Matrix m) {
    if (m.rows() != m.cols() || m.rows() < 1) {
      throw InvalidArgument("SymMatrix requires a square matrix of order >= 1");
    }
    m_ = 0.5 * (m + m.transpose());
  }

  static SymMatrix identity(int order) {
    return SymMatrix(Matrix::Identity(order, order));
  }
  static SymMatrix zero(int order) {
    return SymMatrix(Matrix::Zero(order, order));
  }
  static SymMatrix diagonal(const Vector& d) {
    return SymMatrix(Matrix(d.asDiagonal()));
  }

  int order() const { return static_cast<int>(m_.rows()); }
  const Matrix& m() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }
  Vector diag() const { return m_.diagonal(); }

  /// Principal submatrix with the given (0-based) row/column indices.
  SymMatrix submatrix(const IndexSet& idx) const {
    Matrix s(idx.size(), idx.size());
    for (std::size_t a = 0; a < idx.size(); ++a) {
      for (std::size_t b = 0; b < idx.size(); ++b) {
        s(a, b) = m_(idx[a], idx[b]);
      }
    }
    return SymMatrix(std::move(s));
  }

  /// Congruence by a positive diagonal: Diag(d) * A * Diag(d).
  SymMatrix conjugate_by_diag(const Vector& d) const {
    return SymMatrix(d.asDiagonal() * m_ * d.asDiagonal());
  }

  bool all_finite() const { return m_.allFinite(); }

 private:
  Matrix m_;
};

inline SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) {
  return SymMatrix(a.m() + b.m());
}
inline SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) {
  return SymMatrix(a.m() - b.m());
}
inline SymMatrix operator*(double c, const SymMatrix& a) {
  return SymMatrix(c * a.m());
}

/// Eigendecomposition with eigenvalues sorted descending and orthonormal
/// eigenvectors as columns (vectors.col(k) pairs with values(k)).
struct EigenDecomp {
  Vector values;
  Matrix vectors;
};

/// Full symmetric eigendecomposition, descending order.
inline EigenDecomp eig(const SymMatrix& a) {
  if (!a.all_finite()) {
    throw NumericalFailure("eig: matrix has non-finite entries");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(a.m());
  if (es.info() != Eigen::Success) {
    throw NumericalFailure("eig: eigensolver did not converge");
  }
  const int n = a.order();
  EigenDecomp d;
  d.values = es.eigenvalues().reverse();
  d.vectors.resize(n, n);
  for (int k = 0; k < n; ++k) d.vectors.col(k) = es.eigenvectors().col(n - 1 - k);
  return d;
}

/// Largest eigenvalue only.
inline double lambda_max(const SymMatrix& a) {
  if (!a.all_finite()) {
    throw NumericalFailure("lambda_max: matrix has non-finite entries");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(a.m(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericalFailure("lambda_max: eigensolver did not converge");
  }
  return es.eigenvalues()(a.order() - 1);
}

/// log det of a positive definite matrix via Cholesky, 2 * sum(log(L_jj)).
/// A pivot at or below kPdTol relative to the largest diagonal entry is
/// treated as a failure.
inline double ldet_pd(const SymMatrix& a) {
  if (!a.all_finite()) {
    throw NumericalFailure("ldet_pd: matrix has non-finite entries");
  }
  const int n = a.order();
  const Matrix& m = a.m();
  const double scale = m.diagonal().cwiseAbs().maxCoeff();
  Matrix l = Matrix::Zero(n, n);
  double ld = 0.0;
  for (int j = 0; j < n; ++j) {
    double d = m(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > kPdTol * scale)) {
      throw NotPositiveDefinite("ldet_pd: Cholesky pivot at or below tolerance");
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    ld += 2.0 * std::log(ljj);
    for (int i = j + 1; i < n; ++i) {
      l(i, j) = (m(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / ljj;
    }
  }
  return ld;
}

/// Positive (semi)definiteness test on the spectrum.
/// strict: lambda_min >  kPdTol  * (1 + lambda_max)
/// loose : lambda_min >= -kPsdTol * (1 + lambda_max)
inline bool is_psd(const SymMatrix& a, bool strict) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a.m(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericalFailure("is_psd: eigensolver did not converge");
  }
  const double lo = es.eigenvalues()(0);
  const double hi = es.eigenvalues()(a.order() - 1);
  if (strict) return lo > kPdTol * (1.0 + hi);
  return lo >= -kPsdTol * (1.0 + hi);
}

namespace detail {

inline EigenDecomp eig_psd_checked(const SymMatrix& a, const char* who) {
  EigenDecomp d = eig(a);
  const double hi = d.values(0);
  const double lo = d.values(a.order() - 1);
  if (lo < -kPsdTol * (1.0 + std::max(hi, 0.0))) {
    throw DomainError(std::string(who) + ": matrix is not positive semidefinite");
  }
  return d;
}

}  // namespace detail

/// Moore-Penrose pseudoinverse of a PSD matrix. Eigenvalues at or below
/// kRankTol * lambda_max count as zero.
inline SymMatrix pinv_psd(const SymMatrix& a) {
  EigenDecomp d = detail::eig_psd_checked(a, "pinv_psd");
  const double cut = kRankTol * std::max(d.values(0), 0.0);
  Vector inv = Vector::Zero(a.order());
  for (int k = 0; k < a.order(); ++k) {
    if (d.values(k) > cut) inv(k) = 1.0 / d.values(k);
  }
  return SymMatrix(d.vectors * inv.asDiagonal() * d.vectors.transpose());
}

/// Symmetric PSD square root; negative eigenvalues within tolerance are
/// clamped to zero.
inline SymMatrix sqrt_psd(const SymMatrix& a) {
  EigenDecomp d = detail::eig_psd_checked(a, "sqrt_psd");
  Vector r(a.order());
  for (int k = 0; k < a.order(); ++k) r(k) = std::sqrt(std::max(d.values(k), 0.0));
  return SymMatrix(d.vectors * r.asDiagonal() * d.vectors.transpose());
}

/// Numerical rank of a PSD matrix with the kRankTol * lambda_max cutoff.
inline int rank_psd(const SymMatrix& a) {
  EigenDecomp d = eig(a);
  const double cut = kRankTol * std::max(d.values(0), 0.0);
  int r = 0;
  for (int k = 0; k < a.order(); ++k) {
    if (d.values(k) > cut && d.values(k) > 0.0) ++r;
  }
  return r;
}

/// Numerical rank of a general rectangular matrix (singular-value cutoff).
inline int rank_general(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  if (s.size() == 0) return 0;
  const double cut = kRankTol * s(0);
  int r = 0;
  for (int k = 0; k < s.size(); ++k) {
    if (s(k) > cut && s(k) > 0.0) ++r;
  }
  return r;
}

}  // namespace mersp
