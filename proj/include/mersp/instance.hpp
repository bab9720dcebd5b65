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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <utility>

#include "mersp/errors.hpp"
#include "mersp/sym_matrix.hpp"

namespace mersp {

/// Joint covariance of the observable variables (first n indices) and the
/// unobservable targets (last t indices). Requires C PSD and the target
/// block strictly positive definite.
class CovarianceInstance {
 public:
  CovarianceInstance(SymMatrix c, int n, int t)
      : c_(std::move(c)), n_(n), t_(t) {
    if (n < 2 || t < 1 || c_.order() != n + t) {
      throw InvalidArgument("covariance: need n >= 2, t >= 1, order n + t");
    }
    if (!is_psd(c_, false)) {
      throw InvalidArgument("covariance: matrix is not positive semidefinite");
    }
    if (!is_psd(target_block(), true)) {
      throw NotPositiveDefinite("covariance: target block is not positive definite");
    }
  }

  int n() const { return n_; }
  int t() const { return t_; }
  const SymMatrix& c() const { return c_; }

  /// C[N,N]
  SymMatrix observable_block() const {
    IndexSet idx(n_);
    std::iota(idx.begin(), idx.end(), 0);
    return c_.submatrix(idx);
  }

  /// C[T,T]
  SymMatrix target_block() const {
    IndexSet idx(t_);
    std::iota(idx.begin(), idx.end(), n_);
    return c_.submatrix(idx);
  }

  /// C[N,T], n x t
  Matrix cross_block() const { return c_.m().topRightCorner(n_, t_); }

  /// Conditional covariance of the observables given the targets,
  /// C[N,N] - C[N,T] C[T,T]^{-1} C[T,N].
  SymMatrix conditional_observable_block() const {
    const Matrix cnt = cross_block();
    const Matrix solved = target_block().m().llt().solve(cnt.transpose());
    return SymMatrix(observable_block().m() - cnt * solved);
  }

 private:
  SymMatrix c_;
  int n_;
  int t_;
};

/// A subset-selection instance max over |S|=s of
///   ldet C1[S,S] - ldet C2[S,S] + offset.
/// The offset accumulates across transforms so that bounds computed on any
/// transformed instance are reported in the units of the instance it came
/// from. Immutable; transforms return new values.
class MerspInstance {
 public:
  MerspInstance(SymMatrix c1, SymMatrix c2, int s, double offset,
                std::string lineage)
      : c1_(std::move(c1)),
        c2_(std::move(c2)),
        s_(s),
        offset_(offset),
        lineage_(std::move(lineage)) {
    if (c1_.order() != c2_.order()) {
      throw InvalidArgument("instance: matrix orders differ");
    }
    if (s_ <= 0 || s_ >= c1_.order()) {
      throw InvalidArgument("instance: need 0 < s < n");
    }
  }

  int n() const { return c1_.order(); }
  int s() const { return s_; }
  double offset() const { return offset_; }
  const SymMatrix& c1() const { return c1_; }
  const SymMatrix& c2() const { return c2_; }
  const std::string& lineage() const { return lineage_; }

 private:
  SymMatrix c1_;
  SymMatrix c2_;
  int s_;
  double offset_;
  std::string lineage_;
};

inline MerspInstance build_mersp(const CovarianceInstance& cov, int s) {
  if (s <= 0 || s >= cov.n()) {
    throw InvalidArgument("build_mersp: need 0 < s < n");
  }
  return MerspInstance(cov.observable_block(),
                       cov.conditional_observable_block(), s, 0.0, "original");
}

/// Objective of a subset of any size (used by incremental searches);
/// throws NotPositiveDefinite when a principal submatrix is singular.
inline double subset_value(const MerspInstance& inst, const IndexSet& s) {
  if (s.empty()) return inst.offset();
  return ldet_pd(inst.c1().submatrix(s)) - ldet_pd(inst.c2().submatrix(s)) +
         inst.offset();
}

/// Objective of a size-s subset, offset included.
inline double objective(const MerspInstance& inst, const IndexSet& s) {
  if (static_cast<int>(s.size()) != inst.s()) {
    throw InvalidArgument("objective: subset size must equal s");
  }
  return subset_value(inst, s);
}

/// Two-sided scaling: (gamma1 C1, gamma2 C2), offset -= s log(gamma1/gamma2).
inline MerspInstance scale(const MerspInstance& inst, double gamma1,
                           double gamma2) {
  if (!(gamma1 > 0.0) || !(gamma2 > 0.0)) {
    throw InvalidArgument("scale: factors must be positive");
  }
  return MerspInstance(gamma1 * inst.c1(), gamma2 * inst.c2(), inst.s(),
                       inst.offset() - inst.s() * std::log(gamma1 / gamma2),
                       inst.lineage() + "|scaled");
}

/// Complementing: (C1^{-1}, C2^{-1}, n - s), offset += ldet C1 - ldet C2.
/// The objective of the new instance at N \ S equals the old objective at S.
inline MerspInstance complement(const MerspInstance& inst) {
  const double ld1 = ldet_pd(inst.c1());
  const double ld2 = ldet_pd(inst.c2());
  const int n = inst.n();
  const Matrix id = Matrix::Identity(n, n);
  SymMatrix inv1(inst.c1().m().llt().solve(id));
  SymMatrix inv2(inst.c2().m().llt().solve(id));
  return MerspInstance(std::move(inv1), std::move(inv2), n - inst.s(),
                       inst.offset() + ld1 - ld2,
                       inst.lineage() + "|complement");
}

/// Diagonal scaling by a positive vector: C_k <- Diag(psi) C_k Diag(psi).
/// Leaves the objective of every subset unchanged.
inline MerspInstance apply_diag_scaling(const MerspInstance& inst,
                                        const Vector& psi) {
  if (psi.size() != inst.n() || (psi.array() <= 0.0).any()) {
    throw InvalidArgument("apply_diag_scaling: need a positive vector of length n");
  }
  return MerspInstance(inst.c1().conjugate_by_diag(psi),
                       inst.c2().conjugate_by_diag(psi), inst.s(),
                       inst.offset(), inst.lineage() + "|diag-scaled");
}

/// Residual covariance of the targets after regression on the observables,
/// C[T,T] - C[N,T]^T C[N,N]^+ C[N,T].
inline SymMatrix target_residual_matrix(const CovarianceInstance& cov) {
  const Matrix cnt = cov.cross_block();
  const SymMatrix pinv = pinv_psd(cov.observable_block());
  return SymMatrix(cov.target_block().m() -
                   cnt.transpose() * pinv.m() * cnt);
}

/// Well-posedness condition: the target residual matrix is strictly positive
/// definite. Sufficient for C[S,S] > 0 <=> C_T[S,S] > 0 on every subset, and
/// equivalent to the existence of a positive augmentation scaling.
inline bool well_posedness_condition(const CovarianceInstance& cov) {
  return is_psd(target_residual_matrix(cov), true);
}

enum class PsiMode { Original, Complementary };

/// Largest feasible augmentation scaling, with the orientation it refers to.
struct PsiStar {
  double value = 1.0;
  PsiMode mode = PsiMode::Original;

  /// Value shrunk by a relative safety margin before use as a scaling, so
  /// that eigenvalue round-off cannot break C2 >= psi C1.
  double safe_value() const { return value * (1.0 - 1e-8); }
};

namespace detail {

inline SymMatrix inv_sqrt_pd(const SymMatrix& a, const char* who) {
  EigenDecomp d = eig(a);
  const int n = a.order();
  if (!(d.values(n - 1) > kPdTol * (1.0 + std::max(d.values(0), 0.0)))) {
    throw NotPositiveDefinite(std::string(who) +
                              ": matrix must be positive definite");
  }
  Vector r(n);
  for (int k = 0; k < n; ++k) r(k) = 1.0 / std::sqrt(d.values(k));
  return SymMatrix(d.vectors * r.asDiagonal() * d.vectors.transpose());
}

inline SymMatrix pinv_sqrt_psd(const SymMatrix& a) {
  EigenDecomp d = detail::eig_psd_checked(a, "pinv_sqrt");
  const double cut = kRankTol * std::max(d.values(0), 0.0);
  Vector r = Vector::Zero(a.order());
  for (int k = 0; k < a.order(); ++k) {
    if (d.values(k) > cut) r(k) = 1.0 / std::sqrt(d.values(k));
  }
  return SymMatrix(d.vectors * r.asDiagonal() * d.vectors.transpose());
}

}  // namespace detail

/// Largest psi > 0 with C2 >= psi C1, for arbitrary PSD inputs whose ranges
/// nest. Throws IllPosed when no positive scaling exists.
inline double max_psi(const SymMatrix& c1, const SymMatrix& c2) {
  const double c1_scale = std::max(lambda_max(c1), 0.0);
  if (c1_scale <= 0.0 && c1.m().norm() == 0.0) {
    throw DegenerateInstance("max_psi: C1 is zero");
  }
  EigenDecomp d2 = detail::eig_psd_checked(c2, "max_psi");
  const double cut = kRankTol * std::max(d2.values(0), 0.0);
  // kernel of C2 must annihilate C1
  for (int k = 0; k < c2.order(); ++k) {
    if (d2.values(k) <= cut) {
      const Vector v = d2.vectors.col(k);
      if (v.dot(c1.m() * v) > kPsdTol * (1.0 + c1_scale)) {
        throw IllPosed("max_psi: no positive scaling exists (range mismatch)");
      }
    }
  }
  SymMatrix w = detail::pinv_sqrt_psd(c2);
  const double lam = lambda_max(SymMatrix(w.m() * c1.m() * w.m()));
  if (!(lam > 0.0)) {
    throw DegenerateInstance("max_psi: C1 vanishes on the range of C2");
  }
  return 1.0 / lam;
}

/// Largest feasible augmentation scaling for a covariance instance.
///  - Original mode (C1 = B, C2 = B_T): requires the well-posedness
///    condition; 1 - sigma_1^2(C[T,T]^{-1/2} C[T,N] C[N,N]^{+/2}).
///  - Complementary mode (C1 = B^{-1}, C2 = B_T^{-1}): requires C > 0;
///    1 / lambda_1(B_T^{1/2} B^{-1} B_T^{1/2}).
inline PsiStar psi_star(const CovarianceInstance& cov, PsiMode mode) {
  if (mode == PsiMode::Original) {
    if (!well_posedness_condition(cov)) {
      throw IllPosed("psi_star: well-posedness condition fails in original mode");
    }
    const SymMatrix y = detail::inv_sqrt_pd(cov.target_block(), "psi_star");
    const Matrix ctn = cov.cross_block().transpose();  // t x n
    const SymMatrix bp = pinv_psd(cov.observable_block());
    const SymMatrix k(y.m() * ctn * bp.m() * ctn.transpose() * y.m());
    const double sigma_sq = std::max(lambda_max(k), 0.0);
    const double value = 1.0 - sigma_sq;
    if (!(value > 0.0)) {
      throw NumericalFailure("psi_star: nonpositive value in original mode");
    }
    return PsiStar{std::min(value, 1.0), PsiMode::Original};
  }
  if (!is_psd(cov.c(), true)) {
    throw NotPositiveDefinite("psi_star: complementary mode requires C > 0");
  }
  const SymMatrix bt_sqrt = sqrt_psd(cov.conditional_observable_block());
  const Matrix b_inv =
      cov.observable_block().m().llt().solve(Matrix::Identity(cov.n(), cov.n()));
  const double lam = lambda_max(SymMatrix(bt_sqrt.m() * b_inv * bt_sqrt.m()));
  if (!(lam > 0.0)) {
    throw NumericalFailure("psi_star: nonpositive eigenvalue in complementary mode");
  }
  return PsiStar{1.0 / lam, PsiMode::Complementary};
}

struct EquivalenceReport {
  int trials = 0;
  int violations = 0;
};

/// Samples random subsets of every size 1..n-1 and checks that the principal
/// submatrices of B and B_T are strictly PD for exactly the same subsets.
/// Requires the well-posedness condition.
inline EquivalenceReport subset_equiv_check(const CovarianceInstance& cov,
                                            int trials, std::uint64_t seed) {
  if (!well_posedness_condition(cov)) {
    throw InvalidArgument("subset_equiv_check: well-posedness condition required");
  }
  const SymMatrix b = cov.observable_block();
  const SymMatrix bt = cov.conditional_observable_block();
  const int n = cov.n();
  std::mt19937_64 rng(seed);
  IndexSet all(n);
  std::iota(all.begin(), all.end(), 0);
  EquivalenceReport rep;
  rep.trials = trials;
  for (int k = 0; k < trials; ++k) {
    const int size = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n - 1));
    std::shuffle(all.begin(), all.end(), rng);
    IndexSet s(all.begin(), all.begin() + size);
    std::sort(s.begin(), s.end());
    const bool pd_b = is_psd(b.submatrix(s), true);
    const bool pd_bt = is_psd(bt.submatrix(s), true);
    if (pd_b != pd_bt) ++rep.violations;
  }
  return rep;
}

}  // namespace mersp
