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

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mersp/errors.hpp"
#include "mersp/instance.hpp"
#include "mersp/nlp.hpp"
#include "mersp/parallel.hpp"
#include "mersp/quasi_newton.hpp"
#include "mersp/sym_matrix.hpp"

namespace mersp {

enum class PsiSource { Unit, MinLamDiff, MinLamC2, Optimized };

inline const char* psi_source_name(PsiSource s) {
  switch (s) {
    case PsiSource::Unit: return "unit";
    case PsiSource::MinLamDiff: return "min-lam-diff";
    case PsiSource::MinLamC2: return "min-lam-c2";
    case PsiSource::Optimized: return "optimized";
  }
  return "?";
}

/// A positive conjugation vector with its provenance. Eigenvalue-sourced
/// vectors are normalized to geometric mean one; objective_trace holds the
/// accepted bound values of the optimizing scheme, nonincreasing.
struct DiagonalScaling {
  Vector psi_vec;
  PsiSource source = PsiSource::Unit;
  std::vector<double> objective_trace;
};

struct MinLam1Options {
  int stage_iterations = 120;
  double rel_tol = 1e-7;
};

/// Locally minimizes lambda_1(Diag(psi) M Diag(psi)) over positive psi with
/// geometric mean one, working on u = log(psi) where the constraint becomes
/// a lossless centering (the eigenvalue is homogeneous of degree two). The
/// max eigenvalue is smoothed by a soft-max with shrinking width to step
/// through coalescence; the best exact value seen is kept.
inline DiagonalScaling min_lam1(const SymMatrix& m, PsiSource tag,
                                const MinLam1Options& opts = {}) {
  const int n = m.order();
  if (m.m().norm() == 0.0) throw DegenerateInstance("min_lam1: zero matrix");
  if (!is_psd(m, false)) throw DomainError("min_lam1: matrix must be PSD");

  Vector best_u = Vector::Zero(n);
  double best_lam = lambda_max(m);
  auto centered_lam = [&](const Vector& u, double lam) {
    // exact top eigenvalue after re-centering u to mean zero
    return lam * std::exp(-2.0 * u.mean());
  };

  double mu = 1e-2;
  auto oracle = [&](const Vector& u, Vector* grad) {
    const EigenDecomp e = eig(m.conjugate_by_diag(u.array().exp()));
    const double lam = e.values(0);
    if (!(lam > 0.0)) throw NumericalFailure("min_lam1: nonpositive eigenvalue");
    const double c = centered_lam(u, lam);
    if (c < best_lam) {
      best_lam = c;
      best_u = u;
    }
    // soft max of the spectrum with width mu * lam
    const double width = mu * lam;
    double z = 0.0;
    Vector theta(n);
    for (int j = 0; j < n; ++j) {
      theta(j) = std::exp((e.values(j) - lam) / width);
      z += theta(j);
    }
    theta /= z;
    const double soft = lam + width * std::log(z);
    if (grad) {
      Vector g = Vector::Zero(n);
      for (int j = 0; j < n; ++j) {
        if (theta(j) < 1e-16) continue;
        g += theta(j) * 2.0 * e.values(j) * e.vectors.col(j).cwiseAbs2();
      }
      *grad = g / soft - Vector::Constant(n, 2.0 / n);
    }
    return std::log(soft) - 2.0 * u.mean();
  };

  Vector u = Vector::Zero(n);
  for (int stage = 0; stage < 5; ++stage) {
    QuasiNewtonOptions qn;
    qn.max_iterations = opts.stage_iterations;
    qn.grad_tol = opts.rel_tol;
    QuasiNewtonResult res = bfgs_minimize(oracle, u, qn);
    u = best_u;
    mu *= 1e-2;
    if (res.converged && stage >= 2) break;
  }

  DiagonalScaling out;
  Vector uc = best_u.array() - best_u.mean();
  out.psi_vec = uc.array().exp();
  out.source = tag;
  return out;
}

/// Dispatch to the selection strategies: the unit vector, the minimizer for
/// the difference C2 - C1, or the minimizer for C2 alone.
inline DiagonalScaling select_psi(const MerspInstance& inst, PsiSource method,
                                  const MinLam1Options& opts = {}) {
  switch (method) {
    case PsiSource::Unit:
      return DiagonalScaling{Vector::Ones(inst.n()), PsiSource::Unit, {}};
    case PsiSource::MinLamDiff:
      return min_lam1(inst.c2() - inst.c1(), PsiSource::MinLamDiff, opts);
    case PsiSource::MinLamC2:
      return min_lam1(inst.c2(), PsiSource::MinLamC2, opts);
    case PsiSource::Optimized:
      throw InvalidArgument("select_psi: optimized vectors come from the optimizer");
  }
  throw InvalidArgument("select_psi: unknown method");
}

struct DiagScaleOptions {
  int max_outer = 30;
  double rel_tol = 1e-6;
  double psi = 1.0;     // augmentation scaling; invariant under conjugation
  int gamma_grid = 50;  // used by the non-identity strategies
  SolverOptions solver;
  TraceOptions trace;
  MinLam1Options min_lam1;
  int threads = 0;
};

namespace detail {

// Identity-strategy relaxation value at a fixed point, as a function of
// u = log(psi_vec):
//   Phi(u) = ldet A1 - ldet A2 - s log(psi) + offset,
//   A_k = I - Diag(x) + (c_k / rho) X^{1/2} E_k(u) X^{1/2},
//   rho = lambda_1(E_2(u)), c_1 = psi, c_2 = 1.
struct PhiEval {
  double value = 0.0;
  Vector grad;
  double top_gap = 1.0;  // relative eigengap of lambda_1(E_2)
};

inline PhiEval phi_eval(const MerspInstance& inst, const Vector& u,
                        const Vector& x_hat, double psi, bool want_grad) {
  const int n = inst.n();
  const Vector psi_vec = u.array().exp();
  const SymMatrix e1 = inst.c1().conjugate_by_diag(psi_vec);
  const SymMatrix e2 = inst.c2().conjugate_by_diag(psi_vec);
  const EigenDecomp d2 = eig(e2);
  const double rho = d2.values(0);
  if (!(rho > 0.0)) throw NumericalFailure("phi_eval: nonpositive top eigenvalue");
  const Vector xs = x_hat.cwiseSqrt();
  const Vector w2 = d2.vectors.col(0).cwiseAbs2();

  PhiEval out;
  out.top_gap = n > 1 ? (d2.values(0) - d2.values(1)) / rho : 1.0;
  if (want_grad) out.grad = Vector::Zero(n);
  double value = -inst.s() * std::log(psi) + inst.offset();
  const double coef[2] = {psi, 1.0};
  const SymMatrix* mats[2] = {&e1, &e2};
  for (int k = 0; k < 2; ++k) {
    const double sign = k == 0 ? 1.0 : -1.0;
    const double c = coef[k];
    const Matrix& e = mats[k]->m();
    Matrix a = (c / rho) * e.cwiseProduct(xs * xs.transpose());
    a.diagonal() += Vector::Ones(n) - x_hat;
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success) {
      throw NotPositiveDefinite("phi_eval: relaxation matrix not PD");
    }
    value += sign * 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
    if (want_grad) {
      const Matrix inv = llt.solve(Matrix::Identity(n, n));
      const Matrix exa = e * (xs.asDiagonal() * inv * xs.asDiagonal());
      const double trace_term = exa.trace();
      out.grad += sign * (2.0 * c / rho) *
                  (exa.diagonal() - trace_term * w2);
    }
  }
  out.value = value;
  return out;
}

}  // namespace detail

/// Identity-strategy relaxation value at x_hat for the scaled instance, as a
/// function of log(psi_vec). Exposed for gradient checking.
inline double phi_value(const MerspInstance& inst, const Vector& u,
                        const Vector& x_hat, double psi) {
  return detail::phi_eval(inst, u, x_hat, psi, false).value;
}

inline Vector phi_grad(const MerspInstance& inst, const Vector& u,
                       const Vector& x_hat, double psi) {
  return detail::phi_eval(inst, u, x_hat, psi, true).grad;
}

struct PsiOptimizeResult {
  DiagonalScaling scaling;
  BoundResult bound;
};

namespace detail {

inline BoundResult solve_identity_scaled(const MerspInstance& inst,
                                         const Vector& u,
                                         const DiagScaleOptions& opts) {
  NlpBoundOptions nb;
  nb.strategy = Strategy::Identity;
  nb.augment = opts.psi != 1.0;
  nb.psi = opts.psi;
  nb.solver = opts.solver;
  nb.threads = 1;
  return nlp_bound(apply_diag_scaling(inst, u.array().exp()), nb);
}

}  // namespace detail

/// Alternating local optimization of the conjugation vector for the
/// identity-strategy bound: solve the relaxation at the current psi_vec,
/// then take a quasi-Newton step on log(psi_vec) against the fixed-point
/// value, accepting a step only when the re-solved certified bound strictly
/// decreases. Every accepted iterate is a valid bound.
inline PsiOptimizeResult optimize_psi_nlp_id(const MerspInstance& inst,
                                             const DiagonalScaling& start,
                                             const DiagScaleOptions& opts = {}) {
  const int n = inst.n();
  Vector u = start.psi_vec.array().log();
  u.array() -= u.mean();
  BoundResult cur = detail::solve_identity_scaled(inst, u, opts);

  std::vector<double> trace{cur.value};
  Vector best_u = u;
  BoundResult best = cur;

  Matrix h = Matrix::Identity(n, n);
  std::optional<Vector> prev_u, prev_g;
  for (int outer = 0; outer < opts.max_outer; ++outer) {
    detail::PhiEval pe;
    try {
      pe = detail::phi_eval(inst, u, cur.x_hat, opts.psi, true);
    } catch (const Error&) {
      break;  // keep the best bound found so far
    }
    Vector g = pe.grad;
    g.array() -= g.mean();
    if (g.norm() <= 1e-10) break;

    if (prev_u && prev_g) {
      const Vector s = u - *prev_u;
      const Vector y = g - *prev_g;
      const double sy = s.dot(y);
      if (sy > 1e-12 * s.norm() * y.norm()) {
        const double rho_b = 1.0 / sy;
        const Vector hy = h * y;
        h -= rho_b * (s * hy.transpose() + hy * s.transpose());
        h += rho_b * rho_b * y.dot(hy) * (s * s.transpose());
        h += rho_b * (s * s.transpose());
      }
    }
    Vector p = -(h * g);
    if (p.dot(g) >= 0.0) {
      h.setIdentity();
      p = -g;
    }
    prev_u = u;
    prev_g = g;

    // coalescing top eigenvalue: fall back to a shorter subgradient step
    double alpha = pe.top_gap < 1e-8 ? 0.5 : 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 7; ++bt) {
      Vector ut = u + alpha * p;
      ut.array() -= ut.mean();
      BoundResult bt_res;
      try {
        bt_res = detail::solve_identity_scaled(inst, ut, opts);
      } catch (const Error&) {
        alpha *= 0.5;
        continue;
      }
      if (bt_res.value < best.value) {
        const double drop = best.value - bt_res.value;
        u = ut;
        cur = bt_res;
        best = bt_res;
        best_u = ut;
        trace.push_back(bt_res.value);
        accepted = true;
        if (drop <= opts.rel_tol * (1.0 + std::abs(best.value))) {
          outer = opts.max_outer;  // converged
        }
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
  }

  PsiOptimizeResult out;
  out.scaling.psi_vec = best_u.array().exp();
  out.scaling.source = PsiSource::Optimized;
  out.scaling.objective_trace = std::move(trace);
  out.bound = best;
  return out;
}

/// Runs the three starting vectors (unit and the two eigenvalue minimizers)
/// and keeps the smallest certified bound. The identity strategy optimizes
/// the vector from each start; other strategies evaluate the bound at the
/// unoptimized starts. Failed branches are skipped.
inline PsiOptimizeResult best_of_three(const MerspInstance& inst,
                                       Strategy strategy,
                                       const DiagScaleOptions& opts = {}) {
  const PsiSource sources[3] = {PsiSource::Unit, PsiSource::MinLamDiff,
                                PsiSource::MinLamC2};
  auto run_branch = [&](int b) -> std::optional<PsiOptimizeResult> {
    try {
      DiagonalScaling psi0 = select_psi(inst, sources[b], opts.min_lam1);
      if (strategy == Strategy::Identity) {
        DiagScaleOptions inner = opts;
        inner.threads = 1;
        return optimize_psi_nlp_id(inst, psi0, inner);
      }
      NlpBoundOptions nb;
      nb.strategy = strategy;
      nb.augment = opts.psi != 1.0;
      nb.psi = opts.psi;
      nb.gamma_grid = opts.gamma_grid;
      nb.solver = opts.solver;
      nb.trace = opts.trace;
      nb.threads = 1;
      PsiOptimizeResult r;
      r.scaling = psi0;
      r.bound = nlp_bound(apply_diag_scaling(inst, psi0.psi_vec), nb);
      return r;
    } catch (const Error&) {
      return std::nullopt;
    }
  };
  auto branches = parallel_map(3, run_branch, opts.threads);
  std::optional<PsiOptimizeResult> best;
  for (auto& b : branches) {
    if (!b) continue;
    if (!best || b->bound.value < best->bound.value) best = std::move(b);
  }
  if (!best) {
    throw IllPosed("best_of_three: every starting vector failed");
  }
  return *best;
}

}  // namespace mersp
