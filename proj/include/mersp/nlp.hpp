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

#include <chrono>
#include <cmath>
#include <optional>
#include <utility>

#include "mersp/capped_simplex.hpp"
#include "mersp/errors.hpp"
#include "mersp/instance.hpp"
#include "mersp/parallel.hpp"
#include "mersp/sym_matrix.hpp"

namespace mersp {

enum class Strategy { Identity, Diagonal, Trace };

inline const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Identity: return "identity";
    case Strategy::Diagonal: return "diagonal";
    case Strategy::Trace: return "trace";
  }
  return "?";
}

/// Exponents minimizing the bound for a given gamma * d:
///   p_i = 1 when gamma d_i <= 1, else (1 + sqrt(1 + 4 log(gamma d_i)))^2 / 4.
/// This choice makes gamma d_i = exp(p_i - sqrt(p_i)) hold with equality on
/// the second branch.
inline Vector best_p(double gamma, const Vector& d) {
  Vector p(d.size());
  for (int i = 0; i < d.size(); ++i) {
    const double gd = gamma * d(i);
    if (gd <= 1.0) {
      p(i) = 1.0;
    } else {
      const double r = 1.0 + std::sqrt(1.0 + 4.0 * std::log(gd));
      p(i) = 0.25 * r * r;
    }
  }
  return p;
}

/// Parameters of the log-det relaxation objective. Validity requires
/// Diag(d) >= C2 >= psi C1, p >= 1 and 0 < gamma d_i <= exp(p_i - sqrt(p_i)).
struct NlpParams {
  Vector d;
  Vector p;
  double gamma = 1.0;
  double psi = 1.0;
  Strategy strategy = Strategy::Identity;

  void validate(const MerspInstance& inst) const {
    if (d.size() != inst.n() || p.size() != inst.n()) {
      throw InvalidArgument("NlpParams: parameter length mismatch");
    }
    if ((d.array() <= 0.0).any() || !(gamma > 0.0) || !(psi > 0.0)) {
      throw InvalidArgument("NlpParams: d, gamma, psi must be positive");
    }
    if ((p.array() < 1.0 - 1e-12).any()) {
      throw InvalidArgument("NlpParams: need p >= 1");
    }
    for (int i = 0; i < d.size(); ++i) {
      const double cap = std::exp(p(i) - std::sqrt(p(i)));
      if (gamma * d(i) > cap * (1.0 + 1e-12)) {
        throw InvalidArgument("NlpParams: gamma d exceeds the concavity cap");
      }
    }
    if (!is_psd(SymMatrix::diagonal(d) - inst.c2(), false)) {
      throw InvalidArgument("NlpParams: Diag(d) >= C2 fails");
    }
    if (!is_psd(inst.c2() - psi * inst.c1(), false)) {
      throw InvalidArgument("NlpParams: C2 >= psi C1 fails");
    }
  }
};

/// The concave relaxation objective
///   f(x) = ldet M1(x) - ldet M2(x) - s log(psi) + offset,
///   M1(x) = Diag((gamma d)^x) + gamma X^{p/2} (psi C1 - D) X^{p/2},
///   M2(x) = Diag((gamma d)^x) + gamma X^{p/2} (C2 - D) X^{p/2},
/// with analytic gradient via the trace rule. At a binary x the value equals
/// the subset objective exactly.
class NlpObjective {
 public:
  NlpObjective(const MerspInstance& inst, NlpParams params)
      : params_(std::move(params)),
        n_(inst.n()),
        s_(inst.s()),
        constant_(inst.offset() - inst.s() * std::log(params_.psi)),
        log_gd_((params_.gamma * params_.d.array()).log()),
        g1_(params_.gamma *
            (params_.psi * inst.c1().m() - Matrix(params_.d.asDiagonal()))),
        g2_(params_.gamma *
            (inst.c2().m() - Matrix(params_.d.asDiagonal()))) {}

  const NlpParams& params() const { return params_; }

  double value(const Vector& x) const { return eval(x, nullptr); }

  double value_grad(const Vector& x, Vector& grad) const {
    return eval(x, &grad);
  }

  Oracle oracle() const {
    return [this](const Vector& x, Vector* grad) {
      return this->eval(x, grad);
    };
  }

 private:
  // ldet of Diag(a) + (w w^T) .* G, plus optionally the gradient terms
  double half_eval(const Matrix& g, const Vector& a, const Vector& w,
                   const Vector& x, Vector* grad) const {
    Matrix m = g.cwiseProduct(w * w.transpose());
    m.diagonal() += a;
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success) {
      throw NotPositiveDefinite("nlp objective: relaxation matrix not PD");
    }
    const double ld = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
    if (grad) {
      const Matrix inv = llt.solve(Matrix::Identity(n_, n_));
      const Matrix gw_inv = g * (w.asDiagonal() * inv);
      for (int i = 0; i < n_; ++i) {
        const double xp = std::pow(x(i), 0.5 * params_.p(i) - 1.0);
        (*grad)(i) = log_gd_(i) * a(i) * inv(i, i) +
                     params_.p(i) * xp * gw_inv(i, i);
      }
    }
    return ld;
  }

  double eval(const Vector& x, Vector* grad) const {
    if (x.size() != n_) throw InvalidArgument("nlp objective: x has wrong length");
    Vector a(n_), w(n_);
    for (int i = 0; i < n_; ++i) {
      a(i) = std::exp(x(i) * log_gd_(i));
      w(i) = std::pow(x(i), 0.5 * params_.p(i));
    }
    Vector grad1, grad2;
    if (grad) {
      grad1.resize(n_);
      grad2.resize(n_);
    }
    const double ld1 = half_eval(g1_, a, w, x, grad ? &grad1 : nullptr);
    const double ld2 = half_eval(g2_, a, w, x, grad ? &grad2 : nullptr);
    if (grad) *grad = grad1 - grad2;
    return ld1 - ld2 + constant_;
  }

  NlpParams params_;
  int n_;
  int s_;
  double constant_;
  Vector log_gd_;
  Matrix g1_;
  Matrix g2_;
};

/// First half of the relaxation objective, ldet M1(x) - s log(psi), as a
/// standalone function of the augmentation scaling. Used to exercise its
/// monotonicity in psi at a fixed point.
inline double nlp_f1_value(const MerspInstance& inst, const NlpParams& params,
                           const Vector& x, double psi) {
  const int n = inst.n();
  Vector a(n), w(n);
  for (int i = 0; i < n; ++i) {
    const double gd = params.gamma * params.d(i);
    a(i) = std::pow(gd, x(i));
    w(i) = std::pow(x(i), 0.5 * params.p(i));
  }
  const Matrix g1 =
      params.gamma * (psi * inst.c1().m() - Matrix(params.d.asDiagonal()));
  Matrix m = g1.cwiseProduct(w * w.transpose());
  m.diagonal() += a;
  return ldet_pd(SymMatrix(m)) - inst.s() * std::log(psi);
}

// ---------------------------------------------------------------------------
// Trace minimization: min { sum(y) : Diag(y) >= C2 } and its dual
// max { Tr(C2 W) : diag(W) = e, W >= 0 }.
// ---------------------------------------------------------------------------

struct TraceOptions {
  int subgrad_iterations = 2000;
  double rel_improve_tol = 1e-6;
  int dual_sweeps = 500;
  double dual_gap_tol = 1e-6;
};

struct TraceResult {
  Vector d;
  Matrix dual;          // PSD with unit diagonal
  double primal_trace = 0.0;
  double dual_value = 0.0;
  double rel_gap = 0.0;
  int iterations = 0;
};

/// Minimizes the trace of a dominating diagonal matrix. A primal subgradient
/// phase on the exact penalty sum(y) + n max(0, lambda_1(C2 - Diag y)) with
/// feasibility restoration runs first; a dual coordinate-ascent phase over
/// unit-diagonal PSD matrices then closes the gap and supplies the dual
/// certificate. Any feasible iterate keeps downstream bounds valid, so the
/// best restored point is returned.
inline TraceResult solve_trace_D(const SymMatrix& c2,
                                 const TraceOptions& opts = {}) {
  const int n = c2.order();
  const double scale = std::max(lambda_max(c2), 0.0);
  TraceResult res;
  if (scale <= 0.0) {
    res.d = Vector::Zero(n);
    res.dual = Matrix::Identity(n, n);
    return res;
  }

  auto restored = [&](Vector y) {
    const double lam = lambda_max(SymMatrix(c2.m() - Matrix(y.asDiagonal())));
    if (lam > 0.0) y.array() += lam + 1e-14 * scale;
    return y;
  };

  Vector best = restored(Vector::Constant(n, scale));
  double best_sum = best.sum();
  int iters = 0;

  // Phase 1: primal subgradient with restoration and best-feasible tracking.
  Vector y = best;
  double last_mark = best_sum;
  int since_mark = 0;
  for (int k = 1; k <= opts.subgrad_iterations; ++k) {
    ++iters;
    EigenDecomp e = eig(SymMatrix(c2.m() - Matrix(y.asDiagonal())));
    Vector g = Vector::Ones(n);
    if (e.values(0) > 0.0) {
      g -= static_cast<double>(n) * e.vectors.col(0).cwiseAbs2();
    }
    const double gn = g.norm();
    if (gn <= 1e-14) break;
    y -= (0.25 * scale / std::sqrt(static_cast<double>(k))) * (g / gn);
    Vector cand = restored(y);
    const double cs = cand.sum();
    if (cs < best_sum) {
      best_sum = cs;
      best = cand;
    }
    if (++since_mark >= 100) {
      if (last_mark - best_sum <= opts.rel_improve_tol * std::abs(last_mark)) break;
      last_mark = best_sum;
      since_mark = 0;
    }
  }

  // Phase 2: barrier coordinate ascent on the dual, with primal recovery
  // from complementarity y_i = (C2 W)_ii.
  Matrix w = Matrix::Identity(n, n);
  Matrix best_dual = w;
  double best_dual_value = c2.m().diagonal().sum();
  double sigma = 0.1 * scale;
  for (int sweep = 0; sweep < opts.dual_sweeps; ++sweep) {
    ++iters;
    for (int i = 0; i < n; ++i) {
      // row subproblem: max 2 c^T omega + sigma log(1 - omega^T B^+ omega)
      // over the row/column i of W, with B = W[~i,~i] and c = C2[~i, i];
      // with c zero-padded at i, B c is just (W c) off position i.
      Vector c = c2.m().col(i);
      c(i) = 0.0;
      Vector zeta = w * c;
      zeta(i) = 0.0;
      const double a2 = std::max(c.dot(zeta), 0.0);
      Vector omega = Vector::Zero(n);
      if (a2 > 1e-300) {
        const double a = std::sqrt(a2);
        const double gstar = (-sigma + std::sqrt(sigma * sigma + 4.0 * a2)) / (2.0 * a);
        omega = (gstar / a) * zeta;
      }
      w.col(i) = omega;
      w.row(i) = omega.transpose();
      w(i, i) = 1.0;
    }
    const double dual_val = c2.m().cwiseProduct(w).sum();
    if (dual_val > best_dual_value) {
      best_dual_value = dual_val;
      best_dual = w;
    }
    Vector cand = restored((c2.m() * w).diagonal());
    const double cs = cand.sum();
    if (cs < best_sum) {
      best_sum = cs;
      best = cand;
    }
    if (best_sum - best_dual_value <= opts.dual_gap_tol * std::max(1.0, best_sum)) {
      break;
    }
    sigma = std::max(0.5 * sigma, 1e-13 * scale);
  }

  res.d = best;
  res.dual = best_dual;
  res.primal_trace = best_sum;
  res.dual_value = best_dual_value;
  res.rel_gap = (best_sum - best_dual_value) / std::max(1.0, best_sum);
  res.iterations = iters;
  return res;
}

// ---------------------------------------------------------------------------
// Parameter-selection strategies.
// ---------------------------------------------------------------------------

/// Diagonal d of D plus the admissible gamma interval for grid search; the
/// interval collapses to a point for the Identity strategy.
struct StrategyParams {
  Vector d;
  double gamma_lo = 1.0;
  double gamma_hi = 1.0;
  Strategy strategy = Strategy::Identity;
};

inline StrategyParams strategy_identity(const MerspInstance& inst) {
  const double rho = lambda_max(inst.c2());
  if (!(rho > 0.0)) {
    throw DegenerateInstance("strategy_identity: C2 has no positive eigenvalue");
  }
  StrategyParams sp;
  sp.d = Vector::Constant(inst.n(), rho);
  sp.gamma_lo = sp.gamma_hi = 1.0 / rho;
  sp.strategy = Strategy::Identity;
  return sp;
}

inline StrategyParams strategy_diagonal(const MerspInstance& inst) {
  const Vector dc = inst.c2().diag();
  if ((dc.array() <= 0.0).any()) {
    throw DegenerateInstance("strategy_diagonal: zero diagonal entry in C2");
  }
  const Vector inv_sqrt = dc.cwiseSqrt().cwiseInverse();
  const double rho = lambda_max(inst.c2().conjugate_by_diag(inv_sqrt));
  StrategyParams sp;
  sp.d = rho * dc;
  sp.gamma_lo = 1.0 / sp.d.maxCoeff();
  sp.gamma_hi = 1.0 / sp.d.minCoeff();
  sp.strategy = Strategy::Diagonal;
  return sp;
}

inline StrategyParams strategy_trace(const MerspInstance& inst,
                                     const TraceOptions& opts = {}) {
  TraceResult tr = solve_trace_D(inst.c2(), opts);
  if (!(tr.d.minCoeff() > 0.0)) {
    throw DegenerateInstance("strategy_trace: nonpositive diagonal");
  }
  StrategyParams sp;
  sp.d = tr.d;
  sp.gamma_lo = 1.0 / sp.d.maxCoeff();
  sp.gamma_hi = 1.0 / sp.d.minCoeff();
  sp.strategy = Strategy::Trace;
  return sp;
}

inline StrategyParams make_strategy_params(const MerspInstance& inst,
                                           Strategy strategy,
                                           const TraceOptions& trace_opts = {}) {
  switch (strategy) {
    case Strategy::Identity: return strategy_identity(inst);
    case Strategy::Diagonal: return strategy_diagonal(inst);
    case Strategy::Trace: return strategy_trace(inst, trace_opts);
  }
  throw InvalidArgument("make_strategy_params: unknown strategy");
}

// ---------------------------------------------------------------------------
// Certified bound driver.
// ---------------------------------------------------------------------------

struct BoundResult {
  double value = 0.0;  // certified upper bound in original units
  Vector x_hat;
  double fw_gap = 0.0;
  NlpParams params;
  double wall_ms = 0.0;
  int iterations = 0;
};

struct NlpBoundOptions {
  Strategy strategy = Strategy::Identity;
  bool augment = false;
  int gamma_grid = 50;
  std::optional<double> psi;  // computed from the instance when absent
  SolverOptions solver;
  TraceOptions trace;
  int threads = 0;
};

/// Certified upper bound on the instance: maximizes the relaxation for each
/// gamma on an evenly spaced grid over the admissible interval (a single
/// point for Identity) and returns the smallest certificate; ties go to the
/// smaller gamma. The floor of the feasible region is 1e-9; certificates are
/// evaluated against the unfloored region.
inline BoundResult nlp_bound(const MerspInstance& inst,
                             const NlpBoundOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  if (opts.gamma_grid < 1) throw InvalidArgument("nlp_bound: gamma_grid >= 1");
  double psi = 1.0;
  if (opts.augment) {
    psi = opts.psi ? *opts.psi : max_psi(inst.c1(), inst.c2()) * (1.0 - 1e-8);
    if (!(psi > 0.0)) throw IllPosed("nlp_bound: nonpositive augmentation scaling");
  }
  if (!is_psd(inst.c2() - psi * inst.c1(), false)) {
    throw IllPosed(opts.augment
                       ? "nlp_bound: C2 >= psi C1 fails for the given psi"
                       : "nlp_bound: plain bound needs C2 >= C1; complement or augment");
  }
  StrategyParams sp = make_strategy_params(inst, opts.strategy, opts.trace);

  std::vector<double> gammas;
  if (opts.gamma_grid == 1 || sp.gamma_hi - sp.gamma_lo <= 1e-15 * sp.gamma_lo) {
    gammas.push_back(sp.gamma_lo);
  } else {
    for (int j = 0; j < opts.gamma_grid; ++j) {
      gammas.push_back(sp.gamma_lo + (sp.gamma_hi - sp.gamma_lo) * j /
                                         (opts.gamma_grid - 1));
    }
  }

  const CappedSimplex region(inst.n(), static_cast<double>(inst.s()));
  auto solve_one = [&](int j) {
    NlpParams params;
    params.d = sp.d;
    params.gamma = gammas[j];
    params.p = best_p(params.gamma, sp.d);
    params.psi = psi;
    params.strategy = sp.strategy;
    NlpObjective obj(inst, params);
    SolveReport rep = maximize(obj.oracle(), region, opts.solver);
    return std::make_pair(rep, params);
  };
  auto solves = parallel_map(static_cast<int>(gammas.size()), solve_one,
                             opts.threads);

  int win = 0;
  for (int j = 1; j < static_cast<int>(solves.size()); ++j) {
    if (solves[j].first.certified_upper < solves[win].first.certified_upper) {
      win = j;
    }
  }
  const auto t1 = std::chrono::steady_clock::now();
  BoundResult out;
  out.value = solves[win].first.certified_upper;
  out.x_hat = solves[win].first.x_hat;
  out.fw_gap = solves[win].first.fw_gap;
  out.params = solves[win].second;
  out.iterations = solves[win].first.iterations;
  out.wall_ms =
      std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(t1 - t0)
          .count();
  return out;
}

}  // namespace mersp
