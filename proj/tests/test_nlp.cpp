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

#include <catch2/catch.hpp>
#include <cmath>
#include <random>

#include "helpers.hpp"
#include "mersp/nlp.hpp"
#include "mersp/spectral.hpp"

using namespace mersp;
using mersp_test::for_each_subset;
using mersp_test::random_pd;

namespace {

CovarianceInstance random_cov(std::mt19937_64& rng, int n, int t) {
  return CovarianceInstance(random_pd(rng, n + t), n, t);
}

double exhaustive_max(const MerspInstance& inst) {
  double best = -1e300;
  for_each_subset(inst.n(), inst.s(), [&](const IndexSet& s) {
    best = std::max(best, objective(inst, s));
  });
  return best;
}

Vector indicator(int n, const IndexSet& s) {
  Vector x = Vector::Zero(n);
  for (int i : s) x(i) = 1.0;
  return x;
}

NlpParams identity_params(const MerspInstance& inst, double psi) {
  StrategyParams sp = strategy_identity(inst);
  NlpParams params;
  params.d = sp.d;
  params.gamma = sp.gamma_lo;
  params.p = best_p(params.gamma, params.d);
  params.psi = psi;
  params.strategy = Strategy::Identity;
  return params;
}

}  // namespace

TEST_CASE("best_p branch values") {
  Vector d(3);
  d << 0.5, 1.0, std::exp(1.0);
  Vector p = best_p(1.0, d);
  REQUIRE(p(0) == 1.0);
  REQUIRE(p(1) == 1.0);
  const double phi2 = 0.25 * std::pow(1.0 + std::sqrt(5.0), 2);
  REQUIRE(p(2) == Approx(phi2).epsilon(1e-12));  // about 2.618034
  // the cap gamma d = exp(p - sqrt p) is tight on the second branch
  REQUIRE(std::exp(p(2) - std::sqrt(p(2))) == Approx(std::exp(1.0)).epsilon(1e-12));
}

TEST_CASE("identity strategy parameters") {
  MerspInstance eye(SymMatrix::identity(3), SymMatrix::identity(3), 1, 0.0, "x");
  StrategyParams sp = strategy_identity(eye);
  REQUIRE(sp.d.isApprox(Vector::Ones(3)));
  REQUIRE(sp.gamma_lo == Approx(1.0));

  Vector d2(2);
  d2 << 4, 1;
  MerspInstance diag(SymMatrix::diagonal(d2), SymMatrix::diagonal(d2), 1, 0.0,
                     "x");
  StrategyParams sp2 = strategy_identity(diag);
  REQUIRE(sp2.d(0) == Approx(4.0));
  REQUIRE(sp2.d(1) == Approx(4.0));
  REQUIRE(sp2.gamma_lo == Approx(0.25));

  std::mt19937_64 rng(301);
  MerspInstance rnd(random_pd(rng, 5), random_pd(rng, 5), 2, 0.0, "x");
  StrategyParams sp3 = strategy_identity(rnd);
  const Vector gd = sp3.gamma_lo * sp3.d;
  REQUIRE((gd - Vector::Ones(5)).norm() < 1e-12);
  REQUIRE((best_p(sp3.gamma_lo, sp3.d) - Vector::Ones(5)).norm() < 1e-12);

  REQUIRE_THROWS_AS(strategy_identity(MerspInstance(SymMatrix::identity(3),
                                                    SymMatrix::zero(3), 1, 0.0,
                                                    "x")),
                    DegenerateInstance);
}

TEST_CASE("diagonal strategy parameters") {
  MerspInstance eye(SymMatrix::identity(3), SymMatrix::identity(3), 1, 0.0, "x");
  StrategyParams sp = strategy_diagonal(eye);
  REQUIRE(sp.d.isApprox(Vector::Ones(3)));
  REQUIRE(sp.gamma_lo == Approx(1.0));
  REQUIRE(sp.gamma_hi == Approx(1.0));

  Vector d2(2);
  d2 << 4, 1;
  MerspInstance diag(SymMatrix::diagonal(d2), SymMatrix::diagonal(d2), 1, 0.0,
                     "x");
  StrategyParams sp2 = strategy_diagonal(diag);
  REQUIRE(sp2.d(0) == Approx(4.0));
  REQUIRE(sp2.d(1) == Approx(1.0));
  REQUIRE(sp2.gamma_lo == Approx(0.25));
  REQUIRE(sp2.gamma_hi == Approx(1.0));

  std::mt19937_64 rng(307);
  SymMatrix c2 = random_pd(rng, 5);
  MerspInstance rnd(c2, c2, 2, 0.0, "x");
  StrategyParams sp3 = strategy_diagonal(rnd);
  REQUIRE(is_psd(SymMatrix::diagonal(sp3.d) - c2, false));

  Vector with_zero(2);
  with_zero << 1, 0;
  MerspInstance degenerate(SymMatrix::identity(2),
                           SymMatrix::diagonal(with_zero), 1, 0.0, "x");
  REQUIRE_THROWS_AS(strategy_diagonal(degenerate), DegenerateInstance);
}

TEST_CASE("trace minimization on the identity") {
  TraceResult tr = solve_trace_D(SymMatrix::identity(4));
  REQUIRE(tr.primal_trace == Approx(4.0).epsilon(1e-5));
  REQUIRE((tr.d - Vector::Ones(4)).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("trace minimization on the all-ones matrix") {
  // feasibility needs (d1 - 1)(d2 - 1) >= 1, so the optimum is (2, 2)
  TraceResult tr = solve_trace_D(SymMatrix(Matrix::Ones(2, 2)));
  REQUIRE(tr.primal_trace == Approx(4.0).epsilon(1e-5));
  REQUIRE(tr.d(0) == Approx(2.0).margin(2e-3));
  REQUIRE(tr.d(1) == Approx(2.0).margin(2e-3));
  // dual certificate: PSD, unit diagonal, value matching the trace
  REQUIRE(is_psd(SymMatrix(tr.dual), false));
  REQUIRE(tr.dual(0, 0) == Approx(1.0).margin(1e-12));
  REQUIRE(tr.dual_value == Approx(tr.primal_trace).epsilon(1e-5));
}

TEST_CASE("trace minimization is feasible and certified on random input") {
  std::mt19937_64 rng(311);
  for (int trial = 0; trial < 4; ++trial) {
    SymMatrix c2 = random_pd(rng, 6);
    TraceResult tr = solve_trace_D(c2);
    REQUIRE(is_psd(SymMatrix::diagonal(tr.d) - c2, false));
    REQUIRE(is_psd(SymMatrix(tr.dual), false));
    for (int i = 0; i < 6; ++i) REQUIRE(tr.dual(i, i) == Approx(1.0).margin(1e-12));
    REQUIRE(tr.dual_value <= tr.primal_trace + 1e-9);
    REQUIRE(tr.rel_gap <= 1e-5);
    // never worse than the identity strategy's diagonal
    REQUIRE(tr.primal_trace <= 6 * lambda_max(c2) + 1e-9);
  }
}

TEST_CASE("trace strategy equals identity on the identity matrix") {
  MerspInstance eye(SymMatrix::identity(4), SymMatrix::identity(4), 2, 0.0, "x");
  StrategyParams sp = strategy_trace(eye);
  REQUIRE((sp.d - Vector::Ones(4)).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("relaxation objective is exact at binary points") {
  std::mt19937_64 rng(313);
  CovarianceInstance cov = random_cov(rng, 6, 2);
  MerspInstance inst = build_mersp(cov, 3);
  const double psi = psi_star(cov, PsiMode::Original).safe_value();
  NlpObjective obj(inst, identity_params(inst, psi));
  for_each_subset(6, 3, [&](const IndexSet& s) {
    REQUIRE(obj.value(indicator(6, s)) ==
            Approx(objective(inst, s)).margin(1e-8));
  });

  // complementary orientation, plain scaling
  MerspInstance comp = complement(inst);
  NlpObjective cobj(comp, identity_params(comp, 1.0));
  for_each_subset(6, 3, [&](const IndexSet& s) {
    REQUIRE(cobj.value(indicator(6, s)) ==
            Approx(objective(comp, s)).margin(1e-8));
  });
}

TEST_CASE("relaxation gradient matches central finite differences") {
  std::mt19937_64 rng(317);
  CovarianceInstance cov = random_cov(rng, 5, 2);
  MerspInstance inst = build_mersp(cov, 2);
  MerspInstance comp = complement(inst);
  NlpObjective obj(comp, identity_params(comp, 1.0));
  const double h = 1e-6;
  std::uniform_real_distribution<double> ud(0.1, 0.9);
  for (int trial = 0; trial < 20; ++trial) {
    Vector x(5);
    for (int i = 0; i < 5; ++i) x(i) = ud(rng);
    Vector grad(5);
    obj.value_grad(x, grad);
    for (int i = 0; i < 5; ++i) {
      Vector xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      const double fd = (obj.value(xp) - obj.value(xm)) / (2.0 * h);
      REQUIRE(std::abs(grad(i) - fd) <= 1e-5 * (1.0 + grad.norm()));
    }
  }
}

TEST_CASE("relaxation objective vanishes when the matrices coincide") {
  std::mt19937_64 rng(331);
  SymMatrix a = random_pd(rng, 4);
  MerspInstance inst(a, a, 2, 0.7, "x");
  NlpObjective obj(inst, identity_params(inst, 1.0));
  std::uniform_real_distribution<double> ud(0.05, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Vector x(4);
    for (int i = 0; i < 4; ++i) x(i) = ud(rng);
    REQUIRE(obj.value(x) == Approx(0.7).margin(1e-10));
  }
}

TEST_CASE("params validation rejects broken inputs") {
  std::mt19937_64 rng(337);
  CovarianceInstance cov = random_cov(rng, 5, 2);
  MerspInstance comp = complement(build_mersp(cov, 2));
  NlpParams good = identity_params(comp, 1.0);
  REQUIRE_NOTHROW(good.validate(comp));
  NlpParams bad_p = good;
  bad_p.p = Vector::Constant(5, 0.5);
  REQUIRE_THROWS_AS(bad_p.validate(comp), InvalidArgument);
  NlpParams bad_d = good;
  bad_d.d *= 0.1;  // Diag(d) >= C2 fails
  REQUIRE_THROWS_AS(bad_d.validate(comp), InvalidArgument);
  NlpParams bad_psi = good;
  bad_psi.psi = 1e6;  // C2 >= psi C1 fails
  REQUIRE_THROWS_AS(bad_psi.validate(comp), InvalidArgument);
}

TEST_CASE("certified bounds dominate the exact optimum") {
  std::mt19937_64 rng(347);
  for (int trial = 0; trial < 2; ++trial) {
    CovarianceInstance cov = random_cov(rng, 6, 2);
    MerspInstance inst = build_mersp(cov, 3);
    MerspInstance comp = complement(inst);
    const double opt = exhaustive_max(inst);
    for (Strategy st : {Strategy::Identity, Strategy::Diagonal, Strategy::Trace}) {
      for (bool augment : {false, true}) {
        NlpBoundOptions opts;
        opts.strategy = st;
        opts.augment = augment;
        opts.gamma_grid = 8;
        if (augment) opts.psi = psi_star(cov, PsiMode::Complementary).safe_value();
        BoundResult res = nlp_bound(comp, opts);
        REQUIRE(res.value >= opt - 1e-6);
        REQUIRE(res.fw_gap >= 0.0);
      }
    }
    // augmented original orientation
    NlpBoundOptions orig_opts;
    orig_opts.strategy = Strategy::Identity;
    orig_opts.augment = true;
    orig_opts.psi = psi_star(cov, PsiMode::Original).safe_value();
    REQUIRE(nlp_bound(inst, orig_opts).value >= opt - 1e-6);
  }
}

TEST_CASE("plain bound requires the dominance orientation") {
  std::mt19937_64 rng(349);
  MerspInstance inst = build_mersp(random_cov(rng, 5, 2), 2);
  NlpBoundOptions opts;
  opts.strategy = Strategy::Identity;
  REQUIRE_THROWS_AS(nlp_bound(inst, opts), IllPosed);  // C2 >= C1 fails here
}

TEST_CASE("augmentation does not help when the cross block is rank deficient") {
  std::mt19937_64 rng(353);
  // t < n forces rank(C[N,T]) < n, so the complementary scaling limit is 1
  CovarianceInstance cov = random_cov(rng, 6, 2);
  MerspInstance comp = complement(build_mersp(cov, 3));
  NlpBoundOptions plain;
  plain.strategy = Strategy::Identity;
  NlpBoundOptions aug = plain;
  aug.augment = true;
  aug.psi = psi_star(cov, PsiMode::Complementary).safe_value();
  const double v_plain = nlp_bound(comp, plain).value;
  const double v_aug = nlp_bound(comp, aug).value;
  REQUIRE(std::abs(v_plain - v_aug) <= 2e-6);
}

TEST_CASE("augmented bound dominates the plain bound") {
  std::mt19937_64 rng(359);
  for (int trial = 0; trial < 3; ++trial) {
    CovarianceInstance cov = random_cov(rng, 6, 2);
    MerspInstance comp = complement(build_mersp(cov, 2));
    NlpBoundOptions plain;
    plain.strategy = Strategy::Identity;
    NlpBoundOptions aug = plain;
    aug.augment = true;
    REQUIRE(nlp_bound(comp, aug).value <= nlp_bound(comp, plain).value + 2e-6);
  }
}

TEST_CASE("first half of the objective is nonincreasing in psi") {
  std::mt19937_64 rng(367);
  CovarianceInstance cov = random_cov(rng, 5, 2);
  MerspInstance inst = build_mersp(cov, 2);
  NlpParams params = identity_params(inst, 1.0);
  // admissible interval for the monotonicity statement
  const Vector inv_sqrt_d = params.d.cwiseSqrt().cwiseInverse();
  const double lim = lambda_max(inst.c1().conjugate_by_diag(inv_sqrt_d));
  Vector x_frac = Vector::Constant(5, 2.0 / 5.0);
  Vector x_bin = indicator(5, {0, 1});
  double prev_frac = 1e300;
  double prev_bin = 1e300;
  for (int k = 1; k <= 5; ++k) {
    const double psi = lim * k / 6.0;
    const double v_frac = nlp_f1_value(inst, params, x_frac, psi);
    const double v_bin = nlp_f1_value(inst, params, x_bin, psi);
    REQUIRE(v_frac <= prev_frac + 1e-9);
    if (prev_frac < 1e300) {
      REQUIRE(prev_frac - v_frac > 1e-9);  // strictly decreasing off binary
    }
    REQUIRE(v_bin <= prev_bin + 1e-9);
    prev_frac = v_frac;
    prev_bin = v_bin;
  }
}

TEST_CASE("objective passes a concavity smoke test") {
  std::mt19937_64 rng(373);
  CovarianceInstance cov = random_cov(rng, 5, 2);
  MerspInstance comp = complement(build_mersp(cov, 2));
  NlpObjective obj(comp, identity_params(comp, 1.0));
  CappedSimplex region(5, 2.0);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Vector x = project(mersp_test::standard_normal(rng, 5, 1), region);
    Vector y = project(mersp_test::standard_normal(rng, 5, 1), region);
    const double lam = ud(rng);
    const double lhs = obj.value(lam * x + (1.0 - lam) * y);
    REQUIRE(lhs >= lam * obj.value(x) + (1.0 - lam) * obj.value(y) - 1e-9);
  }
}

TEST_CASE("complementary bound dominates the spectral bound when t <= s") {
  std::mt19937_64 rng(379);
  for (int trial = 0; trial < 3; ++trial) {
    CovarianceInstance cov = random_cov(rng, 6, 2);
    MerspInstance inst = build_mersp(cov, 3);  // t = 2 <= s = 3
    const double spec = minimize_spectral(inst).value;
    MerspInstance comp = complement(inst);
    NlpBoundOptions opts;
    opts.strategy = Strategy::Identity;
    REQUIRE(nlp_bound(comp, opts).value <= spec + 2e-6);
  }
}
