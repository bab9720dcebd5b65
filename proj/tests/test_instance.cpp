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
#include "mersp/generate.hpp"
#include "mersp/instance.hpp"

using namespace mersp;
using mersp_test::example_cov3;
using mersp_test::for_each_subset;
using mersp_test::random_pd;

namespace {

CovarianceInstance random_cov(std::mt19937_64& rng, int n, int t) {
  return CovarianceInstance(random_pd(rng, n + t), n, t);
}

// Independent evaluation of ldet C1[S,S] - ldet C2[S,S] via Eigen's own
// Cholesky, bypassing the library's ldet path.
double direct_objective(const MerspInstance& inst, const IndexSet& s) {
  auto ld = [&](const SymMatrix& m) {
    Matrix sub(s.size(), s.size());
    for (std::size_t a = 0; a < s.size(); ++a) {
      for (std::size_t b = 0; b < s.size(); ++b) sub(a, b) = m(s[a], s[b]);
    }
    Eigen::LLT<Matrix> llt(sub);
    return 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
  };
  return ld(inst.c1()) - ld(inst.c2()) + inst.offset();
}

}  // namespace

TEST_CASE("build_mersp on the worked 3x3 covariance") {
  MerspInstance inst = build_mersp(example_cov3(), 1);
  REQUIRE((inst.c1().m() - Matrix::Identity(2, 2)).norm() < 1e-14);
  REQUIRE(inst.c2()(0, 0) == Approx(0.5));
  REQUIRE(inst.c2()(0, 1) == Approx(-0.5));
  REQUIRE(inst.c2()(1, 1) == Approx(0.5));
  REQUIRE(inst.offset() == 0.0);
  REQUIRE(objective(inst, {0}) == Approx(std::log(2.0)).margin(1e-12));
}

TEST_CASE("zero cross-covariance collapses the conditional block") {
  Matrix c = Matrix::Identity(4, 4);
  c(0, 1) = c(1, 0) = 0.3;
  CovarianceInstance cov(SymMatrix(c), 3, 1);
  MerspInstance inst = build_mersp(cov, 2);
  REQUIRE((inst.c1().m() - inst.c2().m()).norm() < 1e-14);
  REQUIRE(objective(inst, {0, 2}) == Approx(0.0).margin(1e-12));
}

TEST_CASE("identity covariance gives zero objective for every subset") {
  CovarianceInstance cov(SymMatrix::identity(5), 3, 2);
  MerspInstance inst = build_mersp(cov, 2);
  for_each_subset(3, 2, [&](const IndexSet& s) {
    REQUIRE(objective(inst, s) == Approx(0.0).margin(1e-12));
  });
}

TEST_CASE("build_mersp validates the cardinality") {
  REQUIRE_THROWS_AS(build_mersp(example_cov3(), 0), InvalidArgument);
  REQUIRE_THROWS_AS(build_mersp(example_cov3(), 2), InvalidArgument);
}

TEST_CASE("objective matches an independent two-Cholesky evaluation") {
  std::mt19937_64 rng(41);
  CovarianceInstance cov = random_cov(rng, 6, 2);
  MerspInstance inst = build_mersp(cov, 3);
  for_each_subset(6, 3, [&](const IndexSet& s) {
    REQUIRE(objective(inst, s) == Approx(direct_objective(inst, s)).margin(1e-10));
  });
}

TEST_CASE("objective flags singular principal submatrices") {
  SymMatrix ones(Matrix::Ones(3, 3));
  MerspInstance inst(ones, SymMatrix::identity(3), 2, 0.0, "original");
  REQUIRE_THROWS_AS(objective(inst, {0, 1}), NotPositiveDefinite);
  REQUIRE_THROWS_AS(objective(inst, {0}), InvalidArgument);
}

TEST_CASE("uniform scaling leaves the objective unchanged") {
  std::mt19937_64 rng(43);
  MerspInstance inst = build_mersp(random_cov(rng, 5, 2), 2);
  MerspInstance same = scale(inst, 3.7, 3.7);
  MerspInstance identity = scale(inst, 1.0, 1.0);
  MerspInstance two = scale(inst, 2.0, 3.0);
  for_each_subset(5, 2, [&](const IndexSet& s) {
    const double base = objective(inst, s);
    REQUIRE(objective(same, s) == Approx(base).margin(1e-10));
    REQUIRE(objective(identity, s) == Approx(base).margin(1e-12));
    REQUIRE(objective(two, s) == Approx(base).margin(1e-10));
  });
  REQUIRE_THROWS_AS(scale(inst, 0.0, 1.0), InvalidArgument);
}

TEST_CASE("complement maps subsets to their complements") {
  Vector d1(3), d2(3);
  d1 << 4, 1, 1;
  d2 << 2, 1, 1;
  MerspInstance inst(SymMatrix::diagonal(d1), SymMatrix::diagonal(d2), 1, 0.0,
                     "original");
  MerspInstance comp = complement(inst);
  REQUIRE(comp.s() == 2);
  REQUIRE(comp.offset() == Approx(std::log(2.0)));

  // objective(comp, N \ S) == objective(inst, S)
  for (int i = 0; i < 3; ++i) {
    IndexSet s{i};
    IndexSet rest;
    for (int j = 0; j < 3; ++j) {
      if (j != i) rest.push_back(j);
    }
    REQUIRE(objective(comp, rest) == Approx(objective(inst, s)).margin(1e-10));
  }

  MerspInstance twice = complement(comp);
  for (int i = 0; i < 3; ++i) {
    REQUIRE(objective(twice, {i}) == Approx(objective(inst, {i})).margin(1e-10));
  }
}

TEST_CASE("complement preserves the optimum on seeded PD instances") {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 6;
    const int s = 2 + static_cast<int>(rng() % 3);
    MerspInstance inst = build_mersp(random_cov(rng, n, 2), s);
    MerspInstance comp = complement(inst);
    double best = -1e300;
    double best_comp = -1e300;
    for_each_subset(n, s, [&](const IndexSet& sub) {
      best = std::max(best, objective(inst, sub));
    });
    for_each_subset(n, n - s, [&](const IndexSet& sub) {
      best_comp = std::max(best_comp, objective(comp, sub));
    });
    REQUIRE(best_comp == Approx(best).margin(1e-9));
  }
}

TEST_CASE("complement requires positive definite matrices") {
  MerspInstance inst(SymMatrix(Matrix::Ones(3, 3)), SymMatrix::identity(3), 1,
                     0.0, "original");
  REQUIRE_THROWS_AS(complement(inst), NotPositiveDefinite);
}

TEST_CASE("diagonal scaling leaves every subset objective unchanged") {
  MerspInstance inst = build_mersp(example_cov3(), 1);
  Vector psi(2);
  psi << 2.0, 3.0;
  MerspInstance scaled = apply_diag_scaling(inst, psi);
  REQUIRE(objective(scaled, {0}) == Approx(std::log(2.0)).margin(1e-12));

  std::mt19937_64 rng(53);
  MerspInstance rnd = build_mersp(random_cov(rng, 6, 2), 3);
  Vector rpsi = mersp_test::standard_normal(rng, 6, 1).array().exp();
  MerspInstance rscaled = apply_diag_scaling(rnd, rpsi);
  for_each_subset(6, 3, [&](const IndexSet& s) {
    REQUIRE(objective(rscaled, s) == Approx(objective(rnd, s)).margin(1e-9));
  });

  Vector unit = Vector::Ones(2);
  MerspInstance same = apply_diag_scaling(inst, unit);
  REQUIRE((same.c1().m() - inst.c1().m()).norm() == 0.0);
  Vector bad(2);
  bad << 1.0, 0.0;
  REQUIRE_THROWS_AS(apply_diag_scaling(inst, bad), InvalidArgument);
}

TEST_CASE("well-posedness condition on known cases") {
  REQUIRE_FALSE(well_posedness_condition(example_cov3()));
  // the residual matrix of the worked example is the 1x1 zero matrix
  REQUIRE(target_residual_matrix(example_cov3()).m().norm() < 1e-14);

  Matrix c = Matrix::Identity(4, 4);
  CovarianceInstance cross_zero(SymMatrix(c), 3, 1);
  REQUIRE(well_posedness_condition(cross_zero));

  std::mt19937_64 rng(59);
  for (int trial = 0; trial < 5; ++trial) {
    REQUIRE(well_posedness_condition(random_cov(rng, 5, 2)));
  }
}

TEST_CASE("psi_star equals one when the cross block vanishes") {
  CovarianceInstance cov(SymMatrix::identity(4), 3, 1);
  REQUIRE(psi_star(cov, PsiMode::Original).value == Approx(1.0).margin(1e-12));
  REQUIRE(psi_star(cov, PsiMode::Complementary).value ==
          Approx(1.0).margin(1e-12));
}

TEST_CASE("complementary psi_star is one for rank-deficient cross blocks") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 5; ++trial) {
    // t < n forces rank(C[N,T]) <= t < n
    CovarianceInstance cov = random_cov(rng, 6, 2);
    REQUIRE(psi_star(cov, PsiMode::Complementary).value ==
            Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("the two closed forms of the original-mode scaling agree when C > 0") {
  std::mt19937_64 rng(67);
  for (int trial = 0; trial < 5; ++trial) {
    CovarianceInstance cov = random_cov(rng, 5, 2);
    const double direct = psi_star(cov, PsiMode::Original).value;
    const SymMatrix bt_inv_sqrt =
        detail::inv_sqrt_pd(cov.conditional_observable_block(), "test");
    const double lam = lambda_max(SymMatrix(
        bt_inv_sqrt.m() * cov.observable_block().m() * bt_inv_sqrt.m()));
    REQUIRE(direct == Approx(1.0 / lam).margin(1e-9));
  }
}

TEST_CASE("psi_star yields a feasible scaling in both orientations") {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 5; ++trial) {
    CovarianceInstance cov = random_cov(rng, 5, 2);
    MerspInstance inst = build_mersp(cov, 2);
    const double psi_orig = psi_star(cov, PsiMode::Original).safe_value();
    REQUIRE(is_psd(inst.c2() - psi_orig * inst.c1(), false));
    MerspInstance comp = complement(inst);
    const double psi_comp = psi_star(cov, PsiMode::Complementary).safe_value();
    REQUIRE(is_psd(comp.c2() - psi_comp * comp.c1(), false));
    // complementary scaling is never below one
    REQUIRE(psi_star(cov, PsiMode::Complementary).value >= 1.0 - 1e-9);
  }
}

TEST_CASE("generic max_psi agrees with the closed form") {
  std::mt19937_64 rng(73);
  CovarianceInstance cov = generate(InstanceKind::SingularCond7, 6, 2, 6, 123);
  MerspInstance inst = build_mersp(cov, 2);
  const double generic = max_psi(inst.c1(), inst.c2());
  const double closed = psi_star(cov, PsiMode::Original).value;
  REQUIRE(generic == Approx(closed).margin(1e-8));

  CovarianceInstance pd = random_cov(rng, 5, 2);
  MerspInstance pinst = build_mersp(pd, 2);
  REQUIRE(max_psi(pinst.c1(), pinst.c2()) ==
          Approx(psi_star(pd, PsiMode::Original).value).margin(1e-8));
}

TEST_CASE("generated singular instances satisfy the stated properties") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    CovarianceInstance cov = generate(InstanceKind::SingularCond7, 8, 2, 7, seed);
    REQUIRE(well_posedness_condition(cov));
    REQUIRE(rank_psd(cov.c()) == 7);
    // rank splits across the observable block and the target residual
    REQUIRE(rank_psd(cov.c()) ==
            rank_psd(cov.observable_block()) +
                rank_psd(target_residual_matrix(cov)));
  }
}

TEST_CASE("generated PD instances are strictly positive definite") {
  CovarianceInstance cov = generate(InstanceKind::Pd, 8, 3, 0, 99);
  REQUIRE(is_psd(cov.c(), true));
}

TEST_CASE("max-psi generator dominates the plain singular generator") {
  const std::uint64_t seed = 2024;
  CovarianceInstance plain = generate(InstanceKind::SingularCond7, 8, 2, 7, seed);
  CovarianceInstance tuned = generate(InstanceKind::SingularMaxPsi, 8, 2, 7, seed);
  REQUIRE(psi_star(tuned, PsiMode::Original).value >=
          psi_star(plain, PsiMode::Original).value - 1e-12);
}

TEST_CASE("subset equivalence holds under the well-posedness condition") {
  CovarianceInstance cov = generate(InstanceKind::SingularCond7, 8, 2, 7, 7);
  EquivalenceReport rep = subset_equiv_check(cov, 1000, 5);
  REQUIRE(rep.trials == 1000);
  REQUIRE(rep.violations == 0);

  std::mt19937_64 rng(79);
  EquivalenceReport rep_pd = subset_equiv_check(random_cov(rng, 6, 2), 200, 5);
  REQUIRE(rep_pd.violations == 0);

  REQUIRE_THROWS_AS(subset_equiv_check(example_cov3(), 10, 1), InvalidArgument);
}

TEST_CASE("rank identity for the worked example") {
  // rank(C) = rank(C[N,N]) + rank(residual): 2 = 2 + 0
  CovarianceInstance cov = example_cov3();
  REQUIRE(rank_psd(cov.c()) == 2);
  REQUIRE(rank_psd(cov.observable_block()) == 2);
  REQUIRE(rank_psd(target_residual_matrix(cov)) == 0);
}
