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
#include "mersp/capped_simplex.hpp"

using namespace mersp;

TEST_CASE("projection of a symmetric point") {
  CappedSimplex region(3, 2.0, 1e-10);
  Vector y = Vector::Constant(3, 0.9);
  Vector x = project(y, region);
  for (int i = 0; i < 3; ++i) REQUIRE(x(i) == Approx(2.0 / 3.0).margin(1e-10));
  REQUIRE(x.sum() == Approx(2.0).margin(1e-12));
}

TEST_CASE("projection keeps feasible points") {
  CappedSimplex region(3, 2.0, 1e-10);
  Vector y(3);
  y << 0.5, 0.7, 0.8;
  REQUIRE((project(y, region) - y).norm() < 1e-10);
}

TEST_CASE("projection clamps a dominant coordinate") {
  CappedSimplex region(3, 1.0, 1e-10);
  Vector y(3);
  y << 10.0, 0.0, 0.0;
  Vector x = project(y, region);
  REQUIRE(x(0) == Approx(1.0).margin(1e-8));
  REQUIRE(x(1) == Approx(1e-10).margin(1e-11));
  REQUIRE(x(2) == Approx(1e-10).margin(1e-11));
  REQUIRE(x.sum() == Approx(1.0).margin(1e-12));
}

TEST_CASE("projection is idempotent") {
  std::mt19937_64 rng(101);
  CappedSimplex region(8, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    Vector y = 3.0 * mersp_test::standard_normal(rng, 8, 1);
    Vector p = project(y, region);
    REQUIRE((project(p, region) - p).norm() <= 1e-12);
    REQUIRE(p.sum() == Approx(3.0).margin(1e-12));
    REQUIRE(p.minCoeff() >= region.lower - 1e-18);
    REQUIRE(p.maxCoeff() <= 1.0 + 1e-18);
  }
}

TEST_CASE("region validation") {
  REQUIRE_THROWS_AS(CappedSimplex(3, 4.0), InvalidArgument);
  REQUIRE_THROWS_AS(CappedSimplex(3, 1.0, 0.5), InvalidArgument);
}

TEST_CASE("maximize recovers the unconstrained optimum of a quadratic") {
  CappedSimplex region(4, 2.0);
  Vector c = Vector::Constant(4, 0.5);
  Oracle f = [&](const Vector& x, Vector* grad) {
    if (grad) *grad = 2.0 * (c - x);
    return -(x - c).squaredNorm();
  };
  SolveReport rep = maximize(f, region);
  REQUIRE(rep.converged);
  REQUIRE((rep.x_hat - c).norm() < 1e-6);
  REQUIRE(rep.fw_gap <= 1e-8);
  REQUIRE(rep.certified_upper >= 0.0);
}

TEST_CASE("maximize solves linear objectives to a vertex") {
  CappedSimplex region(5, 2.0);
  Vector c(5);
  c << 5.0, 1.0, 4.0, 2.0, 3.0;
  Oracle f = [&](const Vector& x, Vector* grad) {
    if (grad) *grad = c;
    return c.dot(x);
  };
  SolveReport rep = maximize(f, region);
  // top two coordinates of c are 5 and 4
  REQUIRE(rep.certified_upper == Approx(9.0).margin(2e-6));
  REQUIRE(rep.x_hat(0) == Approx(1.0).margin(1e-6));
  REQUIRE(rep.x_hat(2) == Approx(1.0).margin(1e-6));
}

TEST_CASE("maximize finds the symmetric optimum of a log objective") {
  const int n = 6;
  CappedSimplex region(n, n / 2.0);
  Oracle f = [](const Vector& x, Vector* grad) {
    if (grad) *grad = x.cwiseInverse();
    return x.array().log().sum();
  };
  SolveReport rep = maximize(f, region);
  REQUIRE(rep.value == Approx(n * std::log(0.5)).margin(1e-6));
  for (int i = 0; i < n; ++i) REQUIRE(rep.x_hat(i) == Approx(0.5).margin(1e-5));
}

TEST_CASE("certificates dominate closed-form maxima of concave quadratics") {
  std::mt19937_64 rng(103);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 6;
    CappedSimplex region(n, 2.5);
    // curvature plus a feasible maximizer: the true max is exactly b
    Vector q = mersp_test::standard_normal(rng, n, 1).array().abs() + 0.1;
    Vector c = project(mersp_test::standard_normal(rng, n, 1), region);
    const double b = 1.7;
    Oracle f = [&](const Vector& x, Vector* grad) {
      if (grad) *grad = -2.0 * q.cwiseProduct(x - c);
      return b - (x - c).cwiseProduct(q.cwiseSqrt()).squaredNorm();
    };
    SolveReport rep = maximize(f, region);
    REQUIRE(rep.certified_upper >= b - 1e-12);
    REQUIRE(rep.certified_upper - b <= 2e-6);
  }
}

TEST_CASE("maximize rejects non-finite objectives") {
  CappedSimplex region(3, 1.5);
  Oracle f = [](const Vector&, Vector* grad) {
    if (grad) grad->setZero(3);
    return std::nan("");
  };
  REQUIRE_THROWS_AS(maximize(f, region), NumericalFailure);
}
