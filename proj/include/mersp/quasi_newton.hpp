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
#include <functional>
#include <limits>

#include "mersp/errors.hpp"
#include "mersp/sym_matrix.hpp"

namespace mersp {

struct QuasiNewtonOptions {
  int max_iterations = 200;
  double grad_tol = 1e-6;
  double armijo_sigma = 1e-4;
  double backtrack = 0.5;
};

struct QuasiNewtonResult {
  Vector x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Dense BFGS minimizer with Armijo backtracking. The oracle returns the
/// value and fills *grad when non-null; non-finite trial values are treated
/// as rejected steps. Curvature pairs that fail s^T y > 0 are skipped.
inline QuasiNewtonResult bfgs_minimize(
    const std::function<double(const Vector&, Vector*)>& fn, Vector x0,
    const QuasiNewtonOptions& opts = {}) {
  const double inf = std::numeric_limits<double>::infinity();
  const int n = static_cast<int>(x0.size());
  Vector x = std::move(x0);
  Vector g(n);
  double fx = fn(x, &g);
  if (!std::isfinite(fx) || !g.allFinite()) {
    throw NumericalFailure("bfgs_minimize: non-finite objective at the start");
  }
  auto value_at = [&](const Vector& p) {
    try {
      const double v = fn(p, nullptr);
      return std::isfinite(v) ? v : inf;
    } catch (const Error&) {
      return inf;
    }
  };

  Matrix h = Matrix::Identity(n, n);
  QuasiNewtonResult res;
  int iter = 0;
  bool reset_used = false;
  while (iter < opts.max_iterations) {
    if (g.norm() <= opts.grad_tol * (1.0 + std::abs(fx))) {
      res.converged = true;
      break;
    }
    ++iter;
    Vector p = -(h * g);
    if (p.dot(g) >= 0.0) {
      h.setIdentity();
      p = -g;
    }
    double a = 1.0;
    bool accepted = false;
    Vector xn;
    double fxn = inf;
    for (int bt = 0; bt < 50; ++bt) {
      xn = x + a * p;
      fxn = value_at(xn);
      if (fxn <= fx + opts.armijo_sigma * a * g.dot(p)) {
        accepted = true;
        break;
      }
      a *= opts.backtrack;
    }
    if (!accepted) {
      if (!reset_used) {
        reset_used = true;
        h.setIdentity();
        continue;
      }
      break;
    }
    reset_used = false;
    Vector gn(n);
    const double f_full = fn(xn, &gn);
    if (!std::isfinite(f_full) || !gn.allFinite()) break;
    const Vector s = xn - x;
    const Vector y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Vector hy = h * y;
      h -= rho * (s * hy.transpose() + hy * s.transpose());
      h += rho * rho * (y.dot(hy)) * (s * s.transpose());
      h += rho * (s * s.transpose());
    }
    x = xn;
    fx = f_full;
    g = gn;
  }
  res.x = x;
  res.value = fx;
  res.iterations = iter;
  return res;
}

}  // namespace mersp
