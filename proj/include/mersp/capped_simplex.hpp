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
#include <functional>
#include <limits>
#include <vector>

#include "mersp/errors.hpp"
#include "mersp/sym_matrix.hpp"

namespace mersp {

/// Feasible region {x in [lower, 1]^n : sum x = s}. The floor keeps
/// gradients of log-determinant objectives finite; certificates are still
/// evaluated against the unfloored box, so they cover the whole region.
struct CappedSimplex {
  int n;
  double s;
  double lower;

  explicit CappedSimplex(int n_, double s_, double lower_ = 1e-9)
      : n(n_), s(s_), lower(lower_) {
    if (n < 1 || !(s <= n) || !(lower * n <= s) || !(lower > 0.0) ||
        !(lower < s / n)) {
      throw InvalidArgument("CappedSimplex: need 0 < lower < s/n and s <= n");
    }
  }
};

/// Euclidean projection onto the region: clamp(y - tau, lower, 1) with the
/// shift tau found by bisection, then an exact mass fix on the free
/// coordinates.
inline Vector project(const Vector& y, const CappedSimplex& region) {
  if (y.size() != region.n) throw InvalidArgument("project: dimension mismatch");
  const double lo_bound = region.lower;
  auto mass = [&](double tau) {
    double sum = 0.0;
    for (int i = 0; i < region.n; ++i) {
      sum += std::clamp(y(i) - tau, lo_bound, 1.0);
    }
    return sum;
  };
  double lo = y.minCoeff() - 1.0;        // mass = n >= s
  double hi = y.maxCoeff() - lo_bound;   // mass = n * lower <= s
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mass(mid) >= region.s) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double tau = 0.5 * (lo + hi);
  Vector x(region.n);
  for (int i = 0; i < region.n; ++i) x(i) = std::clamp(y(i) - tau, lo_bound, 1.0);
  // distribute any residual mass over the strictly interior coordinates
  for (int pass = 0; pass < 10; ++pass) {
    const double err = region.s - x.sum();
    if (std::abs(err) <= 1e-14 * std::max(1.0, region.s)) break;
    std::vector<int> free;
    for (int i = 0; i < region.n; ++i) {
      if (x(i) > lo_bound && x(i) < 1.0) free.push_back(i);
    }
    if (free.empty()) break;
    const double shift = err / static_cast<double>(free.size());
    for (int i : free) x(i) = std::clamp(x(i) + shift, lo_bound, 1.0);
  }
  return x;
}

/// Linearization gap of a concave objective against the vertices of the
/// unfloored region: max over vertices v of g^T (v - x). For integer s a
/// vertex takes the s largest gradient coordinates; a fractional remainder
/// is split onto the next one.
inline double frank_wolfe_gap(const Vector& grad, const Vector& x, double s) {
  std::vector<double> g(grad.data(), grad.data() + grad.size());
  std::sort(g.begin(), g.end(), std::greater<double>());
  const int whole = static_cast<int>(std::floor(s + 1e-12));
  double vertex = 0.0;
  for (int i = 0; i < whole && i < static_cast<int>(g.size()); ++i) vertex += g[i];
  const double frac = s - whole;
  if (frac > 1e-12 && whole < static_cast<int>(g.size())) vertex += frac * g[whole];
  return vertex - grad.dot(x);
}

struct SolveReport {
  Vector x_hat;
  double value = 0.0;
  double fw_gap = 0.0;
  double certified_upper = 0.0;  // value + fw_gap, valid by concavity
  int iterations = 0;
  bool converged = false;
};

struct SolverOptions {
  double gap_tol = 1e-6;
  int max_iterations = 5000;
  double armijo_sigma = 1e-4;
  double backtrack = 0.5;
};

/// Objective oracle: returns the value at x and fills *grad when non-null.
using Oracle = std::function<double(const Vector&, Vector*)>;

/// Maximizes a concave oracle over the region by projected gradient ascent
/// with Armijo backtracking and Barzilai-Borwein step seeding. Stops when
/// the linearization gap certifies the current value within gap_tol.
inline SolveReport maximize(const Oracle& f, const CappedSimplex& region,
                            const SolverOptions& opts = {}) {
  const double inf = std::numeric_limits<double>::infinity();
  Vector x = project(Vector::Constant(region.n, region.s / region.n), region);
  Vector g(region.n);
  double fx = f(x, &g);
  if (!std::isfinite(fx) || !g.allFinite()) {
    throw NumericalFailure("maximize: non-finite objective at the start point");
  }
  auto value_at = [&](const Vector& p) {
    try {
      const double v = f(p, nullptr);
      return std::isfinite(v) ? v : -inf;
    } catch (const Error&) {
      return -inf;
    }
  };

  SolveReport rep;
  double alpha = 1.0 / std::max(1.0, g.norm());
  double gap = frank_wolfe_gap(g, x, region.s);
  int iter = 0;
  while (iter < opts.max_iterations && gap > opts.gap_tol) {
    ++iter;
    Vector xt;
    double ft = -inf;
    bool accepted = false;
    double a = alpha;
    for (int bt = 0; bt < 60; ++bt) {
      xt = project(x + a * g, region);
      const Vector d = xt - x;
      if (d.norm() <= 1e-16 * (1.0 + x.norm())) {
        a *= opts.backtrack;
        continue;
      }
      ft = value_at(xt);
      if (ft >= fx + opts.armijo_sigma * g.dot(d)) {
        accepted = true;
        break;
      }
      a *= opts.backtrack;
    }
    if (!accepted) break;  // no progress possible at this scale

    Vector gt(region.n);
    const double ft_full = f(xt, &gt);
    if (!std::isfinite(ft_full) || !gt.allFinite()) {
      throw NumericalFailure("maximize: non-finite objective at an iterate");
    }
    const Vector step = xt - x;
    const Vector dg = gt - g;
    const double curv = -step.dot(dg);
    alpha = curv > 0.0 ? step.squaredNorm() / curv : a * 2.0;
    alpha = std::clamp(alpha, 1e-12, 1e12);
    x = xt;
    fx = ft_full;
    g = gt;
    gap = frank_wolfe_gap(g, x, region.s);
  }

  rep.x_hat = x;
  rep.value = fx;
  rep.fw_gap = std::max(gap, 0.0);
  rep.certified_upper = rep.value + rep.fw_gap;
  rep.iterations = iter;
  rep.converged = gap <= opts.gap_tol;
  return rep;
}

}  // namespace mersp
