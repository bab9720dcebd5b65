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

#include <random>

#include "mersp/instance.hpp"
#include "mersp/sym_matrix.hpp"

namespace mersp_test {

inline mersp::Matrix standard_normal(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> nd(0.0, 1.0);
  mersp::Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = nd(rng);
  }
  return m;
}

// Seeded positive definite Gram matrix G^T G + ridge * I.
inline mersp::SymMatrix random_pd(std::mt19937_64& rng, int n,
                                  double ridge = 1e-3) {
  mersp::Matrix g = standard_normal(rng, n, n);
  return mersp::SymMatrix(g.transpose() * g +
                          ridge * mersp::Matrix::Identity(n, n));
}

// Calls fn on every size-k subset of {0..n-1} in lexicographic order.
template <typename Fn>
void for_each_subset(int n, int k, Fn&& fn) {
  mersp::IndexSet s(k);
  for (int i = 0; i < k; ++i) s[i] = i;
  while (true) {
    fn(const_cast<const mersp::IndexSet&>(s));
    int i = k - 1;
    while (i >= 0 && s[i] == n - k + i) --i;
    if (i < 0) break;
    ++s[i];
    for (int j = i + 1; j < k; ++j) s[j] = s[j - 1] + 1;
  }
}

// The worked 3x3 covariance used across the test suite: two observables,
// one target, identity observable block, unit cross-covariances.
inline mersp::CovarianceInstance example_cov3() {
  mersp::Matrix c(3, 3);
  c << 1, 0, 1, 0, 1, 1, 1, 1, 2;
  return mersp::CovarianceInstance(mersp::SymMatrix(c), 2, 1);
}

}  // namespace mersp_test
