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
#include <optional>
#include <utility>
#include <vector>

#include "mersp/errors.hpp"
#include "mersp/instance.hpp"
#include "mersp/parallel.hpp"

namespace mersp {

enum class SearchMethod { Greedy, LocalSearch, Exact };

struct SubsetSolution {
  IndexSet s;  // sorted ascending
  double value = 0.0;
  SearchMethod method = SearchMethod::Greedy;
};

namespace detail {

// subset objective or nothing when a principal submatrix is singular
inline std::optional<double> try_subset_value(const MerspInstance& inst,
                                              const IndexSet& s) {
  try {
    return subset_value(inst, s);
  } catch (const NotPositiveDefinite&) {
    return std::nullopt;
  }
}

inline double binomial_guarded(int n, int k, double cap) {
  double c = 1.0;
  for (int i = 0; i < k; ++i) {
    c *= static_cast<double>(n - i) / static_cast<double>(i + 1);
    if (c > cap) return c;
  }
  return c;
}

// lexicographic combination with the given rank (combinatorial number system)
inline IndexSet combination_at_rank(int n, int k, double rank) {
  IndexSet s(k);
  int from = 0;
  for (int pos = 0; pos < k; ++pos) {
    for (int v = from; v <= n - k + pos; ++v) {
      const double block = binomial_guarded(n - v - 1, k - pos - 1, 1e18);
      if (rank < block) {
        s[pos] = v;
        from = v + 1;
        break;
      }
      rank -= block;
    }
  }
  return s;
}

inline bool next_combination(IndexSet& s, int n) {
  const int k = static_cast<int>(s.size());
  int i = k - 1;
  while (i >= 0 && s[i] == n - k + i) --i;
  if (i < 0) return false;
  ++s[i];
  for (int j = i + 1; j < k; ++j) s[j] = s[j - 1] + 1;
  return true;
}

}  // namespace detail

/// Forward selection: repeatedly add the index that maximizes the objective
/// of the grown subset, skipping additions whose principal submatrices go
/// singular; ties break to the smallest index.
inline SubsetSolution greedy(const MerspInstance& inst) {
  IndexSet s;
  for (int size = 1; size <= inst.s(); ++size) {
    int best_i = -1;
    double best_v = 0.0;
    for (int i = 0; i < inst.n(); ++i) {
      if (std::binary_search(s.begin(), s.end(), i)) continue;
      IndexSet cand = s;
      cand.insert(std::lower_bound(cand.begin(), cand.end(), i), i);
      const auto v = detail::try_subset_value(inst, cand);
      if (v && (best_i < 0 || *v > best_v)) {
        best_i = i;
        best_v = *v;
      }
    }
    if (best_i < 0) {
      throw Infeasible("greedy: no feasible index to add");
    }
    s.insert(std::lower_bound(s.begin(), s.end(), best_i), best_i);
  }
  const double value = subset_value(inst, s);
  return SubsetSolution{std::move(s), value, SearchMethod::Greedy};
}

/// First-improvement 1-swap hill climbing with a deterministic scan order
/// (ascending member index, then ascending candidate index); improvements
/// below 1e-10 do not count.
inline SubsetSolution local_search(const MerspInstance& inst,
                                   const SubsetSolution& start) {
  IndexSet s = start.s;
  std::sort(s.begin(), s.end());
  double value = subset_value(inst, s);
  bool improved = true;
  while (improved) {
    improved = false;
    for (std::size_t a = 0; a < s.size() && !improved; ++a) {
      for (int j = 0; j < inst.n() && !improved; ++j) {
        if (std::binary_search(s.begin(), s.end(), j)) continue;
        IndexSet cand = s;
        cand[a] = j;
        std::sort(cand.begin(), cand.end());
        const auto v = detail::try_subset_value(inst, cand);
        if (v && *v > value + 1e-10) {
          s = std::move(cand);
          value = *v;
          improved = true;
        }
      }
    }
  }
  return SubsetSolution{std::move(s), value, SearchMethod::LocalSearch};
}

/// Exact maximum over all size-s subsets with well-posed submatrices; ties
/// go to the lexicographically smallest subset. The enumeration is chunked
/// for concurrent evaluation with a deterministic ordered reduction.
inline SubsetSolution brute_force(const MerspInstance& inst, int threads = 0) {
  const int n = inst.n();
  const int k = inst.s();
  const double count = detail::binomial_guarded(n, k, 2e6);
  if (count > 1e6) {
    throw TooLarge("brute_force: more than 1e6 subsets");
  }
  const long total = static_cast<long>(std::llround(count));
  const int chunks = std::min<long>(64, std::max<long>(1, total / 512));
  const long per = (total + chunks - 1) / chunks;

  struct Best {
    bool found = false;
    IndexSet s;
    double value = -1e300;
  };
  auto scan_chunk = [&](int c) {
    const long lo = static_cast<long>(c) * per;
    const long hi = std::min(total, lo + per);
    Best best;
    if (lo >= hi) return best;
    IndexSet s = detail::combination_at_rank(n, k, static_cast<double>(lo));
    for (long r = lo; r < hi; ++r) {
      const auto v = detail::try_subset_value(inst, s);
      if (v && (!best.found || *v > best.value)) {
        best.found = true;
        best.s = s;
        best.value = *v;
      }
      if (!detail::next_combination(s, n)) break;
    }
    return best;
  };
  auto bests = parallel_map(chunks, scan_chunk, threads);
  Best overall;
  for (const Best& b : bests) {
    if (b.found && (!overall.found || b.value > overall.value)) overall = b;
  }
  if (!overall.found) {
    throw Infeasible("brute_force: no well-posed subset");
  }
  return SubsetSolution{std::move(overall.s), overall.value, SearchMethod::Exact};
}

}  // namespace mersp
