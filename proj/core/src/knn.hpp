#pragma once

#include <algorithm>
#include <cstddef>
#include <utility>
#include <vector>

#include "momap/momap.hpp"
#include "momap/parallel.hpp"

namespace momap::detail {

/// For each point, the indices (into `points`) of its k nearest other points
/// ordered by (squared distance, index). Brute force; exact ties resolve to
/// the lower index.
inline std::vector<std::vector<std::size_t>> nearest_neighbors(
    const std::vector<Vec3>& points, std::size_t k, unsigned threads = 1) {
  const std::size_t n = points.size();
  const std::size_t kk = std::min(k, n == 0 ? 0 : n - 1);
  std::vector<std::vector<std::size_t>> out(n);
  parallel_for(n, threads, [&](std::size_t i) {
    std::vector<std::pair<double, std::size_t>> cand;
    cand.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) cand.emplace_back((points[i] - points[j]).squaredNorm(), j);
    }
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(kk),
                      cand.end());
    out[i].reserve(kk);
    for (std::size_t r = 0; r < kk; ++r) out[i].push_back(cand[r].second);
  });
  return out;
}

}  // namespace momap::detail
