#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "omm/hst.hpp"

namespace omm {

using DistanceFn = std::function<double(int, int)>;  // 0-based indices

inline void append_to(std::vector<PointId>& dst, std::vector<PointId>& src) {
  dst.insert(dst.end(), src.begin(), src.end());
  src.clear();
}

struct OracleResult {
  double cost = 0.0;
  std::vector<std::pair<int, int>> matching;  // 0-based index pairs
  const char* method = "";
};

// Exact minimum-weight perfect matching by subset dynamic programming.
// Hard cap at 20 points; larger inputs are refused rather than
// approximated.
inline OracleResult mwpm_bruteforce(int n, const DistanceFn& dist) {
  if (n % 2 != 0) throw std::invalid_argument("perfect matching needs an even set");
  if (n > 20) throw std::invalid_argument("brute-force oracle capped at 20 points");
  OracleResult res;
  res.method = "bitmask-dp";
  if (n == 0) return res;
  const std::uint32_t full = (n == 32) ? 0xffffffffu : ((1u << n) - 1);
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dp(full + 1, inf);
  std::vector<std::int32_t> choice(full + 1, -1);
  dp[0] = 0.0;
  for (std::uint32_t mask = 1; mask <= full; ++mask) {
    const int i = std::countr_zero(mask);
    if (((mask >> i) & 1u) == 0) continue;
    for (int j = i + 1; j < n; ++j) {
      if (((mask >> j) & 1u) == 0) continue;
      const std::uint32_t rest = mask ^ (1u << i) ^ (1u << j);
      if (dp[rest] == inf) continue;
      const double c = dp[rest] + dist(i, j);
      if (c < dp[mask]) {
        dp[mask] = c;
        choice[mask] = j;
      }
    }
  }
  res.cost = dp[full];
  std::uint32_t mask = full;
  while (mask) {
    const int i = std::countr_zero(mask);
    const int j = choice[mask];
    res.matching.emplace_back(i, j);
    mask ^= (1u << i) ^ (1u << static_cast<unsigned>(j));
  }
  return res;
}

// Consecutive pairing in sorted order; optimal on the line.
inline OracleResult mwpm_line(std::vector<double> xs) {
  if (xs.size() % 2 != 0) throw std::invalid_argument("perfect matching needs an even set");
  std::vector<int> idx(xs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return xs[a] < xs[b]; });
  OracleResult res;
  res.method = "line-consecutive";
  for (std::size_t k = 0; k + 1 < idx.size(); k += 2) {
    res.matching.emplace_back(idx[k], idx[k + 1]);
    res.cost += xs[idx[k + 1]] - xs[idx[k]];
  }
  return res;
}

// Bottom-up pairing on an ultrametric tree: at each node, child subtrees
// with an odd number of active leaves surface one escape each and floor
// of half of them are paired at the node's label. Odd sets yield the
// near-perfect optimum when allow_odd is set.
inline OracleResult mwpm_ultrametric(const HstTree& tree,
                                     const std::vector<PointId>& active,
                                     bool allow_odd = false) {
  if (active.size() % 2 != 0 && !allow_odd)
    throw std::invalid_argument("perfect matching needs an even set");
  OracleResult res;
  res.method = "ultrametric-inward";
  std::map<const HstNode*, std::vector<PointId>> escapes;
  // process nodes deepest-first
  std::vector<const HstNode*> order;
  for (PointId p : active) {
    const HstNode* n = tree.leaf_of(p);
    if (!n) throw std::out_of_range("active point has no leaf");
    escapes[n] = {p};
  }
  tree.for_each_node([&](HstNode* n) { order.push_back(n); });
  std::sort(order.begin(), order.end(),
            [](const HstNode* a, const HstNode* b) { return a->depth > b->depth; });
  std::map<PointId, int> index;
  for (std::size_t i = 0; i < active.size(); ++i) index[active[i]] = static_cast<int>(i);
  for (const HstNode* n : order) {
    if (n->is_leaf()) {
      if (auto it = escapes.find(n); it != escapes.end() && n->parent)
        append_to(escapes[n->parent], it->second);
      continue;
    }
    auto it = escapes.find(n);
    if (it == escapes.end()) continue;
    auto& list = it->second;
    while (list.size() >= 2) {
      const PointId a = list.back();
      list.pop_back();
      const PointId b = list.back();
      list.pop_back();
      res.matching.emplace_back(index[a], index[b]);
      res.cost += n->label;
    }
    if (!list.empty() && n->parent) append_to(escapes[n->parent], list);
  }
  return res;
}

inline double mst_cost(int n, const DistanceFn& dist) {
  if (n <= 1) return 0.0;
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<bool> used(n, false);
  best[0] = 0.0;
  double total = 0.0;
  for (int it = 0; it < n; ++it) {
    int v = -1;
    for (int i = 0; i < n; ++i)
      if (!used[i] && (v == -1 || best[i] < best[v])) v = i;
    used[v] = true;
    total += best[v];
    for (int i = 0; i < n; ++i)
      if (!used[i]) best[i] = std::min(best[i], dist(v, i));
  }
  return total;
}

}  // namespace omm
