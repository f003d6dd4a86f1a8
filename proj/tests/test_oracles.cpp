#include "doctest.h"
#include "omm/oracles.hpp"
#include "omm/rng.hpp"

#include <cmath>

using namespace omm;

namespace {

DistanceFn line_dist(const std::vector<double>& xs) {
  return [&xs](int a, int b) { return std::fabs(xs[a] - xs[b]); };
}

// random 2-HST with labels 2^top halving at every level
HstNode* random_hst(HstTree& tree, CounterRng& rng, int leaves, int top_scale) {
  HstNode* root = tree.make_internal(nullptr, top_scale,
                                     std::ldexp(1.0, top_scale), ClusterKey{});
  tree.set_root(root);
  std::vector<HstNode*> internals{root};
  std::int64_t key = 0;
  for (int p = 1; p <= leaves; ++p) {
    HstNode* host = internals[rng.next_below(internals.size())];
    if (host->scale > 1 && rng.next_bit()) {
      host = tree.make_internal(host, host->scale - 1,
                                std::ldexp(1.0, host->scale - 1),
                                ClusterKey{ClusterKey::Kind::carve, ++key, 0});
      internals.push_back(host);
    }
    tree.make_leaf(host, p, ClusterKey{ClusterKey::Kind::carve, ++key, 1});
  }
  return root;
}

}  // namespace

TEST_CASE("brute force on tiny hand instances") {
  std::vector<double> two = {0.0, 5.0};
  auto r2 = mwpm_bruteforce(2, line_dist(two));
  CHECK(r2.cost == 5.0);

  std::vector<double> four = {0.0, 1.0, 5.0, 6.0};
  auto r4 = mwpm_bruteforce(4, line_dist(four));
  CHECK(r4.cost == 2.0);  // enumerating all 3 pairings gives 2 via (0,1),(5,6)

  // unit square: two opposite sides
  std::vector<std::pair<double, double>> sq = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  auto d2 = [&](int a, int b) {
    const double dx = sq[a].first - sq[b].first, dy = sq[a].second - sq[b].second;
    return std::sqrt(dx * dx + dy * dy);
  };
  CHECK(mwpm_bruteforce(4, d2).cost == doctest::Approx(2.0));
}

TEST_CASE("brute force rejects odd and oversized sets") {
  CHECK_THROWS_AS(mwpm_bruteforce(3, line_dist({})), std::invalid_argument);
  CHECK_THROWS_AS(mwpm_bruteforce(22, line_dist({})), std::invalid_argument);
}

TEST_CASE("line oracle equals brute force exhaustively and at random") {
  // all even subsets of {1..12}
  for (std::uint32_t mask = 0; mask < (1u << 12); ++mask) {
    if (std::popcount(mask) % 2 || std::popcount(mask) == 0 ||
        std::popcount(mask) > 8)
      continue;
    std::vector<double> xs;
    for (int i = 0; i < 12; ++i)
      if (mask >> i & 1) xs.push_back(i + 1);
    auto lr = mwpm_line(xs);
    auto br = mwpm_bruteforce(static_cast<int>(xs.size()), line_dist(xs));
    CHECK(lr.cost == doctest::Approx(br.cost));
  }
  CounterRng rng(2024, Stream::instance, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> xs(2 * (1 + rng.next_below(5)));
    for (auto& x : xs) x = rng.next_unit() * 100;
    auto lr = mwpm_line(xs);
    auto br = mwpm_bruteforce(static_cast<int>(xs.size()), line_dist(xs));
    CHECK(lr.cost == doctest::Approx(br.cost));
  }
}

TEST_CASE("line oracle on the separated-pairs and doubled-integers instances") {
  CHECK(mwpm_line({1, 2, 3, 4}).cost == doctest::Approx(2.0));
  for (double w : {10.0, 1e6})
    CHECK(mwpm_line({0, 1, w, w + 1}).cost == doctest::Approx(2.0));
  // doubled interior points with single endpoints cost the full span;
  // doubling the endpoints too collapses the optimum to zero
  std::vector<double> xs;
  const int n = 6;
  for (int i = 1; i <= 2 * n; ++i) {
    xs.push_back(i);
    xs.push_back(i);
  }
  xs.push_back(0);
  xs.push_back(2 * n + 1);
  CHECK(mwpm_line(xs).cost == doctest::Approx(2.0 * n + 1));
  xs.push_back(0);
  xs.push_back(2 * n + 1);
  CHECK(mwpm_line(xs).cost == doctest::Approx(0.0));
}

TEST_CASE("ultrametric oracle: uniform tree and agreement with brute force") {
  {
    HstTree tree;
    HstNode* root = tree.make_internal(nullptr, 3, 8.0, ClusterKey{});
    tree.set_root(root);
    std::vector<PointId> active;
    for (PointId p = 1; p <= 10; ++p) {
      tree.make_leaf(root, p, ClusterKey{ClusterKey::Kind::carve, p, 0});
      active.push_back(p);
    }
    CHECK(mwpm_ultrametric(tree, active).cost == doctest::Approx(5 * 8.0));
  }
  {
    HstTree tree;
    HstNode* root = tree.make_internal(nullptr, 2, 4.0, ClusterKey{});
    tree.set_root(root);
    tree.make_leaf(root, 1, ClusterKey{ClusterKey::Kind::carve, 1, 0});
    tree.make_leaf(root, 2, ClusterKey{ClusterKey::Kind::carve, 2, 0});
    CHECK(mwpm_ultrametric(tree, {1, 2}).cost == 4.0);
  }
  CounterRng rng(7, Stream::instance, 5);
  for (int trial = 0; trial < 60; ++trial) {
    HstTree tree;
    const int leaves = 2 * (2 + static_cast<int>(rng.next_below(8)));
    random_hst(tree, rng, leaves, 6);
    std::vector<PointId> active(leaves);
    std::iota(active.begin(), active.end(), 1);
    auto ur = mwpm_ultrametric(tree, active);
    auto br = mwpm_bruteforce(leaves, [&](int a, int b) {
      return tree.distance(active[a], active[b]);
    });
    CHECK(ur.cost == doctest::Approx(br.cost));
    double recost = 0.0;
    for (auto [a, b] : ur.matching) recost += tree.distance(active[a], active[b]);
    CHECK(recost == doctest::Approx(ur.cost));
  }
}

TEST_CASE("mst oracle and the matching-below-mst ordering") {
  CHECK(mst_cost(1, line_dist({0.0})) == 0.0);
  std::vector<double> xs = {1, 2, 3, 4, 5, 6};
  CHECK(mst_cost(6, line_dist(xs)) == doctest::Approx(5.0));
  CounterRng rng(12, Stream::instance, 6);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> pts(2 * (1 + rng.next_below(6)));
    for (auto& x : pts) x = rng.next_unit() * 50;
    const double mst = mst_cost(static_cast<int>(pts.size()), line_dist(pts));
    const double mwpm = mwpm_bruteforce(static_cast<int>(pts.size()), line_dist(pts)).cost;
    CHECK(mwpm <= mst + 1e-9);
  }
}
