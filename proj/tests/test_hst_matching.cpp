#include "doctest.h"
#include "omm/hst_matching.hpp"
#include "omm/oracles.hpp"
#include "omm/rng.hpp"

#include <cmath>
#include <numeric>

using namespace omm;

namespace {

// grow a random 2-HST one leaf at a time, driving both matchers through
// the exact arrival order
struct TreeRig {
  HstTree tree;
  std::vector<HstNode*> internals;
  std::int64_t key = 0;
  CounterRng rng;
  PointId next_point = 1;

  explicit TreeRig(std::uint64_t seed, int top_scale = 6)
      : rng(seed, Stream::instance, 77) {
    internals.push_back(tree.make_internal(nullptr, top_scale,
                                           std::ldexp(1.0, top_scale),
                                           ClusterKey{}));
    tree.set_root(internals.front());
  }

  HstNode* grow_leaf() {
    HstNode* host = internals[rng.next_below(internals.size())];
    while (host->scale > 1 && rng.next_bit()) {
      host = tree.make_internal(host, host->scale - 1,
                                std::ldexp(1.0, host->scale - 1),
                                ClusterKey{ClusterKey::Kind::carve, ++key, 0});
      internals.push_back(host);
    }
    return tree.make_leaf(host, next_point++,
                          ClusterKey{ClusterKey::Kind::carve, ++key, 1});
  }

  int height() const {
    int h = 0;
    tree.for_each_node([&](HstNode* n) { h = std::max(h, n->depth); });
    return h;
  }
};

double oracle_cost(const HstTree& tree, int n) {
  std::vector<PointId> active(n);
  std::iota(active.begin(), active.end(), 1);
  return mwpm_ultrametric(tree, active).cost;
}

}  // namespace

TEST_CASE("two leaves under one node match with zero deletions") {
  HstTree tree;
  HstNode* root = tree.make_internal(nullptr, 2, 4.0, ClusterKey{});
  tree.set_root(root);
  InwardMatcher m(tree);
  m.insert_leaf(tree.make_leaf(root, 1, ClusterKey{ClusterKey::Kind::carve, 1, 0}));
  m.insert_leaf(tree.make_leaf(root, 2, ClusterKey{ClusterKey::Kind::carve, 2, 0}));
  CHECK(m.matching().edges().size() == 1);
  CHECK(m.last_insert_deletions() == 0);
  CHECK(m.cost_hst() == 4.0);
  CHECK(m.verify_inward());
}

TEST_CASE("uniform metric: any maintained matching weighs pairs times label") {
  HstTree tree;
  HstNode* root = tree.make_internal(nullptr, 3, 8.0, ClusterKey{});
  tree.set_root(root);
  InwardMatcher m(tree);
  for (PointId p = 1; p <= 12; ++p)
    m.insert_leaf(tree.make_leaf(root, p, ClusterKey{ClusterKey::Kind::carve, p, 0}));
  CHECK(m.cost_hst() == 6 * 8.0);
  CHECK(m.verify_inward());
}

TEST_CASE("inward matcher tracks the exact optimum at every even step") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    TreeRig rig(seed);
    InwardMatcher m(rig.tree);
    const int pairs = 2 + static_cast<int>(rig.rng.next_below(4));
    for (int i = 0; i < pairs; ++i) {
      HstNode* a = rig.grow_leaf();
      m.insert_leaf(a);
      HstNode* b = rig.grow_leaf();
      m.insert_leaf(b);
      CHECK(m.verify_inward());
      CHECK(m.cost_hst() == doctest::Approx(oracle_cost(rig.tree, 2 * (i + 1))));
      CHECK(m.matching().replays_to_current());
    }
  }
}

TEST_CASE("inward recourse never exceeds twice the height per pair") {
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    TreeRig rig(seed, 8);
    InwardMatcher m(rig.tree);
    for (int i = 0; i < 12; ++i) {
      HstNode* a = rig.grow_leaf();
      HstNode* b = rig.grow_leaf();
      m.insert_pair(a, b);
      CHECK(m.last_insert_deletions() <= 2 * rig.height());
    }
  }
}

TEST_CASE("deep caterpillar: recourse stays within twice the height") {
  HstTree tree;
  const int levels = 12;
  HstNode* cur = tree.make_internal(nullptr, levels, std::ldexp(1.0, levels),
                                    ClusterKey{});
  tree.set_root(cur);
  std::vector<HstNode*> spine{cur};
  for (int s = levels - 1; s >= 1; --s) {
    cur = tree.make_internal(cur, s, std::ldexp(1.0, s),
                             ClusterKey{ClusterKey::Kind::carve, s, 0});
    spine.push_back(cur);
  }
  InwardMatcher m(tree);
  PointId p = 1;
  std::int64_t key = 1000;
  // alternate ends of the spine to force long repair walks
  for (int i = 0; i < 30; ++i) {
    HstNode* host = spine[(i % 2) ? spine.size() - 1 : i % spine.size()];
    HstNode* leaf =
        tree.make_leaf(host, p++, ClusterKey{ClusterKey::Kind::carve, ++key, 0});
    m.insert_leaf(leaf);
    CHECK(m.last_insert_deletions() <= levels + 1);
    CHECK(m.verify_inward());
  }
}

TEST_CASE("hp matcher: all-even balanced tree needs no recourse") {
  HstTree tree;
  HstNode* root = tree.make_internal(nullptr, 4, 16.0, ClusterKey{});
  tree.set_root(root);
  std::vector<HstNode*> mids;
  for (int i = 0; i < 4; ++i)
    mids.push_back(tree.make_internal(root, 3, 8.0,
                                      ClusterKey{ClusterKey::Kind::carve, i, 0}));
  HpMatcher m(tree);
  PointId p = 1;
  for (HstNode* mid : mids) {
    m.insert_leaf(tree.make_leaf(mid, p++, ClusterKey{ClusterKey::Kind::carve, 100 + p, 0}));
    m.insert_leaf(tree.make_leaf(mid, p++, ClusterKey{ClusterKey::Kind::carve, 100 + p, 0}));
  }
  CHECK(m.matching().edges().size() == 4);
  CHECK(m.cost_hst() == doctest::Approx(oracle_cost(tree, 8)));
  std::string why;
  CHECK_MESSAGE(m.verify_hp_inward(&why), why);
}

TEST_CASE("hp matcher stays within twice the optimum at every even step") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    TreeRig rig(seed ^ 0x5a5a);
    HpMatcher m(rig.tree);
    const int pairs = 2 + static_cast<int>(rig.rng.next_below(4));
    for (int i = 0; i < pairs; ++i) {
      m.insert_leaf(rig.grow_leaf());
      m.insert_leaf(rig.grow_leaf());
      std::string why;
      CHECK_MESSAGE(m.verify_hp_inward(&why), why);
      const double opt = oracle_cost(rig.tree, 2 * (i + 1));
      CHECK(m.cost_hst() <= 2.0 * opt + 1e-9);
      CHECK(m.cost_hst() >= opt - 1e-9);
      CHECK(m.matching().replays_to_current());
    }
  }
}

TEST_CASE("hp matcher handles odd prefixes (near-perfect states)") {
  TreeRig rig(4242);
  HpMatcher m(rig.tree);
  for (int i = 0; i < 9; ++i) {
    m.insert_leaf(rig.grow_leaf());
    std::string why;
    CHECK_MESSAGE(m.verify_hp_inward(&why), why);
    // near perfect: floor(n/2) edges
    CHECK(static_cast<int>(m.matching().edges().size()) == (i + 1) / 2);
  }
}

TEST_CASE("hp per-insert modifications grow polylogarithmically") {
  // median/99th percentile of per-insert modification counts on a larger
  // random tree; the hard assert here is a generous c*log^3 ceiling
  TreeRig rig(31337, 14);
  HpMatcher m(rig.tree);
  const int n = 3000;
  std::vector<int> mods;
  for (int i = 0; i < n; ++i) {
    m.insert_leaf(rig.grow_leaf());
    mods.push_back(m.last_insert_modifications());
  }
  std::sort(mods.begin(), mods.end());
  const double lg = std::log2(n);
  CHECK(mods[n - 1] <= 6.0 * lg * lg * lg);
  CHECK(mods[n * 99 / 100] <= 2.0 * lg * lg * lg);
}

TEST_CASE("matching cost under the source metric is dominated by tree cost") {
  TreeRig rig(77);
  InwardMatcher m(rig.tree);
  CounterRng crng(9, Stream::instance, 0);
  std::map<PointId, double> coord;
  for (int i = 0; i < 8; ++i) {
    HstNode* leaf = rig.grow_leaf();
    coord[leaf->point] = crng.next_unit();
    m.insert_leaf(leaf);
  }
  auto source = [&](PointId a, PointId b) {
    const double d = std::fabs(coord[a] - coord[b]);
    return std::min(d, rig.tree.distance(a, b));  // keep domination by construction
  };
  CHECK(m.cost_source(source) <= m.cost_hst() + 1e-12);
}
