#include "doctest.h"
#include "omm/light_matching.hpp"
#include "omm/oracles.hpp"
#include "omm/rng.hpp"

#include <cmath>
#include <map>

using namespace omm;

namespace {

struct Coords {
  std::map<PointId, std::vector<double>> pos;
  double operator()(PointId a, PointId b) const {
    const auto& pa = pos.at(a);
    const auto& pb = pos.at(b);
    double s = 0.0;
    for (std::size_t i = 0; i < pa.size(); ++i)
      s += (pa[i] - pb[i]) * (pa[i] - pb[i]);
    return std::sqrt(s);
  }
};

}  // namespace

TEST_CASE("first pair matches directly") {
  Coords c;
  c.pos[1] = {0.0};
  c.pos[2] = {7.0};
  LightMatcher lm(std::cref(c));
  lm.insert_pair(1, 2);
  CHECK(lm.matching_weight() == doctest::Approx(7.0));
  CHECK(lm.matching_edges().size() == 1);
  CHECK(lm.verify_tours());
}

TEST_CASE("greedy on collinear points builds the path and a light matching") {
  Coords c;
  const int n = 64;
  for (int i = 1; i <= 2 * n; ++i) c.pos[i] = {double(i)};
  LightMatcher lm(std::cref(c));
  for (int i = 1; i <= 2 * n; i += 2) lm.insert_pair(i, i + 1);
  // tree is the path: weight 2n-1 = MST
  CHECK(lm.tree_cost() == doctest::Approx(2 * n - 1));
  std::string why;
  CHECK_MESSAGE(lm.verify_tours(&why), why);
  const double lg = std::log2(2.0 * n);
  CHECK(lm.matching_weight_exact() <= 2.0 * lg * (2 * n - 1));
  CHECK(lm.matching_weight() == doctest::Approx(lm.matching_weight_exact()));
}

TEST_CASE("random instances: lightness within c log n of the exact MST") {
  CounterRng rng(5, Stream::instance, 0);
  for (int trial = 0; trial < 24; ++trial) {
    Coords c;
    const int pairs = 3 + static_cast<int>(rng.next_below(8));
    LightMatcher lm(std::cref(c));
    std::vector<double> xs;
    for (int i = 1; i <= 2 * pairs; ++i) {
      c.pos[i] = {rng.next_unit() * 40, rng.next_unit() * 40};
      if (i % 2 == 0) lm.insert_pair(i - 1, i);
    }
    const int n = 2 * pairs;
    const double mst = mst_cost(n, [&](int a, int b) { return c(a + 1, b + 1); });
    std::string why;
    CHECK_MESSAGE(lm.verify_tours(&why), why);
    CHECK(lm.matching_weight_exact() <= 4.0 * std::log2(n + 1) * mst);
    // perfect matching on all points
    CHECK(static_cast<int>(lm.matching_edges().size()) == pairs);
  }
}

TEST_CASE("tour surgery: delete then reinsert keeps everything valid") {
  Coords c;
  CounterRng rng(17, Stream::instance, 1);
  LightMatcher lm(std::cref(c));
  const int n = 30;
  for (int i = 1; i <= n; ++i) {
    c.pos[i] = {rng.next_unit() * 10, rng.next_unit() * 10};
    lm.insert_point(i);
  }
  std::string why;
  REQUIRE_MESSAGE(lm.verify_tours(&why), why);
  // churn: remove a random tree edge and reconnect the two sides; the
  // update contract reattaches at the severed root, where surgery is a
  // constant number of splices
  for (int trial = 0; trial < 200; ++trial) {
    const auto tour = lm.euler_tour(1);
    const auto e = tour[rng.next_below(tour.size())];
    lm.tree_edge_delete(e.first, e.second);
    CHECK_MESSAGE(lm.verify_tours(&why), why);
    CHECK(lm.last_event_splices() <= 8);
    const PointId severed_root = lm.hamilton_path(e.second).front();
    const auto p1 = lm.hamilton_path(e.first);
    lm.tree_edge_insert(p1[rng.next_below(p1.size())], severed_root);
    CHECK_MESSAGE(lm.verify_tours(&why), why);
    CHECK(lm.last_event_splices() <= 8);
  }
  // reattaching below a non-root vertex is allowed too; the component is
  // rebuilt, so only validity is promised
  for (int trial = 0; trial < 40; ++trial) {
    const auto tour = lm.euler_tour(1);
    const auto e = tour[rng.next_below(tour.size())];
    lm.tree_edge_delete(e.first, e.second);
    const auto p1 = lm.hamilton_path(e.first);
    const auto p2 = lm.hamilton_path(e.second);
    lm.tree_edge_insert(p1[rng.next_below(p1.size())], p2[rng.next_below(p2.size())]);
    CHECK_MESSAGE(lm.verify_tours(&why), why);
  }
}

TEST_CASE("leaf deletion splits the path by a couple of splices") {
  Coords c;
  c.pos[1] = {0.0};
  c.pos[2] = {1.0};
  c.pos[3] = {2.0};
  LightMatcher lm(std::cref(c));
  lm.insert_point(1);
  lm.insert_point(2);
  lm.insert_point(3);
  REQUIRE(lm.hamilton_path(1) == std::vector<PointId>{1, 2, 3});
  lm.tree_edge_delete(2, 3);
  CHECK(lm.hamilton_path(1) == std::vector<PointId>{1, 2});
  CHECK(lm.hamilton_path(3) == std::vector<PointId>{3});
  CHECK(lm.verify_tours());
}

TEST_CASE("swap-improved tree never weighs more than greedy") {
  CounterRng rng(23, Stream::instance, 2);
  for (int trial = 0; trial < 10; ++trial) {
    Coords c;
    const int n = 24;
    for (int i = 1; i <= n; ++i)
      c.pos[i] = {rng.next_unit() * 20, rng.next_unit() * 20};
    LightMatcher greedy(std::cref(c));
    LightMatcher swapped(std::cref(c), LightMatcher::Strategy::swap_improved, 2);
    for (int i = 1; i <= n; i += 2) {
      greedy.insert_pair(i, i + 1);
      swapped.insert_pair(i, i + 1);
    }
    CHECK(swapped.tree_cost() <= greedy.tree_cost() + 1e-9);
    std::string why;
    CHECK_MESSAGE(swapped.verify_tours(&why), why);
  }
}

TEST_CASE("per-pair recourse stays polylogarithmic on growing instances") {
  Coords c;
  CounterRng rng(3, Stream::instance, 5);
  LightMatcher lm(std::cref(c));
  const int pairs = 1 << 10;
  int worst = 0;
  for (int i = 1; i <= 2 * pairs; i += 2) {
    c.pos[i] = {rng.next_unit() * 1000};
    c.pos[i + 1] = {rng.next_unit() * 1000};
    lm.insert_pair(i, i + 1);
    worst = std::max(worst, lm.last_pair_modifications());
  }
  const double lg = std::log2(2.0 * pairs);
  CHECK(worst <= 6.0 * lg * lg);
}
