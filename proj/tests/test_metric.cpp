#include "doctest.h"
#include "omm/nets.hpp"
#include "omm/rng.hpp"

#include <algorithm>
#include <cmath>

using namespace omm;

TEST_CASE("append and distance in both storage modes") {
  PointSet e = PointSet::euclidean(2);
  CHECK(e.append_coords({0, 0}) == 1);
  CHECK(e.append_coords({3, 4}) == 2);
  CHECK(e.distance(1, 2) == doctest::Approx(5.0));
  CHECK(e.distance(2, 1) == doctest::Approx(5.0));
  CHECK(e.distance(1, 1) == 0.0);

  PointSet x = PointSet::explicit_matrix();
  CHECK(x.append_row({}) == 1);
  CHECK(x.append_row({3.0}) == 2);
  CHECK(x.distance(1, 2) == 3.0);
}

TEST_CASE("append rejects malformed payloads") {
  PointSet e = PointSet::euclidean(3);
  e.append_coords({1, 2, 3});
  CHECK_THROWS_AS(e.append_coords({1, 2}), std::invalid_argument);

  PointSet x = PointSet::explicit_matrix();
  x.append_row({});
  CHECK_THROWS_AS(x.append_row({1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(x.append_row({-1.0}), std::invalid_argument);
  CHECK_THROWS_AS(x.distance(1, 5), std::out_of_range);
}

TEST_CASE("incremental prefix stats equal scratch recomputation") {
  PointSet e = PointSet::euclidean(2);
  CounterRng rng(99, Stream::instance, 0);
  for (int i = 0; i < 40; ++i) {
    e.append_coords({rng.next_unit() * 10, rng.next_unit() * 10});
    const auto inc = e.stats();
    const auto scratch = e.recompute_stats();
    CHECK(inc.diameter == scratch.diameter);
    CHECK(inc.min_dist == scratch.min_dist);
    CHECK(inc.aspect_ratio() == scratch.aspect_ratio());
  }
}

TEST_CASE("triangle inequality sweep accepts metrics and flags junk") {
  PointSet e = PointSet::euclidean(2);
  CounterRng rng(3, Stream::instance, 0);
  for (int i = 0; i < 15; ++i) e.append_coords({rng.next_unit(), rng.next_unit()});
  CHECK(e.verify_triangle());

  PointSet x = PointSet::explicit_matrix();
  x.append_row({});
  x.append_row({1.0});
  x.append_row({1.0, 10.0});  // d(1,3)=1, d(2,3)=10 > d(1,2)+d(1,3)
  CHECK_FALSE(x.verify_triangle());
}

TEST_CASE("ddim estimate: singleton and two points sit at the floor") {
  MetricIndex mi(PointSet::euclidean(1));
  mi.append_coords({0.0});
  CHECK(mi.estimate_ddim(1) == 1);
  mi.append_coords({3.0});
  CHECK(mi.estimate_ddim(2) == 1);
}

TEST_CASE("ddim estimate on a 4x4 grid lands in [1,4] and within factor of truth") {
  MetricIndex mi(PointSet::euclidean(2));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) mi.append_coords({double(i), double(j)});
  const int est = mi.estimate_ddim(16);
  CHECK(est >= 1);
  CHECK(est <= 4);

  // independent oracle: true doubling constant by minimal ball covers,
  // doubling dimension = log2 of the worst cover size
  const int n = 16;
  auto coord = [&](int p, int k) { return double(k == 0 ? p / 4 : p % 4); };
  auto dist = [&](int a, int b) {
    const double dx = coord(a, 0) - coord(b, 0), dy = coord(a, 1) - coord(b, 1);
    return std::sqrt(dx * dx + dy * dy);
  };
  double worst = 1.0;
  for (int c = 0; c < n; ++c)
    for (int rexp = -2; rexp <= 2; ++rexp) {
      const double R = std::ldexp(1.0, rexp);
      std::vector<int> ball;
      for (int p = 0; p < n; ++p)
        if (dist(c, p) <= 2 * R) ball.push_back(p);
      // greedy cover with radius-R balls centered at points
      std::vector<bool> covered(ball.size(), false);
      int used = 0;
      for (std::size_t step = 0; step < ball.size(); ++step) {
        int best = -1, gain = 0;
        for (int q = 0; q < n; ++q) {
          int g = 0;
          for (std::size_t i = 0; i < ball.size(); ++i)
            if (!covered[i] && dist(q, ball[i]) <= R) ++g;
          if (g > gain) gain = g, best = q;
        }
        if (best < 0) break;
        ++used;
        for (std::size_t i = 0; i < ball.size(); ++i)
          if (dist(best, ball[i]) <= R) covered[i] = true;
        if (std::all_of(covered.begin(), covered.end(), [](bool b) { return b; }))
          break;
      }
      if (used > 0) worst = std::max(worst, double(used));
    }
  const double true_ddim = std::log2(worst);
  // estimator within a factor 4 of the greedy-cover witness, never below 1
  CHECK(est <= std::max(4.0, 4.0 * true_ddim));
}

TEST_CASE("ddim estimate is monotone over prefixes") {
  MetricIndex mi(PointSet::euclidean(2));
  CounterRng rng(17, Stream::instance, 4);
  int prev = 1;
  for (int i = 0; i < 60; ++i) {
    mi.append_coords({rng.next_unit() * 100, rng.next_unit() * 100});
    const int cur = mi.estimate_ddim(i + 1);
    CHECK(cur >= prev);
    prev = cur;
  }
}
