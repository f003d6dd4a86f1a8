#include "doctest.h"
#include "omm/adversary.hpp"
#include "omm/oracles.hpp"

#include <cmath>
#include <set>

using namespace omm;

TEST_CASE("eight-point sequence: optimum, forced prefix, and the blowup") {
  const double k = 5.0, eps = 0.04;
  auto pairs = prop_one_sequence(k, eps);
  REQUIRE(pairs.size() == 4);
  CHECK_THROWS_AS(prop_one_sequence(5.0, 0.3), std::invalid_argument);

  std::vector<double> all;
  for (auto [x, y] : pairs) {
    all.push_back(x);
    all.push_back(y);
  }
  // final optimum is 4 eps
  CHECK(mwpm_line(all).cost == doctest::Approx(4 * eps));
  // the sensible prefix matching after two pairs weighs 2
  std::vector<double> first4(all.begin(), all.begin() + 4);
  CHECK(mwpm_line(first4).cost == doctest::Approx(2.0));

  // any single-deletion-per-pair algorithm ends above weight 1
  CappedLineHarness h(1);
  for (auto [x, y] : pairs) h.feed_pair(x, y);
  CHECK(h.weight() > 1.0);
  CHECK(h.weight() / mwpm_line(all).cost > k);
}

TEST_CASE("figure sequences: arrival-order weight versus optimum") {
  const int n = 100;
  const double w = 1e6, eps = 1e-3;
  auto fig = fig1_sequences(n, w, eps);
  double arrival = 0.0;
  std::vector<double> all;
  for (auto [x, y] : fig.pairs_a) {
    arrival += std::fabs(y - x);
    all.push_back(x);
    all.push_back(y);
  }
  CHECK(arrival == doctest::Approx(fig.arrival_a));
  CHECK(arrival == doctest::Approx(2.0 * n * w));
  CHECK(mwpm_line(all).cost == doctest::Approx(fig.opt_a));

  std::vector<double> bpts;
  for (auto [x, y] : fig.pairs_b) {
    bpts.push_back(x);
    bpts.push_back(y);
  }
  CHECK(mwpm_line(bpts).cost == doctest::Approx(0.0));
  // before the final duplicate pair the optimum spans the whole interval
  bpts.resize(bpts.size() - 2);
  CHECK(mwpm_line(bpts).cost == doctest::Approx(2.0 * n + 1));
}

TEST_CASE("tier cardinalities and nesting") {
  AdaptiveLowerBound gen(2, 3);
  CHECK(gen.q() == 20);
  auto batch0 = gen.next_batch({});
  CHECK(batch0.size() == 20 * 20 * 20 - 20 * 20);
  std::set<double> seen(batch0.begin(), batch0.end());
  CHECK(seen.size() == batch0.size());
  for (double p : batch0) {
    CHECK(std::fmod(p, 1.0) == 0.0);
    CHECK(std::fmod(p, 400.0) != 0.0);  // skipped tier
  }
}

TEST_CASE("adaptive run against the capped light matcher validates certificates") {
  const int r = 2;
  const int k = 2;  // 400 base points
  AdaptiveLowerBound gen(r, k);
  CappedLineHarness alg(r);
  while (!gen.done()) {
    auto batch = gen.next_batch(alg.coordinate_matching());
    if (batch.empty()) continue;
    REQUIRE(batch.size() % 2 == 0);
    for (std::size_t i = 0; i < batch.size(); i += 2)
      alg.feed_pair(batch[i], batch[i + 1]);
    gen.confirm_round(alg.coordinate_matching());
  }
  REQUIRE(gen.certificates().size() == static_cast<std::size_t>(k));
  for (const auto& c : gen.certificates()) {
    INFO("round ", c.round, " case1=", c.case1, " witness=", c.witness_edges,
         " required=", c.required);
    CHECK(c.ok);
  }
  // proof-style floor: k * q^k / (100 r), with slack for rounding
  const double floor_w = 0.5 * k * std::pow(20.0, k) / (100.0 * r);
  CHECK(alg.weight() >= floor_w);
}

TEST_CASE("oblivious sequences: all-zero and all-one bit vectors") {
  const int r = 2, k = 3;
  auto zero = oblivious_lb_sequence(r, k, std::vector<bool>(k - 1, false));
  CHECK(zero.size() == 8000 - 400);
  auto one = oblivious_lb_sequence(r, k, std::vector<bool>(k - 1, true));
  // firing every round presents every base point exactly once
  std::set<double> seen(one.begin(), one.end());
  CHECK(seen.size() == one.size());
  CHECK(one.size() == 8000);
  for (double p : seen) {
    CHECK(p >= 1.0);
    CHECK(p <= 8000.0);
  }
}

TEST_CASE("laakso family: sizes, weights, and distance preservation") {
  auto g = LaaksoGraph::initial();
  CHECK(g.vertex_count() == 2);
  CHECK(g.edges().size() == 1);
  CounterRng rng(5, Stream::instance, 0);
  auto before = g.all_pairs();
  for (int k = 1; k <= 5; ++k) {
    g.next(rng);
    CHECK(g.vertex_count() == 4 * k + 2);
    for (auto& [u, v, w] : g.edges()) CHECK(w >= std::pow(4.0, -k) - 1e-15);
    auto after = g.all_pairs();
    for (std::size_t i = 0; i < before.size(); ++i)
      for (std::size_t j = 0; j < before.size(); ++j)
        CHECK(after[i][j] == doctest::Approx(before[i][j]).epsilon(1e-12));
    before = std::move(after);
  }
  // level-1 graph is the six-vertex gadget with quarter weights
  auto g1 = LaaksoGraph::initial();
  CounterRng rng2(9, Stream::instance, 1);
  g1.next(rng2);
  CHECK(g1.vertex_count() == 6);
  for (auto& [u, v, w] : g1.edges()) CHECK(w == doctest::Approx(0.25));
  auto d = g1.all_pairs();
  CHECK(d[0][1] == doctest::Approx(1.0));  // endpoints stay a unit apart
}

TEST_CASE("capped matcher respects its deletion budget and stays perfect") {
  CounterRng rng(77, Stream::instance, 3);
  CappedLineHarness h(2);
  std::set<double> used;
  for (int i = 0; i < 60; ++i) {
    double x = std::floor(rng.next_unit() * 10000);
    double y = std::floor(rng.next_unit() * 10000);
    while (used.count(x)) x += 0.5;
    used.insert(x);
    while (used.count(y)) y += 0.5;
    used.insert(y);
    h.feed_pair(x, y);
    CHECK(h.last_deletions() <= 2);
    CHECK(static_cast<int>(h.coordinate_matching().size()) == i + 1);
  }
}
