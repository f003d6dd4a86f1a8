#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <set>
#include <tuple>
#include <vector>

#include "omm/light_matching.hpp"
#include "omm/metric.hpp"
#include "omm/rng.hpp"

namespace omm {

// The eight-point line sequence that defeats any single-deletion-per-pair
// algorithm: 0,1,s,s+1 then 1+eps,s+eps then eps,s+1+eps with s = k+1.
std::vector<std::pair<double, double>> prop_one_sequence(double k, double eps);

// Figure-style motivating sequences on the line.
struct Fig1 {
  std::vector<std::pair<double, double>> pairs_a;  // {i, W+i} then {i+e, W+i+e}
  std::vector<std::pair<double, double>> pairs_b;  // doubled ints, then {0,2n+1} twice
  double opt_a = 0.0;        // 2 e n
  double arrival_a = 0.0;    // 2 n W
  double opt_b_final = 0.0;  // 0
};
Fig1 fig1_sequences(int n, double w, double eps);

// Adaptive round-based strategy: integer points Q_i (multiples of q^i up
// to q^k, q = 10r). A round either presents Q_i \ Q_{i+1} or, when the
// current matching already carries enough long edges, presents nothing.
// Every round leaves a certificate counting witness edges against the
// stated threshold.
class AdaptiveLowerBound {
 public:
  using Matching = std::vector<std::pair<double, double>>;

  AdaptiveLowerBound(int recourse, int rounds);

  bool done() const { return round_ >= k_; }
  int round() const { return round_; }
  long long q() const { return q_; }
  int rounds() const { return k_; }
  double diameter() const;
  double threshold(int i) const;  // q^i / (4r)

  // inspect the algorithm's matching and emit this round's points (empty
  // for a skip round); call confirm_round after a nonempty batch has been
  // absorbed
  std::vector<double> next_batch(const Matching& matching);
  void confirm_round(const Matching& matching);

  struct Certificate {
    int round = 0;
    bool case1 = false;
    long long witness_edges = 0;
    long long required = 0;
    bool ok = false;
  };
  const std::vector<Certificate>& certificates() const { return certs_; }

 private:
  std::vector<double> tier(int i) const;  // Q_i \ Q_{i+1}
  long long count_long_edges(const Matching& m, double thr) const;

  int r_;
  long long q_;
  int k_;
  int round_ = 0;
  bool awaiting_confirm_ = false;
  Matching prev_;
  std::vector<double> last_batch_;
  std::vector<Certificate> certs_;
};

// Oblivious variant: the same tiers, fired per a fixed bit vector.
std::vector<double> oblivious_lb_sequence(int recourse, int rounds,
                                          const std::vector<bool>& bits);

// Series-parallel recursion where a single random edge of the innermost
// copy is expanded each level; distances between old vertices never
// change and the aspect ratio grows by 4 per level.
class LaaksoGraph {
 public:
  static LaaksoGraph initial();  // single unit edge

  void next(CounterRng& rng);

  int level() const { return level_; }
  int vertex_count() const { return n_; }
  const std::vector<std::tuple<int, int, double>>& edges() const { return edges_; }
  // vertices added by the latest expansion, in arrival order
  const std::vector<int>& last_added() const { return last_added_; }

  std::vector<std::vector<double>> all_pairs() const;

 private:
  int level_ = 0;
  int n_ = 0;
  std::vector<std::tuple<int, int, double>> edges_;
  // current innermost copy, labeled s,a,b,c,d,t
  int s_ = 0, a_ = -1, b_ = -1, c_ = -1, d_ = -1, t_ = 1;
  std::vector<int> last_added_;
};

// Wraps any target matching into an algorithm that deletes at most a
// fixed number of edges per arriving pair: it applies the alternating
// path covering the new pair when affordable, then spends leftover budget
// on the most profitable alternating cycles.
class CappedMatcher {
 public:
  CappedMatcher(int deletions_per_pair,
                std::function<double(PointId, PointId)> dist)
      : cap_(deletions_per_pair), dist_(std::move(dist)) {}

  void insert_pair(PointId a, PointId b,
                   const std::vector<std::pair<PointId, PointId>>& target);

  const std::set<std::pair<PointId, PointId>>& edges() const { return edges_; }
  double weight() const;
  int last_deletions() const { return last_del_; }

 private:
  int cap_;
  std::function<double(PointId, PointId)> dist_;
  std::set<std::pair<PointId, PointId>> edges_;
  int last_del_ = 0;
};

// Runs the light matcher as a guide under a hard deletion cap on a stream
// of line coordinates, exposing the capped matching in coordinate form for
// the adversaries to inspect.
class CappedLineHarness {
 public:
  explicit CappedLineHarness(int deletions_per_pair);

  void feed_pair(double x, double y);
  std::vector<std::pair<double, double>> coordinate_matching() const;
  double weight() const;
  int last_deletions() const { return capped_.last_deletions(); }
  int size() const { return static_cast<int>(coord_.size()); }

 private:
  double dist(PointId a, PointId b) const {
    return std::fabs(coord_[a - 1] - coord_[b - 1]);
  }

  std::vector<double> coord_;
  LightMatcher light_;
  CappedMatcher capped_;
};

}  // namespace omm
