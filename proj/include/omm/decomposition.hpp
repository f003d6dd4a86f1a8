#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include "omm/nets.hpp"
#include "omm/rng.hpp"

namespace omm {

// One radius draw per point, shared by every distance scale, plus the sign
// bit used by the coordinate embedding. lambda is 4x the dimension estimate
// at the point's arrival.
struct RadiusSample {
  double r = 1.0;       // in [1,2]
  double lambda = 4.0;  // Texp parameter
  bool alpha = false;   // sign bit; forced 0 for the first point
};

class RadiusStore {
 public:
  RadiusStore() = default;
  explicit RadiusStore(std::uint64_t seed, std::uint64_t trial = 0)
      : seed_(seed), trial_(trial) {}

  // draw for the next point; x must be count()+1
  const RadiusSample& sample_next(PointId x, int est_ddim) {
    if (x != static_cast<int>(samples_.size()) + 1)
      throw std::invalid_argument("radius sampling must follow arrival order");
    RadiusSample s;
    s.lambda = 4.0 * est_ddim;
    CounterRng rr(seed_ ^ mix64(trial_), Stream::radius, static_cast<std::uint64_t>(x));
    s.r = TruncExp{s.lambda}.sample(rr);
    CounterRng ra(seed_ ^ mix64(trial_), Stream::sign_bit, static_cast<std::uint64_t>(x));
    s.alpha = (x == 1) ? false : ra.next_bit();
    samples_.push_back(s);
    return samples_.back();
  }

  const RadiusSample& at(PointId x) const { return samples_.at(x - 1); }
  int count() const { return static_cast<int>(samples_.size()); }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t trial_ = 0;
  std::vector<RadiusSample> samples_;
};

struct ClusterAssignment {
  PointId point = 0;
  int scale = 0;
  PointId center = 0;
};

// Scale-i clusters are carved by net points of level i-3 in arrival order:
// the ball of radius (2^i/4)*r_q around x_q, minus all earlier clusters.
// A point's assignment is fixed at its own arrival and never changes.
class PaddedDecomposition {
 public:
  PaddedDecomposition(const MetricIndex& mi, const RadiusStore& radii)
      : mi_(&mi), radii_(&radii) {}

  PointId center_of(PointId x, int scale) const {
    const double quarter = std::ldexp(1.0, scale - 2);  // 2^scale / 4
    const int net_level = scale - 3;
    const auto& nets = mi_->nets();
    for (PointId q = 1; q <= x; ++q) {
      if (!nets.in_net(q, net_level)) continue;
      if (mi_->distance(x, q) <= radii_->at(q).r * quarter) return q;
    }
    throw std::logic_error("no cluster center found: net covering is broken");
  }

  ClusterAssignment cluster_of(PointId x, int scale) const {
    return {x, scale, center_of(x, scale)};
  }

  // smallest possible distance from x to a point outside its scale-i
  // cluster, minimized over the carving shells of net points up to the
  // center; bounded by 2^scale / 2
  double paddedness(PointId x, int scale) const {
    const double quarter = std::ldexp(1.0, scale - 2);
    const int net_level = scale - 3;
    const PointId q = center_of(x, scale);
    const auto& nets = mi_->nets();
    double best = std::numeric_limits<double>::infinity();
    for (PointId k = 1; k <= q; ++k) {
      if (!nets.in_net(k, net_level)) continue;
      best = std::min(
          best, std::fabs(radii_->at(k).r * quarter - mi_->distance(k, x)));
    }
    return best;
  }

  // coordinate at one scale: the paddedness gated by the cluster's sign
  // bit, which is live only on the top three scales where the center is
  // still a net point
  double coordinate(PointId x, int scale) const {
    const PointId q = center_of(x, scale);
    return coordinate_given_center(x, scale, q);
  }

  double coordinate_given_center(PointId x, int scale, PointId q) const {
    if (q == 1) return 0.0;
    const int t = mi_->nets().top_level(q);
    if (t != kTopLevelInf && scale <= t) return 0.0;  // sign bit live on top 3 scales only
    if (!radii_->at(q).alpha) return 0.0;
    return paddedness(x, scale);
  }

 private:
  const MetricIndex* mi_;
  const RadiusStore* radii_;
};

// Cluster identity usable by both decompositions: net-point centers for
// the doubling scheme, carve ids for the euclidean one.
struct ClusterKey {
  enum class Kind : std::uint8_t { root_ball, net_center, carve, fallback };
  Kind kind = Kind::root_ball;
  std::int64_t a = 0;
  std::int64_t b = 0;

  bool operator==(const ClusterKey&) const = default;
  auto operator<=>(const ClusterKey&) const = default;
};

// Space carving for points in R^d (d <= 6): a held-out ball around the
// first point, then balls of radius Delta/2 around centers drawn from a
// Poisson scatter, consumed in timestamp order. Boxes of side 4*Delta tile
// space and are materialized lazily per scale, so the partition is a pure
// function of (seed, scale), oblivious to arrival order.
class EuclideanDecomposition {
 public:
  EuclideanDecomposition(const MetricIndex& mi, std::uint64_t seed)
      : mi_(&mi), seed_(seed) {
    if (!mi.points().is_euclidean())
      throw std::invalid_argument("euclidean decomposition needs coordinates");
    if (mi.points().dimension() > 6)
      throw std::invalid_argument("euclidean carving supports d <= 6");
  }

  ClusterKey cluster_of(PointId x, int scale) const {
    const double delta = std::ldexp(1.0, scale);
    const int d = mi_->points().dimension();
    const double* px = mi_->points().coords_of(x);
    const double* p1 = mi_->points().coords_of(1);
    double s = 0.0;
    for (int k = 0; k < d; ++k) {
      const double t = px[k] - p1[k];
      s += t * t;
    }
    if (std::sqrt(s) <= ball_radius(scale, delta))
      return {ClusterKey::Kind::root_ball, scale, 0};

    const double box = 4.0 * delta;
    std::vector<std::int64_t> lo(d), hi(d), cell(d);
    for (int k = 0; k < d; ++k) {
      lo[k] = static_cast<std::int64_t>(std::floor((px[k] - delta / 2) / box));
      hi[k] = static_cast<std::int64_t>(std::floor((px[k] + delta / 2) / box));
      cell[k] = lo[k];
    }
    double best_time = std::numeric_limits<double>::infinity();
    ClusterKey best{ClusterKey::Kind::fallback, 0, 0};
    for (;;) {
      const std::uint64_t lane = box_lane(scale, cell);
      const auto& centers = materialize(scale, lane, cell, box, d);
      for (std::size_t i = 0; i < centers.size(); ++i) {
        const auto& c = centers[i];
        double ss = 0.0;
        for (int k = 0; k < d; ++k) {
          const double t = c.pos[k] - px[k];
          ss += t * t;
        }
        if (ss <= delta * delta / 4.0 && c.time < best_time) {
          best_time = c.time;
          best = {ClusterKey::Kind::carve, static_cast<std::int64_t>(lane),
                  static_cast<std::int64_t>(i)};
        }
      }
      int k = 0;
      while (k < d && ++cell[k] > hi[k]) cell[k] = lo[k], ++k;
      if (k == d) break;
    }
    if (best.kind == ClusterKey::Kind::fallback) {
      // lattice backstop, pitch Delta/(2*sqrt(d)): always within Delta/4
      const double pitch = delta / (2.0 * std::sqrt(static_cast<double>(d)));
      std::uint64_t h = mix64(static_cast<std::uint64_t>(scale) + 0xfa11u);
      for (int k = 0; k < d; ++k)
        h = mix64(h ^ static_cast<std::uint64_t>(std::llround(px[k] / pitch)));
      best = {ClusterKey::Kind::fallback, static_cast<std::int64_t>(h), 0};
    }
    return best;
  }

 private:
  struct Center {
    double pos[6];
    double time;
  };

  double ball_radius(int scale, double delta) const {
    CounterRng rng(seed_, Stream::euclid_ball,
                   static_cast<std::uint64_t>(scale + (1 << 20)));
    return delta / 4.0 + rng.next_unit() * delta / 4.0;
  }

  std::uint64_t box_lane(int scale, const std::vector<std::int64_t>& cell) const {
    std::uint64_t lane = mix64(static_cast<std::uint64_t>(scale + (1 << 20)));
    for (std::size_t k = 0; k < cell.size(); ++k)
      lane = mix64(lane ^ mix64(static_cast<std::uint64_t>(cell[k]) +
                                0x5bd1e995u * (k + 1)));
    return lane;
  }

  const std::vector<Center>& materialize(int scale, std::uint64_t lane,
                                         const std::vector<std::int64_t>& cell,
                                         double box, int d) const {
    auto it = cache_.find({scale, lane});
    if (it != cache_.end()) return it->second;
    CounterRng rng(seed_, Stream::euclid_centers, lane);
    const int count = poisson(rng, box_mean(d));
    std::vector<Center> cs(static_cast<std::size_t>(count));
    for (auto& c : cs) {
      for (int k = 0; k < d; ++k) c.pos[k] = (cell[k] + rng.next_unit()) * box;
      c.time = rng.next_unit();
    }
    return cache_.emplace(std::pair<int, std::uint64_t>{scale, lane},
                          std::move(cs))
        .first->second;
  }

  // intensity: ~20 expected centers per radius-Delta/2 ball
  static double box_mean(int d) {
    const double vball =
        std::pow(3.14159265358979323846, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
    return 20.0 * std::pow(8.0, d) / vball;
  }

  static int poisson(CounterRng& rng, double mean) {
    int total = 0;
    while (mean > 0.0) {
      const double chunk = std::min(mean, 25.0);
      mean -= chunk;
      const double limit = std::exp(-chunk);
      double p = rng.next_unit();
      int k = 0;
      while (p > limit) {
        ++k;
        p *= rng.next_unit();
      }
      total += k;
    }
    return total;
  }

  const MetricIndex* mi_;
  std::uint64_t seed_;
  mutable std::map<std::pair<int, std::uint64_t>, std::vector<Center>> cache_;
};

}  // namespace omm
