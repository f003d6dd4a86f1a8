#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>
#include <vector>

#include "omm/metric.hpp"

namespace omm {

constexpr int kTopLevelInf = std::numeric_limits<int>::max();
constexpr int kTopLevelNone = std::numeric_limits<int>::min();

// Nested nets N_i over an insert-only point sequence. A point belongs to
// N_i for every i <= its top level, fixed at insertion: membership only
// grows over time. Levels are conceptual over all of Z; only the window
// where nets are nontrivial is ever scanned.
class NetHierarchy {
 public:
  explicit NetHierarchy(const PointSet& pts) : pts_(&pts) {}

  // x must be the latest appended point. Returns the top level.
  int insert(PointId x) {
    const PointSet& P = *pts_;
    if (x != static_cast<int>(top_level_.size()) + 1)
      throw std::invalid_argument("net insertion must follow arrival order");
    if (x == 1) {
      top_level_.push_back(kTopLevelInf);
      return kTopLevelInf;
    }
    double dmin = std::numeric_limits<double>::infinity();
    for (PointId q = 1; q < x; ++q) dmin = std::min(dmin, P.distance(q, x));
    if (dmin == 0.0) {
      // duplicate of an existing point: joins no net
      top_level_.push_back(kTopLevelNone);
      return kTopLevelNone;
    }
    // scan upward from a level that trivially separates x from everyone
    int i = static_cast<int>(std::floor(std::log2(dmin))) - 1;
    while (separated_at(x, i + 1)) ++i;
    top_level_.push_back(i);
    return i;
  }

  int top_level(PointId x) const { return top_level_.at(x - 1); }

  bool in_net(PointId x, int level) const {
    const int t = top_level_.at(x - 1);
    if (t == kTopLevelInf) return true;
    if (t == kTopLevelNone) return false;
    return level <= t;
  }

  std::vector<PointId> net_at(int level) const {
    std::vector<PointId> out;
    for (PointId x = 1; x <= static_cast<int>(top_level_.size()); ++x)
      if (in_net(x, level)) out.push_back(x);
    return out;
  }

  // Closest net point at the given level; covering guarantees distance
  // < 2^(level+1) once x is inserted.
  std::pair<PointId, double> nearest_net_point(PointId x, int level) const {
    PointId best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (PointId q = 1; q <= static_cast<int>(top_level_.size()); ++q) {
      if (!in_net(q, level)) continue;
      const double d = pts_->distance(q, x);
      if (d < bd) {
        bd = d;
        best = q;
      }
    }
    return {best, bd};
  }

  int count() const { return static_cast<int>(top_level_.size()); }

 private:
  bool separated_at(PointId x, int level) const {
    const double thr = std::ldexp(1.0, level);  // 2^level
    for (PointId q = 1; q < x; ++q) {
      if (!in_net(q, level)) continue;
      if (pts_->distance(q, x) <= thr) return false;
    }
    return true;
  }

  const PointSet* pts_;
  std::vector<int> top_level_;
};

// Running doubling-dimension estimate from net packing: at each level,
// the largest number of same-level net points packed in a ball of radius
// 2^(level+2) witnesses the dimension. The estimate is a positive integer,
// non-decreasing over prefixes.
class DdimEstimator {
 public:
  DdimEstimator(const PointSet& pts, const NetHierarchy& nets, int slack = 2)
      : pts_(&pts), nets_(&nets), slack_(slack) {}

  void on_insert(PointId x) {
    const int t = nets_->top_level(x);
    if (t != kTopLevelNone) {
      const int lo = level_floor();
      const int hi = (t == kTopLevelInf) ? level_ceiling() : t;
      for (int lvl = std::max(lo, level_min_seen_); lvl <= hi; ++lvl)
        bump_level(x, lvl);
      if (x == 1) level_min_seen_ = 0;
      level_min_seen_ = std::min(level_min_seen_, lo);
    }
    int est = 1;
    for (const auto& [lvl, mx] : level_max_)
      est = std::max(est, static_cast<int>(std::ceil(
                              std::log2(static_cast<double>(mx)) / slack_)));
    running_ = std::max(running_, est);
    per_point_.push_back(running_);
  }

  // estimate after the first `prefix` points
  int at(PointId prefix) const { return per_point_.at(prefix - 1); }
  int current() const { return per_point_.empty() ? 1 : per_point_.back(); }

 private:
  int level_floor() const {
    const auto& s = pts_->stats();
    if (s.n < 2 || !std::isfinite(s.min_dist)) return 0;
    return static_cast<int>(std::floor(std::log2(s.min_dist))) - 1;
  }
  int level_ceiling() const {
    const auto& s = pts_->stats();
    if (s.n < 2 || s.diameter <= 0.0) return 0;
    return static_cast<int>(std::ceil(std::log2(s.diameter))) + 1;
  }

  void bump_level(PointId x, int lvl) {
    const double rad = std::ldexp(1.0, lvl + 2);
    auto& counts = level_counts_[lvl];
    int own = 0;
    for (auto& [q, c] : counts) {
      if (pts_->distance(q, x) <= rad) {
        ++c;
        ++own;
        level_max_[lvl] = std::max(level_max_[lvl], c);
      }
    }
    counts.push_back({x, own + 1});
    auto& mx = level_max_[lvl];
    mx = std::max(mx, own + 1);
  }

  const PointSet* pts_;
  const NetHierarchy* nets_;
  int slack_;
  int level_min_seen_ = std::numeric_limits<int>::max();
  std::map<int, std::vector<std::pair<PointId, int>>> level_counts_;
  std::map<int, int> level_max_;
  int running_ = 1;
  std::vector<int> per_point_;
};

// Shared view of a growing metric: points, nets, and per-arrival dimension
// estimates, appended in lockstep.
class MetricIndex {
 public:
  explicit MetricIndex(PointSet pts_mode, int ddim_slack = 2)
      : pts_(std::move(pts_mode)), nets_(pts_), ddim_(pts_, nets_, ddim_slack) {}

  PointId append_coords(const std::vector<double>& xs) {
    const PointId id = pts_.append_coords(xs);
    nets_.insert(id);
    ddim_.on_insert(id);
    return id;
  }
  PointId append_row(const std::vector<double>& row) {
    const PointId id = pts_.append_row(row);
    nets_.insert(id);
    ddim_.on_insert(id);
    return id;
  }

  const PointSet& points() const { return pts_; }
  const NetHierarchy& nets() const { return nets_; }
  int estimate_ddim(PointId prefix) const { return ddim_.at(prefix); }
  int ddim_now() const { return ddim_.current(); }
  int size() const { return pts_.size(); }
  double distance(PointId a, PointId b) const { return pts_.distance(a, b); }

  // scale window: decompositions are nontrivial only for scales in
  // [low_scale, high_scale]; above it everything shares one cluster,
  // below it all distinct points are singletons.
  int low_scale() const {
    const auto& s = pts_.stats();
    if (s.n < 2 || !std::isfinite(s.min_dist)) return 0;
    return static_cast<int>(std::floor(std::log2(s.min_dist))) - 1;
  }
  int high_scale() const {
    const auto& s = pts_.stats();
    if (s.n < 2 || s.diameter <= 0.0) return 3;
    return static_cast<int>(std::ceil(std::log2(s.diameter))) + 3;
  }

 private:
  PointSet pts_;
  NetHierarchy nets_;
  DdimEstimator ddim_;
};

}  // namespace omm
