#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace omm {

// Points are identified by arrival order, starting at 1.
using PointId = int;

struct PrefixStats {
  int n = 0;
  double diameter = 0.0;
  double min_dist = std::numeric_limits<double>::infinity();
  double aspect_ratio() const {
    return n < 2 ? 1.0 : diameter / min_dist;
  }
};

// Append-only point sequence with pairwise-distance access. Two storage
// modes: coordinates in R^d, or an explicit lower-triangular distance
// matrix fed one row per arrival. Appends are single-writer; reads are
// safe between appends.
class PointSet {
 public:
  static PointSet euclidean(int dim) {
    PointSet p;
    p.dim_ = dim;
    return p;
  }
  static PointSet explicit_matrix() {
    PointSet p;
    p.dim_ = 0;
    return p;
  }

  bool is_euclidean() const { return dim_ > 0; }
  int dimension() const { return dim_; }
  int size() const { return n_; }

  PointId append_coords(const std::vector<double>& xs) {
    if (!is_euclidean() && n_ > 0)
      throw std::invalid_argument("point set is in explicit-matrix mode");
    if (is_euclidean() && static_cast<int>(xs.size()) != dim_)
      throw std::invalid_argument("coordinate dimension mismatch");
    if (!is_euclidean()) dim_ = static_cast<int>(xs.size());
    coords_.insert(coords_.end(), xs.begin(), xs.end());
    ++n_;
    update_stats();
    return n_;
  }

  PointId append_row(const std::vector<double>& row) {
    if (is_euclidean() && n_ > 0 && !coords_.empty())
      throw std::invalid_argument("point set is in euclidean mode");
    if (static_cast<int>(row.size()) != n_)
      throw std::invalid_argument("distance row length must equal current count");
    for (double d : row)
      if (d < 0.0) throw std::invalid_argument("negative distance");
    rows_.push_back(row);
    ++n_;
    update_stats();
    return n_;
  }

  double distance(PointId a, PointId b) const {
    check_id(a);
    check_id(b);
    if (a == b) return 0.0;
    if (!rows_.empty()) {
      if (a > b) std::swap(a, b);
      return rows_[b - 1][a - 1];
    }
    const double* pa = &coords_[(a - 1) * static_cast<std::size_t>(dim_)];
    const double* pb = &coords_[(b - 1) * static_cast<std::size_t>(dim_)];
    double s = 0.0;
    for (int k = 0; k < dim_; ++k) {
      const double t = pa[k] - pb[k];
      s += t * t;
    }
    return std::sqrt(s);
  }

  const double* coords_of(PointId a) const {
    check_id(a);
    return &coords_[(a - 1) * static_cast<std::size_t>(dim_)];
  }

  const PrefixStats& stats() const { return stats_; }

  PrefixStats recompute_stats() const {
    PrefixStats s;
    for (PointId j = 1; j <= n_; ++j) {
      s.n = j;
      for (PointId i = 1; i < j; ++i) {
        const double d = distance(i, j);
        if (d > s.diameter) s.diameter = d;
        if (d > 0.0 && d < s.min_dist) s.min_dist = d;
      }
    }
    return s;
  }

  // Full triangle-inequality sweep; quadratic per point, for verify mode.
  bool verify_triangle(double* worst_violation = nullptr) const {
    double worst = 0.0;
    for (PointId a = 1; a <= n_; ++a)
      for (PointId b = a + 1; b <= n_; ++b) {
        const double dab = distance(a, b);
        for (PointId c = 1; c <= n_; ++c) {
          const double v = dab - (distance(a, c) + distance(c, b));
          if (v > worst) worst = v;
        }
      }
    if (worst_violation) *worst_violation = worst;
    return worst <= 1e-9 * (stats_.diameter > 0 ? stats_.diameter : 1.0);
  }

 private:
  void update_stats() {
    stats_.n = n_;
    for (PointId i = 1; i < n_; ++i) {
      const double d = distance(i, n_);
      if (d > stats_.diameter) stats_.diameter = d;
      if (d > 0.0 && d < stats_.min_dist) stats_.min_dist = d;
    }
  }

  void check_id(PointId a) const {
    if (a < 1 || a > n_) throw std::out_of_range("unknown point id");
  }

  int dim_ = 0;
  int n_ = 0;
  std::vector<double> coords_;
  std::vector<std::vector<double>> rows_;
  PrefixStats stats_;
};

}  // namespace omm
