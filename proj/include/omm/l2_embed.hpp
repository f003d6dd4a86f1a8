#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "omm/decomposition.hpp"

namespace omm {

// Coordinates of the randomized embedding for one concrete radius draw.
// Scale i maps to one coordinate; a point is nonzero in at most 3 scales
// per cluster center it ever uses, hence at most 3j coordinates overall.
struct SparseVector {
  std::map<int, double> coords;  // scale -> value

  double sq_distance(const SparseVector& o) const {
    double s = 0.0;
    auto a = coords.begin();
    auto b = o.coords.begin();
    while (a != coords.end() || b != o.coords.end()) {
      if (b == o.coords.end() || (a != coords.end() && a->first < b->first)) {
        s += a->second * a->second;
        ++a;
      } else if (a == coords.end() || b->first < a->first) {
        s += b->second * b->second;
        ++b;
      } else {
        const double t = a->second - b->second;
        s += t * t;
        ++a;
        ++b;
      }
    }
    return s;
  }

  int nonzeros() const {
    int c = 0;
    for (auto& [i, v] : coords)
      if (v != 0.0) ++c;
    return c;
  }
};

// Expected squared embedded distances D[j][q] and their Monte-Carlo
// estimation. Trials share radius draws across pairs (common random
// numbers keyed by the trial index), so the whole matrix is a pure
// function of (points, seed, budget).
class DEstimator {
 public:
  DEstimator(const MetricIndex& mi, std::uint64_t seed)
      : mi_(&mi), seed_(seed) {}

  int window_lo() const {
    const auto& s = mi_->points().stats();
    if (s.n < 2 || !std::isfinite(s.min_dist)) return 0;
    return static_cast<int>(std::floor(std::log2(s.min_dist))) - kTailGuard;
  }
  int window_hi() const {
    double dmax = 0.0;
    for (PointId x = 2; x <= mi_->size(); ++x)
      dmax = std::max(dmax, mi_->distance(1, x));
    if (dmax <= 0.0) return 0;
    return static_cast<int>(std::ceil(std::log2(dmax))) + 1;
  }

  // all coordinates of all points for one trial draw
  std::vector<SparseVector> sample_embedding(std::uint64_t trial) const {
    const auto radii = trial_radii(trial);
    std::vector<SparseVector> out(static_cast<std::size_t>(mi_->size()));
    const int lo = window_lo(), hi = window_hi();
    std::vector<double> f(static_cast<std::size_t>(mi_->size()) + 1);
    for (int s = lo; s <= hi; ++s) {
      scale_coords(radii, s, f);
      for (PointId x = 1; x <= mi_->size(); ++x)
        if (f[x] != 0.0) out[x - 1].coords[s] = f[x];
    }
    return out;
  }

  struct Estimate {
    double value = 0.0;
    double stderr_ = 0.0;
  };

  Estimate expected_sq_distance(PointId j, PointId q, int budget) const {
    if (budget <= 0) throw std::invalid_argument("sample budget must be positive");
    if (j == q) return {0.0, 0.0};
    const int lo = window_lo(), hi = window_hi();
    std::vector<double> f(static_cast<std::size_t>(mi_->size()) + 1);
    double sum = 0.0, sumsq = 0.0;
    for (int t = 1; t <= budget; ++t) {
      const auto radii = trial_radii(static_cast<std::uint64_t>(t));
      double acc = 0.0;
      for (int s = lo; s <= hi; ++s) {
        scale_coords(radii, s, f);
        const double d = f[j] - f[q];
        acc += d * d;
      }
      sum += acc;
      sumsq += acc * acc;
    }
    const double mean = sum / budget;
    const double var = std::max(0.0, sumsq / budget - mean * mean);
    return {mean, std::sqrt(var / budget)};
  }

  std::vector<std::vector<double>> estimate_d_matrix(int budget) const {
    if (budget <= 0) throw std::invalid_argument("sample budget must be positive");
    const int n = mi_->size();
    std::vector<std::vector<double>> D(static_cast<std::size_t>(n),
                                       std::vector<double>(n, 0.0));
    const int lo = window_lo(), hi = window_hi();
    std::vector<double> f(static_cast<std::size_t>(n) + 1);
    for (int t = 1; t <= budget; ++t) {
      const auto radii = trial_radii(static_cast<std::uint64_t>(t));
      for (int s = lo; s <= hi; ++s) {
        scale_coords(radii, s, f);
        for (PointId a = 1; a <= n; ++a)
          for (PointId b = a + 1; b <= n; ++b) {
            const double d = f[a] - f[b];
            D[a - 1][b - 1] += d * d;
          }
      }
    }
    for (PointId a = 1; a <= n; ++a)
      for (PointId b = a + 1; b <= n; ++b) {
        D[a - 1][b - 1] /= budget;
        D[b - 1][a - 1] = D[a - 1][b - 1];
      }
    return D;
  }

  std::vector<RadiusSample> trial_radii(std::uint64_t trial) const {
    std::vector<RadiusSample> out(static_cast<std::size_t>(mi_->size()));
    for (PointId x = 1; x <= mi_->size(); ++x) {
      RadiusSample s;
      s.lambda = 4.0 * mi_->estimate_ddim(x);
      CounterRng rr(seed_ ^ mix64(trial), Stream::radius,
                    static_cast<std::uint64_t>(x));
      s.r = TruncExp{s.lambda}.sample(rr);
      CounterRng ra(seed_ ^ mix64(trial), Stream::sign_bit,
                    static_cast<std::uint64_t>(x));
      s.alpha = (x == 1) ? false : ra.next_bit();
      out[x - 1] = s;
    }
    return out;
  }

  // coordinates of every point at one scale for the given radii
  void scale_coords(const std::vector<RadiusSample>& radii, int scale,
                    std::vector<double>& f) const {
    const double quarter = std::ldexp(1.0, scale - 2);
    const int net_level = scale - 3;
    const auto& nets = mi_->nets();
    for (PointId x = 1; x <= mi_->size(); ++x) {
      double runmin = std::numeric_limits<double>::infinity();
      PointId center = 0;
      for (PointId k = 1; k <= x; ++k) {
        if (!nets.in_net(k, net_level)) continue;
        const double dkx = mi_->distance(k, x);
        const double shell = std::fabs(radii[k - 1].r * quarter - dkx);
        if (shell < runmin) runmin = shell;
        if (dkx <= radii[k - 1].r * quarter) {
          center = k;
          break;
        }
      }
      if (center == 0)
        throw std::logic_error("no cluster center found at scale");
      double val = 0.0;
      if (center != 1 && radii[center - 1].alpha) {
        const int t = nets.top_level(center);
        if (t == kTopLevelInf || scale > t) val = runmin;
      }
      f[x] = val;
    }
  }

  static constexpr int kTailGuard = 6;

 private:
  const MetricIndex* mi_;
  std::uint64_t seed_;
};

// Realizes points y_1, y_2, ... from rows of expected squared distances by
// incremental Cholesky of the induced Gram matrix (anchored at y_1 = 0).
// Negative pivots are clipped to zero, so sampling noise cannot abort the
// construction; the resulting shift in squared distances is reported.
class GramRealizer {
 public:
  explicit GramRealizer(double pivot_tol = 1e-9) : pivot_tol_(pivot_tol) {}

  // d_row[k] = estimated squared distance to point k+1 (k in [0, n-1));
  // returns the coordinates of the new point
  const std::vector<double>& realize_next(std::span<const double> d_row) {
    const int n = static_cast<int>(ys_.size()) + 1;
    if (static_cast<int>(d_row.size()) != n - 1)
      throw std::invalid_argument("distance row has wrong length");
    d_.emplace_back(d_row.begin(), d_row.end());
    if (n == 1) {
      ys_.emplace_back();  // origin
      return ys_.back();
    }
    // gram row against points 2..n-1, g[j] = <y_n, y_{j+2}>
    std::vector<double> g(static_cast<std::size_t>(n) - 2);
    const double dn1 = d_row[0];
    for (int j = 2; j < n; ++j)
      g[j - 2] = 0.5 * (dn1 + d_.at(j - 1).at(0) - d_row[j - 1]);
    std::vector<double> row(dims_, 0.0);
    double self = dn1;  // <y_n, y_n> target
    for (int j = 2; j < n; ++j) {
      const int pj = pivot_col_[j - 2];
      if (pj < 0) continue;
      double t = g[j - 2];
      const auto& rj = ys_[static_cast<std::size_t>(j) - 1];
      for (int k = 0; k < pj; ++k) t -= row[k] * rj[k];
      row[pj] = t / ys_[static_cast<std::size_t>(j) - 1][pj];
    }
    double rest = self;
    for (double v : row) rest -= v * v;
    double corr = 0.0;
    if (rest < 0.0) {
      corr = -rest;
      rest = 0.0;
    }
    const double res = std::sqrt(rest);
    if (res > pivot_tol_) {
      pivot_col_.push_back(dims_);
      row.push_back(res);
      ++dims_;
    } else {
      pivot_col_.push_back(-1);
      corr = std::max(corr, rest);
    }
    max_correction_ = std::max(max_correction_, corr);
    ys_.push_back(std::move(row));
    // track worst realized-vs-input deviation
    for (int j = 1; j < n; ++j) {
      const double got = sq_dist(n - 1, j - 1);
      max_residual_ =
          std::max(max_residual_, std::fabs(got - d_.back()[j - 1]));
    }
    return ys_.back();
  }

  int count() const { return static_cast<int>(ys_.size()); }
  int dimension() const { return dims_; }
  const std::vector<double>& vec(int idx0) const { return ys_.at(idx0); }

  double sq_dist(int a0, int b0) const {
    const auto& a = ys_.at(a0);
    const auto& b = ys_.at(b0);
    const std::size_t m = std::max(a.size(), b.size());
    double s = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const double av = k < a.size() ? a[k] : 0.0;
      const double bv = k < b.size() ? b[k] : 0.0;
      s += (av - bv) * (av - bv);
    }
    return s;
  }

  double max_psd_correction() const { return max_correction_; }
  double max_residual() const { return max_residual_; }

 private:
  double pivot_tol_;
  int dims_ = 0;
  std::vector<std::vector<double>> ys_;
  std::vector<std::vector<double>> d_;
  std::vector<int> pivot_col_;  // basis column added by point j+2, or -1
  double max_correction_ = 0.0;
  double max_residual_ = 0.0;
};

}  // namespace omm
