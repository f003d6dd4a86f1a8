#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "omm/hst_matching.hpp"
#include "omm/oracles.hpp"

namespace omm {

struct BenchRow {
  int step = 0;
  std::string algo;
  double cost = 0.0;
  std::optional<double> opt;
  std::optional<double> ratio;
  double mst = 0.0;
  double lightness = 0.0;
  int deletions = 0;
  int additions = 0;
  std::uint64_t seed = 0;

  static const char* header() {
    return "step,algo,cost,opt,ratio,mst,lightness,deletions,additions,seed";
  }
};

// Embed arrivals into the evolving tree and keep a matcher on its leaves;
// the reported cost lives in the source metric, which the tree dominates.
class ObliviousPipeline {
 public:
  enum class Variant { doubling, euclidean };
  enum class Algo { inward, hp };

  ObliviousPipeline(PointSet mode, Variant variant, Algo algo,
                    std::uint64_t seed, int ddim_slack = 2)
      : mi_(std::move(mode), ddim_slack),
        radii_(seed),
        variant_(variant),
        algo_(algo),
        seed_(seed) {
    if (variant == Variant::euclidean)
      euclid_ = std::make_unique<EuclideanDecomposition>(mi_, seed);
    if (algo == Algo::inward) inward_ = std::make_unique<InwardMatcher>(tree_);
    else hp_ = std::make_unique<HpMatcher>(tree_);
  }

  // feed one pair and report; opt is filled from the exact oracle when the
  // instance is still small enough
  BenchRow step_pair(const std::vector<double>& pa,
                     const std::vector<double>& pb, bool with_opt) {
    const PointId a = append(pa);
    insert_into_tree(a);
    const PointId b = append(pb);
    insert_into_tree(b);
    BenchRow row;
    row.step = mi_.size() / 2;
    row.algo = algo_ == Algo::inward ? "inward" : "hp";
    row.seed = seed_;
    row.cost = cost_source();
    row.deletions = step_deletions_;
    row.additions = step_additions_;
    row.mst = mst_cost(mi_.size(), [this](int x, int y) {
      return mi_.distance(x + 1, y + 1);
    });
    row.lightness = row.mst > 0 ? row.cost / row.mst : 0.0;
    if (with_opt && mi_.size() <= 20) {
      row.opt = mwpm_bruteforce(mi_.size(), [this](int x, int y) {
                  return mi_.distance(x + 1, y + 1);
                }).cost;
      row.ratio = *row.opt > 0 ? row.cost / *row.opt : 1.0;
    }
    return row;
  }

  double cost_source() const {
    auto d = [this](PointId x, PointId y) { return mi_.distance(x, y); };
    return algo_ == Algo::inward ? inward_->cost_source(d) : hp_->cost_source(d);
  }
  double cost_hst() const {
    return algo_ == Algo::inward ? inward_->cost_hst() : hp_->cost_hst();
  }
  const MetricIndex& metric() const { return mi_; }
  const HstTree& tree() const { return tree_; }
  const RecourseMatching& matching() const {
    return algo_ == Algo::inward ? inward_->matching() : hp_->matching();
  }
  int hst_height() const {
    int h = 0;
    tree_.for_each_node([&](HstNode* n) { h = std::max(h, n->depth); });
    return h;
  }
  bool hp_audit(std::string* why = nullptr) const {
    return hp_ ? hp_->audit(why) : true;
  }

 private:
  PointId append(const std::vector<double>& payload) {
    const PointId id = mi_.points().is_euclidean()
                           ? mi_.append_coords(payload)
                           : mi_.append_row(payload);
    radii_.sample_next(id, mi_.estimate_ddim(id));
    return id;
  }

  void insert_into_tree(PointId x) {
    auto key = [this](PointId p, int s) { return cluster_key(p, s); };
    const auto rep = HstBuilder::insert(tree_, mi_, x, key);
    if (algo_ == Algo::inward) inward_->on_insert(rep);
    else hp_->on_insert(rep);
    if (mi_.size() % 2 == 1) {
      step_deletions_ = matching().step_deletions();
      step_additions_ = matching().step_additions();
    } else {
      step_deletions_ += matching().step_deletions();
      step_additions_ += matching().step_additions();
    }
  }

  ClusterKey cluster_key(PointId p, int scale) {
    auto it = key_cache_.find({p, scale});
    if (it != key_cache_.end()) return it->second;
    ClusterKey k;
    if (variant_ == Variant::doubling) {
      PaddedDecomposition dec(mi_, radii_);
      k = ClusterKey{ClusterKey::Kind::net_center, dec.center_of(p, scale), 0};
    } else {
      k = euclid_->cluster_of(p, scale);
    }
    key_cache_.emplace(std::pair<PointId, int>{p, scale}, k);
    return k;
  }

  MetricIndex mi_;
  RadiusStore radii_;
  HstTree tree_;
  Variant variant_;
  Algo algo_;
  std::uint64_t seed_;
  std::unique_ptr<EuclideanDecomposition> euclid_;
  std::unique_ptr<InwardMatcher> inward_;
  std::unique_ptr<HpMatcher> hp_;
  std::map<std::pair<PointId, int>, ClusterKey> key_cache_;
  int step_deletions_ = 0;
  int step_additions_ = 0;
};

}  // namespace omm
