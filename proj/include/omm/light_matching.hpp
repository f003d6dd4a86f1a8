#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "omm/line_matching.hpp"
#include "omm/metric.hpp"

namespace omm {

// Perfect matching of weight O(log n) * MST in any metric: an online
// spanning forest, its Euler tours and Hamilton paths, and the laminar
// line matching driven purely by path order. The tree strategy is
// pluggable; greedy attaches each arrival to its nearest predecessor with
// zero tree recourse, swap-improved additionally applies up to a budget of
// best-improvement edge swaps per insertion.
class LightMatcher {
 public:
  enum class Strategy { greedy, swap_improved };

  LightMatcher(std::function<double(PointId, PointId)> dist,
               Strategy strategy = Strategy::greedy, int swap_budget = 0);
  ~LightMatcher();
  LightMatcher(const LightMatcher&) = delete;
  LightMatcher& operator=(const LightMatcher&) = delete;

  void insert_point(PointId x);
  void insert_pair(PointId x, PointId y);

  // forest surgery; exposed for the tour machinery and swap strategy
  void tree_edge_insert(PointId u, PointId v);
  void tree_edge_delete(PointId u, PointId v);

  int last_pair_modifications() const { return last_pair_mods_; }
  int last_pair_deletions() const { return last_pair_dels_; }
  int last_pair_additions() const { return last_pair_mods_ - last_pair_dels_; }
  int last_event_splices() const { return last_splices_; }
  double matching_weight() const { return weight_; }
  double matching_weight_exact() const;
  double tree_cost() const;
  int size() const { return static_cast<int>(vertices_.size()); }

  std::vector<std::pair<PointId, PointId>> matching_edges() const;
  std::vector<PointId> hamilton_path(PointId member) const;
  std::vector<std::pair<PointId, PointId>> euler_tour(PointId member) const;

  // every tree edge appears once per direction, consecutive tour edges
  // chain, and the path order equals first appearances along the tour
  bool verify_tours(std::string* why = nullptr) const;

  LineMatching& lines() { return lines_; }

 private:
  struct Tour;  // balanced sequence of directed edges
  struct TreeInfo;

  PointId nearest_predecessor(PointId x) const;
  void improve_swaps();
  void rebuild_component(int& cv, PointId new_root);
  int component_of(PointId v) const;

  std::function<double(PointId, PointId)> dist_;
  Strategy strategy_;
  int swap_budget_;
  LineMatching lines_;
  std::vector<PointId> vertices_;
  std::unordered_map<PointId, LineMatching::Handle> handle_;
  std::unordered_map<PointId, PointId> parent_;
  std::unordered_map<PointId, std::vector<PointId>> adj_;
  std::map<int, TreeInfo>* trees_;
  void* tour_pool_;
  double weight_ = 0.0;
  std::uint64_t mods_ = 0;
  std::uint64_t dels_ = 0;
  int last_pair_mods_ = 0;
  int last_pair_dels_ = 0;
  int last_splices_ = 0;
};

}  // namespace omm
