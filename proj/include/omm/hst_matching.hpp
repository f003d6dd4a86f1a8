#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "omm/hst.hpp"
#include "omm/line_matching.hpp"

namespace omm {

// Current perfect (or near-perfect) matching plus an append-only log of
// edge insertions and deletions; recourse is the deletion count per step.
class RecourseMatching {
 public:
  struct LogEntry {
    int step;
    bool add;
    PointId a, b;
  };

  void begin_step() {
    ++step_;
    step_add_ = step_del_ = 0;
  }

  void add_edge(PointId a, PointId b) {
    norm(a, b);
    edges_.insert({a, b});
    log_.push_back({step_, true, a, b});
    ++step_add_;
  }

  void del_edge(PointId a, PointId b) {
    norm(a, b);
    edges_.erase({a, b});
    log_.push_back({step_, false, a, b});
    ++step_del_;
  }

  int step() const { return step_; }
  int step_additions() const { return step_add_; }
  int step_deletions() const { return step_del_; }
  const std::set<std::pair<PointId, PointId>>& edges() const { return edges_; }
  const std::vector<LogEntry>& log() const { return log_; }

  PointId partner(PointId p) const {
    for (const auto& [a, b] : edges_) {
      if (a == p) return b;
      if (b == p) return a;
    }
    return 0;
  }

  double cost(const std::function<double(PointId, PointId)>& dist) const {
    double s = 0.0;
    for (const auto& [a, b] : edges_) s += dist(a, b);
    return s;
  }

  bool replays_to_current() const {
    std::set<std::pair<PointId, PointId>> replay;
    for (const auto& e : log_) {
      if (e.add) replay.insert({e.a, e.b});
      else replay.erase({e.a, e.b});
    }
    return replay == edges_;
  }

 private:
  static void norm(PointId& a, PointId& b) {
    if (a > b) std::swap(a, b);
  }
  std::set<std::pair<PointId, PointId>> edges_;
  std::vector<LogEntry> log_;
  int step_ = 0;
  int step_add_ = 0;
  int step_del_ = 0;
};

// Exact minimum-weight matching on an evolving ultrametric tree. Every
// subtree internally matches floor(count/2) of its active leaves; a new
// leaf is absorbed by walking the unique repair chain upward, deleting at
// most height-many edges.
class InwardMatcher {
 public:
  explicit InwardMatcher(HstTree& tree) : tree_(&tree) {}

  // pipeline entry: process a builder report (handles created chains)
  void on_insert(const HstBuilder::InsertReport& rep);
  // synthetic entry: plain leaf attached to an existing tree
  void insert_leaf(HstNode* leaf);
  void insert_pair(HstNode* a, HstNode* b);

  const RecourseMatching& matching() const { return rm_; }
  RecourseMatching& matching() { return rm_; }
  int last_insert_deletions() const { return last_del_; }

  double cost_hst() const;
  double cost_source(const std::function<double(PointId, PointId)>& d) const;

  // every node matches floor(active/2) leaves internally
  bool verify_inward(std::string* why = nullptr) const;

 private:
  void absorb(HstNode* leaf);
  std::vector<PointId> free_points(HstNode* v) const;

  HstTree* tree_;
  RecourseMatching rm_;
  int last_del_ = 0;
};

// 2-approximate matching with recourse polylogarithmic in the number of
// leaves: heavy-path decomposition with one line-matching instance per
// path over the odd hanging subtrees, plus a pinned escape slot when the
// path's total is odd.
class HpMatcher {
 public:
  explicit HpMatcher(HstTree& tree) : tree_(&tree) {}

  void on_insert(const HstBuilder::InsertReport& rep);
  void insert_leaf(HstNode* leaf);
  void insert_pair(HstNode* a, HstNode* b);

  const RecourseMatching& matching() const { return rm_; }
  int last_insert_modifications() const { return last_mods_; }

  double cost_hst() const;
  double cost_source(const std::function<double(PointId, PointId)>& d) const;

  // heavy flags consistent with counts; per-path escape discipline holds
  bool verify_hp_inward(std::string* why = nullptr) const;

  void debug_dump() const;
  bool audit(std::string* why = nullptr) const;

 private:
  struct PathRec {
    int W = -1;  // line set of all entries when unpinned
    int L = -1, M = -1, R = -1;  // pinned layout
    bool pinned = false;
    PointId escape = 0;
    std::vector<std::pair<PointId, PointId>> realized;
  };

  HstNode* top_of(HstNode* u) const;
  HstNode* entry_attach(HstNode* u) const;
  HstNode* entry_location(HstNode* u) const;
  std::pair<int, int> entry_key(HstNode* u) const;
  bool entry_wanted(HstNode* u) const;
  void ensure_unpinned(HstNode* top);
  void attach_path(HstNode* child);
  void detach_path(HstNode* child);
  void reconcile_entry(HstNode* u);
  void splice_created(const HstBuilder::InsertReport& rep);
  void re_pin(HstNode* top);
  PointId resolve_escape(HstNode* entry) const;
  std::vector<std::pair<PointId, PointId>> realize(HstNode* top) const;
  void finalize();
  void collect_leaves(HstNode* n, std::vector<PointId>& out) const;
  void mark_dirty(HstNode* top) { dirty_.insert(top); }

  struct EntryRec {
    LineMatching::Handle handle;
    HstNode* attach;  // ordering anchor at registration time
  };

  HstTree* tree_;
  LineMatching lines_;
  RecourseMatching rm_;
  std::unordered_map<HstNode*, PathRec> paths_;
  std::unordered_map<HstNode*, EntryRec> entry_of_;
  std::unordered_map<int, HstNode*> set_owner_;
  std::unordered_map<HstNode*, HstNode*> heavy_child_;
  std::set<HstNode*> dirty_;
  int last_mods_ = 0;
};

}  // namespace omm
