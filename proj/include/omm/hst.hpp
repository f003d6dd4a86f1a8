#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "omm/decomposition.hpp"

namespace omm {

// Rooted labeled tree realizing an ultrametric: distances are labels of
// least common ancestors. Internal labels are powers of two halving down
// every level; leaves (and buckets of co-located points) carry label 0.
struct HstNode {
  HstNode* parent = nullptr;
  int scale = 0;     // label = 2^scale for internal nodes
  double label = 0;  // 0 for leaves and duplicate buckets
  PointId point = 0; // leaves only
  ClusterKey key_in_parent{};
  int depth = 0;
  int child_seq = 0;  // creation order among siblings
  int seq_counter = 0;
  std::map<ClusterKey, HstNode*> children;

  // matcher bookkeeping
  int active = 0;
  bool heavy = false;

  bool is_leaf() const { return point != 0; }
  int next_child_seq() { return ++seq_counter; }
};

class HstTree {
 public:
  HstTree() = default;
  HstTree(const HstTree&) = delete;
  HstTree& operator=(const HstTree&) = delete;

  HstNode* root() const { return root_; }
  HstNode* leaf_of(PointId p) const {
    auto it = leaves_.find(p);
    return it == leaves_.end() ? nullptr : it->second;
  }
  int leaf_count() const { return static_cast<int>(leaves_.size()); }

  HstNode* lca(HstNode* a, HstNode* b) const {
    while (a != b) {
      if (a->depth >= b->depth) a = a->parent;
      else b = b->parent;
    }
    return a;
  }

  double distance(PointId a, PointId b) const {
    if (a == b) return 0.0;
    HstNode* la = leaf_of(a);
    HstNode* lb = leaf_of(b);
    if (!la || !lb) throw std::out_of_range("point not embedded");
    return lca(la, lb)->label;
  }

  double diameter() const {
    if (leaves_.size() < 2) throw std::logic_error("diameter needs 2 points");
    return root_->label;
  }

  // -- construction primitives (used by the online builder and by tests
  //    assembling synthetic trees) --

  HstNode* make_internal(HstNode* parent, int scale, double label,
                         ClusterKey key) {
    auto* n = alloc();
    n->scale = scale;
    n->label = label;
    n->key_in_parent = key;
    attach(n, parent);
    return n;
  }

  HstNode* make_leaf(HstNode* parent, PointId p, ClusterKey key) {
    auto* n = alloc();
    n->point = p;
    n->label = 0.0;
    n->key_in_parent = key;
    attach(n, parent);
    leaves_[p] = n;
    return n;
  }

  // unlink a subtree from its parent; it must be reattached before any
  // query touches it
  void detach(HstNode* unit) {
    if (unit->parent) {
      unit->parent->children.erase(unit->key_in_parent);
      unit->parent = nullptr;
    }
  }

  // reparent a subtree (leaf deepening); ancestors' pairwise distances are
  // unaffected because the subtree only moves deeper along one chain
  void move_subtree(HstNode* unit, HstNode* new_parent, ClusterKey key) {
    detach(unit);
    unit->key_in_parent = key;
    attach(unit, new_parent);
    refresh_depths(unit);
  }

  void set_root(HstNode* n) { root_ = n; }

  std::string export_text() const {
    std::ostringstream os;
    if (root_) export_rec(os, root_, 0);
    return os.str();
  }

  // parse the export format: one node per line, "depth label [point]"
  static std::unique_ptr<HstTree> parse(const std::string& text) {
    auto tree = std::make_unique<HstTree>();
    std::istringstream is(text);
    std::string line;
    std::vector<HstNode*> stack;
    std::int64_t synth = 0;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      int depth;
      double label;
      ls >> depth >> label;
      PointId pt = 0;
      ls >> pt;
      HstNode* parent = depth == 0 ? nullptr : stack.at(depth - 1);
      ClusterKey key{ClusterKey::Kind::carve, ++synth, 0};
      HstNode* n = pt != 0 ? tree->make_leaf(parent, pt, key)
                           : tree->make_internal(
                                 parent, static_cast<int>(std::lround(std::log2(
                                             label > 0 ? label : 1.0))),
                                 label, key);
      if (!parent) tree->set_root(n);
      stack.resize(depth);
      stack.push_back(n);
    }
    return tree;
  }

  static bool same_shape(const HstNode* a, const HstNode* b) {
    if ((a == nullptr) != (b == nullptr)) return false;
    if (!a) return true;
    if (a->label != b->label || a->point != b->point) return false;
    if (a->children.size() != b->children.size()) return false;
    auto ia = a->children.begin();
    auto ib = b->children.begin();
    for (; ia != a->children.end(); ++ia, ++ib)
      if (!same_shape(ia->second, ib->second)) return false;
    return true;
  }

  template <typename F>
  void for_each_node(F&& f) const {
    for (const auto& n : nodes_) f(n.get());
  }

 private:
  HstNode* alloc() {
    nodes_.push_back(std::make_unique<HstNode>());
    return nodes_.back().get();
  }

  void attach(HstNode* n, HstNode* parent) {
    n->parent = parent;
    if (parent) {
      n->child_seq = parent->next_child_seq();
      parent->children[n->key_in_parent] = n;
      n->depth = parent->depth + 1;
    } else {
      n->depth = 0;
    }
  }

  void refresh_depths(HstNode* n) {
    n->depth = n->parent ? n->parent->depth + 1 : 0;
    for (auto& [k, c] : n->children) refresh_depths(c);
  }

  void export_rec(std::ostringstream& os, const HstNode* n, int depth) const {
    os << depth << ' ';
    os.precision(17);
    os << n->label;
    if (n->is_leaf()) os << ' ' << n->point;
    os << '\n';
    for (const auto& [k, c] : n->children) export_rec(os, c, depth + 1);
  }

  HstNode* root_ = nullptr;
  std::map<PointId, HstNode*> leaves_;
  std::vector<std::unique_ptr<HstNode>> nodes_;
};

// Drives the tree from per-scale cluster assignments, forcing them into a
// laminar family: a new point walks down matching keys scale by scale and
// branches off where its chain first diverges. Earlier leaves may gain
// deeper parents, but no pairwise tree distance ever changes.
class HstBuilder {
 public:
  struct InsertReport {
    HstNode* leaf = nullptr;
    HstNode* moved_unit = nullptr;      // subtree that was deepened, if any
    HstNode* moved_from = nullptr;      // its previous parent
    std::vector<HstNode*> created;      // new internal nodes, top-down
    bool root_extended = false;
  };

  template <typename KeyFn>
  static InsertReport insert(HstTree& tree, const MetricIndex& mi, PointId x,
                             KeyFn&& key) {
    InsertReport rep;
    if (tree.leaf_count() == 0) {
      rep.leaf = tree.make_leaf(nullptr, x, ClusterKey{});
      tree.set_root(rep.leaf);
      return rep;
    }
    const double diam = mi.points().stats().diameter;
    const int agree_scale =
        static_cast<int>(std::ceil(std::log2(diam > 0 ? diam : 1.0))) + 2;
    HstNode* root = tree.root();

    if (root->label == 0.0) {
      // every previous point is co-located: the tree is a bare leaf or a
      // single duplicate bucket
      const PointId p1 = representative(root);
      if (mi.distance(p1, x) == 0.0) {
        if (root->is_leaf()) {
          HstNode* bucket = tree.make_internal(nullptr, 0, 0.0, ClusterKey{});
          rep.created.push_back(bucket);
          rep.moved_unit = root;
          tree.move_subtree(root, bucket,
                            ClusterKey{ClusterKey::Kind::carve, 1, 0});
          tree.set_root(bucket);
          root = bucket;
        }
        rep.leaf = tree.make_leaf(
            root, x,
            ClusterKey{ClusterKey::Kind::carve,
                       static_cast<std::int64_t>(root->children.size() + 1), 0});
        return rep;
      }
      const int share = shared_from(mi, key, x, p1, agree_scale);
      HstNode* top = tree.make_internal(nullptr, share, std::ldexp(1.0, share),
                                        ClusterKey{});
      rep.created.push_back(top);
      rep.moved_unit = root;
      tree.move_subtree(root, top, key(p1, share - 1));
      tree.set_root(top);
      rep.leaf = tree.make_leaf(top, x, key(x, share - 1));
      return rep;
    }

    // raise the root while x is not in its cluster chain; partitions are
    // not nested, so agreement must hold on the whole scale suffix
    const PointId rep_pt = representative(root);
    const int share = shared_from(mi, key, x, rep_pt, agree_scale);
    if (share > root->scale) {
      rep.root_extended = true;
      HstNode* top = tree.make_internal(nullptr, share, std::ldexp(1.0, share),
                                        ClusterKey{});
      rep.created.push_back(top);
      HstNode* cur = top;
      for (int s = share - 1; s > root->scale; --s) {
        cur = tree.make_internal(cur, s, std::ldexp(1.0, s), key(rep_pt, s));
        rep.created.push_back(cur);
      }
      HstNode* old_root = root;
      tree.set_root(top);
      tree.move_subtree(old_root, cur, key(rep_pt, old_root->scale));
      if (!rep.moved_unit) rep.moved_unit = old_root;
      root = top;
    }

    HstNode* n = root;
    for (;;) {
      const int child_scale = n->scale - 1;
      const ClusterKey k = key(x, child_scale);
      auto it = n->children.find(k);
      if (it == n->children.end()) {
        rep.leaf = tree.make_leaf(n, x, k);
        return rep;
      }
      HstNode* c = it->second;
      if (c->label > 0.0) {
        n = c;
        continue;
      }
      // a leaf or a duplicate bucket occupies x's cluster: deepen the
      // chain until the two assignments diverge
      const PointId other = representative(c);
      if (mi.distance(x, other) == 0.0 && !c->is_leaf()) {
        rep.leaf = tree.make_leaf(
            c, x,
            ClusterKey{ClusterKey::Kind::carve,
                       static_cast<std::int64_t>(c->children.size() + 1), 0});
        return rep;
      }
      rep.moved_unit = c;
      rep.moved_from = n;
      tree.detach(c);  // its slot is about to host the chain
      HstNode* host = n;
      int s = child_scale;
      ClusterKey unit_key = k;
      while (mi.distance(x, other) > 0.0) {
        const ClusterKey kx = key(x, s - 1);
        const ClusterKey ko = key(other, s - 1);
        HstNode* mid = tree.make_internal(host, s, std::ldexp(1.0, s), unit_key);
        rep.created.push_back(mid);
        if (kx != ko) {
          tree.move_subtree(c, mid, ko);
          rep.leaf = tree.make_leaf(mid, x, kx);
          return rep;
        }
        host = mid;
        unit_key = kx;
        --s;
      }
      HstNode* bucket = tree.make_internal(host, s, 0.0, unit_key);
      rep.created.push_back(bucket);
      tree.move_subtree(c, bucket, ClusterKey{ClusterKey::Kind::carve, 1, 0});
      rep.leaf = tree.make_leaf(bucket, x,
                                ClusterKey{ClusterKey::Kind::carve, 2, 0});
      return rep;
    }
  }

 private:
  // smallest scale s such that x and p share their cluster at every scale
  // in [s, agree_scale]; sharing is automatic above agree_scale
  template <typename KeyFn>
  static int shared_from(const MetricIndex& mi, KeyFn&& key, PointId x,
                         PointId p, int agree_scale) {
    const double d = mi.distance(x, p);
    const int floor_scale =
        d > 0.0 ? static_cast<int>(std::floor(std::log2(d))) : agree_scale;
    int share = agree_scale + 1;
    for (int s = agree_scale; s >= floor_scale; --s) {
      if (key(x, s) != key(p, s)) break;
      share = s;
    }
    return share;
  }

  static PointId representative(HstNode* n) {
    while (!n->is_leaf()) n = n->children.begin()->second;
    return n->point;
  }
};

}  // namespace omm
