#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace omm {

// Collection of ordered sets, each carrying a laminar near-perfect matching
// with virtual edges. Ranks are implicit: elements live in balanced
// sequences with stable handles, so merge and split never renumber.
//
// Per set, the maintained state satisfies:
//   (I1) real and virtual edges together are laminar,
//   (I2) nothing lies strictly between an edge and its virtual edge,
//   (I3) unmatched points are not contained in any edge,
//   (I4) nested real edges have virtual lengths halving outward,
// which forces depth <= ceil(log2 m) and weight <= depth * diameter for
// any coordinates consistent with the order.
class LineMatching {
 public:
  struct Node;
  using Handle = Node*;

  LineMatching();
  ~LineMatching();
  LineMatching(const LineMatching&) = delete;
  LineMatching& operator=(const LineMatching&) = delete;

  // --- collection operations ---
  int create(std::uint64_t tag = 0);
  void destroy(int set_id);  // only 1-element sets
  int merge(int a, int b);   // concatenate b after a; returns a
  std::pair<int, int> split(int set_id, int k);  // {1..k}, {k+1..m}
  Handle insert_point(int set_id, int after_pos, std::uint64_t tag = 0);
  void remove_point(Handle h);
  void repair(int set_id);  // full scan repair; entry asserts (I1)-(I3)

  // --- queries ---
  int size(int set_id) const;
  int depth(int set_id) const;
  int rank(Handle h) const;  // 1-based position
  int set_of(Handle h) const;
  Handle at(int set_id, int k) const;
  Handle unmatched(int set_id) const;  // null when the set is even
  Handle partner(Handle h) const;
  std::uint64_t tag(Handle h) const;
  void set_tag(Handle h, std::uint64_t t);
  std::vector<Handle> elements(int set_id) const;
  std::vector<std::pair<Handle, Handle>> edges(int set_id) const;
  bool live(int set_id) const;

  // dump format: one line per edge, "a b xi_c xi_d" (1-based ranks)
  struct EdgeDump {
    int a, b, c, d;
  };
  std::vector<EdgeDump> dump(int set_id) const;

  // --- instrumentation ---
  std::uint64_t modifications() const { return mods_; }
  int last_op_modifications() const { return static_cast<int>(last_op_); }
  std::function<void(Handle, Handle, bool added)> on_edge_change;

  // Independent quadratic checker over the dump representation; returns
  // false and fills `why` on the first violated invariant.
  static bool check_invariants(const std::vector<EdgeDump>& edges, int m,
                               const std::vector<int>& unmatched_ranks,
                               std::string* why = nullptr);

 private:
  struct SetRec;
  Node* alloc_node(std::uint64_t tag);
  void add_edge(Node* u, Node* v, Node* xi_lo, Node* xi_hi);
  void del_edge(Node* left_end);
  void run_repair(std::vector<Node*> candidates, int set_size);
  int register_set(Node* root, Node* unmatched);
  void swap_ids(int a, int b);
  void begin_op() {
    if (op_depth_++ == 0) op_start_ = mods_;
  }
  void end_op() {
    if (--op_depth_ == 0) last_op_ = mods_ - op_start_;
  }

  std::vector<SetRec>* sets_;
  std::vector<Node*>* pool_;
  std::uint64_t mods_ = 0;
  std::uint64_t last_op_ = 0;
  std::uint64_t op_start_ = 0;
  int op_depth_ = 0;
  std::uint64_t prio_state_ = 0x9e3779b97f4a7c15ULL;
};

}  // namespace omm
