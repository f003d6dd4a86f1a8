#include "omm/line_matching.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

#include "omm/rng.hpp"

namespace omm {

namespace {
[[noreturn]] void fail(const char* what) { throw std::logic_error(what); }
void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}
int ilog2ceil(int m) {
  int k = 0;
  while ((1 << k) < m) ++k;
  return k;
}
}  // namespace

struct LineMatching::Node {
  Node* l = nullptr;
  Node* r = nullptr;
  Node* p = nullptr;
  std::uint32_t prio = 0;
  int sz = 1;
  Node* partner = nullptr;
  Node* xi_lo = nullptr;
  Node* xi_hi = nullptr;
  bool left_end = false;
  std::uint64_t tag = 0;
  int set_hint = -1;  // valid at roots
  int scratch = 0;    // rank cache during split scans
};

struct LineMatching::SetRec {
  Node* root = nullptr;
  Node* unmatched = nullptr;
  bool live = false;
};

using Node = LineMatching::Node;

namespace {

int nsz(Node* n) { return n ? n->sz : 0; }
void pull(Node* n) { n->sz = 1 + nsz(n->l) + nsz(n->r); }

Node* t_root(Node* n) {
  while (n->p) n = n->p;
  return n;
}

int t_rank(Node* n) {
  int r = nsz(n->l) + 1;
  for (Node* c = n; c->p; c = c->p)
    if (c->p->r == c) r += nsz(c->p->l) + 1;
  return r;
}

Node* t_merge(Node* a, Node* b) {
  if (!a) {
    if (b) b->p = nullptr;
    return b;
  }
  if (!b) {
    a->p = nullptr;
    return a;
  }
  if (a->prio > b->prio) {
    Node* m = t_merge(a->r, b);
    a->r = m;
    if (m) m->p = a;
    pull(a);
    a->p = nullptr;
    return a;
  }
  Node* m = t_merge(a, b->l);
  b->l = m;
  if (m) m->p = b;
  pull(b);
  b->p = nullptr;
  return b;
}

std::pair<Node*, Node*> t_split(Node* t, int k) {  // first k elements left
  if (!t) return {nullptr, nullptr};
  if (nsz(t->l) >= k) {
    auto [a, b] = t_split(t->l, k);
    t->l = b;
    if (b) b->p = t;
    pull(t);
    t->p = nullptr;
    if (a) a->p = nullptr;
    return {a, t};
  }
  auto [a, b] = t_split(t->r, k - nsz(t->l) - 1);
  t->r = a;
  if (a) a->p = t;
  pull(t);
  t->p = nullptr;
  if (b) b->p = nullptr;
  return {t, b};
}

Node* t_at(Node* t, int k) {
  for (;;) {
    const int L = nsz(t->l);
    if (k == L + 1) return t;
    if (k <= L) {
      t = t->l;
    } else {
      k -= L + 1;
      t = t->r;
    }
  }
}

Node* t_min(Node* t) {
  while (t->l) t = t->l;
  return t;
}

Node* t_succ(Node* n) {
  if (n->r) return t_min(n->r);
  while (n->p && n->p->r == n) n = n->p;
  return n->p;
}

template <typename F>
void t_walk(Node* root, F&& f) {  // in-order, iterative
  std::vector<Node*> stack;
  Node* cur = root;
  while (cur || !stack.empty()) {
    while (cur) {
      stack.push_back(cur);
      cur = cur->l;
    }
    cur = stack.back();
    stack.pop_back();
    f(cur);
    cur = cur->r;
  }
}

}  // namespace

LineMatching::LineMatching() {
  sets_ = new std::vector<SetRec>();
  pool_ = new std::vector<Node*>();
}

LineMatching::~LineMatching() {
  for (Node* n : *pool_) delete n;
  delete pool_;
  delete sets_;
}

Node* LineMatching::alloc_node(std::uint64_t tag) {
  Node* n = new Node();
  prio_state_ = mix64(prio_state_);
  n->prio = static_cast<std::uint32_t>(prio_state_ >> 32);
  n->tag = tag;
  pool_->push_back(n);
  return n;
}

int LineMatching::register_set(Node* root, Node* unm) {
  int id = -1;
  for (int i = 0; i < static_cast<int>(sets_->size()); ++i)
    if (!(*sets_)[i].live) {
      id = i;
      break;
    }
  if (id < 0) {
    id = static_cast<int>(sets_->size());
    sets_->push_back({});
  }
  (*sets_)[id] = {root, unm, true};
  root->set_hint = id;
  return id;
}

void LineMatching::add_edge(Node* u, Node* v, Node* xlo, Node* xhi) {
  if (t_rank(u) > t_rank(v)) std::swap(u, v);
  u->partner = v;
  v->partner = u;
  u->left_end = true;
  v->left_end = false;
  u->xi_lo = xlo ? xlo : u;
  u->xi_hi = xhi ? xhi : v;
  ++mods_;
  if (on_edge_change) on_edge_change(u, v, true);
}

void LineMatching::del_edge(Node* le) {
  Node* v = le->partner;
  if (!v || !le->left_end) fail("del_edge expects a matched left endpoint");
  le->partner = nullptr;
  v->partner = nullptr;
  le->xi_lo = le->xi_hi = nullptr;
  le->left_end = v->left_end = false;
  ++mods_;
  if (on_edge_change) on_edge_change(le, v, false);
}

int LineMatching::create(std::uint64_t tag) {
  begin_op();
  Node* n = alloc_node(tag);
  const int id = register_set(n, n);
  end_op();
  return id;
}

void LineMatching::destroy(int set_id) {
  begin_op();
  SetRec& s = sets_->at(set_id);
  require(s.live, "destroy: dead set");
  require(nsz(s.root) == 1, "destroy: only 1-element sets may be removed");
  s = {nullptr, nullptr, false};
  end_op();
}

int LineMatching::merge(int a, int b) {
  begin_op();
  require(a != b, "merge: identical sets");
  SetRec& A = sets_->at(a);
  SetRec& B = sets_->at(b);
  require(A.live && B.live, "merge: dead set");
  Node* ua = A.unmatched;
  Node* ub = B.unmatched;
  const int msize = nsz(A.root) + nsz(B.root);
  Node* root = t_merge(A.root, B.root);
  A.root = root;
  root->set_hint = a;
  B = {nullptr, nullptr, false};
  if (ua && ub) {
    add_edge(ua, ub, nullptr, nullptr);
    A.unmatched = nullptr;
    run_repair({ua}, msize);
  } else {
    A.unmatched = ua ? ua : ub;
  }
  end_op();
  return a;
}

std::pair<int, int> LineMatching::split(int set_id, int k) {
  begin_op();
  SetRec& S = sets_->at(set_id);
  require(S.live, "split: dead set");
  const int m = nsz(S.root);
  require(1 <= k && k < m, "split: position out of range");

  // rank pass + crossing-edge scan
  int pos = 0;
  std::vector<Node*> order;
  order.reserve(static_cast<std::size_t>(m));
  t_walk(S.root, [&](Node* n) {
    n->scratch = ++pos;
    order.push_back(n);
  });
  std::vector<Node*> crossing;
  for (Node* n : order)
    if (n->left_end && n->xi_lo->scratch <= k && k < n->xi_hi->scratch)
      crossing.push_back(n);
  std::vector<Node*> freed;
  for (Node* e : crossing) {
    freed.push_back(e);
    freed.push_back(e->partner);
    del_edge(e);
  }
  if (S.unmatched) freed.push_back(S.unmatched);
  std::sort(freed.begin(), freed.end(),
            [](Node* x, Node* y) { return x->scratch < y->scratch; });

  auto [rl, rr] = t_split(S.root, k);

  // greedy consecutive re-pairing per side
  Node* leftover[2] = {nullptr, nullptr};
  std::vector<Node*> cands[2];
  std::size_t i = 0;
  for (int side = 0; side < 2; ++side) {
    std::vector<Node*> mine;
    while (i < freed.size() && (side == 1 || freed[i]->scratch <= k))
      mine.push_back(freed[i++]);
    for (std::size_t j = 0; j + 1 < mine.size(); j += 2) {
      add_edge(mine[j], mine[j + 1], nullptr, nullptr);
      cands[side].push_back(mine[j]);
    }
    if (mine.size() % 2) leftover[side] = mine.back();
  }
  S.root = rl;
  S.unmatched = leftover[0];
  rl->set_hint = set_id;
  const int rid = register_set(rr, leftover[1]);
  run_repair(std::move(cands[0]), k);
  run_repair(std::move(cands[1]), m - k);
  end_op();
  return {set_id, rid};
}

void LineMatching::run_repair(std::vector<Node*> candidates, int set_size) {
  if (candidates.empty()) return;
  const int guard =
      4 * static_cast<int>(candidates.size()) * (ilog2ceil(set_size) + 1) + 8;
  int iters = 0;
  std::deque<Node*> queue(candidates.begin(), candidates.end());
  while (!queue.empty()) {
    Node* a2 = queue.front();
    queue.pop_front();
    for (;;) {
      Node* b2 = a2->partner;
      if (!b2 || !a2->left_end) fail("repair: candidate is not an edge");
      const long l2 = t_rank(a2->xi_hi) - t_rank(a2->xi_lo);
      Node* best = nullptr;
      long best_len = -1;
      for (Node* cur = t_succ(a2); cur != b2;) {
        if (!cur || !cur->partner || !cur->left_end)
          fail("repair: interior of an edge must be matched left endpoints");
        const long len = t_rank(cur->xi_hi) - t_rank(cur->xi_lo);
        if (len > best_len) {
          best_len = len;
          best = cur;
        }
        cur = t_succ(cur->partner);
      }
      if (!best || 2 * best_len <= l2) break;  // halving holds; edge is fine
      if (++iters > guard) fail("repair did not converge: invariants corrupted");
      Node* a1 = best;
      Node* b1 = a1->partner;
      Node* xlo = a2->xi_lo;
      Node* xhi = a2->xi_hi;
      const long da = t_rank(a1) - t_rank(a2);
      const long db = t_rank(b2) - t_rank(b1);
      del_edge(a2);
      del_edge(a1);
      if (da <= db) {
        add_edge(a2, a1, xlo, xhi);
        add_edge(b1, b2, nullptr, nullptr);
        a2 = b1;  // only the fresh-virtual edge can violate now
      } else {
        add_edge(a2, a1, nullptr, nullptr);
        add_edge(b1, b2, xlo, xhi);
        // a2 keeps heading the fresh-virtual edge
      }
    }
  }
}

void LineMatching::repair(int set_id) {
  begin_op();
  SetRec& S = sets_->at(set_id);
  require(S.live, "repair: dead set");
  // full violator scan; entry contract wants them pairwise non-overlapping
  auto ed = dump(set_id);
  std::vector<int> viol;
  for (std::size_t x = 0; x < ed.size(); ++x)
    for (std::size_t y = 0; y < ed.size(); ++y) {
      if (x == y) continue;
      const bool nested = ed[x].a > ed[y].a && ed[x].b < ed[y].b;
      if (nested && 2 * (ed[x].d - ed[x].c) > (ed[y].d - ed[y].c)) {
        viol.push_back(static_cast<int>(y));
        break;
      }
    }
  std::sort(viol.begin(), viol.end());
  viol.erase(std::unique(viol.begin(), viol.end()), viol.end());
  for (std::size_t x = 0; x < viol.size(); ++x)
    for (std::size_t y = x + 1; y < viol.size(); ++y) {
      const auto& e = ed[viol[x]];
      const auto& f = ed[viol[y]];
      const bool disjoint = e.b < f.a || f.b < e.a;
      require(disjoint, "repair: violators must be pairwise non-overlapping");
    }
  std::vector<Node*> cands;
  for (int v : viol) cands.push_back(at(set_id, ed[v].a));
  run_repair(std::move(cands), nsz(S.root));
  end_op();
}

Node* LineMatching::insert_point(int set_id, int after_pos, std::uint64_t tag) {
  begin_op();
  require(sets_->at(set_id).live, "insert: dead set");
  const int m = nsz(sets_->at(set_id).root);
  require(0 <= after_pos && after_pos <= m, "insert: position out of range");
  Node* fresh = nullptr;
  if (after_pos == 0) {
    const int s = create(tag);
    fresh = (*sets_)[s].root;
    const int merged = merge(s, set_id);
    swap_ids(merged, set_id);
  } else if (after_pos == m) {
    const int s = create(tag);
    fresh = (*sets_)[s].root;
    merge(set_id, s);
  } else {
    auto [lid, rid] = split(set_id, after_pos);
    const int s = create(tag);
    fresh = (*sets_)[s].root;
    merge(lid, s);
    merge(lid, rid);
  }
  end_op();
  return fresh;
}

void LineMatching::remove_point(Handle h) {
  begin_op();
  const int id = set_of(h);
  const int m = nsz(sets_->at(id).root);
  const int r = t_rank(h);
  if (m == 1) {
    destroy(id);
    end_op();
    return;
  }
  if (r == 1) {
    auto [lid, rid] = split(id, 1);  // left part keeps id and holds only h
    destroy(lid);
    swap_ids(rid, id);
  } else if (r == m) {
    auto [lid, rid] = split(id, m - 1);
    destroy(rid);
  } else {
    auto [lid, rid] = split(id, r - 1);
    auto [mid, tail] = split(rid, 1);
    destroy(mid);
    merge(lid, tail);
  }
  end_op();
}

void LineMatching::swap_ids(int a, int b) {
  if (a == b) return;
  SetRec& A = sets_->at(a);
  SetRec& B = sets_->at(b);
  std::swap(A, B);
  if (A.root) A.root->set_hint = a;
  if (B.root) B.root->set_hint = b;
}

int LineMatching::size(int set_id) const { return nsz(sets_->at(set_id).root); }

int LineMatching::depth(int set_id) const {
  int cur = 0, best = 0;
  t_walk(sets_->at(set_id).root, [&](Node* n) {
    if (n->left_end) best = std::max(best, ++cur);
    else if (n->partner) --cur;
  });
  return best;
}

int LineMatching::rank(Handle h) const { return t_rank(h); }

int LineMatching::set_of(Handle h) const { return t_root(h)->set_hint; }

LineMatching::Handle LineMatching::at(int set_id, int k) const {
  return t_at(sets_->at(set_id).root, k);
}

LineMatching::Handle LineMatching::unmatched(int set_id) const {
  return sets_->at(set_id).unmatched;
}

LineMatching::Handle LineMatching::partner(Handle h) const { return h->partner; }

std::uint64_t LineMatching::tag(Handle h) const { return h->tag; }
void LineMatching::set_tag(Handle h, std::uint64_t t) { h->tag = t; }

bool LineMatching::live(int set_id) const {
  return set_id >= 0 && set_id < static_cast<int>(sets_->size()) &&
         (*sets_)[set_id].live;
}

std::vector<LineMatching::Handle> LineMatching::elements(int set_id) const {
  std::vector<Handle> out;
  if (Node* r = sets_->at(set_id).root) t_walk(r, [&](Node* n) { out.push_back(n); });
  return out;
}

std::vector<std::pair<LineMatching::Handle, LineMatching::Handle>>
LineMatching::edges(int set_id) const {
  std::vector<std::pair<Handle, Handle>> out;
  if (Node* r = sets_->at(set_id).root)
    t_walk(r, [&](Node* n) {
      if (n->left_end) out.emplace_back(n, n->partner);
    });
  return out;
}

std::vector<LineMatching::EdgeDump> LineMatching::dump(int set_id) const {
  std::vector<EdgeDump> out;
  Node* r = sets_->at(set_id).root;
  if (!r) return out;
  int pos = 0;
  t_walk(r, [&](Node* n) { n->scratch = ++pos; });
  t_walk(r, [&](Node* n) {
    if (n->left_end)
      out.push_back({n->scratch, n->partner->scratch, n->xi_lo->scratch,
                     n->xi_hi->scratch});
  });
  return out;
}

bool LineMatching::check_invariants(const std::vector<EdgeDump>& edges, int m,
                                    const std::vector<int>& unmatched_ranks,
                                    std::string* why) {
  auto bad = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (unmatched_ranks.size() > 1) return bad("more than one unmatched point");
  std::vector<int> cover(static_cast<std::size_t>(m) + 1, 0);
  for (const auto& e : edges) {
    if (!(1 <= e.c && e.c <= e.a && e.a < e.b && e.b <= e.d && e.d <= m))
      return bad("edge/virtual nesting a,b within c,d violated");
    if (cover[e.a]++ || cover[e.b]++) return bad("endpoint matched twice");
  }
  for (int u : unmatched_ranks)
    if (cover[u]) return bad("unmatched rank is an edge endpoint");
  // pairwise interval discipline over M union Xi
  std::vector<std::pair<int, int>> iv;
  for (const auto& e : edges) {
    iv.emplace_back(e.a, e.b);
    iv.emplace_back(e.c, e.d);
  }
  auto crossing = [](std::pair<int, int> x, std::pair<int, int> y) {
    return (x.first < y.first && y.first <= x.second && x.second < y.second) ||
           (y.first < x.first && x.first <= y.second && y.second < x.second);
  };
  for (std::size_t i = 0; i < iv.size(); ++i)
    for (std::size_t j = i + 1; j < iv.size(); ++j)
      if (crossing(iv[i], iv[j])) return bad("(I1) crossing intervals");
  // (I2): nothing strictly between an edge and its virtual edge
  for (const auto& e : edges)
    for (const auto& f : iv) {
      const bool inside_outer =
          e.c <= f.first && f.second <= e.d && (e.c < f.first || f.second < e.d);
      const bool contains_inner =
          f.first <= e.a && e.b <= f.second && (f.first < e.a || e.b < f.second);
      if (inside_outer && contains_inner)
        return bad("(I2) interval strictly between edge and its virtual edge");
    }
  // (I3)
  for (int u : unmatched_ranks)
    for (const auto& f : iv)
      if (f.first <= u && u <= f.second) return bad("(I3) unmatched point covered");
  // (I4)
  for (const auto& x : edges)
    for (const auto& y : edges) {
      const bool nested = y.a < x.a && x.b < y.b;
      if (nested && 2 * (x.d - x.c) > (y.d - y.c))
        return bad("(I4) nested virtual lengths fail to halve");
    }
  // depth bound
  std::vector<EdgeDump> sorted = edges;
  std::sort(sorted.begin(), sorted.end(), [](const EdgeDump& a, const EdgeDump& b) {
    return a.a != b.a ? a.a < b.a : a.b > b.b;
  });
  std::vector<int> stack;
  int depth = 0;
  for (const auto& e : sorted) {
    while (!stack.empty() && stack.back() < e.a) stack.pop_back();
    stack.push_back(e.b);
    depth = std::max(depth, static_cast<int>(stack.size()));
  }
  if (m >= 2 && depth > ilog2ceil(m))
    return bad("depth exceeds ceil(log2 m)");
  return true;
}

}  // namespace omm
