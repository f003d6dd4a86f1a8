#include "omm/light_matching.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "omm/rng.hpp"

namespace omm {

namespace {
[[noreturn]] void fail(const char* what) { throw std::logic_error(what); }
void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}
}  // namespace

// -- balanced sequence of directed tour edges ------------------------------

struct TourNode {
  TourNode* l = nullptr;
  TourNode* r = nullptr;
  TourNode* p = nullptr;
  std::uint32_t prio = 0;
  int sz = 1;
  PointId src = 0, dst = 0;
};

namespace {

int tsz(TourNode* n) { return n ? n->sz : 0; }
void tpull(TourNode* n) { n->sz = 1 + tsz(n->l) + tsz(n->r); }

TourNode* tmerge(TourNode* a, TourNode* b) {
  if (!a) {
    if (b) b->p = nullptr;
    return b;
  }
  if (!b) {
    a->p = nullptr;
    return a;
  }
  if (a->prio > b->prio) {
    TourNode* m = tmerge(a->r, b);
    a->r = m;
    if (m) m->p = a;
    tpull(a);
    a->p = nullptr;
    return a;
  }
  TourNode* m = tmerge(a, b->l);
  b->l = m;
  if (m) m->p = b;
  tpull(b);
  b->p = nullptr;
  return b;
}

std::pair<TourNode*, TourNode*> tsplit(TourNode* t, int k) {
  if (!t) return {nullptr, nullptr};
  if (tsz(t->l) >= k) {
    auto [a, b] = tsplit(t->l, k);
    t->l = b;
    if (b) b->p = t;
    tpull(t);
    t->p = nullptr;
    if (a) a->p = nullptr;
    return {a, t};
  }
  auto [a, b] = tsplit(t->r, k - tsz(t->l) - 1);
  t->r = a;
  if (a) a->p = t;
  tpull(t);
  t->p = nullptr;
  if (b) b->p = nullptr;
  return {t, b};
}

int trank(TourNode* n) {
  int r = tsz(n->l) + 1;
  for (TourNode* c = n; c->p; c = c->p)
    if (c->p->r == c) r += tsz(c->p->l) + 1;
  return r;
}

template <typename F>
void twalk(TourNode* root, F&& f) {
  std::vector<TourNode*> stack;
  TourNode* cur = root;
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

std::uint64_t ekey(PointId u, PointId v) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) |
         static_cast<std::uint32_t>(v);
}

}  // namespace

struct LightMatcher::TreeInfo {
  TourNode* tour = nullptr;
  PointId root = 0;
};

struct LightMatcher::Tour {
  std::vector<TourNode*> pool;
  std::unordered_map<std::uint64_t, TourNode*> handles;
  std::uint64_t prio_state = 0x1234abcd5678ULL;

  TourNode* make(PointId u, PointId v) {
    auto* n = new TourNode();
    prio_state = mix64(prio_state);
    n->prio = static_cast<std::uint32_t>(prio_state >> 32);
    n->src = u;
    n->dst = v;
    pool.push_back(n);
    handles[ekey(u, v)] = n;
    return n;
  }

  TourNode* at(PointId u, PointId v) const {
    auto it = handles.find(ekey(u, v));
    return it == handles.end() ? nullptr : it->second;
  }

  void drop(TourNode* n) { handles.erase(ekey(n->src, n->dst)); }

  ~Tour() {
    for (auto* n : pool) delete n;
  }
};

LightMatcher::LightMatcher(std::function<double(PointId, PointId)> dist,
                           Strategy strategy, int swap_budget)
    : dist_(std::move(dist)), strategy_(strategy), swap_budget_(swap_budget) {
  trees_ = new std::map<int, TreeInfo>();
  tour_pool_ = new Tour();
  lines_.on_edge_change = [this](LineMatching::Handle a, LineMatching::Handle b,
                                 bool added) {
    const double d =
        dist_(static_cast<PointId>(lines_.tag(a)), static_cast<PointId>(lines_.tag(b)));
    weight_ += added ? d : -d;
    ++mods_;
    if (!added) ++dels_;
  };
}

LightMatcher::~LightMatcher() {
  delete static_cast<Tour*>(tour_pool_);
  delete trees_;
}

int LightMatcher::component_of(PointId v) const {
  return lines_.set_of(handle_.at(v));
}

PointId LightMatcher::nearest_predecessor(PointId x) const {
  PointId best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (PointId v : vertices_) {
    if (v == x) continue;
    const double d = dist_(v, x);
    if (d < bd) {
      bd = d;
      best = v;
    }
  }
  return best;
}

void LightMatcher::insert_point(PointId x) {
  require(!handle_.count(x), "point already inserted");
  vertices_.push_back(x);
  adj_[x];
  parent_[x] = 0;
  const int s = lines_.create(static_cast<std::uint64_t>(x));
  handle_[x] = lines_.at(s, 1);
  (*trees_)[s] = TreeInfo{nullptr, x};
  if (vertices_.size() == 1) return;
  tree_edge_insert(nearest_predecessor(x), x);
  if (strategy_ == Strategy::swap_improved) improve_swaps();
}

void LightMatcher::insert_pair(PointId x, PointId y) {
  const auto before = lines_.modifications();
  const auto before_dels = dels_;
  insert_point(x);
  insert_point(y);
  last_pair_mods_ = static_cast<int>(lines_.modifications() - before);
  last_pair_dels_ = static_cast<int>(dels_ - before_dels);
}

void LightMatcher::tree_edge_insert(PointId u, PointId v) {
  Tour& T = *static_cast<Tour*>(tour_pool_);
  int cu = component_of(u);
  int cv = component_of(v);
  require(cu != cv, "edge endpoints already connected");
  TreeInfo tu = (*trees_)[cu];
  TreeInfo tv = (*trees_)[cv];
  int splices = 0;

  // Attaching below a non-root vertex needs the incoming tree re-rooted.
  // A tour rotation alone cannot keep the path equal to the tour's
  // first-appearance order, so this case rebuilds the component outright.
  // Arrivals attach singletons and edge updates reattach at severed roots,
  // so the constant-splice budget holds on those paths.
  if (tv.root != v) {
    rebuild_component(cv, v);
    tv = (*trees_)[cv];
    splices += 2 * (lines_.size(cv) - 1);
  }

  adj_[u].push_back(v);
  adj_[v].push_back(u);
  parent_[v] = u;
  TourNode* euv = T.make(u, v);
  TourNode* evu = T.make(v, u);
  const int k = (tu.root == u) ? 0 : trank(T.at(parent_[u], u));
  auto [a, b] = tsplit(tu.tour, k);
  tu.tour = tmerge(tmerge(tmerge(tmerge(a, euv), tv.tour), evu), b);
  splices += 4;

  const int ru = lines_.rank(handle_[u]);
  int right_id = -1;
  if (ru < lines_.size(cu)) {
    auto [l, r] = lines_.split(cu, ru);
    right_id = r;
  }
  int m = lines_.merge(cu, cv);
  if (right_id != -1) m = lines_.merge(m, right_id);
  trees_->erase(cv);
  (*trees_)[m] = tu;
  last_splices_ = splices;
}

void LightMatcher::tree_edge_delete(PointId u, PointId v) {
  Tour& T = *static_cast<Tour*>(tour_pool_);
  if (parent_[u] == v) std::swap(u, v);
  require(parent_[v] == u, "no such tree edge");
  const int c = component_of(u);
  TreeInfo t = (*trees_)[c];

  TourNode* e1 = T.at(u, v);
  TourNode* e2 = T.at(v, u);
  const int r1 = trank(e1);
  const int r2 = trank(e2);
  if (r1 >= r2) fail("tour order corrupted: down-edge after up-edge");
  auto [a, rest] = tsplit(t.tour, r1 - 1);
  auto [e1n, rest2] = tsplit(rest, 1);
  auto [mid, rest3] = tsplit(rest2, r2 - r1 - 1);
  auto [e2n, tail] = tsplit(rest3, 1);
  TreeInfo t1{tmerge(a, tail), t.root};
  TreeInfo t2{mid, v};
  T.drop(e1);
  T.drop(e2);
  const int n2 = (r2 - r1 - 1) / 2 + 1;

  auto& au = adj_[u];
  au.erase(std::find(au.begin(), au.end(), v));
  auto& av = adj_[v];
  av.erase(std::find(av.begin(), av.end(), u));
  parent_[v] = 0;

  const int rv = lines_.rank(handle_[v]);
  const int before = rv - 1;
  int id1, id2;
  if (before > 0) {
    auto [l, rid] = lines_.split(c, before);
    if (lines_.size(rid) > n2) {
      auto [blk, tid] = lines_.split(rid, n2);
      id2 = blk;
      id1 = lines_.merge(c, tid);
    } else {
      id2 = rid;
      id1 = c;
    }
  } else {
    auto [blk, rid] = lines_.split(c, n2);
    id2 = blk;
    id1 = rid;
  }
  trees_->erase(c);
  (*trees_)[id1] = t1;
  (*trees_)[id2] = t2;
  last_splices_ = 8;
}

void LightMatcher::rebuild_component(int& cv, PointId new_root) {
  Tour& T = *static_cast<Tour*>(tour_pool_);
  // fresh depth-first traversal from the new root
  std::vector<PointId> order{new_root};
  std::vector<std::pair<PointId, PointId>> walk;
  struct Frame {
    PointId v, from;
    std::size_t idx;
  };
  std::vector<Frame> st{{new_root, 0, 0}};
  parent_[new_root] = 0;
  while (!st.empty()) {
    Frame& fr = st.back();
    const auto& nbs = adj_[fr.v];
    while (fr.idx < nbs.size() && nbs[fr.idx] == fr.from) ++fr.idx;
    if (fr.idx == nbs.size()) {
      if (fr.from != 0) walk.emplace_back(fr.v, fr.from);
      st.pop_back();
      continue;
    }
    const PointId c = nbs[fr.idx++];
    walk.emplace_back(fr.v, c);
    order.push_back(c);
    parent_[c] = fr.v;
    st.push_back({c, fr.v, 0});
  }
  const TreeInfo old = (*trees_)[cv];
  if (old.tour) twalk(old.tour, [&](TourNode* n) { T.drop(n); });
  TourNode* t = nullptr;
  for (auto [a, b] : walk) t = tmerge(t, T.make(a, b));
  for (auto* h : lines_.elements(cv)) lines_.remove_point(h);
  const int ns = lines_.create(static_cast<std::uint64_t>(order[0]));
  handle_[order[0]] = lines_.at(ns, 1);
  for (std::size_t i = 1; i < order.size(); ++i)
    handle_[order[i]] =
        lines_.insert_point(ns, static_cast<int>(i) - 1 + 1,
                            static_cast<std::uint64_t>(order[i]));
  trees_->erase(cv);
  cv = ns;
  (*trees_)[cv] = TreeInfo{t, new_root};
}

void LightMatcher::improve_swaps() {
  for (int round = 0; round < swap_budget_; ++round) {
    double best_gain = 1e-12;
    PointId del_u = 0, del_v = 0, add_p = 0, add_q = 0;
    for (PointId w : vertices_) {
      const PointId p = parent_[w];
      if (!p) continue;
      // vertices on w's side after removing (p, w)
      std::vector<PointId> side{w};
      std::unordered_map<PointId, bool> in;
      in[w] = true;
      for (std::size_t i = 0; i < side.size(); ++i)
        for (PointId nb : adj_[side[i]])
          if (!in.count(nb) && !(side[i] == w && nb == p)) {
            in[nb] = true;
            side.push_back(nb);
          }
      double best_cross = std::numeric_limits<double>::infinity();
      PointId bp = 0, bq = 0;
      for (PointId q : vertices_) {
        if (in.count(q)) continue;
        for (PointId s : side) {
          const double d = dist_(q, s);
          if (d < best_cross) {
            best_cross = d;
            bp = q;
            bq = s;
          }
        }
      }
      const double gain = dist_(p, w) - best_cross;
      if (gain > best_gain) {
        best_gain = gain;
        del_u = p;
        del_v = w;
        add_p = bp;
        add_q = bq;
      }
    }
    if (!del_u) return;
    tree_edge_delete(del_u, del_v);
    tree_edge_insert(add_p, add_q);
  }
}

double LightMatcher::matching_weight_exact() const {
  double s = 0.0;
  for (auto [a, b] : matching_edges()) s += dist_(a, b);
  return s;
}

double LightMatcher::tree_cost() const {
  double s = 0.0;
  for (const auto& [v, nbs] : adj_)
    for (PointId w : nbs)
      if (v < w) s += dist_(v, w);
  return s;
}

std::vector<std::pair<PointId, PointId>> LightMatcher::matching_edges() const {
  std::vector<std::pair<PointId, PointId>> out;
  for (const auto& [sid, info] : *trees_)
    for (auto [a, b] : lines_.edges(sid))
      out.emplace_back(static_cast<PointId>(lines_.tag(a)),
                       static_cast<PointId>(lines_.tag(b)));
  return out;
}

std::vector<PointId> LightMatcher::hamilton_path(PointId member) const {
  std::vector<PointId> out;
  for (auto* h : lines_.elements(component_of(member)))
    out.push_back(static_cast<PointId>(lines_.tag(h)));
  return out;
}

std::vector<std::pair<PointId, PointId>> LightMatcher::euler_tour(
    PointId member) const {
  std::vector<std::pair<PointId, PointId>> out;
  const auto it = trees_->find(component_of(member));
  if (it != trees_->end() && it->second.tour)
    twalk(it->second.tour, [&](TourNode* n) { out.emplace_back(n->src, n->dst); });
  return out;
}

bool LightMatcher::verify_tours(std::string* why) const {
  auto bad = [&](const std::string& m) {
    if (why) *why = m;
    return false;
  };
  for (const auto& [sid, info] : *trees_) {
    std::vector<std::pair<PointId, PointId>> tour;
    if (info.tour)
      twalk(info.tour, [&](TourNode* n) { tour.emplace_back(n->src, n->dst); });
    const auto path = [&] {
      std::vector<PointId> out;
      for (auto* h : lines_.elements(sid))
        out.push_back(static_cast<PointId>(lines_.tag(h)));
      return out;
    }();
    if (tour.empty()) {
      if (path.size() != 1) return bad("empty tour on a non-singleton tree");
      continue;
    }
    // chained and cyclic
    for (std::size_t i = 0; i < tour.size(); ++i)
      if (tour[i].second != tour[(i + 1) % tour.size()].first)
        return bad("tour edges do not chain");
    // every tree edge exactly once per direction
    std::map<std::pair<PointId, PointId>, int> seen;
    for (auto e : tour) ++seen[e];
    for (auto& [e, cnt] : seen) {
      if (cnt != 1) return bad("directed edge repeated in tour");
      if (!seen.count({e.second, e.first}))
        return bad("tour misses the reverse direction");
    }
    if (seen.size() != 2 * (path.size() - 1))
      return bad("tour length disagrees with tree size");
    // first-appearance order equals the stored path
    std::vector<PointId> first;
    std::map<PointId, bool> vis;
    auto visit = [&](PointId v) {
      if (!vis[v]) {
        vis[v] = true;
        first.push_back(v);
      }
    };
    visit(tour.front().first);
    for (auto e : tour) visit(e.second);
    if (first != path) return bad("path is not the first-appearance order");
    if (info.root != path.front()) return bad("root is not the path head");
  }
  return true;
}

}  // namespace omm
