#include "omm/hst_matching.hpp"

#include <algorithm>
#include <cstdio>
#include <cassert>
#include <stdexcept>

namespace omm {

namespace {
[[noreturn]] void fail(const char* what) { throw std::logic_error(what); }
}  // namespace

// ---------------------------------------------------------------- inward --

void InwardMatcher::on_insert(const HstBuilder::InsertReport& rep) {
  for (auto it = rep.created.rbegin(); it != rep.created.rend(); ++it) {
    int sum = 0;
    for (auto& [k, c] : (*it)->children) sum += c->active;
    (*it)->active = sum;
  }
  insert_leaf(rep.leaf);
}

void InwardMatcher::insert_leaf(HstNode* leaf) {
  rm_.begin_step();
  for (HstNode* u = leaf; u; u = u->parent) ++u->active;
  absorb(leaf);
  last_del_ = rm_.step_deletions();
}

void InwardMatcher::insert_pair(HstNode* a, HstNode* b) {
  insert_leaf(a);
  const int d1 = last_del_;
  insert_leaf(b);
  last_del_ += d1;
}

void InwardMatcher::absorb(HstNode* leaf) {
  PointId p = leaf->point;
  HstNode* pl = leaf;
  int guard = 0;
  for (;;) {
    if (++guard > pl->depth + tree_->leaf_count() + 4)
      fail("inward repair walk failed to terminate");
    HstNode* v = pl->parent;
    while (v && (v->active & 1)) v = v->parent;
    if (!v) return;  // p remains the single unmatched point
    const auto free = free_points(v);
    if (free.size() != 2) fail("inward state: expected exactly two loose points");
    const PointId w = free[0] == p ? free[1] : free[0];
    if (w == p) fail("inward state: lost track of the unmatched point");
    const PointId wp = rm_.partner(w);
    if (wp == 0) {
      rm_.add_edge(p, w);
      return;
    }
    rm_.del_edge(w, wp);
    rm_.add_edge(p, w);
    p = wp;
    pl = tree_->leaf_of(wp);
  }
}

std::vector<PointId> InwardMatcher::free_points(HstNode* v) const {
  if (v->is_leaf()) {
    if (v->active) return {v->point};
    return {};
  }
  std::vector<PointId> esc;
  for (auto& [k, c] : v->children)
    if (c->active & 1) {
      auto sub = free_points(c);
      esc.insert(esc.end(), sub.begin(), sub.end());
    }
  // escapes matched to each other resolve at this node; the rest stay loose
  std::set<PointId> present(esc.begin(), esc.end());
  std::vector<PointId> out;
  for (PointId e : esc) {
    const PointId q = rm_.partner(e);
    if (q == 0 || !present.count(q)) out.push_back(e);
  }
  return out;
}

double InwardMatcher::cost_hst() const {
  return rm_.cost([this](PointId a, PointId b) { return tree_->distance(a, b); });
}

double InwardMatcher::cost_source(
    const std::function<double(PointId, PointId)>& d) const {
  return rm_.cost(d);
}

bool InwardMatcher::verify_inward(std::string* why) const {
  // count, per node, the matching edges whose endpoints both live below it
  std::map<const HstNode*, int> inside;
  for (const auto& [a, b] : rm_.edges()) {
    const HstNode* n = tree_->lca(tree_->leaf_of(a), tree_->leaf_of(b));
    for (; n; n = n->parent) ++inside[n];
  }
  bool ok = true;
  tree_->for_each_node([&](HstNode* n) {
    if (!ok) return;
    const int have = inside.count(n) ? inside[n] : 0;
    if (have != n->active / 2) {
      ok = false;
      if (why)
        *why = "subtree matches " + std::to_string(have) + " of " +
               std::to_string(n->active) + " active leaves";
    }
  });
  return ok;
}

// ------------------------------------------------------------ heavy path --

HstNode* HpMatcher::top_of(HstNode* u) const {
  while (u->heavy && u->parent) u = u->parent;
  return u;
}

// a heavy-linked leaf terminates its path and anchors at itself; anything
// hanging by a light edge anchors at its parent on the parent's path
HstNode* HpMatcher::entry_attach(HstNode* u) const {
  if (u->is_leaf() && (u->heavy || !u->parent)) return u;
  return u->parent;
}

HstNode* HpMatcher::entry_location(HstNode* u) const {
  return top_of(entry_attach(u));
}

bool HpMatcher::entry_wanted(HstNode* u) const {
  if (u->is_leaf()) return u->active > 0;
  return u->parent != nullptr && !u->heavy && (u->active & 1);
}

void HpMatcher::ensure_unpinned(HstNode* top) {
  auto it = paths_.find(top);
  if (it == paths_.end() || !it->second.pinned) return;
  PathRec& rec = it->second;
  int w = -1;
  for (int part : {rec.L, rec.M, rec.R}) {
    if (part == -1) continue;
    if (w == -1) {
      w = part;
    } else {
      set_owner_.erase(part);
      w = lines_.merge(w, part);
    }
  }
  rec.W = w;
  rec.L = rec.M = rec.R = -1;
  rec.pinned = false;
  if (w != -1) set_owner_[w] = top;
  mark_dirty(top);
}

void HpMatcher::attach_path(HstNode* c) {
  HstNode* u = c->parent;
  HstNode* ptop = top_of(u);
  auto hc = heavy_child_.find(u);
  if (hc != heavy_child_.end() && hc->second && hc->second != c)
    fail("attach: parent still has another heavy child");
  ensure_unpinned(ptop);
  ensure_unpinned(c);
  auto itc = paths_.find(c);
  if (itc != paths_.end()) {
    PathRec moved = std::move(itc->second);
    paths_.erase(itc);
    PathRec& dst = paths_[ptop];
    if (moved.W != -1) {
      if (dst.W == -1) {
        dst.W = moved.W;
      } else {
        set_owner_.erase(moved.W);
        dst.W = lines_.merge(dst.W, moved.W);
      }
      set_owner_[dst.W] = ptop;
    }
    // keep the attribution of already-applied matching edges
    dst.realized.insert(dst.realized.end(), moved.realized.begin(),
                        moved.realized.end());
    std::sort(dst.realized.begin(), dst.realized.end());
  }
  c->heavy = true;
  heavy_child_[u] = c;
  mark_dirty(ptop);
  // the flip changed c's own anchor; fix it now so records stay sorted
  reconcile_entry(c);
}

void HpMatcher::detach_path(HstNode* c) {
  HstNode* ptop = top_of(c);
  c->heavy = false;
  heavy_child_.erase(c->parent);
  reconcile_entry(c);  // c's anchor flipped; reposition before splitting
  auto it = paths_.find(ptop);
  if (it != paths_.end()) {
    ensure_unpinned(ptop);
    PathRec& rec = paths_[ptop];
    if (rec.W != -1) {
      const auto elems = lines_.elements(rec.W);
      int b = 0;
      for (auto* h : elems) {
        HstNode* u = reinterpret_cast<HstNode*>(lines_.tag(h));
        if (entry_attach(u)->depth < c->depth) ++b;
        else break;
      }
      const int n = static_cast<int>(elems.size());
      if (b == 0) {
        PathRec moved = std::move(paths_[ptop]);
        paths_.erase(ptop);
        set_owner_[moved.W] = c;
        paths_[c] = std::move(moved);
      } else if (b < n) {
        auto [lw, rw] = lines_.split(rec.W, b);
        rec.W = lw;
        paths_[c].W = rw;
        set_owner_[lw] = ptop;
        set_owner_[rw] = c;
      }
    }
  }
  mark_dirty(ptop);
  mark_dirty(c);
}

std::pair<int, int> HpMatcher::entry_key(HstNode* u) const {
  HstNode* a = entry_attach(u);
  return {a->depth, a == u ? (1 << 30) : u->child_seq};
}

void HpMatcher::reconcile_entry(HstNode* u) {
  const bool want = entry_wanted(u);
  auto it = entry_of_.find(u);
  if (it != entry_of_.end()) {
    HstNode* owner = set_owner_.at(lines_.set_of(it->second.handle));
    HstNode* loc = want ? entry_location(u) : nullptr;
    if (owner == loc && it->second.attach == entry_attach(u)) return;
    ensure_unpinned(owner);
    const int sid = lines_.set_of(it->second.handle);
    const bool last = lines_.size(sid) == 1;
    lines_.remove_point(it->second.handle);
    if (last) {
      paths_[owner].W = -1;
      set_owner_.erase(sid);
    }
    entry_of_.erase(it);
    mark_dirty(owner);
  }
  if (!want || entry_of_.count(u)) return;
  HstNode* loc = entry_location(u);
  ensure_unpinned(loc);
  PathRec& rec = paths_[loc];
  const std::uint64_t tag = reinterpret_cast<std::uint64_t>(u);
  LineMatching::Handle h;
  if (rec.W == -1) {
    rec.W = lines_.create(tag);
    set_owner_[rec.W] = loc;
    h = lines_.at(rec.W, 1);
  } else {
    const auto key = entry_key(u);
    int pos = 0;
    for (auto* e : lines_.elements(rec.W)) {
      HstNode* v = reinterpret_cast<HstNode*>(lines_.tag(e));
      if (entry_key(v) < key) ++pos;
      else break;
    }
    h = lines_.insert_point(rec.W, pos, tag);
  }
  entry_of_[u] = {h, entry_attach(u)};
  mark_dirty(loc);
}

void HpMatcher::splice_created(const HstBuilder::InsertReport& rep) {
  if (rep.created.empty()) return;
  for (auto it = rep.created.rbegin(); it != rep.created.rend(); ++it) {
    int sum = 0;
    for (auto& [k, c] : (*it)->children) sum += c->active;
    (*it)->active = sum;
  }
  HstNode* unit = rep.moved_unit;
  const bool unit_was_heavy = unit && rep.moved_from && unit->heavy;
  // chain edges carry the unit's full weight, so they are heavy; the edge
  // into the chain inherits the unit's old status
  for (HstNode* c : rep.created) {
    for (auto& [k, d] : c->children) {
      d->heavy = d->parent && (2 * d->active > c->active);
      if (d->heavy) heavy_child_[c] = d;
    }
  }
  HstNode* chain_top = rep.created.front();
  if (chain_top->parent) {
    chain_top->heavy = unit_was_heavy;
    if (unit_was_heavy) heavy_child_[chain_top->parent] = chain_top;
    else if (heavy_child_.count(chain_top->parent) &&
             heavy_child_[chain_top->parent] == unit)
      heavy_child_.erase(chain_top->parent);
  } else {
    chain_top->heavy = false;
  }
  if (unit) {
    // the unit's path may now start higher up
    HstNode* nt = top_of(unit);
    auto itp = paths_.find(unit);
    if (itp != paths_.end() && nt != unit) {
      PathRec moved = std::move(itp->second);
      paths_.erase(itp);
      for (int sid : {moved.W, moved.L, moved.M, moved.R})
        if (sid != -1) set_owner_[sid] = nt;
      paths_[nt] = std::move(moved);
      mark_dirty(nt);
    }
    // the splice may have flipped the unit's anchor (a light leaf turning
    // into a path bottom); reposition its entry before any boundary scan
    reconcile_entry(unit);
  }
}

void HpMatcher::on_insert(const HstBuilder::InsertReport& rep) {
  rm_.begin_step();
  splice_created(rep);
  HstNode* leaf = rep.leaf;
  for (HstNode* u = leaf; u; u = u->parent) ++u->active;
  std::vector<HstNode*> reconcile;
  for (HstNode* a = leaf; a->parent; a = a->parent) {
    HstNode* u = a->parent;
    auto hc = heavy_child_.find(u);
    HstNode* sib = hc == heavy_child_.end() ? nullptr : hc->second;
    if (sib && sib != a && !(2 * sib->active > u->active)) {
      detach_path(sib);
      reconcile.push_back(sib);
    }
    const bool want = 2 * a->active > u->active;
    if (want && !a->heavy) attach_path(a);
    else if (!want && a->heavy) detach_path(a);
    reconcile.push_back(a);
  }
  for (HstNode* c : rep.created) reconcile.push_back(c);
  if (rep.moved_unit) reconcile.push_back(rep.moved_unit);
  if (reconcile.empty() || reconcile.front() != leaf) reconcile.push_back(leaf);
  for (HstNode* u : reconcile) reconcile_entry(u);
  finalize();
  last_mods_ = rm_.step_additions() + rm_.step_deletions();
}

void HpMatcher::insert_leaf(HstNode* leaf) {
  HstBuilder::InsertReport rep;
  rep.leaf = leaf;
  on_insert(rep);
}

void HpMatcher::insert_pair(HstNode* a, HstNode* b) {
  insert_leaf(a);
  const int m = last_mods_;
  insert_leaf(b);
  last_mods_ += m;
}

void HpMatcher::re_pin(HstNode* top) {
  auto it = paths_.find(top);
  if (it == paths_.end()) return;
  ensure_unpinned(top);
  PathRec& rec = paths_[top];
  const int n = rec.W == -1 ? 0 : lines_.size(rec.W);
  if (n % 2 == 0) {
    rec.escape = 0;
    return;
  }
  // the escape slot: last entry of the first attachment-closed odd prefix
  const auto elems = lines_.elements(rec.W);
  int pos = -1;
  HstNode* pinned_node = nullptr;
  int running = 0;
  for (int i = 0; i < n; ++i) {
    ++running;
    HstNode* u = reinterpret_cast<HstNode*>(lines_.tag(elems[i]));
    const bool group_end =
        i + 1 == n ||
        entry_attach(reinterpret_cast<HstNode*>(lines_.tag(elems[i + 1]))) !=
            entry_attach(u);
    if (group_end && (running & 1)) {
      pos = i + 1;
      pinned_node = u;
      break;
    }
  }
  if (pos < 0) fail("odd entry list without an odd prefix");
  int rest = rec.W;
  if (pos > 1) {
    auto [l, r] = lines_.split(rec.W, pos - 1);
    rec.L = l;
    rest = r;
  } else {
    rec.L = -1;
  }
  if (lines_.size(rest) > 1) {
    auto [m, rr] = lines_.split(rest, 1);
    rec.M = m;
    rec.R = rr;
  } else {
    rec.M = rest;
    rec.R = -1;
  }
  rec.W = -1;
  rec.pinned = true;
  for (int sid : {rec.L, rec.M, rec.R})
    if (sid != -1) set_owner_[sid] = top;
  rec.escape = resolve_escape(pinned_node);
}

PointId HpMatcher::resolve_escape(HstNode* entry) const {
  if (entry->is_leaf()) return entry->point;
  auto it = paths_.find(entry);
  if (it == paths_.end() || it->second.escape == 0) {
    fail("escape resolution hit a subtree without a pinned point");
  }
  return it->second.escape;
}

std::vector<std::pair<PointId, PointId>> HpMatcher::realize(HstNode* top) const {
  std::vector<std::pair<PointId, PointId>> out;
  auto it = paths_.find(top);
  if (it == paths_.end()) return out;
  const PathRec& rec = it->second;
  auto emit = [&](LineMatching::Handle a, LineMatching::Handle b) {
    PointId pa = resolve_escape(reinterpret_cast<HstNode*>(lines_.tag(a)));
    PointId pb = resolve_escape(reinterpret_cast<HstNode*>(lines_.tag(b)));
    if (pa > pb) std::swap(pa, pb);
    out.emplace_back(pa, pb);
  };
  if (!rec.pinned) {
    if (rec.W != -1)
      for (auto [a, b] : lines_.edges(rec.W)) emit(a, b);
  } else {
    for (int side : {rec.L, rec.R})
      if (side != -1)
        for (auto [a, b] : lines_.edges(side)) emit(a, b);
    if (rec.L != -1 && rec.R != -1 && (lines_.size(rec.L) & 1) &&
        (lines_.size(rec.R) & 1))
      emit(lines_.unmatched(rec.L), lines_.unmatched(rec.R));
  }
  std::sort(out.begin(), out.end());
  return out;
}

void HpMatcher::finalize() {
  std::map<int, std::set<HstNode*>, std::greater<int>> work;
  auto push = [&](HstNode* t) { work[t->depth].insert(t); };
  for (HstNode* d : dirty_) push(top_of(d));
  dirty_.clear();
  std::set<HstNode*> touched;
  while (!work.empty()) {
    auto wit = work.begin();
    HstNode* t = *wit->second.begin();
    wit->second.erase(wit->second.begin());
    if (wit->second.empty()) work.erase(wit);
    if (top_of(t) != t) {
      push(top_of(t));
      continue;
    }
    const PointId old_esc = paths_.count(t) ? paths_[t].escape : 0;
    re_pin(t);
    touched.insert(t);
    const PointId new_esc = paths_.count(t) ? paths_[t].escape : 0;
    if (new_esc != old_esc && entry_of_.count(t)) {
      HstNode* owner = set_owner_.at(lines_.set_of(entry_of_[t].handle));
      if (owner != t) push(owner);
    }
  }
  // one global diff: an edge may sit in two touched caches mid-update, so
  // per-path diffs would double-count
  std::vector<std::pair<PointId, PointId>> oldu, newu;
  std::map<HstNode*, std::vector<std::pair<PointId, PointId>>> news;
  for (HstNode* t : touched) {
    if (paths_.count(t)) {
      const auto& r = paths_[t].realized;
      oldu.insert(oldu.end(), r.begin(), r.end());
    }
    news[t] = realize(t);
    newu.insert(newu.end(), news[t].begin(), news[t].end());
  }
  std::sort(oldu.begin(), oldu.end());
  std::sort(newu.begin(), newu.end());
  std::vector<std::pair<PointId, PointId>> add, del;
  std::set_difference(newu.begin(), newu.end(), oldu.begin(), oldu.end(),
                      std::back_inserter(add));
  std::set_difference(oldu.begin(), oldu.end(), newu.begin(), newu.end(),
                      std::back_inserter(del));
  for (auto [a, b] : del) rm_.del_edge(a, b);
  for (auto [a, b] : add) rm_.add_edge(a, b);
  for (HstNode* t : touched) {
    if (paths_.count(t)) paths_[t].realized = std::move(news[t]);
    else if (!news[t].empty()) fail("realized edges for a path without a record");
  }
  dirty_.clear();
}

double HpMatcher::cost_hst() const {
  return rm_.cost([this](PointId a, PointId b) { return tree_->distance(a, b); });
}

double HpMatcher::cost_source(
    const std::function<double(PointId, PointId)>& d) const {
  return rm_.cost(d);
}

bool HpMatcher::verify_hp_inward(std::string* why) const {
  bool ok = true;
  auto complain = [&](const std::string& m) {
    ok = false;
    if (why && why->empty()) *why = m;
  };
  // heavy flags match the counts
  tree_->for_each_node([&](HstNode* n) {
    if (!n->parent) return;
    const bool want = 2 * n->active > n->parent->active && n->active > 0;
    if (n->heavy != want) complain("heavy flag inconsistent with counts");
  });
  if (!ok) return false;
  // partner map from the realized matching
  std::map<PointId, PointId> mate;
  for (auto [a, b] : rm_.edges()) {
    mate[a] = b;
    mate[b] = a;
  }
  // per path-top escape discipline
  tree_->for_each_node([&](HstNode* u1) {
    if (u1->heavy || u1->active == 0) return;
    // leaves below u1
    std::vector<PointId> inside;
    collect_leaves(u1, inside);
    std::set<PointId> in(inside.begin(), inside.end());
    std::vector<PointId> escapes;
    for (PointId p : inside) {
      auto it = mate.find(p);
      if (it == mate.end() || !in.count(it->second)) escapes.push_back(p);
    }
    if (static_cast<int>(escapes.size()) != u1->active % 2) {
      complain("path subtree must surface exactly parity-many escapes");
      return;
    }
    if (escapes.empty()) return;
    // the escape must avoid the deepest possible suffix of the heavy path
    const PointId p = escapes[0];
    std::vector<HstNode*> path{u1};
    while (heavy_child_.count(path.back()))
      path.push_back(heavy_child_.at(path.back()));
    for (std::size_t i = 1; i < path.size() + 1; ++i) {
      const int below = i < path.size() ? path[i]->active : 0;
      if ((u1->active - below) % 2 == 1) {
        // p must lie outside X_{path[i]}
        if (i < path.size()) {
          std::vector<PointId> deep;
          collect_leaves(path[i], deep);
          if (std::find(deep.begin(), deep.end(), p) != deep.end())
            complain("escape point pinned too deep along its heavy path");
        }
        break;
      }
    }
  });
  return ok;
}

bool HpMatcher::audit(std::string* why) const {
  auto bad = [&](const std::string& m) {
    if (why) *why = m;
    return false;
  };
  // every wanted entry is registered in the right record
  bool ok = true;
  std::string msg;
  tree_->for_each_node([&](HstNode* u) {
    if (!ok) return;
    const bool want = entry_wanted(u);
    const bool got = entry_of_.count(u) > 0;
    if (want != got) {
      ok = false;
      msg = "entry presence mismatch at depth " + std::to_string(u->depth) +
            (u->is_leaf() ? " (leaf)" : " (internal)") +
            " active=" + std::to_string(u->active);
      return;
    }
    if (!want) return;
    const auto& er = entry_of_.at(u);
    const int sid = lines_.set_of(er.handle);
    HstNode* owner = set_owner_.count(sid) ? set_owner_.at(sid) : nullptr;
    if (owner != entry_location(u)) {
      ok = false;
      msg = "entry registered under the wrong path top";
      return;
    }
    if (er.attach != entry_attach(u)) {
      ok = false;
      msg = "entry attach anchor is stale";
    }
  });
  if (!ok) return bad(msg);
  // records hold their entries in attachment order
  for (const auto& [top, rec] : paths_) {
    for (int sid : {rec.W, rec.L, rec.M, rec.R}) {
      if (sid == -1) continue;
      std::pair<int, int> prev{-1, -1};
      for (auto* h : lines_.elements(sid)) {
        HstNode* u = reinterpret_cast<HstNode*>(lines_.tag(h));
        const auto k = entry_key(u);
        if (k < prev)
          return bad("record entries out of attachment order (top depth " +
                     std::to_string(top->depth) + ")");
        prev = k;
      }
    }
  }
  return true;
}

void HpMatcher::debug_dump() const {
  std::printf("--- hp state ---\n");
  for (const auto& [top, rec] : paths_) {
    std::printf("path top=%p depth=%d scale=%d leaf=%d active=%d pinned=%d esc=%d\n",
                (void*)top, top->depth, top->scale, top->point, top->active,
                rec.pinned, rec.escape);
    auto show = [&](const char* name, int sid) {
      if (sid == -1) return;
      std::printf("  %s[%d]:", name, sid);
      for (auto* h : lines_.elements(sid)) {
        HstNode* u = reinterpret_cast<HstNode*>(lines_.tag(h));
        std::printf(" {node=%p leaf=%d depth=%d act=%d}", (void*)u, u->point,
                    u->depth, u->active);
      }
      std::printf("\n");
    };
    show("W", rec.W);
    show("L", rec.L);
    show("M", rec.M);
    show("R", rec.R);
    std::printf("  realized:");
    for (auto [a, b] : rec.realized) std::printf(" (%d,%d)", a, b);
    std::printf("\n");
  }
}

void HpMatcher::collect_leaves(HstNode* n, std::vector<PointId>& out) const {
  if (n->is_leaf()) {
    if (n->active) out.push_back(n->point);
    return;
  }
  for (auto& [k, c] : n->children) collect_leaves(c, out);
}

}  // namespace omm
