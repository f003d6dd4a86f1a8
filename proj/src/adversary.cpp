#include "omm/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace omm {

std::vector<std::pair<double, double>> prop_one_sequence(double k, double eps) {
  if (!(eps < 1.0 / (4.0 * k)))
    throw std::invalid_argument("eps must be below 1/(4k)");
  const double s = k + 1;
  return {{0.0, 1.0}, {s, s + 1.0}, {1.0 + eps, s + eps}, {eps, s + 1.0 + eps}};
}

Fig1 fig1_sequences(int n, double w, double eps) {
  Fig1 out;
  for (int i = 1; i <= n; ++i) out.pairs_a.push_back({double(i), w + i});
  for (int i = 1; i <= n; ++i) out.pairs_a.push_back({i + eps, w + i + eps});
  out.arrival_a = 2.0 * n * w;
  out.opt_a = 2.0 * eps * n;
  for (int i = 1; i <= 2 * n; ++i) out.pairs_b.push_back({double(i), double(i)});
  out.pairs_b.push_back({0.0, 2.0 * n + 1});
  out.pairs_b.push_back({0.0, 2.0 * n + 1});
  out.opt_b_final = 0.0;
  return out;
}

// ------------------------------------------------------------- adaptive --

AdaptiveLowerBound::AdaptiveLowerBound(int recourse, int rounds)
    : r_(recourse), q_(10LL * recourse), k_(rounds) {
  if (recourse < 2) throw std::invalid_argument("recourse must be at least 2");
  if (rounds < 1) throw std::invalid_argument("need at least one round");
}

double AdaptiveLowerBound::diameter() const {
  return std::pow(double(q_), k_) - 1.0;
}

double AdaptiveLowerBound::threshold(int i) const {
  return std::pow(double(q_), i) / (4.0 * r_);
}

std::vector<double> AdaptiveLowerBound::tier(int i) const {
  // multiples of q^i up to q^k that are not multiples of q^{i+1}
  std::vector<double> out;
  const double step = std::pow(double(q_), i);
  const long long count = std::llround(std::pow(double(q_), k_ - i));
  for (long long j = 1; j <= count; ++j)
    if (j % q_ != 0) out.push_back(j * step);
  if (i == k_ - 1) out.push_back(std::pow(double(q_), k_));  // evens the batch
  return out;
}

long long AdaptiveLowerBound::count_long_edges(const Matching& m,
                                               double thr) const {
  long long c = 0;
  for (const auto& [a, b] : m)
    if (std::fabs(a - b) >= thr) ++c;
  return c;
}

std::vector<double> AdaptiveLowerBound::next_batch(const Matching& matching) {
  if (awaiting_confirm_)
    throw std::logic_error("confirm the previous round first");
  if (done()) return {};
  const int i = round_;
  if (i == 0) {
    prev_ = matching;
    last_batch_ = tier(0);
    awaiting_confirm_ = true;
    return last_batch_;
  }
  const long long required =
      std::llround(std::pow(double(q_), k_ - i)) / 10;
  const long long longs = count_long_edges(matching, threshold(i));
  if (longs >= required) {
    // enough long edges already: skip the round and record the witness
    certs_.push_back({i, true, longs, required, longs >= required});
    ++round_;
    return {};
  }
  prev_ = matching;
  last_batch_ = tier(i);
  awaiting_confirm_ = true;
  return last_batch_;
}

void AdaptiveLowerBound::confirm_round(const Matching& matching) {
  if (!awaiting_confirm_) throw std::logic_error("no batch outstanding");
  const int i = round_;
  const long long required =
      std::llround(std::pow(double(q_), k_ - i)) / 10;
  Certificate cert{i, false, 0, required, false};
  if (i == 0) {
    cert.witness_edges = count_long_edges(matching, 0.0);
  } else {
    // witness extraction on the alternating structure of prev vs current
    std::map<double, double> pprev, pcur;
    for (auto& [a, b] : prev_) {
      pprev[a] = b;
      pprev[b] = a;
    }
    for (auto& [a, b] : matching) {
      pcur[a] = b;
      pcur[b] = a;
    }
    std::set<double> rematched;
    for (auto& [p, mate] : pprev)
      if (!pcur.count(p) || pcur[p] != mate) rematched.insert(p);
    const double thr = threshold(i);
    const double half = std::pow(double(q_), i) / 2.0;
    std::set<std::pair<double, double>> witnesses;
    for (double p : last_batch_) {
      // interval quality
      long long inside_rematched = 0;
      bool long_prev_endpoint = false;
      auto lo = rematched.lower_bound(p - half);
      for (auto it = lo; it != rematched.end() && *it < p + half; ++it)
        ++inside_rematched;
      for (auto& [x, y] : pprev)
        if (x > p - half && x < p + half && std::fabs(x - y) >= thr)
          long_prev_endpoint = true;
      if (inside_rematched >= 2 * r_ || long_prev_endpoint) continue;
      // walk the alternating path from p until it leaves the interval
      double cur = p;
      bool use_cur = true;  // start with the new matching's edge
      for (int guard = 0; guard < 8 * r_ + 8; ++guard) {
        auto& side = use_cur ? pcur : pprev;
        auto it = side.find(cur);
        if (it == side.end()) break;
        const double nxt = it->second;
        if (use_cur && std::fabs(cur - nxt) >= thr) {
          auto e = std::minmax(cur, nxt);
          witnesses.insert({e.first, e.second});
          break;
        }
        cur = nxt;
        if (cur <= p - half || cur >= p + half) break;
        use_cur = !use_cur;
      }
    }
    cert.witness_edges = static_cast<long long>(witnesses.size());
  }
  cert.ok = cert.witness_edges >= cert.required;
  certs_.push_back(cert);
  awaiting_confirm_ = false;
  ++round_;
}

std::vector<double> oblivious_lb_sequence(int recourse, int rounds,
                                          const std::vector<bool>& bits) {
  AdaptiveLowerBound gen(recourse, rounds);
  if (static_cast<int>(bits.size()) < rounds - 1)
    throw std::invalid_argument("need one bit per round beyond the first");
  std::vector<double> out;
  const long long q = gen.q();
  for (int i = 0; i < rounds; ++i) {
    if (i > 0 && !bits[i - 1]) continue;
    const double step = std::pow(double(q), i);
    const long long count = std::llround(std::pow(double(q), rounds - i));
    for (long long j = 1; j <= count; ++j)
      if (j % q != 0) out.push_back(j * step);
    if (i == rounds - 1) out.push_back(std::pow(double(q), rounds));
  }
  return out;
}

// --------------------------------------------------------------- laakso --

LaaksoGraph LaaksoGraph::initial() {
  LaaksoGraph g;
  g.level_ = 0;
  g.n_ = 2;
  g.edges_ = {{0, 1, 1.0}};
  g.s_ = 0;
  g.t_ = 1;
  g.last_added_ = {0, 1};
  return g;
}

void LaaksoGraph::next(CounterRng& rng) {
  // pick the edge of the innermost copy to expand
  int x, y;
  if (level_ == 0) {
    x = s_;
    y = t_;
  } else {
    const double u = rng.next_unit();
    if (u < 0.25) {
      x = s_;
      y = a_;
    } else if (u < 0.5) {
      x = c_;
      y = t_;
    } else if (u < 0.625) {
      x = a_;
      y = b_;
    } else if (u < 0.75) {
      x = b_;
      y = c_;
    } else if (u < 0.875) {
      x = a_;
      y = d_;
    } else {
      x = d_;
      y = c_;
    }
  }
  const double wnew = std::pow(4.0, -(level_ + 1));
  auto it = std::find_if(edges_.begin(), edges_.end(), [&](const auto& e) {
    auto& [u, v, w] = e;
    return (u == x && v == y) || (u == y && v == x);
  });
  if (it == edges_.end()) throw std::logic_error("expansion edge not present");
  edges_.erase(it);
  const int na = n_, nb = n_ + 1, nc = n_ + 2, nd = n_ + 3;
  n_ += 4;
  edges_.push_back({x, na, wnew});
  edges_.push_back({na, nb, wnew});
  edges_.push_back({nb, nc, wnew});
  edges_.push_back({na, nd, wnew});
  edges_.push_back({nd, nc, wnew});
  edges_.push_back({nc, y, wnew});
  s_ = x;
  a_ = na;
  b_ = nb;
  c_ = nc;
  d_ = nd;
  t_ = y;
  last_added_ = {na, nb, nc, nd};
  ++level_;
}

std::vector<std::vector<double>> LaaksoGraph::all_pairs() const {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> d(n_, std::vector<double>(n_, inf));
  for (int i = 0; i < n_; ++i) d[i][i] = 0.0;
  for (auto& [u, v, w] : edges_) {
    d[u][v] = std::min(d[u][v], w);
    d[v][u] = std::min(d[v][u], w);
  }
  for (int m = 0; m < n_; ++m)
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        d[i][j] = std::min(d[i][j], d[i][m] + d[m][j]);
  return d;
}

// --------------------------------------------------------------- capped --

void CappedMatcher::insert_pair(
    PointId a, PointId b,
    const std::vector<std::pair<PointId, PointId>>& target) {
  last_del_ = 0;
  int budget = cap_;
  std::map<PointId, PointId> tgt;
  for (auto [x, y] : target) {
    tgt[x] = y;
    tgt[y] = x;
  }
  std::map<PointId, PointId> cur;
  for (auto& [x, y] : edges_) {
    cur[x] = y;
    cur[y] = x;
  }
  auto add = [&](PointId x, PointId y) {
    if (x > y) std::swap(x, y);
    edges_.insert({x, y});
    cur[x] = y;
    cur[y] = x;
  };
  auto del = [&](PointId x, PointId y) {
    if (x > y) std::swap(x, y);
    edges_.erase({x, y});
    cur.erase(x);
    cur.erase(y);
    ++last_del_;
    --budget;
  };

  // alternating path from a: target edge, current edge, ... ends at b
  std::vector<std::pair<PointId, PointId>> path_cur, path_tgt;
  {
    PointId at = a;
    bool use_tgt = true;
    for (int guard = 0; guard < 4 * static_cast<int>(tgt.size()) + 8; ++guard) {
      auto& side = use_tgt ? tgt : cur;
      auto it = side.find(at);
      if (it == side.end()) break;
      const PointId nxt = it->second;
      (use_tgt ? path_tgt : path_cur).push_back({at, nxt});
      at = nxt;
      if (at == b && use_tgt) break;
      use_tgt = !use_tgt;
    }
  }
  if (static_cast<int>(path_cur.size()) <= budget && !path_tgt.empty()) {
    for (auto [x, y] : path_cur) del(x, y);
    for (auto [x, y] : path_tgt) add(x, y);
  } else {
    add(a, b);
  }

  // profitable alternating cycles while the budget lasts
  for (;;) {
    if (budget <= 0) break;
    std::set<PointId> seen;
    double best_gain = 1e-12;
    std::vector<std::pair<PointId, PointId>> bc, bt;
    for (auto& [x0, y0] : edges_) {
      if (seen.count(x0)) continue;
      // trace the component of x0 in cur-vs-target
      std::vector<std::pair<PointId, PointId>> ccur, ctgt;
      PointId at = x0;
      bool use_cur = true;
      bool cycle = false;
      for (int guard = 0; guard < 4 * static_cast<int>(tgt.size()) + 8; ++guard) {
        auto& side = use_cur ? cur : tgt;
        auto it = side.find(at);
        if (it == side.end()) break;
        const PointId nxt = it->second;
        auto e = std::minmax(at, nxt);
        auto& list = use_cur ? ccur : ctgt;
        if (std::find(list.begin(), list.end(),
                      std::make_pair(e.first, e.second)) != list.end()) {
          cycle = true;
          break;
        }
        list.push_back({e.first, e.second});
        seen.insert(at);
        seen.insert(nxt);
        at = nxt;
        use_cur = !use_cur;
      }
      if (!cycle || ccur.empty() || ccur.size() != ctgt.size()) continue;
      if (static_cast<int>(ccur.size()) > budget) continue;
      double gain = 0.0;
      for (auto [x, y] : ccur) gain += dist_(x, y);
      for (auto [x, y] : ctgt) gain -= dist_(x, y);
      if (gain > best_gain) {
        best_gain = gain;
        bc = ccur;
        bt = ctgt;
      }
    }
    if (bc.empty()) break;
    for (auto [x, y] : bc) del(x, y);
    for (auto [x, y] : bt) add(x, y);
  }
}

double CappedMatcher::weight() const {
  double s = 0.0;
  for (auto& [a, b] : edges_) s += dist_(a, b);
  return s;
}

// -------------------------------------------------------------- harness --

CappedLineHarness::CappedLineHarness(int deletions_per_pair)
    : light_([this](PointId a, PointId b) { return dist(a, b); }),
      capped_(deletions_per_pair,
              [this](PointId a, PointId b) { return dist(a, b); }) {}

void CappedLineHarness::feed_pair(double x, double y) {
  coord_.push_back(x);
  const PointId a = static_cast<PointId>(coord_.size());
  coord_.push_back(y);
  const PointId b = static_cast<PointId>(coord_.size());
  light_.insert_pair(a, b);
  capped_.insert_pair(a, b, light_.matching_edges());
}

std::vector<std::pair<double, double>> CappedLineHarness::coordinate_matching()
    const {
  std::vector<std::pair<double, double>> out;
  for (auto& [a, b] : capped_.edges())
    out.push_back({coord_[a - 1], coord_[b - 1]});
  return out;
}

double CappedLineHarness::weight() const { return capped_.weight(); }

}  // namespace omm
