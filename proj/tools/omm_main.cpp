#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>
#include <sstream>

#include "CLI11.hpp"
#include "omm/adversary.hpp"
#include "omm/io.hpp"
#include "omm/l2_embed.hpp"
#include "omm/light_matching.hpp"
#include "omm/pipeline.hpp"

using namespace omm;

namespace {

struct Loaded {
  std::unique_ptr<MetricIndex> mi;
  std::unique_ptr<RadiusStore> radii;
  InstanceData data;
};

Loaded load_instance(const std::string& input, const std::string& format,
                     std::uint64_t seed) {
  Loaded out;
  out.data = read_instance(input, format);
  out.mi = std::make_unique<MetricIndex>(
      out.data.euclidean ? PointSet::euclidean(static_cast<int>(
                               out.data.payloads.front().size()))
                         : PointSet::explicit_matrix());
  out.radii = std::make_unique<RadiusStore>(seed);
  for (const auto& p : out.data.payloads) {
    const PointId id = out.data.euclidean ? out.mi->append_coords(p)
                                          : out.mi->append_row(p);
    out.radii->sample_next(id, out.mi->estimate_ddim(id));
  }
  return out;
}

std::ostream& open_out(std::ofstream& file, const std::string& path) {
  if (path.empty()) return std::cout;
  file.open(path);
  if (!file) throw std::invalid_argument("cannot open output: " + path);
  return file;
}

int run_embed_hst(const std::string& input, const std::string& format,
                  std::uint64_t seed, const std::string& out_path,
                  const std::string& variant) {
  auto L = load_instance(input, format, seed);
  HstTree tree;
  std::unique_ptr<EuclideanDecomposition> euclid;
  if (variant == "euclidean")
    euclid = std::make_unique<EuclideanDecomposition>(*L.mi, seed);
  std::map<std::pair<PointId, int>, ClusterKey> cache;
  auto key = [&](PointId p, int s) {
    auto it = cache.find({p, s});
    if (it != cache.end()) return it->second;
    ClusterKey k;
    if (euclid) {
      k = euclid->cluster_of(p, s);
    } else {
      PaddedDecomposition dec(*L.mi, *L.radii);
      k = ClusterKey{ClusterKey::Kind::net_center, dec.center_of(p, s), 0};
    }
    cache.emplace(std::pair<PointId, int>{p, s}, k);
    return k;
  };
  // replay arrivals through the tree
  {
    MetricIndex fresh(L.data.euclidean
                          ? PointSet::euclidean(static_cast<int>(
                                L.data.payloads.front().size()))
                          : PointSet::explicit_matrix());
    // the index already holds all points; reuse it directly
  }
  for (PointId x = 1; x <= L.mi->size(); ++x)
    HstBuilder::insert(tree, *L.mi, x, key);
  std::ofstream file;
  auto& os = open_out(file, out_path);
  os << tree.export_text();
  // domination sanity
  for (PointId a = 1; a <= L.mi->size(); ++a)
    for (PointId b = a + 1; b <= L.mi->size(); ++b)
      if (tree.distance(a, b) + 1e-12 < L.mi->distance(a, b)) {
        std::cerr << "domination violated\n";
        return 1;
      }
  return 0;
}

int run_embed_l2(const std::string& input, const std::string& format,
                 std::uint64_t seed, int budget, const std::string& out_path,
                 bool report_distortion) {
  auto L = load_instance(input, format, seed);
  DEstimator est(*L.mi, seed);
  auto D = est.estimate_d_matrix(budget);
  GramRealizer gr;
  std::vector<std::vector<double>> ys;
  for (int n = 0; n < L.mi->size(); ++n) {
    std::vector<double> row(D[n].begin(), D[n].begin() + n);
    ys.push_back(gr.realize_next(row));
  }
  std::ofstream file;
  auto& os = open_out(file, out_path);
  write_vectors_csv(os, ys);
  if (report_distortion) {
    double worst_exp = 0.0, worst_con = 0.0, sum = 0.0;
    int cnt = 0;
    for (PointId a = 1; a <= L.mi->size(); ++a)
      for (PointId b = a + 1; b <= L.mi->size(); ++b) {
        const double d = L.mi->distance(a, b);
        if (d == 0.0) continue;
        const double e = std::sqrt(gr.sq_dist(a - 1, b - 1));
        worst_exp = std::max(worst_exp, e / d);
        worst_con = std::max(worst_con, d / e);
        sum += e / d;
        ++cnt;
      }
    std::cerr << "expansion " << worst_exp << " contraction " << worst_con
              << " distortion " << worst_exp * worst_con << " mean-stretch "
              << sum / std::max(cnt, 1) << " max-psd-shift "
              << gr.max_residual() << "\n";
  }
  return 0;
}

int run_decompose(const std::string& input, const std::string& format,
                  std::uint64_t seed, int scale, const std::string& out_path,
                  const std::string& variant) {
  auto L = load_instance(input, format, seed);
  std::ofstream file;
  auto& os = open_out(file, out_path);
  os << "point_id,center_id\n";
  if (variant == "euclidean") {
    EuclideanDecomposition dec(*L.mi, seed);
    for (PointId x = 1; x <= L.mi->size(); ++x) {
      const auto k = dec.cluster_of(x, scale);
      os << x << ",e" << static_cast<int>(k.kind) << ":" << k.a << ":" << k.b
         << "\n";
    }
  } else {
    PaddedDecomposition dec(*L.mi, *L.radii);
    for (PointId x = 1; x <= L.mi->size(); ++x)
      os << x << ',' << dec.center_of(x, scale) << "\n";
  }
  return 0;
}

int run_match(const std::string& input, const std::string& format,
              std::uint64_t seed, const std::string& algo,
              const std::string& log_path, bool with_opt, int cap) {
  auto data = read_instance(input, format);
  if (data.payloads.size() % 2 != 0)
    throw std::invalid_argument("match needs an even number of points");
  std::ofstream file;
  auto& os = open_out(file, log_path);
  os << "step,cost,opt,deletions,additions\n";
  os.precision(17);

  if (algo == "light") {
    auto mi = std::make_unique<MetricIndex>(
        data.euclidean ? PointSet::euclidean(static_cast<int>(
                             data.payloads.front().size()))
                       : PointSet::explicit_matrix());
    auto dist = [&mi](PointId a, PointId b) { return mi->distance(a, b); };
    LightMatcher lm(dist);
    std::unique_ptr<CappedMatcher> capped;
    if (cap > 0) capped = std::make_unique<CappedMatcher>(cap, dist);
    for (std::size_t i = 0; i < data.payloads.size(); i += 2) {
      const PointId a = data.euclidean ? mi->append_coords(data.payloads[i])
                                       : mi->append_row(data.payloads[i]);
      const PointId b = data.euclidean
                            ? mi->append_coords(data.payloads[i + 1])
                            : mi->append_row(data.payloads[i + 1]);
      lm.insert_pair(a, b);
      double cost = lm.matching_weight_exact();
      int dels = lm.last_pair_deletions();
      int adds = lm.last_pair_additions();
      if (capped) {
        capped->insert_pair(a, b, lm.matching_edges());
        cost = capped->weight();
        dels = capped->last_deletions();
        adds = 0;
      }
      os << (i / 2 + 1) << ',' << cost << ',';
      if (with_opt && mi->size() <= 20)
        os << mwpm_bruteforce(mi->size(), [&](int x, int y) {
                return mi->distance(x + 1, y + 1);
              }).cost;
      os << ',' << dels << ',' << adds << "\n";
    }
    return 0;
  }

  const auto variant = data.euclidean ? ObliviousPipeline::Variant::doubling
                                      : ObliviousPipeline::Variant::doubling;
  const auto a = algo == "hp" ? ObliviousPipeline::Algo::hp
                              : ObliviousPipeline::Algo::inward;
  ObliviousPipeline pipe(data.euclidean
                             ? PointSet::euclidean(static_cast<int>(
                                   data.payloads.front().size()))
                             : PointSet::explicit_matrix(),
                         variant, a, seed);
  for (std::size_t i = 0; i < data.payloads.size(); i += 2) {
    auto row = pipe.step_pair(data.payloads[i], data.payloads[i + 1], with_opt);
    os << row.step << ',' << row.cost << ',';
    if (row.opt) os << *row.opt;
    os << ',' << row.deletions << ',' << row.additions << "\n";
  }
  return 0;
}

int run_oracle(const std::string& input, const std::string& format,
               const std::string& what) {
  auto data = read_instance(input, format);
  MetricIndex mi(data.euclidean ? PointSet::euclidean(static_cast<int>(
                                      data.payloads.front().size()))
                                : PointSet::explicit_matrix());
  for (const auto& p : data.payloads)
    data.euclidean ? mi.append_coords(p) : mi.append_row(p);
  auto dist = [&mi](int a, int b) { return mi.distance(a + 1, b + 1); };
  std::cout.precision(17);
  if (what == "mwpm") {
    auto res = mwpm_bruteforce(mi.size(), dist);
    std::cout << res.cost << "\n";
    for (auto [x, y] : res.matching)
      std::cout << x + 1 << ' ' << y + 1 << "\n";
  } else if (what == "mst") {
    std::cout << mst_cost(mi.size(), dist) << "\n";
  } else {
    throw std::invalid_argument("unknown oracle: " + what);
  }
  return 0;
}

int run_lowerbound(const std::string& kind, int r, long long n,
                   std::uint64_t seed, const std::string& out_path) {
  std::ofstream file;
  auto& os = open_out(file, out_path);
  os.precision(17);
  if (kind == "prop1") {
    for (auto [x, y] : prop_one_sequence(5.0, 0.04)) os << x << ' ' << y << "\n";
    return 0;
  }
  if (kind == "fig1") {
    auto fig = fig1_sequences(static_cast<int>(n), 1e6, 1e-3);
    for (auto [x, y] : fig.pairs_a) os << "a " << x << ' ' << y << "\n";
    for (auto [x, y] : fig.pairs_b) os << "b " << x << ' ' << y << "\n";
    return 0;
  }
  if (kind == "laakso") {
    auto g = LaaksoGraph::initial();
    CounterRng rng(seed, Stream::instance, 1);
    for (long long k = 0; k < n; ++k) g.next(rng);
    for (auto& [u, v, w] : g.edges()) os << u << ' ' << v << ' ' << w << "\n";
    return 0;
  }
  int k = 0;
  long long q = 10LL * r;
  long long qq = 1;
  while (qq * q <= n) {
    qq *= q;
    ++k;
  }
  k = std::max(k, 1);
  if (kind == "oblivious") {
    CounterRng rng(seed, Stream::instance, 2);
    std::vector<bool> bits;
    for (int i = 0; i + 1 < k; ++i) bits.push_back(rng.next_bit());
    for (double p : oblivious_lb_sequence(r, k, bits)) os << p << "\n";
    return 0;
  }
  if (kind == "adaptive") {
    AdaptiveLowerBound gen(r, k);
    CappedLineHarness alg(r);
    while (!gen.done()) {
      auto batch = gen.next_batch(alg.coordinate_matching());
      if (batch.empty()) continue;
      for (std::size_t i = 0; i < batch.size(); i += 2)
        alg.feed_pair(batch[i], batch[i + 1]);
      gen.confirm_round(alg.coordinate_matching());
    }
    bool all_ok = true;
    for (const auto& c : gen.certificates()) {
      os << "round " << c.round << (c.case1 ? " case1 " : " case2 ")
         << "witness " << c.witness_edges << " required " << c.required
         << (c.ok ? " ok" : " FAIL") << "\n";
      all_ok = all_ok && c.ok;
    }
    os << "final-weight " << alg.weight() << " diameter " << gen.diameter()
       << "\n";
    return all_ok ? 0 : 1;
  }
  throw std::invalid_argument("unknown kind: " + kind);
}

int run_verify(const std::string& input, const std::string& format,
               std::uint64_t seed, const std::string& line_dump, int dump_size,
               const std::vector<int>& unmatched) {
  if (!line_dump.empty()) {
    std::ifstream in(line_dump);
    if (!in) throw std::invalid_argument("cannot open dump: " + line_dump);
    std::vector<LineMatching::EdgeDump> edges;
    int a, b, c, d;
    while (in >> a >> b >> c >> d) edges.push_back({a, b, c, d});
    std::string why;
    if (!LineMatching::check_invariants(edges, dump_size, unmatched, &why)) {
      std::cerr << "line-matching dump invalid: " << why << "\n";
      return 1;
    }
    std::cout << "line-matching dump ok\n";
    return 0;
  }
  auto L = load_instance(input, format, seed);
  const auto& mi = *L.mi;
  double worst = 0.0;
  if (!mi.points().verify_triangle(&worst)) {
    std::cerr << "triangle inequality violated by " << worst << "\n";
    return 1;
  }
  std::cout << "triangle inequality ok\n";
  // net separation / covering over the live window
  for (int lvl = mi.low_scale() - 4; lvl <= mi.high_scale(); ++lvl) {
    const auto members = mi.nets().net_at(lvl);
    const double sep = std::ldexp(1.0, lvl);
    for (std::size_t i = 0; i < members.size(); ++i)
      for (std::size_t j = i + 1; j < members.size(); ++j)
        if (mi.distance(members[i], members[j]) <= sep) {
          std::cerr << "net separation violated at level " << lvl << "\n";
          return 1;
        }
    for (PointId x = 1; x <= mi.size(); ++x) {
      auto [q, dq] = mi.nets().nearest_net_point(x, lvl);
      if (!(dq < std::ldexp(1.0, lvl + 1))) {
        std::cerr << "net covering violated at level " << lvl << "\n";
        return 1;
      }
    }
  }
  std::cout << "net separation and covering ok\n";
  // decomposition diameters and permanence window
  PaddedDecomposition dec(mi, *L.radii);
  for (int s = mi.low_scale(); s <= mi.high_scale(); ++s)
    for (PointId x = 1; x <= mi.size(); ++x)
      for (PointId y = x + 1; y <= mi.size(); ++y)
        if (dec.center_of(x, s) == dec.center_of(y, s) &&
            mi.distance(x, y) > std::ldexp(1.0, s)) {
          std::cerr << "cluster diameter violated at scale " << s << "\n";
          return 1;
        }
  std::cout << "cluster diameters ok\n";
  // tree domination
  HstTree tree;
  std::map<std::pair<PointId, int>, ClusterKey> cache;
  auto key = [&](PointId p, int s) {
    auto it = cache.find({p, s});
    if (it != cache.end()) return it->second;
    ClusterKey k{ClusterKey::Kind::net_center, dec.center_of(p, s), 0};
    cache.emplace(std::pair<PointId, int>{p, s}, k);
    return k;
  };
  for (PointId x = 1; x <= mi.size(); ++x) HstBuilder::insert(tree, mi, x, key);
  for (PointId a2 = 1; a2 <= mi.size(); ++a2)
    for (PointId b2 = a2 + 1; b2 <= mi.size(); ++b2)
      if (tree.distance(a2, b2) + 1e-12 < mi.distance(a2, b2)) {
        std::cerr << "tree domination violated\n";
        return 1;
      }
  std::cout << "tree domination ok\n";
  return 0;
}

int run_bench(const std::string& family, const std::string& algo, int pairs,
              int seeds, std::uint64_t seed0, const std::string& out_path) {
  std::ofstream file;
  auto& os = open_out(file, out_path);
  os << BenchRow::header() << "\n";
  for (int t = 0; t < seeds; ++t) {
    const std::uint64_t seed = seed0 + t;
    CounterRng rng(seed, Stream::bench, 0);
    std::vector<std::vector<double>> pts;
    for (int i = 0; i < 2 * pairs; ++i) {
      if (family == "grid") {
        const int side = 1;
        (void)side;
        pts.push_back({double(rng.next_below(64)), double(rng.next_below(64))});
      } else if (family == "line") {
        pts.push_back({double(rng.next_below(100000))});
      } else {
        pts.push_back({rng.next_unit() * 100, rng.next_unit() * 100});
      }
    }
    if (algo == "light") {
      MetricIndex mi(PointSet::euclidean(static_cast<int>(pts.front().size())));
      LightMatcher lm([&mi](PointId a, PointId b) { return mi.distance(a, b); });
      for (int i = 0; i < 2 * pairs; i += 2) {
        const PointId a = mi.append_coords(pts[i]);
        const PointId b = mi.append_coords(pts[i + 1]);
        lm.insert_pair(a, b);
        BenchRow row;
        row.step = i / 2 + 1;
        row.algo = "light";
        row.seed = seed;
        row.cost = lm.matching_weight_exact();
        row.mst = mst_cost(mi.size(), [&](int x, int y) {
          return mi.distance(x + 1, y + 1);
        });
        row.lightness = row.mst > 0 ? row.cost / row.mst : 0;
        row.deletions = lm.last_pair_modifications();
        if (mi.size() <= 20) {
          row.opt = mwpm_bruteforce(mi.size(), [&](int x, int y) {
                      return mi.distance(x + 1, y + 1);
                    }).cost;
          row.ratio = *row.opt > 0 ? row.cost / *row.opt : 1.0;
        }
        os << format_bench_row(row) << "\n";
      }
    } else {
      ObliviousPipeline pipe(
          PointSet::euclidean(static_cast<int>(pts.front().size())),
          ObliviousPipeline::Variant::doubling,
          algo == "hp" ? ObliviousPipeline::Algo::hp
                       : ObliviousPipeline::Algo::inward,
          seed);
      for (int i = 0; i < 2 * pairs; i += 2) {
        auto row = pipe.step_pair(pts[i], pts[i + 1], 2 * pairs <= 20);
        os << format_bench_row(row) << "\n";
      }
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"online metric embeddings and min-weight matchings"};
  app.require_subcommand(1);

  std::string input, format = "csv", out_path, variant = "doubling";
  std::uint64_t seed = 1;
  int scale = 0, budget = 2000, cap = 0;
  bool with_opt = false, report_distortion = false;

  auto add_common = [&](CLI::App* cmd, bool needs_input) {
    if (needs_input)
      cmd->add_option("--input", input, "instance file")->required();
    cmd->add_option("--format", format, "csv|matrix");
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--out", out_path, "output file (default stdout)");
  };

  auto* c_hst = app.add_subcommand("embed-hst", "embed into a labeled tree");
  add_common(c_hst, true);
  c_hst->add_option("--variant", variant, "doubling|euclidean");

  auto* c_l2 = app.add_subcommand("embed-l2", "embed into euclidean space");
  add_common(c_l2, true);
  c_l2->add_option("--budget", budget, "samples per distance entry");
  c_l2->add_flag("--report-distortion", report_distortion);

  auto* c_dec = app.add_subcommand("decompose", "dump one scale's clusters");
  add_common(c_dec, true);
  c_dec->add_option("--scale", scale, "scale index")->required();
  c_dec->add_option("--variant", variant, "doubling|euclidean");

  std::string algo = "inward";
  std::string log_path;
  auto* c_match = app.add_subcommand("match", "maintain an online matching");
  add_common(c_match, true);
  c_match->add_option("--algo", algo, "inward|hp|light")->required();
  c_match->add_option("--log", log_path, "per-step csv (default stdout)");
  c_match->add_flag("--opt", with_opt, "include the exact optimum (<=20 pts)");
  c_match->add_option("--cap", cap, "hard deletions-per-pair cap (light only)");

  std::string what = "mwpm";
  auto* c_oracle = app.add_subcommand("oracle", "exact small-instance answers");
  add_common(c_oracle, true);
  c_oracle->add_option("--what", what, "mwpm|mst")->required();

  std::string kind = "prop1";
  int lb_r = 2;
  long long lb_n = 8000;
  auto* c_lb = app.add_subcommand("lowerbound-gen", "adversarial sequences");
  c_lb->add_option("--kind", kind, "prop1|adaptive|oblivious|laakso|fig1")
      ->required();
  c_lb->add_option("--r", lb_r, "recourse budget");
  c_lb->add_option("--n", lb_n, "points (or levels for laakso)");
  c_lb->add_option("--seed", seed, "random seed");
  c_lb->add_option("--out", out_path, "output file (default stdout)");

  std::string family = "random";
  int pairs = 8, nseeds = 4;
  auto* c_bench = app.add_subcommand("bench", "sweep instance families");
  c_bench->add_option("--family", family, "grid|line|random");
  c_bench->add_option("--algo", algo, "inward|hp|light")->required();
  c_bench->add_option("--pairs", pairs, "pairs per trial");
  c_bench->add_option("--seeds", nseeds, "number of trials");
  c_bench->add_option("--seed", seed, "base seed");
  c_bench->add_option("--out", out_path, "output file (default stdout)");

  std::string line_dump;
  int dump_size = 0;
  std::vector<int> unmatched;
  auto* c_verify = app.add_subcommand("verify", "exhaustive invariant checks");
  c_verify->add_option("--input", input, "instance file");
  c_verify->add_option("--format", format, "csv|matrix");
  c_verify->add_option("--seed", seed, "random seed");
  c_verify->add_option("--line-dump", line_dump, "edge dump: a b xi_c xi_d");
  c_verify->add_option("--size", dump_size, "element count for the dump");
  c_verify->add_option("--unmatched", unmatched, "unmatched ranks in the dump");

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_hst->parsed())
      return run_embed_hst(input, format, seed, out_path, variant);
    if (c_l2->parsed())
      return run_embed_l2(input, format, seed, budget, out_path,
                          report_distortion);
    if (c_dec->parsed())
      return run_decompose(input, format, seed, scale, out_path, variant);
    if (c_match->parsed())
      return run_match(input, format, seed, algo, log_path, with_opt, cap);
    if (c_oracle->parsed()) return run_oracle(input, format, what);
    if (c_lb->parsed()) return run_lowerbound(kind, lb_r, lb_n, seed, out_path);
    if (c_bench->parsed())
      return run_bench(family, algo, pairs, nseeds, seed, out_path);
    if (c_verify->parsed())
      return run_verify(input, format, seed, line_dump, dump_size, unmatched);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
