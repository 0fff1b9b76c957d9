// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "gin_helpers.hpp"
#include "oracles.hpp"
#include "physics_oracles.hpp"
#include "rockgraph/config.hpp"
#include "rockgraph/corpus.hpp"
#include "rockgraph/dataset.hpp"
#include "rockgraph/effmed.hpp"
#include "rockgraph/ginnet.hpp"
#include "rockgraph/graphmetrics.hpp"
#include "rockgraph/mapper.hpp"
#include "rockgraph/randomforest.hpp"
#include "rockgraph/scoring.hpp"
#include "rockgraph/voxelgrid.hpp"

using namespace rockgraph;
using ad::Matrix;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int failures = 0;

void run(int id, const char* name, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("[%s] %2d %s (%.2f s): %s\n", o.pass ? "PASS" : "FAIL", id, name, secs, o.detail.c_str());
  std::fflush(stdout);
}

ElasticModuli quartz() {
  return load_mineral(std::filesystem::path(ROCKGRAPH_SOURCE_DIR) / "configs" / "quartz.json").moduli;
}

// 1 -------------------------------------------------------------------------

std::vector<RockGraph> all_solid_graphs() {
  std::vector<RockGraph> out;
  for (std::size_t w : {8, 16, 32}) {
    const auto grid = VoxelGrid::filled({w, w, w}, 1.0, Phase::Solid);
    out.push_back(build_graph(grid, {4, 0.25}));
    out.push_back(build_graph(grid, {4, 0.0}));
  }
  return out;
}

Outcome mapper_paths(const std::vector<RockGraph>& graphs) {
  const std::vector<std::pair<std::size_t, std::size_t>> path{{0, 1}, {1, 2}, {2, 3}};
  Outcome o;
  for (std::size_t i = 0; i < graphs.size(); i += 2) {
    const auto& g = graphs[i];
    const bool ok = g.count(Phase::Solid) == 4 && g.count(Phase::Pore) == 0 && g.edges == path &&
                    graphs[i + 1].count(Phase::Solid) == 4 && graphs[i + 1].edges.empty();
    if (!ok) o.pass = false;
  }
  o.detail = o.pass ? "W=8,16,32: 4 solid nodes, path edges, no pore nodes; p=0 gives no edges"
                    : "graph mismatch for at least one W";
  return o;
}

// 2 -------------------------------------------------------------------------

Outcome metric_oracles() {
  Rng rng(20240601);
  double worst_c = 0, worst_e = 0, worst_p = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + uniform_index(rng, 11);
    const auto g = oracle::random_connected(n, uniform01(rng) * 0.6, rng);
    const auto c = closeness(g), co = oracle::closeness(g);
    const auto e = eigencentrality(g), eo = oracle::eigencentrality_connected(g);
    const auto p = pagerank(g), po = oracle::pagerank(g, 0.85);
    for (std::size_t v = 0; v < n; ++v) {
      worst_c = std::max(worst_c, std::abs(c[v] - co[v]));
      worst_e = std::max(worst_e, std::abs(e[v] - eo[v]));
      worst_p = std::max(worst_p, std::abs(p[v] - po[v]));
    }
  }
  const bool pass = worst_c <= 1e-6 && worst_e <= 1e-6 && worst_p <= 1e-6;
  return {pass, fmt("200 graphs, max |diff| closeness %.2e, eigencentrality %.2e, pagerank %.2e", worst_c, worst_e,
                    worst_p)};
}

// 3 -------------------------------------------------------------------------

Outcome bounds_ordering() {
  const auto mineral = quartz();
  const ElasticModuli vacuum{0.0, 0.0};
  DemParams dem{mineral};
  std::vector<double> phis;
  for (int i = 1; i <= 100; ++i) phis.push_back(0.35 * i / 100.0);
  const auto curve = dem_curve(dem, phis);
  constexpr double slack = 1e-9;
  struct Tally {
    int fails = 0;
    double worst_excess = -1e300;  // max of DEM - HS+
    double at = 0;
  } tk, tm;
  auto check = [&](Tally& t, double reuss, double hs_lo, double dem_v, double hs_up, double voigt, double phi) {
    const bool ok = std::abs(reuss) <= slack && std::abs(hs_lo) <= slack && dem_v >= -slack &&
                    dem_v <= hs_up + slack && hs_up <= voigt + slack;
    if (!ok) ++t.fails;
    if (dem_v - hs_up > t.worst_excess) {
      t.worst_excess = dem_v - hs_up;
      t.at = phi;
    }
  };
  for (std::size_t i = 0; i < phis.size(); ++i) {
    const auto vr = voigt_reuss_bounds(mineral, vacuum, phis[i]);
    const auto hs = hashin_shtrikman(mineral, vacuum, phis[i]);
    check(tk, vr.lower.k, hs.lower.k, curve[i].k, hs.upper.k, vr.upper.k, phis[i]);
    check(tm, vr.lower.mu, hs.lower.mu, curve[i].mu, hs.upper.mu, vr.upper.mu, phis[i]);
  }
  return {tk.fails == 0 && tm.fails == 0,
          fmt("K=%.1f mu=%.1f alpha=%.2f; K violations %d/100 (max DEM-HS+ %.3g); mu violations %d/100 (max DEM-HS+ "
              "%.3g GPa at phi=%.4f)",
              mineral.k, mineral.mu, dem.aspect_ratio, tk.fails, tk.worst_excess, tm.fails, tm.worst_excess, tm.at)};
}

// 4 -------------------------------------------------------------------------

Outcome dem_vs_rk4() {
  const auto mineral = quartz();
  DemParams dem{mineral};
  double worst = 0;
  for (double phi : {0.05, 0.15, 0.30}) {
    const auto a = dem_moduli(dem, phi);
    const auto b = oracle::rk4(mineral, dem.aspect_ratio, phi, 1e-4);
    worst = std::max({worst, std::abs(a.k - b.k) / std::abs(b.k), std::abs(a.mu - b.mu) / std::abs(b.mu)});
  }
  const bool exact = dem_moduli(dem, 0.0) == mineral;
  return {worst <= 1e-6 && exact, fmt("max relative diff %.2e; phi=0 exact: %s", worst, exact ? "yes" : "no")};
}

// 5 -------------------------------------------------------------------------

Outcome voigt_identity() {
  Rng rng(55);
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    const ElasticModuli m{uniform(rng, 0.01, 100.0), uniform(rng, 0.01, 100.0)};
    const auto back = voigt_average(isotropic_stiffness(m));
    worst = std::max({worst, std::abs(back.k - m.k), std::abs(back.mu - m.mu)});
  }
  return {worst <= 1e-12, fmt("1000 pairs in (0, 100] GPa, max |diff| %.2e", worst)};
}

// 6 -------------------------------------------------------------------------

Outcome gradient_check() {
  Rng rng(606);
  double worst = 0;
  std::size_t checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    GinConfig cfg;
    cfg.input_dim = 1 + uniform_index(rng, 4);
    cfg.hidden_dim = 2 + uniform_index(rng, 4);
    cfg.head_dim = 2 + uniform_index(rng, 4);
    cfg.seed = static_cast<std::uint64_t>(trial);
    GinModel m(cfg);
    for (auto* p : m.parameters())
      if (p->value.size() == 1) p->value(0, 0) = uniform(rng, -0.3, 0.3);
    const std::size_t n_graphs = 1 + uniform_index(rng, 3);
    std::vector<GraphTensor> gs;
    for (std::size_t i = 0; i < n_graphs; ++i)
      gs.push_back(testgraphs::random_graph(1 + uniform_index(rng, 6), cfg.input_dim, 0.5, rng));
    std::vector<const GraphTensor*> ptrs;
    for (auto& g : gs) ptrs.push_back(&g);
    const auto batch = make_batch(ptrs);
    Matrix target(n_graphs, cfg.output_dim);
    for (auto& v : target.values()) v = uniform(rng, -1, 1);
    m.zero_grad();
    m.loss_and_grads(batch, target);
    for (auto* p : m.parameters()) {
      auto vals = p->value.values();
      for (std::size_t i = 0; i < vals.size(); ++i) {
        const double orig = vals[i], h = 1e-5;
        vals[i] = orig + h;
        const double up = m.eval_mse(batch, target);
        vals[i] = orig - h;
        const double down = m.eval_mse(batch, target);
        vals[i] = orig;
        const double fd = (up - down) / (2 * h), an = p->grad.values()[i];
        worst = std::max(worst, std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6}));
        ++checked;
      }
    }
  }
  return {worst < 1e-4, fmt("20 instances, %zu parameters, max relative error %.2e", checked, worst)};
}

// 7 -------------------------------------------------------------------------

Outcome invariance() {
  Rng rng(707);
  GinModel m(GinConfig{.seed = 70});
  int mismatches = 0;
  for (int t = 0; t < 100; ++t) {
    const auto g = testgraphs::random_graph(2 + uniform_index(rng, 60), kNodeFeatureDim, 0.1, rng);
    const auto perm = testgraphs::random_perm(g.features.rows(), rng);
    const auto h = testgraphs::permute(g, perm);
    if (m.forward_values(g) != m.forward_values(h)) ++mismatches;
    // isomorphic copy carried through a batch next to an unrelated graph
    const auto other = testgraphs::random_graph(5, kNodeFeatureDim, 0.4, rng);
    const GraphTensor* pair[] = {&other, &h};
    ad::Tape tape;
    const auto out = tape.value(m.forward(tape, make_batch(pair), false));
    const auto single = m.forward_values(g);
    if (out(1, 0) != single[0] || out(1, 1) != single[1]) ++mismatches;
  }
  bool sizes_ok = true;
  for (std::size_t n : {1, 10, 500}) {
    const auto out = m.forward_values(testgraphs::random_graph(n, kNodeFeatureDim, 3.0 / n, rng));
    sizes_ok = sizes_ok && out.size() == 2 && std::isfinite(out[0]) && std::isfinite(out[1]);
  }
  return {mismatches == 0 && sizes_ok, fmt("100 pairs, %d inexact outputs; sizes 1/10/500 forward: %s", mismatches,
                                           sizes_ok ? "ok" : "failed")};
}

// 8, 9, 11 ------------------------------------------------------------------

constexpr std::uint64_t kCorpusSeed = 1;
constexpr std::uint64_t kSplitSeed = 7;
constexpr std::uint64_t kModelSeed = 11;
constexpr std::uint64_t kForestSeed = 3;

CorpusParams corpus_params() {
  CorpusParams p;
  p.dem.mineral = quartz();
  p.seed = kCorpusSeed;
  return p;
}

struct Corpus {
  std::vector<CorpusSample> samples;
  std::map<std::string, std::size_t> index;

  const CorpusSample& at(const std::string& id) const { return samples[index.at(id)]; }
};

Corpus build_corpus() {
  Corpus c{make_corpus(corpus_params()), {}};
  for (std::size_t i = 0; i < c.samples.size(); ++i) c.index[c.samples[i].meta.id] = i;
  return c;
}

std::vector<LabeledGraph> labeled(const Corpus& c, const std::vector<std::string>& ids) {
  std::vector<LabeledGraph> out;
  for (const auto& id : ids) out.push_back({to_tensor(c.at(id).graph), *c.at(id).meta.labels});
  return out;
}

struct Scores {
  double r2_k = 0, r2_mu = 0;
};

Scores score(const std::vector<ElasticModuli>& pred, const std::vector<ElasticModuli>& truth) {
  std::vector<double> pk, pm, tk, tm;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pk.push_back(pred[i].k);
    pm.push_back(pred[i].mu);
    tk.push_back(truth[i].k);
    tm.push_back(truth[i].mu);
  }
  return {r2(pk, tk), r2(pm, tm)};
}

struct GinRun {
  double dropout = 0;
  TrainResult result;
  std::vector<ElasticModuli> predictions;
  Scores scores;
};

GinRun train_gin(const std::vector<LabeledGraph>& train_set, const std::vector<LabeledGraph>& val_set,
                 const std::vector<LabeledGraph>& test_set, double dropout) {
  GinModel model(GinConfig{.seed = kModelSeed});
  TrainConfig tc;
  tc.dropout = dropout;
  tc.seed = derive_seed(kModelSeed, "train");
  GinRun run{dropout, train(model, train_set, val_set, tc), {}, {}};
  std::vector<ElasticModuli> truth;
  for (const auto& s : test_set) {
    run.predictions.push_back(model.predict(s.graph));
    truth.push_back(s.labels);
  }
  run.scores = score(run.predictions, truth);
  return run;
}

double best_val(const GinRun& r) { return r.result.history[r.result.best_epoch - 1].val_mse; }

// Both dropout presets are trained; the one with the lower best validation
// loss is scored on the test partition.
struct Selected {
  GinRun chosen;
  double other_val = 0;
};

Selected select_by_validation(const std::vector<LabeledGraph>& tr, const std::vector<LabeledGraph>& va,
                              const std::vector<LabeledGraph>& te) {
  auto a = train_gin(tr, va, te, kDropoutTuned);
  auto b = train_gin(tr, va, te, kDropoutBaseline);
  if (best_val(b) < best_val(a)) return {std::move(b), best_val(a)};
  return {std::move(a), best_val(b)};
}

struct GnnExperiment {
  Selected mixed;
  Selected held_out;
};

struct Partitions {
  std::vector<LabeledGraph> train, val, test;
};

Partitions mixed_partitions(const Corpus& c) {
  std::vector<std::string> ids;
  for (const auto& s : c.samples) ids.push_back(s.meta.id);
  const auto split = make_split(ids, {}, kSplitSeed);
  return {labeled(c, split.train), labeled(c, split.val), labeled(c, split.test)};
}

Partitions size_partitions(const Corpus& c) {
  std::vector<std::string> small, large;
  for (const auto& s : c.samples) (s.meta.subcube_size == 64 ? large : small).push_back(s.meta.id);
  const auto split = make_split(small, {0.9, 0.1, 0.0}, kSplitSeed);
  return {labeled(c, split.train), labeled(c, split.val), labeled(c, large)};
}

GnnExperiment gnn_experiment(const Corpus& c) {
  const auto mixed = mixed_partitions(c);
  const auto sized = size_partitions(c);
  return {select_by_validation(mixed.train, mixed.val, mixed.test),
          select_by_validation(sized.train, sized.val, sized.test)};
}

struct ForestRun {
  std::vector<ElasticModuli> predictions;
  std::vector<double> importance;
  Scores scores;
};

ForestRun forest_experiment(const Corpus& c) {
  std::vector<std::string> ids;
  for (const auto& s : c.samples) ids.push_back(s.meta.id);
  const auto split = make_split(ids, {}, kSplitSeed);
  Dataset data{12, {}, {}};
  for (const auto& id : split.train) {
    const auto f = summarize(c.at(id).graph).as_array();
    data.x.insert(data.x.end(), f.begin(), f.end());
    data.y.push_back({c.at(id).meta.labels->k, c.at(id).meta.labels->mu});
  }
  ForestParams fp;
  fp.n_trees = 50;
  fp.seed = kForestSeed;
  const auto forest = Forest::train(data, fp);
  ForestRun run;
  std::vector<ElasticModuli> truth;
  for (const auto& id : split.test) {
    const auto t = forest.predict(summarize(c.at(id).graph).as_array());
    run.predictions.push_back({t[0], t[1]});
    truth.push_back(*c.at(id).meta.labels);
  }
  run.importance = forest.feature_importance();
  run.scores = score(run.predictions, truth);
  return run;
}

std::string describe(const Selected& s) {
  return fmt("dropout %.1f (val %.4f vs %.4f), best epoch %zu, R2 K %.4f mu %.4f", s.chosen.dropout,
             best_val(s.chosen), s.other_val, s.chosen.result.best_epoch, s.chosen.scores.r2_k, s.chosen.scores.r2_mu);
}

bool same_run(const GinRun& a, const GinRun& b) {
  return a.dropout == b.dropout && a.result.history == b.result.history &&
         a.result.best_epoch == b.result.best_epoch && a.predictions == b.predictions;
}

// 10 ------------------------------------------------------------------------

Outcome aspect_recovery() {
  DemParams truth{quartz()};
  truth.aspect_ratio = 0.3;
  std::vector<PorosityModuli> samples;
  for (int i = 1; i <= 30; ++i) {
    const double phi = 0.01 * i;
    samples.push_back({phi, dem_moduli(truth, phi)});
  }
  std::vector<double> grid;
  for (int i = 1; i <= 10; ++i) grid.push_back(0.05 * i);
  grid[5] = 0.3;  // exact grid value, not 0.05 * 6
  const auto fit = fit_aspect_ratio(samples, grid, DemParams{quartz()});
  return {fit.aspect_ratio == 0.3 && fit.r2_k == 1.0 && fit.r2_mu == 1.0,
          fmt("recovered alpha %.3f, R2 K %.17g mu %.17g", fit.aspect_ratio, fit.r2_k, fit.r2_mu)};
}

}  // namespace

int main() {
  std::vector<RockGraph> solid_graphs;
  run(1, "mapper all-solid grids", [&] {
    solid_graphs = all_solid_graphs();
    return mapper_paths(solid_graphs);
  });
  run(2, "graph metrics vs dense oracles", metric_oracles);
  run(3, "bounds ordering Reuss=HS-<=DEM<=HS+<=Voigt", bounds_ordering);
  run(4, "DEM adaptive vs fixed-step RK4", dem_vs_rk4);
  run(5, "Voigt average identity", voigt_identity);
  run(6, "GIN gradient check", gradient_check);
  run(7, "GIN permutation and size invariance", invariance);

  Corpus corpus;
  GnnExperiment gnn;
  run(8, "GIN end-to-end learning", [&] {
    corpus = build_corpus();
    gnn = gnn_experiment(corpus);
    const auto& m = gnn.mixed.chosen.scores;
    const auto& h = gnn.held_out.chosen.scores;
    const bool mixed_ok = m.r2_k >= 0.90 && m.r2_mu >= 0.90;
    const bool held_ok = h.r2_k >= 0.85 && h.r2_mu >= 0.85;
    return Outcome{mixed_ok && held_ok, std::string("mixed test (R2 >= 0.90) ") + (mixed_ok ? "met" : "NOT met") +
                                            ": " + describe(gnn.mixed) + "; held-out size 64 (R2 >= 0.85) " +
                                            (held_ok ? "met" : "NOT met") + ": " + describe(gnn.held_out)};
  });

  ForestRun forest;
  run(9, "random forest end-to-end learning", [&] {
    if (corpus.samples.empty()) corpus = build_corpus();
    forest = forest_experiment(corpus);
    const double sum = std::accumulate(forest.importance.begin(), forest.importance.end(), 0.0);
    const bool nonneg = std::all_of(forest.importance.begin(), forest.importance.end(), [](double v) { return v >= 0; });
    const bool pass =
        forest.scores.r2_k >= 0.80 && forest.scores.r2_mu >= 0.80 && nonneg && std::abs(sum - 1.0) <= 1e-9;
    return Outcome{pass, fmt("R2 K %.4f mu %.4f; importances non-negative: %s, sum-1 = %.1e", forest.scores.r2_k,
                             forest.scores.r2_mu, nonneg ? "yes" : "no", sum - 1.0)};
  });

  run(10, "aspect-ratio fit recovers 0.3", aspect_recovery);

  run(11, "determinism of mapper, GIN and forest runs", [&] {
    const bool graphs = all_solid_graphs() == solid_graphs;
    const auto again = build_corpus();
    bool corpus_same = again.samples.size() == corpus.samples.size();
    for (std::size_t i = 0; corpus_same && i < again.samples.size(); ++i) {
      corpus_same = again.samples[i].graph == corpus.samples[i].graph &&
                    again.samples[i].meta.labels == corpus.samples[i].meta.labels;
    }
    // retrain the selected configurations only
    const auto mixed = mixed_partitions(again);
    const auto sized = size_partitions(again);
    const bool gin_mixed = same_run(train_gin(mixed.train, mixed.val, mixed.test, gnn.mixed.chosen.dropout),
                                    gnn.mixed.chosen);
    const bool gin_held = same_run(train_gin(sized.train, sized.val, sized.test, gnn.held_out.chosen.dropout),
                                   gnn.held_out.chosen);
    const auto f = forest_experiment(again);
    const bool rf = f.predictions == forest.predictions && f.importance == forest.importance;
    auto yn = [](bool b) { return b ? "identical" : "DIFFERENT"; };
    return Outcome{graphs && corpus_same && gin_mixed && gin_held && rf,
                   fmt("mapper graphs %s; corpus graphs %s; GIN mixed %s; GIN held-out %s; forest %s", yn(graphs),
                       yn(corpus_same), yn(gin_mixed), yn(gin_held), yn(rf))};
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
