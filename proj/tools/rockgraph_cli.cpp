// rockgraph command-line driver.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "rockgraph/config.hpp"
#include "rockgraph/corpus.hpp"
#include "rockgraph/dataset.hpp"
#include "rockgraph/effmed.hpp"
#include "rockgraph/errors.hpp"
#include "rockgraph/ginnet.hpp"
#include "rockgraph/graphmetrics.hpp"
#include "rockgraph/mapper.hpp"
#include "rockgraph/randomforest.hpp"
#include "rockgraph/scoring.hpp"
#include "rockgraph/voxelgrid.hpp"

namespace fs = std::filesystem;
using namespace rockgraph;

namespace {

constexpr const char* kThreadsEnv = "ROCKGRAPH_THREADS";

std::size_t default_threads() {
  if (const char* env = std::getenv(kThreadsEnv)) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return 1;
}

// Runs body(i) for i in [0, n) on up to `threads` workers. Results must be
// written to slot i so the output order does not depend on scheduling.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  return out;
}

MapperParams mapper_params(std::size_t n_intervals, double overlap, const std::string& axis) {
  MapperParams p{n_intervals, overlap, FilterAxis::X};
  if (axis == "y") p.axis = FilterAxis::Y;
  if (axis == "z") p.axis = FilterAxis::Z;
  p.validate();
  return p;
}

ElasticModuli mineral_from(const std::string& config, double k, double mu) {
  if (!config.empty()) return load_mineral(config).moduli;
  if (k <= 0.0 || mu <= 0.0) throw InvalidArgument("give --mineral or both --mineral-k and --mineral-mu");
  return {k, mu};
}

struct LoadedSample {
  Sample meta;
  RockGraph graph;
};

std::vector<LoadedSample> load_manifest_graphs(const fs::path& manifest, std::size_t threads) {
  auto rows = read_manifest(manifest);
  std::vector<LoadedSample> out(rows.size());
  parallel_for(rows.size(), threads, [&](std::size_t i) {
    out[i].graph = read_graph(resolve_path(manifest, rows[i].graph_path));
    out[i].meta = std::move(rows[i]);
  });
  return out;
}

Split split_for(const std::vector<LoadedSample>& samples, const std::string& split_file, std::uint64_t seed) {
  if (!split_file.empty()) return read_split(split_file);
  std::vector<std::string> ids;
  for (const auto& s : samples) ids.push_back(s.meta.id);
  return make_split(ids, {}, seed);
}

std::vector<const LoadedSample*> select(const std::vector<LoadedSample>& samples, const std::vector<std::string>& ids,
                                        bool need_labels) {
  std::map<std::string, const LoadedSample*> by_id;
  for (const auto& s : samples) by_id[s.meta.id] = &s;
  std::vector<const LoadedSample*> out;
  for (const auto& id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw InvalidArgument("split references unknown sample id '" + id + "'");
    if (need_labels && !it->second->meta.labels) throw InvalidArgument("sample '" + id + "' has no labels");
    out.push_back(it->second);
  }
  return out;
}

const std::vector<std::string>& partition(const Split& split, const std::string& name) {
  if (name == "train") return split.train;
  if (name == "val") return split.val;
  return split.test;
}

// --- model wrapper -------------------------------------------------------

struct AnyModel {
  std::optional<Forest> forest;
  std::optional<GinModel> gin;

  static AnyModel load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open model " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    std::string format;
    try {
      format = nlohmann::json::parse(ss.str()).at("format").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("unrecognized model file " + path.string() + ": " + e.what());
    }
    AnyModel m;
    if (format == "rockgraph-forest") {
      m.forest = Forest::parse(ss.str());
    } else if (format == "rockgraph-gin") {
      m.gin = GinModel::parse(ss.str());
    } else {
      throw FormatError("unknown model format '" + format + "'");
    }
    return m;
  }

  ElasticModuli predict(const RockGraph& g) const {
    if (forest) {
      const auto t = forest->predict(summarize(g).as_array());
      return {t[0], t[1]};
    }
    return gin->predict(g);
  }
};

// --- subcommands ---------------------------------------------------------

struct GenArgs {
  std::vector<std::size_t> dims{64, 64, 64};
  std::size_t n_spheres = 500;
  double radius_min = 3.0, radius_max = 7.0;
  double resolution = 2e-6;
  std::uint64_t seed = 0;
  std::vector<std::size_t> origin;
  std::size_t subcube_size = 0;
  std::string out;
};

int cmd_gen(const GenArgs& a) {
  SpherePackParams p;
  p.dims = {a.dims[0], a.dims[1], a.dims[2]};
  p.n_spheres = a.n_spheres;
  p.radius_min = a.radius_min;
  p.radius_max = a.radius_max;
  p.seed = a.seed;
  p.resolution_m = a.resolution;
  auto grid = gen_sphere_pack(p);
  if (a.subcube_size > 0) {
    const Index3 o = a.origin.empty() ? Index3{0, 0, 0} : Index3{a.origin[0], a.origin[1], a.origin[2]};
    grid = subcube(grid, o, {a.subcube_size, a.subcube_size, a.subcube_size});
  }
  write_raw(grid, a.out);
  const auto d = grid.dims();
  std::cout << "wrote " << a.out << " (" << d.nx << "x" << d.ny << "x" << d.nz << "), porosity " << porosity(grid)
            << '\n';
  return 0;
}

struct CorpusArgs {
  std::size_t n_samples = 500;
  std::vector<std::size_t> sizes{32, 48, 64};
  std::size_t parent_size = 64;
  double radius_min = 3.0, radius_max = 7.0;
  double porosity_min = 0.02, porosity_max = 0.45;
  std::size_t n_intervals = 10;
  double overlap = 0.5;
  std::string mineral;
  double mineral_k = 0, mineral_mu = 0;
  double alpha = 0.25;
  double noise = 0.5;
  std::uint64_t seed = 0;
  bool no_voxels = false;
  std::string out;
};

int cmd_corpus(const CorpusArgs& a, std::size_t threads) {
  CorpusParams p;
  p.n_samples = a.n_samples;
  p.sizes = a.sizes;
  p.parent_size = a.parent_size;
  p.radius_min = a.radius_min;
  p.radius_max = a.radius_max;
  p.porosity_min = a.porosity_min;
  p.porosity_max = a.porosity_max;
  p.mapper = mapper_params(a.n_intervals, a.overlap, "x");
  p.dem.mineral = mineral_from(a.mineral, a.mineral_k, a.mineral_mu);
  p.dem.aspect_ratio = a.alpha;
  p.noise_sigma = a.noise;
  p.seed = a.seed;
  p.validate();
  std::vector<std::optional<CorpusSample>> slots(p.n_samples);
  parallel_for(p.n_samples, threads, [&](std::size_t i) { slots[i] = make_corpus_sample(p, i); });
  std::vector<CorpusSample> samples;
  samples.reserve(slots.size());
  for (auto& s : slots) samples.push_back(std::move(*s));
  const auto manifest = write_corpus(samples, a.out, !a.no_voxels);
  std::cout << "wrote " << samples.size() << " samples, manifest " << manifest.string() << '\n';
  return 0;
}

int cmd_map(const std::string& in, std::size_t n_intervals, double overlap, const std::string& axis,
            const std::string& out) {
  const auto params = mapper_params(n_intervals, overlap, axis);
  const auto grid = read_raw(in);
  const auto graph = build_graph(grid, params);
  write_graph(graph, out);
  std::cout << "wrote " << out << ": " << graph.count(Phase::Solid) << " solid nodes, " << graph.count(Phase::Pore)
            << " pore nodes, " << graph.edges.size() << " edges\n";
  return 0;
}

void write_number(std::ostream& out, const std::optional<double>& v) {
  if (v) out << *v;
}

int cmd_metrics(const std::vector<std::string>& graphs, const std::string& manifest, const std::string& out_path,
                std::size_t threads) {
  struct Row {
    std::string id;
    std::optional<double> porosity;
    std::array<double, 12> features{};
    std::optional<ElasticModuli> labels;
  };
  std::vector<Row> rows;
  if (!manifest.empty()) {
    const auto samples = load_manifest_graphs(manifest, threads);
    rows.resize(samples.size());
    parallel_for(samples.size(), threads, [&](std::size_t i) {
      rows[i] = {samples[i].meta.id, samples[i].meta.porosity, summarize(samples[i].graph).as_array(),
                 samples[i].meta.labels};
    });
  } else {
    rows.resize(graphs.size());
    parallel_for(graphs.size(), threads, [&](std::size_t i) {
      rows[i] = {fs::path(graphs[i]).stem().string(), std::nullopt, summarize(read_graph(graphs[i])).as_array(),
                 std::nullopt};
    });
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.id < b.id; });
  auto out = open_out(out_path);
  out << "id,porosity";
  for (const auto& n : GraphSummary::feature_names()) out << ',' << n;
  out << ",k_gpa,mu_gpa\n";
  for (const auto& r : rows) {
    out << r.id << ',';
    write_number(out, r.porosity);
    for (double v : r.features) out << ',' << v;
    out << ',';
    if (r.labels) out << r.labels->k;
    out << ',';
    if (r.labels) out << r.labels->mu;
    out << '\n';
  }
  std::cout << "wrote " << rows.size() << " rows to " << out_path << '\n';
  return 0;
}

struct PhysicsArgs {
  std::string mineral;
  double mineral_k = 0, mineral_mu = 0;
  double alpha = 0.25;
  double phi_min = 0.0, phi_max = 0.35;
  std::size_t steps = 36;
  std::string out;
};

int cmd_physics(const PhysicsArgs& a) {
  if (a.steps < 1) throw InvalidArgument("--steps must be at least 1");
  if (!(a.phi_min >= 0.0 && a.phi_min <= a.phi_max && a.phi_max < 1.0)) {
    throw InvalidArgument("need 0 <= phi-min <= phi-max < 1");
  }
  DemParams dem{mineral_from(a.mineral, a.mineral_k, a.mineral_mu)};
  dem.aspect_ratio = a.alpha;
  dem.validate();
  std::vector<double> phis(a.steps);
  for (std::size_t i = 0; i < a.steps; ++i) {
    phis[i] = a.steps == 1 ? a.phi_min
                           : a.phi_min + (a.phi_max - a.phi_min) * static_cast<double>(i) / static_cast<double>(a.steps - 1);
  }
  const auto curve = dem_curve(dem, phis);
  auto out = open_out(a.out);
  out << "phi,K_voigt,K_reuss,K_hs_lower,K_hs_upper,K_dem,mu_voigt,mu_reuss,mu_hs_lower,mu_hs_upper,mu_dem\n";
  for (std::size_t i = 0; i < phis.size(); ++i) {
    const auto vr = voigt_reuss_bounds(dem.mineral, dem.inclusion, phis[i]);
    const auto hs = hashin_shtrikman(dem.mineral, dem.inclusion, phis[i]);
    out << phis[i] << ',' << vr.upper.k << ',' << vr.lower.k << ',' << hs.lower.k << ',' << hs.upper.k << ','
        << curve[i].k << ',' << vr.upper.mu << ',' << vr.lower.mu << ',' << hs.lower.mu << ',' << hs.upper.mu << ','
        << curve[i].mu << '\n';
  }
  std::cout << "wrote " << phis.size() << " rows to " << a.out << '\n';
  return 0;
}

struct TrainArgs {
  std::string manifest;
  std::string split_file;
  std::uint64_t split_seed = 0;
  std::string split_out;
  std::uint64_t seed = 0;
  std::string model_out;
  // forest
  std::size_t n_trees = 50, max_depth = 12, min_leaf = 2;
  std::string importance_out;
  // gin
  std::size_t epochs = 200, batch_size = 32;
  double dropout = kDropoutTuned, learning_rate = 1e-3;
  std::string history_out;
};

int cmd_train_rf(const TrainArgs& a, std::size_t threads) {
  const auto samples = load_manifest_graphs(a.manifest, threads);
  const auto split = split_for(samples, a.split_file, a.split_seed);
  if (!a.split_out.empty()) write_split(split, a.split_out);
  const auto train_rows = select(samples, split.train, true);
  Dataset data{12, {}, {}};
  for (const auto* s : train_rows) {
    const auto f = summarize(s->graph).as_array();
    data.x.insert(data.x.end(), f.begin(), f.end());
    data.y.push_back({s->meta.labels->k, s->meta.labels->mu});
  }
  ForestParams p;
  p.n_trees = a.n_trees;
  p.tree.max_depth = a.max_depth;
  p.tree.min_leaf = a.min_leaf;
  p.seed = a.seed;
  const std::vector<std::string> names(GraphSummary::feature_names().begin(), GraphSummary::feature_names().end());
  const auto forest = Forest::train(data, p, names);
  forest.save(a.model_out);
  if (!a.importance_out.empty()) {
    auto out = open_out(a.importance_out);
    out << "feature,importance\n";
    const auto imp = forest.feature_importance();
    for (std::size_t i = 0; i < imp.size(); ++i) out << names[i] << ',' << imp[i] << '\n';
  }
  std::cout << "trained " << p.n_trees << " trees on " << train_rows.size() << " samples, model " << a.model_out
            << '\n';
  return 0;
}

std::vector<LabeledGraph> labeled(const std::vector<const LoadedSample*>& rows) {
  std::vector<LabeledGraph> out;
  out.reserve(rows.size());
  for (const auto* s : rows) out.push_back({to_tensor(s->graph), *s->meta.labels});
  return out;
}

int cmd_train_gnn(const TrainArgs& a, std::size_t threads) {
  const auto samples = load_manifest_graphs(a.manifest, threads);
  const auto split = split_for(samples, a.split_file, a.split_seed);
  if (!a.split_out.empty()) write_split(split, a.split_out);
  const auto train_set = labeled(select(samples, split.train, true));
  const auto val_set = labeled(select(samples, split.val, true));
  GinConfig gc;
  gc.seed = a.seed;
  TrainConfig tc;
  tc.epochs = a.epochs;
  tc.batch_size = a.batch_size;
  tc.dropout = a.dropout;
  tc.learning_rate = a.learning_rate;
  tc.seed = derive_seed(a.seed, "train");
  GinModel model(gc);
  const auto result = train(model, train_set, val_set, tc);
  model.save(a.model_out);
  if (!a.history_out.empty()) {
    auto out = open_out(a.history_out);
    out << "epoch,train_mse,val_mse\n";
    for (const auto& e : result.history) out << e.epoch << ',' << e.train_mse << ',' << e.val_mse << '\n';
  }
  const auto& best = result.history[result.best_epoch - 1];
  std::cout << "trained " << a.epochs << " epochs on " << train_set.size() << " graphs; best epoch "
            << result.best_epoch << " (val mse " << best.val_mse << "), model " << a.model_out << '\n';
  return 0;
}

int cmd_predict(const std::string& model_path, const std::vector<std::string>& graphs, const std::string& manifest,
                const std::string& out_path, std::size_t threads) {
  const auto model = AnyModel::load(model_path);
  std::vector<std::pair<std::string, RockGraph>> inputs;
  if (!manifest.empty()) {
    for (auto& s : load_manifest_graphs(manifest, threads)) inputs.emplace_back(s.meta.id, std::move(s.graph));
  } else {
    for (const auto& g : graphs) inputs.emplace_back(fs::path(g).stem().string(), read_graph(g));
  }
  std::vector<ElasticModuli> preds(inputs.size());
  parallel_for(inputs.size(), threads, [&](std::size_t i) { preds[i] = model.predict(inputs[i].second); });
  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return inputs[x].first < inputs[y].first; });
  auto out = open_out(out_path);
  out << "id,k_pred,mu_pred\n";
  for (auto i : order) out << inputs[i].first << ',' << preds[i].k << ',' << preds[i].mu << '\n';
  std::cout << "wrote " << inputs.size() << " predictions to " << out_path << '\n';
  return 0;
}

int cmd_eval(const std::string& model_path, const TrainArgs& a, const std::string& part, const std::string& parity_out,
             std::size_t threads) {
  const auto model = AnyModel::load(model_path);
  const auto samples = load_manifest_graphs(a.manifest, threads);
  std::vector<const LoadedSample*> rows;
  if (part == "all") {
    for (const auto& s : samples) {
      if (!s.meta.labels) throw InvalidArgument("sample '" + s.meta.id + "' has no labels");
      rows.push_back(&s);
    }
  } else {
    rows = select(samples, partition(split_for(samples, a.split_file, a.split_seed), part), true);
  }
  if (rows.empty()) throw InvalidArgument("partition '" + part + "' is empty");
  std::vector<ElasticModuli> preds(rows.size());
  parallel_for(rows.size(), threads, [&](std::size_t i) { preds[i] = model.predict(rows[i]->graph); });
  std::vector<double> pk, pm, tk, tm;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    pk.push_back(preds[i].k);
    pm.push_back(preds[i].mu);
    tk.push_back(rows[i]->meta.labels->k);
    tm.push_back(rows[i]->meta.labels->mu);
  }
  if (!parity_out.empty()) {
    auto out = open_out(parity_out);
    out << "id,subcube_size,porosity,k_true,k_pred,mu_true,mu_pred\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out << rows[i]->meta.id << ',' << rows[i]->meta.subcube_size << ',' << rows[i]->meta.porosity << ',' << tk[i]
          << ',' << pk[i] << ',' << tm[i] << ',' << pm[i] << '\n';
    }
  }
  std::cout << std::setprecision(6) << part << " (" << rows.size() << " samples)\n"
            << "  K:  R2 " << r2(pk, tk) << "  MSE " << mse(pk, tk) << '\n'
            << "  mu: R2 " << r2(pm, tm) << "  MSE " << mse(pm, tm) << '\n';
  return 0;
}

int cmd_fit_alpha(const std::string& manifest, const std::string& mineral, double k, double mu,
                  std::vector<double> grid, const std::string& out_path) {
  const auto rows = read_manifest(manifest);
  std::vector<PorosityModuli> samples;
  for (const auto& r : rows) {
    if (!r.labels) throw InvalidArgument("sample '" + r.id + "' has no labels");
    samples.push_back({r.porosity, *r.labels});
  }
  DemParams base{mineral_from(mineral, k, mu)};
  const auto fit = fit_aspect_ratio(samples, grid, base);
  if (!out_path.empty()) {
    auto out = open_out(out_path);
    out << "aspect_ratio,r2_k,r2_mu,r2_mean\n";
    for (double alpha : grid) {
      const std::vector<double> one{alpha};
      const auto f = fit_aspect_ratio(samples, one, base);
      out << alpha << ',' << f.r2_k << ',' << f.r2_mu << ',' << (f.r2_k + f.r2_mu) / 2 << '\n';
    }
  }
  std::cout << "best aspect ratio " << fit.aspect_ratio << "  R2 K " << fit.r2_k << "  R2 mu " << fit.r2_mu << '\n';
  return 0;
}

const CLI::Validator kBelowOne(
    [](std::string& s) -> std::string {
      try {
        const double v = std::stod(s);
        if (v >= 0.0 && v < 1.0) return {};
      } catch (const std::exception&) {
      }
      return "value must lie in [0, 1), got " + s;
    },
    "[0,1)");

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Digital-rock graphs, effective-medium physics and graph regressors"};
  app.require_subcommand(1);
  std::size_t threads = default_threads();
  app.add_option("--threads", threads, std::string("worker threads for per-file work (default from ") + kThreadsEnv +
                                           ")")
      ->check(CLI::PositiveNumber);

  GenArgs gen;
  auto* c_gen = app.add_subcommand("gen", "generate a sphere-pack voxel volume");
  c_gen->add_option("--dims", gen.dims, "nx ny nz")->expected(3)->check(CLI::PositiveNumber);
  c_gen->add_option("--n-spheres", gen.n_spheres);
  c_gen->add_option("--radius-min", gen.radius_min)->check(CLI::PositiveNumber);
  c_gen->add_option("--radius-max", gen.radius_max)->check(CLI::PositiveNumber);
  c_gen->add_option("--resolution", gen.resolution, "meters per voxel")->check(CLI::PositiveNumber);
  c_gen->add_option("--seed", gen.seed);
  c_gen->add_option("--subcube-origin", gen.origin, "x y z")->expected(3);
  c_gen->add_option("--subcube-size", gen.subcube_size);
  c_gen->add_option("--out", gen.out, "raw voxel file")->required();

  CorpusArgs corpus;
  auto* c_corpus = app.add_subcommand("corpus", "generate a labeled synthetic corpus with manifest");
  c_corpus->add_option("--n-samples", corpus.n_samples)->check(CLI::PositiveNumber);
  c_corpus->add_option("--sizes", corpus.sizes, "subcube edge lengths");
  c_corpus->add_option("--parent-size", corpus.parent_size)->check(CLI::PositiveNumber);
  c_corpus->add_option("--radius-min", corpus.radius_min)->check(CLI::PositiveNumber);
  c_corpus->add_option("--radius-max", corpus.radius_max)->check(CLI::PositiveNumber);
  c_corpus->add_option("--porosity-min", corpus.porosity_min);
  c_corpus->add_option("--porosity-max", corpus.porosity_max);
  c_corpus->add_option("--n-intervals", corpus.n_intervals)->check(CLI::PositiveNumber);
  c_corpus->add_option("--overlap", corpus.overlap)->check(kBelowOne);
  c_corpus->add_option("--mineral", corpus.mineral, "mineral config JSON")->check(CLI::ExistingFile);
  c_corpus->add_option("--mineral-k", corpus.mineral_k);
  c_corpus->add_option("--mineral-mu", corpus.mineral_mu);
  c_corpus->add_option("--alpha", corpus.alpha, "pore aspect ratio for labels")->check(CLI::PositiveNumber);
  c_corpus->add_option("--noise", corpus.noise, "label noise sigma, GPa")->check(CLI::NonNegativeNumber);
  c_corpus->add_option("--seed", corpus.seed);
  c_corpus->add_flag("--no-voxels", corpus.no_voxels, "write graphs and manifest only");
  c_corpus->add_option("--out", corpus.out, "output directory")->required();

  std::string map_in, map_out, map_axis = "x";
  std::size_t map_n = 10;
  double map_overlap = 0.5;
  auto* c_map = app.add_subcommand("map", "convert a voxel volume to a Mapper graph");
  c_map->add_option("--voxels", map_in)->required()->check(CLI::ExistingFile);
  c_map->add_option("--n-intervals", map_n)->check(CLI::PositiveNumber);
  c_map->add_option("--overlap", map_overlap)->check(kBelowOne);
  c_map->add_option("--axis", map_axis)->check(CLI::IsMember({"x", "y", "z"}));
  c_map->add_option("--out", map_out, "graph JSON")->required();

  std::vector<std::string> met_graphs;
  std::string met_manifest, met_out;
  auto* c_metrics = app.add_subcommand("metrics", "graph-level summary features as CSV");
  auto* met_g = c_metrics->add_option("--graph", met_graphs, "graph JSON files")->check(CLI::ExistingFile);
  auto* met_m = c_metrics->add_option("--manifest", met_manifest)->check(CLI::ExistingFile);
  met_g->excludes(met_m);
  c_metrics->add_option("--out", met_out, "CSV")->required();

  PhysicsArgs phys;
  auto* c_phys = app.add_subcommand("physics", "bounds and DEM sweep over porosity");
  c_phys->add_option("--mineral", phys.mineral, "mineral config JSON")->check(CLI::ExistingFile);
  c_phys->add_option("--mineral-k", phys.mineral_k);
  c_phys->add_option("--mineral-mu", phys.mineral_mu);
  c_phys->add_option("--alpha", phys.alpha)->check(CLI::PositiveNumber);
  c_phys->add_option("--phi-min", phys.phi_min);
  c_phys->add_option("--phi-max", phys.phi_max);
  c_phys->add_option("--steps", phys.steps)->check(CLI::PositiveNumber);
  c_phys->add_option("--out", phys.out, "CSV")->required();

  auto add_data = [](CLI::App* c, TrainArgs& t) {
    c->add_option("--manifest", t.manifest)->required()->check(CLI::ExistingFile);
    c->add_option("--split", t.split_file, "split file; overrides --split-seed")->check(CLI::ExistingFile);
    c->add_option("--split-seed", t.split_seed);
  };

  TrainArgs rf;
  auto* c_rf = app.add_subcommand("train-rf", "train the random forest on graph summaries");
  add_data(c_rf, rf);
  c_rf->add_option("--split-out", rf.split_out);
  c_rf->add_option("--seed", rf.seed);
  c_rf->add_option("--n-trees", rf.n_trees)->check(CLI::PositiveNumber);
  c_rf->add_option("--max-depth", rf.max_depth)->check(CLI::PositiveNumber);
  c_rf->add_option("--min-leaf", rf.min_leaf)->check(CLI::PositiveNumber);
  c_rf->add_option("--model-out", rf.model_out)->required();
  c_rf->add_option("--importance-out", rf.importance_out, "CSV");

  TrainArgs gnn;
  auto* c_gnn = app.add_subcommand("train-gnn", "train the GIN regressor");
  add_data(c_gnn, gnn);
  c_gnn->add_option("--split-out", gnn.split_out);
  c_gnn->add_option("--seed", gnn.seed);
  c_gnn->add_option("--epochs", gnn.epochs)->check(CLI::PositiveNumber);
  c_gnn->add_option("--batch-size", gnn.batch_size)->check(CLI::PositiveNumber);
  c_gnn->add_option("--dropout", gnn.dropout)->check(kBelowOne);
  c_gnn->add_option("--lr", gnn.learning_rate)->check(CLI::NonNegativeNumber);
  c_gnn->add_option("--model-out", gnn.model_out)->required();
  c_gnn->add_option("--history-out", gnn.history_out, "CSV");

  std::string pred_model, pred_manifest, pred_out;
  std::vector<std::string> pred_graphs;
  auto* c_pred = app.add_subcommand("predict", "predict moduli for graphs");
  c_pred->add_option("--model", pred_model)->required()->check(CLI::ExistingFile);
  auto* pg = c_pred->add_option("--graph", pred_graphs)->check(CLI::ExistingFile);
  auto* pm = c_pred->add_option("--manifest", pred_manifest)->check(CLI::ExistingFile);
  pg->excludes(pm);
  c_pred->add_option("--out", pred_out, "CSV")->required();

  TrainArgs ev;
  std::string ev_model, ev_part = "test", ev_parity;
  auto* c_eval = app.add_subcommand("eval", "score a model on a manifest partition");
  c_eval->add_option("--model", ev_model)->required()->check(CLI::ExistingFile);
  add_data(c_eval, ev);
  c_eval->add_option("--partition", ev_part)->check(CLI::IsMember({"train", "val", "test", "all"}));
  c_eval->add_option("--parity-out", ev_parity, "CSV");

  std::string fa_manifest, fa_mineral, fa_out;
  double fa_k = 0, fa_mu = 0;
  std::vector<double> fa_grid;
  for (int i = 1; i <= 20; ++i) fa_grid.push_back(0.05 * i);
  auto* c_fit = app.add_subcommand("fit-alpha", "fit the DEM pore aspect ratio to labeled samples");
  c_fit->add_option("--manifest", fa_manifest)->required()->check(CLI::ExistingFile);
  c_fit->add_option("--mineral", fa_mineral)->check(CLI::ExistingFile);
  c_fit->add_option("--mineral-k", fa_k);
  c_fit->add_option("--mineral-mu", fa_mu);
  c_fit->add_option("--grid", fa_grid, "candidate aspect ratios")->check(CLI::PositiveNumber);
  c_fit->add_option("--out", fa_out, "CSV of R2 per aspect ratio");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (c_gen->parsed()) return cmd_gen(gen);
    if (c_corpus->parsed()) return cmd_corpus(corpus, threads);
    if (c_map->parsed()) return cmd_map(map_in, map_n, map_overlap, map_axis, map_out);
    if (c_metrics->parsed()) {
      if (met_graphs.empty() && met_manifest.empty()) {
        std::cerr << "metrics: give --graph or --manifest\n";
        return 2;
      }
      return cmd_metrics(met_graphs, met_manifest, met_out, threads);
    }
    if (c_phys->parsed()) return cmd_physics(phys);
    if (c_rf->parsed()) return cmd_train_rf(rf, threads);
    if (c_gnn->parsed()) return cmd_train_gnn(gnn, threads);
    if (c_pred->parsed()) {
      if (pred_graphs.empty() && pred_manifest.empty()) {
        std::cerr << "predict: give --graph or --manifest\n";
        return 2;
      }
      return cmd_predict(pred_model, pred_graphs, pred_manifest, pred_out, threads);
    }
    if (c_eval->parsed()) return cmd_eval(ev_model, ev, ev_part, ev_parity, threads);
    if (c_fit->parsed()) return cmd_fit_alpha(fa_manifest, fa_mineral, fa_k, fa_mu, fa_grid, fa_out);
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << " (residual " << e.residual() << ")\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
