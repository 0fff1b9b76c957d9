#include "rockgraph/ginnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "rockgraph/errors.hpp"

namespace rockgraph {

using json = nlohmann::ordered_json;

void GinConfig::validate() const {
  if (input_dim == 0 || hidden_dim == 0 || layers == 0 || head_dim == 0 || output_dim == 0) {
    throw InvalidArgument("GIN dimensions and layer count must be positive");
  }
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw InvalidArgument("batch size must be at least 1");
  if (epochs < 1) throw InvalidArgument("epochs must be at least 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidArgument("dropout must lie in [0, 1)");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidArgument("learning rate must be finite and non-negative");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && adam_eps > 0.0)) {
    throw InvalidArgument("invalid Adam coefficients");
  }
}

GraphTensor to_tensor(const RockGraph& graph) {
  GraphTensor t;
  const std::size_t n = graph.nodes.size();
  t.features = ad::Matrix(n, kNodeFeatureDim);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(graph.nodes[i].features.begin(), graph.nodes[i].features.end(), t.features.row(i));
  }
  std::vector<std::vector<std::uint32_t>> adj(n);
  for (const auto& [a, b] : graph.edges) {
    adj[a].push_back(static_cast<std::uint32_t>(b));
    adj[b].push_back(static_cast<std::uint32_t>(a));
  }
  t.adjacency.offsets.assign(1, 0);
  for (auto& nbrs : adj) {
    std::sort(nbrs.begin(), nbrs.end());
    t.adjacency.neighbors.insert(t.adjacency.neighbors.end(), nbrs.begin(), nbrs.end());
    t.adjacency.offsets.push_back(static_cast<std::uint32_t>(t.adjacency.neighbors.size()));
  }
  return t;
}

GraphBatch make_batch(std::span<const GraphTensor* const> graphs) {
  if (graphs.empty()) throw InvalidArgument("empty batch");
  const std::size_t dim = graphs.front()->features.cols();
  std::size_t total = 0;
  for (const auto* g : graphs) {
    if (g->features.cols() != dim) throw InvalidArgument("graphs in a batch must share feature width");
    if (g->adjacency.size() != g->features.rows()) throw InvalidArgument("adjacency/feature size mismatch");
    total += g->features.rows();
  }
  GraphBatch b;
  b.features = ad::Matrix(total, dim);
  b.offsets.push_back(0);
  std::size_t row = 0;
  for (const auto* g : graphs) {
    const auto src = g->features.values();
    std::copy(src.begin(), src.end(), b.features.row(row));
    const auto base = static_cast<std::uint32_t>(row);
    for (std::size_t v = 0; v < g->adjacency.size(); ++v) {
      for (auto u : g->adjacency.of(v)) b.adjacency.neighbors.push_back(base + u);
      b.adjacency.offsets.push_back(static_cast<std::uint32_t>(b.adjacency.neighbors.size()));
    }
    row += g->features.rows();
    b.offsets.push_back(row);
  }
  return b;
}

namespace {

ad::Parameter uniform_param(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
  ad::Matrix m(rows, cols);
  for (auto& v : m.values()) v = uniform(rng, -bound, bound);
  return ad::Parameter(std::move(m));
}

DenseLayer dense(std::size_t in, std::size_t out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  DenseLayer d{uniform_param(in, out, bound, rng), uniform_param(1, out, bound, rng)};
  return d;
}

}  // namespace

GinModel::GinModel(GinConfig config) : config_(config) {
  config_.validate();
  Rng rng(config_.seed);
  for (std::size_t k = 0; k < config_.layers; ++k) {
    const std::size_t in = k == 0 ? config_.input_dim : config_.hidden_dim;
    auto l1 = dense(in, config_.hidden_dim, rng);
    auto l2 = dense(config_.hidden_dim, config_.hidden_dim, rng);
    layers_.push_back(GinLayer{ad::Parameter(ad::Matrix(1, 1, 0.0)), std::move(l1.w), std::move(l1.b),
                               std::move(l2.w), std::move(l2.b)});
  }
  head_.push_back(dense(config_.readout_dim(), config_.head_dim, rng));
  head_.push_back(dense(config_.head_dim, config_.head_dim, rng));
  head_.push_back(dense(config_.head_dim, config_.output_dim, rng));
}

std::vector<ad::Parameter*> GinModel::parameters() {
  std::vector<ad::Parameter*> out;
  for (auto& l : layers_) {
    for (auto* p : {&l.eps, &l.w1, &l.b1, &l.w2, &l.b2}) out.push_back(p);
  }
  for (auto& d : head_) {
    out.push_back(&d.w);
    out.push_back(&d.b);
  }
  return out;
}

std::vector<const ad::Parameter*> GinModel::parameters() const {
  auto mut = const_cast<GinModel*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

std::size_t GinModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : parameters()) n += p->value.size();
  return n;
}

void GinModel::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

std::vector<ad::Var> GinModel::bind_constants(ad::Tape& tape) const {
  std::vector<ad::Var> vars;
  for (const auto* p : parameters()) vars.push_back(tape.constant(p->value));
  return vars;
}

ad::Var GinModel::build(ad::Tape& tape, std::span<const ad::Var> params, const GraphBatch& batch, bool train_mode,
                        double dropout, Rng* dropout_rng) const {
  if (batch.features.cols() != config_.input_dim) {
    throw InvalidArgument("node features have dimension " + std::to_string(batch.features.cols()) +
                          ", expected " + std::to_string(config_.input_dim));
  }
  const bool use_dropout = train_mode && dropout > 0.0;
  if (use_dropout && dropout_rng == nullptr) throw InvalidArgument("dropout needs a random generator");

  std::size_t at = 0;
  auto next = [&] { return params[at++]; };

  ad::Var h = tape.constant(batch.features);
  std::vector<ad::Var> readouts;
  for (std::size_t k = 0; k < config_.layers; ++k) {
    const auto eps = next();
    const auto w1 = next(), b1 = next(), w2 = next(), b2 = next();
    auto z = tape.gin_aggregate(h, eps, batch.adjacency);
    z = tape.relu(tape.add_bias(tape.matmul(z, w1), b1));
    h = tape.relu(tape.add_bias(tape.matmul(z, w2), b2));
    readouts.push_back(tape.segment_sum(h, batch.offsets));
  }

  auto x = tape.concat_cols(readouts);
  for (std::size_t d = 0; d < head_.size(); ++d) {
    const auto w = next(), b = next();
    x = tape.add_bias(tape.matmul(x, w), b);
    if (d + 1 == head_.size()) break;
    x = tape.relu(x);
    if (use_dropout) {
      const auto& v = tape.value(x);
      ad::Matrix mask(v.rows(), v.cols());
      const double keep = 1.0 - dropout;
      for (auto& m : mask.values()) m = uniform01(*dropout_rng) < keep ? 1.0 / keep : 0.0;
      x = tape.mask(x, std::move(mask));
    }
  }
  return x;
}

ad::Var GinModel::forward(ad::Tape& tape, const GraphBatch& batch, bool train_mode, double dropout,
                          Rng* dropout_rng) {
  std::vector<ad::Var> vars;
  for (auto* p : parameters()) vars.push_back(tape.parameter(*p));
  return build(tape, vars, batch, train_mode, dropout, dropout_rng);
}

std::vector<double> GinModel::forward_values(const GraphTensor& graph) const {
  const GraphTensor* one[] = {&graph};
  const auto batch = make_batch(one);
  ad::Tape tape;
  const auto vars = bind_constants(tape);
  const auto out = build(tape, vars, batch, false, 0.0, nullptr);
  const auto v = tape.value(out).values();
  return {v.begin(), v.end()};
}

double GinModel::loss_and_grads(const GraphBatch& batch, const ad::Matrix& targets, bool train_mode,
                                double dropout, Rng* dropout_rng) {
  ad::Tape tape;
  const auto out = forward(tape, batch, train_mode, dropout, dropout_rng);
  const auto loss = tape.mse(out, targets);
  tape.backward(loss);
  return tape.value(loss)(0, 0);
}

double GinModel::eval_mse(const GraphBatch& batch, const ad::Matrix& targets) const {
  ad::Tape tape;
  const auto vars = bind_constants(tape);
  const auto out = build(tape, vars, batch, false, 0.0, nullptr);
  return tape.value(tape.mse(out, targets))(0, 0);
}

void GinModel::set_standardizers(Standardizer features, Standardizer labels) {
  if (features.dim() != config_.input_dim || labels.dim() != config_.output_dim) {
    throw InvalidArgument("standardizer dimensions do not match the model");
  }
  feature_std_ = std::move(features);
  label_std_ = std::move(labels);
}

GraphTensor GinModel::standardize(const GraphTensor& raw) const {
  GraphTensor t = raw;
  if (feature_std_) {
    for (std::size_t i = 0; i < t.features.rows(); ++i) {
      feature_std_->apply_in_place({t.features.row(i), t.features.cols()});
    }
  }
  return t;
}

ElasticModuli GinModel::predict(const GraphTensor& raw) const {
  if (!trained_) throw StateError("GIN model has not been trained");
  if (raw.features.cols() != config_.input_dim) throw InvalidArgument("node feature dimension mismatch");
  auto out = forward_values(standardize(raw));
  if (label_std_) out = label_std_->inverse(out);
  return {std::max(out[0], 0.0), std::max(out[1], 0.0)};
}

ElasticModuli GinModel::predict(const RockGraph& graph) const { return predict(to_tensor(graph)); }

namespace {

json matrix_json(const ad::Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.values().begin(), m.values().end())}};
}

ad::Matrix matrix_from(const json& j) {
  ad::Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != m.size()) throw FormatError("matrix payload does not match its shape");
  std::copy(data.begin(), data.end(), m.values().begin());
  return m;
}

json standardizer_json(const std::optional<Standardizer>& s) {
  if (!s) return nullptr;
  return {{"mean", s->mean()}, {"std", s->stddev()}};
}

std::optional<Standardizer> standardizer_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return Standardizer(j.at("mean").get<std::vector<double>>(), j.at("std").get<std::vector<double>>());
}

}  // namespace

std::string GinModel::serialize() const {
  json j;
  j["format"] = "rockgraph-gin";
  j["version"] = 1;
  j["config"] = {{"input_dim", config_.input_dim}, {"hidden_dim", config_.hidden_dim},
                 {"layers", config_.layers},       {"head_dim", config_.head_dim},
                 {"output_dim", config_.output_dim}, {"seed", config_.seed}};
  j["trained"] = trained_;
  json params = json::array();
  for (const auto* p : parameters()) params.push_back(matrix_json(p->value));
  j["parameters"] = std::move(params);
  j["feature_standardizer"] = standardizer_json(feature_std_);
  j["label_standardizer"] = standardizer_json(label_std_);
  json hist = json::array();
  for (const auto& e : history_) hist.push_back({e.epoch, e.train_mse, e.val_mse});
  j["history"] = std::move(hist);
  return j.dump();
}

GinModel GinModel::parse(const std::string& text) {
  try {
    const auto j = json::parse(text);
    if (j.at("format").get<std::string>() != "rockgraph-gin") throw FormatError("not a GIN model file");
    if (j.at("version").get<int>() != 1) throw FormatError("unsupported GIN model version");
    const auto& c = j.at("config");
    GinConfig cfg;
    cfg.input_dim = c.at("input_dim").get<std::size_t>();
    cfg.hidden_dim = c.at("hidden_dim").get<std::size_t>();
    cfg.layers = c.at("layers").get<std::size_t>();
    cfg.head_dim = c.at("head_dim").get<std::size_t>();
    cfg.output_dim = c.at("output_dim").get<std::size_t>();
    cfg.seed = c.at("seed").get<std::uint64_t>();
    GinModel model(cfg);

    const auto& params = j.at("parameters");
    auto slots = model.parameters();
    if (params.size() != slots.size()) throw FormatError("GIN parameter count mismatch");
    for (std::size_t i = 0; i < slots.size(); ++i) {
      auto m = matrix_from(params[i]);
      if (m.rows() != slots[i]->value.rows() || m.cols() != slots[i]->value.cols()) {
        throw FormatError("GIN parameter shape mismatch");
      }
      *slots[i] = ad::Parameter(std::move(m));
    }
    model.feature_std_ = standardizer_from(j.at("feature_standardizer"));
    model.label_std_ = standardizer_from(j.at("label_standardizer"));
    for (const auto& e : j.at("history")) {
      model.history_.push_back({e.at(0).get<std::size_t>(), e.at(1).get<double>(), e.at(2).get<double>()});
    }
    model.trained_ = j.at("trained").get<bool>();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed GIN model: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("invalid GIN model: ") + e.what());
  }
}

void GinModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << serialize() << '\n';
}

GinModel GinModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

namespace {

struct Prepared {
  std::vector<GraphTensor> graphs;
  std::vector<std::array<double, 2>> targets;
};

Prepared prepare(const GinModel& model, std::span<const LabeledGraph> set) {
  Prepared p;
  const auto& ls = *model.label_standardizer();
  for (const auto& s : set) {
    p.graphs.push_back(model.standardize(s.graph));
    const double raw[2] = {s.labels.k, s.labels.mu};
    const auto z = ls.apply(raw);
    p.targets.push_back({z[0], z[1]});
  }
  return p;
}

ad::Matrix target_matrix(const Prepared& p, std::span<const std::size_t> idx) {
  ad::Matrix t(idx.size(), 2);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    t(i, 0) = p.targets[idx[i]][0];
    t(i, 1) = p.targets[idx[i]][1];
  }
  return t;
}

GraphBatch batch_of(const Prepared& p, std::span<const std::size_t> idx) {
  std::vector<const GraphTensor*> ptrs;
  ptrs.reserve(idx.size());
  for (auto i : idx) ptrs.push_back(&p.graphs[i]);
  return make_batch(ptrs);
}

double eval_loss(const GinModel& model, const Prepared& p) {
  std::vector<std::size_t> all(p.graphs.size());
  std::iota(all.begin(), all.end(), 0);
  return model.eval_mse(batch_of(p, all), target_matrix(p, all));
}

}  // namespace

TrainResult train(GinModel& model, std::span<const LabeledGraph> train_set, std::span<const LabeledGraph> val_set,
                  const TrainConfig& config) {
  config.validate();
  if (train_set.empty() || val_set.empty()) throw InvalidArgument("training and validation sets must be nonempty");
  const std::size_t dim = model.config().input_dim;

  std::vector<std::vector<double>> node_rows, label_rows;
  for (const auto& s : train_set) {
    if (s.graph.features.cols() != dim) throw InvalidArgument("node feature dimension mismatch");
    for (std::size_t i = 0; i < s.graph.features.rows(); ++i) {
      node_rows.emplace_back(s.graph.features.row(i), s.graph.features.row(i) + dim);
    }
    label_rows.push_back({s.labels.k, s.labels.mu});
  }
  if (node_rows.empty()) throw InvalidArgument("training graphs contain no nodes");
  model.set_standardizers(Standardizer::fit(node_rows), Standardizer::fit(label_rows));

  const auto train_data = prepare(model, train_set);
  const auto val_data = prepare(model, val_set);

  Rng rng(config.seed);
  const auto params = model.parameters();
  std::vector<ad::Matrix> best(params.size());
  double best_val = std::numeric_limits<double>::infinity();
  TrainResult result;
  std::uint64_t step = 0;

  std::vector<std::size_t> order(train_data.graphs.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::span<const std::size_t> idx(order.data() + start,
                                             std::min(config.batch_size, order.size() - start));
      const auto batch = batch_of(train_data, idx);
      model.zero_grad();
      const double loss = model.loss_and_grads(batch, target_matrix(train_data, idx), true, config.dropout, &rng);
      if (!std::isfinite(loss)) {
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batches) + " (learning rate " + std::to_string(config.learning_rate) +
                           ")");
      }
      loss_sum += loss;
      ++batches;

      ++step;
      const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      for (auto* p : params) {
        auto w = p->value.values();
        const auto gr = p->grad.values();
        auto m = p->m.values();
        auto v = p->v.values();
        for (std::size_t i = 0; i < w.size(); ++i) {
          m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * gr[i];
          v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * gr[i] * gr[i];
          w[i] -= config.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + config.adam_eps);
        }
      }
    }

    const double val = eval_loss(model, val_data);
    if (!std::isfinite(val)) throw NumericError("non-finite validation loss at epoch " + std::to_string(epoch));
    result.history.push_back({epoch, loss_sum / static_cast<double>(batches), val});
    if (val < best_val) {
      best_val = val;
      result.best_epoch = epoch;
      for (std::size_t i = 0; i < params.size(); ++i) best[i] = params[i]->value;
    }
  }

  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best[i];
  model.zero_grad();
  model.history() = result.history;
  model.mark_trained();
  return result;
}

}  // namespace rockgraph
