#include "rockgraph/randomforest.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "rockgraph/errors.hpp"
#include "rockgraph/random.hpp"

namespace rockgraph {

using json = nlohmann::ordered_json;

Target RegressionTree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = x[n.feature] < n.threshold ? n.left : n.right;
  }
  return nodes[i].value;
}

std::size_t RegressionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  std::size_t deepest = 0;
  while (!stack.empty()) {
    const auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes[i].is_leaf()) {
      stack.emplace_back(nodes[i].left, d + 1);
      stack.emplace_back(nodes[i].right, d + 1);
    }
  }
  return deepest;
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, const TreeParams& params) : data_(data), params_(params) {
    tree_.importance.assign(data.n_features, 0.0);
  }

  RegressionTree build(std::vector<std::size_t> rows) {
    grow(rows, 0);
    return std::move(tree_);
  }

 private:
  struct SplitChoice {
    double gain = 0.0;
    std::size_t feature = 0;
    double threshold = 0.0;
  };

  Target mean_of(const std::vector<std::size_t>& rows) const {
    Target m{};
    for (auto r : rows) {
      for (std::size_t t = 0; t < kTargetDim; ++t) m[t] += data_.y[r][t];
    }
    for (auto& v : m) v /= static_cast<double>(rows.size());
    return m;
  }

  double sse(const std::vector<std::size_t>& rows, const Target& mean) const {
    double s = 0.0;
    for (auto r : rows) {
      for (std::size_t t = 0; t < kTargetDim; ++t) {
        const double d = data_.y[r][t] - mean[t];
        s += d * d;
      }
    }
    return s;
  }

  SplitChoice best_split(const std::vector<std::size_t>& rows, double parent_sse) const {
    SplitChoice best;
    const std::size_t n = rows.size();
    const std::size_t min_leaf = std::max<std::size_t>(params_.min_leaf, 1);
    std::vector<std::size_t> order(rows);
    Target total{}, total_sq{};
    for (auto r : rows) {
      for (std::size_t t = 0; t < kTargetDim; ++t) {
        total[t] += data_.y[r][t];
        total_sq[t] += data_.y[r][t] * data_.y[r][t];
      }
    }

    for (std::size_t f = 0; f < data_.n_features; ++f) {
      auto value = [&](std::size_t r) { return data_.x[r * data_.n_features + f]; };
      std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return value(a) < value(b); });
      Target left{}, left_sq{};
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto r = order[i];
        for (std::size_t t = 0; t < kTargetDim; ++t) {
          left[t] += data_.y[r][t];
          left_sq[t] += data_.y[r][t] * data_.y[r][t];
        }
        const double a = value(r), b = value(order[i + 1]);
        if (!(a < b)) continue;
        const std::size_t nl = i + 1, nr = n - nl;
        if (nl < min_leaf || nr < min_leaf) continue;

        double child_sse = 0.0;
        for (std::size_t t = 0; t < kTargetDim; ++t) {
          const double right = total[t] - left[t];
          const double right_sq = total_sq[t] - left_sq[t];
          child_sse += left_sq[t] - left[t] * left[t] / static_cast<double>(nl);
          child_sse += right_sq - right * right / static_cast<double>(nr);
        }
        const double gain = parent_sse - child_sse;
        if (gain > best.gain) {
          double thr = a + (b - a) / 2.0;
          if (!(thr > a)) thr = b;
          best = {gain, f, thr};
        }
      }
    }
    return best;
  }

  std::uint32_t grow(const std::vector<std::size_t>& rows, std::size_t depth) {
    const auto index = static_cast<std::uint32_t>(tree_.nodes.size());
    TreeNode node;
    node.value = mean_of(rows);
    node.samples = rows.size();
    tree_.nodes.push_back(node);

    const double parent_sse = sse(rows, node.value);
    if (depth >= params_.max_depth || parent_sse <= 0.0 || rows.size() < 2 * std::max<std::size_t>(params_.min_leaf, 1)) {
      return index;
    }
    const auto split = best_split(rows, parent_sse);
    if (!(split.gain > 1e-12 * parent_sse)) return index;

    std::vector<std::size_t> left, right;
    for (auto r : rows) {
      (data_.x[r * data_.n_features + split.feature] < split.threshold ? left : right).push_back(r);
    }
    tree_.importance[split.feature] += split.gain;

    const auto l = grow(left, depth + 1);
    const auto r = grow(right, depth + 1);
    auto& n = tree_.nodes[index];
    n.feature = static_cast<std::uint32_t>(split.feature);
    n.threshold = split.threshold;
    n.left = l;
    n.right = r;
    return index;
  }

  const Dataset& data_;
  const TreeParams& params_;
  RegressionTree tree_;
};

void check_dataset(const Dataset& data) {
  if (data.rows() == 0) throw InvalidArgument("cannot train on an empty dataset");
  if (data.n_features == 0 || data.x.size() != data.rows() * data.n_features) {
    throw InvalidArgument("design matrix shape does not match n_features x rows");
  }
}

}  // namespace

RegressionTree train_tree(const Dataset& data, const TreeParams& params, std::uint64_t seed) {
  check_dataset(data);
  if (data.rows() < params.min_leaf) throw InvalidArgument("fewer rows than min_leaf");
  std::vector<std::size_t> rows(data.rows());
  if (params.bootstrap) {
    Rng rng(seed);
    for (auto& r : rows) r = uniform_index(rng, data.rows());
    std::sort(rows.begin(), rows.end());
  } else {
    std::iota(rows.begin(), rows.end(), 0);
  }
  return TreeBuilder(data, params).build(std::move(rows));
}

Forest Forest::train(const Dataset& data, const ForestParams& params, std::vector<std::string> feature_names) {
  check_dataset(data);
  if (params.n_trees == 0) throw InvalidArgument("a forest needs at least one tree");
  if (!feature_names.empty() && feature_names.size() != data.n_features) {
    throw InvalidArgument("feature name count does not match the data");
  }
  Forest f;
  f.n_features_ = data.n_features;
  f.params_ = params;
  f.feature_names_ = std::move(feature_names);
  f.trees_.reserve(params.n_trees);
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    f.trees_.push_back(train_tree(data, params.tree, derive_seed(params.seed, t)));
  }
  return f;
}

Forest Forest::from_trees(std::vector<RegressionTree> trees, std::size_t n_features,
                          std::vector<std::string> feature_names) {
  Forest f;
  f.n_features_ = n_features;
  f.params_.n_trees = trees.size();
  f.feature_names_ = std::move(feature_names);
  f.trees_ = std::move(trees);
  for (auto& t : f.trees_) t.importance.resize(n_features, 0.0);
  return f;
}

Target Forest::predict(std::span<const double> x) const {
  if (!trained()) throw StateError("forest has not been trained");
  if (x.size() != n_features_) throw InvalidArgument("feature vector has the wrong dimension");
  Target sum{};
  for (const auto& t : trees_) {
    const auto p = t.predict(x);
    for (std::size_t k = 0; k < kTargetDim; ++k) sum[k] += p[k];
  }
  for (auto& v : sum) v /= static_cast<double>(trees_.size());
  return sum;
}

std::vector<double> Forest::feature_importance() const {
  if (!trained()) throw StateError("forest has not been trained");
  std::vector<double> imp(n_features_, 0.0);
  for (const auto& t : trees_) {
    for (std::size_t f = 0; f < n_features_; ++f) imp[f] += t.importance[f];
  }
  const double total = std::accumulate(imp.begin(), imp.end(), 0.0);
  if (total > 0.0) {
    for (auto& v : imp) v /= total;
  }
  return imp;
}

std::string Forest::serialize() const {
  json j;
  j["format"] = "rockgraph-forest";
  j["version"] = 1;
  j["n_features"] = n_features_;
  j["feature_names"] = feature_names_;
  j["params"] = {{"n_trees", params_.n_trees},
                 {"max_depth", params_.tree.max_depth},
                 {"min_leaf", params_.tree.min_leaf},
                 {"bootstrap", params_.tree.bootstrap},
                 {"seed", params_.seed}};
  json trees = json::array();
  for (const auto& t : trees_) {
    json nodes = json::array();
    for (const auto& n : t.nodes) {
      if (n.is_leaf()) {
        nodes.push_back({{"value", n.value}, {"samples", n.samples}});
      } else {
        nodes.push_back({{"feature", n.feature},
                         {"threshold", n.threshold},
                         {"left", n.left},
                         {"right", n.right},
                         {"value", n.value},
                         {"samples", n.samples}});
      }
    }
    trees.push_back({{"importance", t.importance}, {"nodes", std::move(nodes)}});
  }
  j["trees"] = std::move(trees);
  return j.dump();
}

Forest Forest::parse(const std::string& text) {
  try {
    const auto j = json::parse(text);
    if (j.at("format").get<std::string>() != "rockgraph-forest") throw FormatError("not a forest model file");
    Forest f;
    f.n_features_ = j.at("n_features").get<std::size_t>();
    f.feature_names_ = j.at("feature_names").get<std::vector<std::string>>();
    const auto& p = j.at("params");
    f.params_.n_trees = p.at("n_trees").get<std::size_t>();
    f.params_.tree.max_depth = p.at("max_depth").get<std::size_t>();
    f.params_.tree.min_leaf = p.at("min_leaf").get<std::size_t>();
    f.params_.tree.bootstrap = p.at("bootstrap").get<bool>();
    f.params_.seed = p.at("seed").get<std::uint64_t>();
    for (const auto& jt : j.at("trees")) {
      RegressionTree t;
      t.importance = jt.at("importance").get<std::vector<double>>();
      for (const auto& jn : jt.at("nodes")) {
        TreeNode n;
        n.value = jn.at("value").get<Target>();
        n.samples = jn.at("samples").get<std::size_t>();
        if (jn.contains("feature")) {
          n.feature = jn.at("feature").get<std::uint32_t>();
          n.threshold = jn.at("threshold").get<double>();
          n.left = jn.at("left").get<std::uint32_t>();
          n.right = jn.at("right").get<std::uint32_t>();
        }
        t.nodes.push_back(n);
      }
      for (const auto& n : t.nodes) {
        if (!n.is_leaf() && (n.feature >= f.n_features_ || n.left >= t.nodes.size() || n.right >= t.nodes.size())) {
          throw FormatError("tree node references an invalid feature or child");
        }
      }
      if (t.nodes.empty() || t.importance.size() != f.n_features_) throw FormatError("malformed tree");
      f.trees_.push_back(std::move(t));
    }
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed forest model: ") + e.what());
  }
}

void Forest::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << serialize() << '\n';
}

Forest Forest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

}  // namespace rockgraph
