#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace rockgraph {

inline constexpr std::size_t kTargetDim = 2;  // (K, mu)
using Target = std::array<double, kTargetDim>;

// Row-major design matrix: rows x n_features.
struct Dataset {
  std::size_t n_features = 0;
  std::vector<double> x;
  std::vector<Target> y;

  std::size_t rows() const { return y.size(); }
  std::span<const double> row(std::size_t i) const { return {x.data() + i * n_features, n_features}; }
};

struct TreeParams {
  std::size_t max_depth = 12;
  std::size_t min_leaf = 2;
  bool bootstrap = true;

  static constexpr std::size_t kUnlimitedDepth = std::numeric_limits<std::size_t>::max();

  bool operator==(const TreeParams&) const = default;
};

// Flat node storage; index 0 is the root. Leaves have feature == kLeaf.
struct TreeNode {
  static constexpr std::uint32_t kLeaf = std::numeric_limits<std::uint32_t>::max();

  std::uint32_t feature = kLeaf;
  double threshold = 0.0;  // go left when x[feature] < threshold
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  Target value{};  // mean target of the node's samples
  std::size_t samples = 0;

  bool is_leaf() const { return feature == kLeaf; }
  bool operator==(const TreeNode&) const = default;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;
  // Weighted impurity decrease (sum over both targets) credited per feature.
  std::vector<double> importance;

  Target predict(std::span<const double> x) const;
  std::size_t depth() const;
  bool operator==(const RegressionTree&) const = default;
};

// Greedy CART on the summed squared error of both targets. Candidate
// thresholds are midpoints of consecutive distinct feature values; each child
// keeps at least min_leaf samples. Rows are bootstrap-resampled by `seed`
// when params.bootstrap is set.
RegressionTree train_tree(const Dataset& data, const TreeParams& params, std::uint64_t seed);

struct ForestParams {
  std::size_t n_trees = 50;
  TreeParams tree;
  std::uint64_t seed = 0;

  bool operator==(const ForestParams&) const = default;
};

class Forest {
 public:
  Forest() = default;

  static Forest train(const Dataset& data, const ForestParams& params,
                      std::vector<std::string> feature_names = {});
  static Forest from_trees(std::vector<RegressionTree> trees, std::size_t n_features,
                           std::vector<std::string> feature_names = {});

  bool trained() const { return !trees_.empty(); }
  std::size_t n_features() const { return n_features_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const ForestParams& params() const { return params_; }

  // Mean of the per-tree predictions. Throws StateError when untrained.
  Target predict(std::span<const double> x) const;

  // Impurity-decrease importance normalized to sum 1 (all zeros when no tree
  // ever split).
  std::vector<double> feature_importance() const;

  std::string serialize() const;
  static Forest parse(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static Forest load(const std::filesystem::path& path);

  bool operator==(const Forest&) const = default;

 private:
  std::size_t n_features_ = 0;
  ForestParams params_;
  std::vector<std::string> feature_names_;
  std::vector<RegressionTree> trees_;
};

}  // namespace rockgraph
