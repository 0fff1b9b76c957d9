#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rockgraph/autodiff.hpp"
#include "rockgraph/dataset.hpp"
#include "rockgraph/effmed.hpp"
#include "rockgraph/mapper.hpp"
#include "rockgraph/random.hpp"

namespace rockgraph {

// Dropout presets: 0.5 is the tuned rate, 0.3 the rate listed with the
// reference architecture.
inline constexpr double kDropoutTuned = 0.5;
inline constexpr double kDropoutBaseline = 0.3;

struct GinConfig {
  std::size_t input_dim = kNodeFeatureDim;
  std::size_t hidden_dim = 16;  // GIN layer width
  std::size_t layers = 3;
  std::size_t head_dim = 32;
  std::size_t output_dim = 2;
  std::uint64_t seed = 0;  // weight initialization

  void validate() const;
  std::size_t readout_dim() const { return layers * hidden_dim; }
};

struct TrainConfig {
  std::size_t batch_size = 32;
  double dropout = kDropoutTuned;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_mse = 0.0;  // mean batch loss, standardized label space
  double val_mse = 0.0;    // eval-mode loss, standardized label space

  bool operator==(const EpochRecord&) const = default;
};

// A graph ready for the network: standardized node features plus adjacency.
struct GraphTensor {
  ad::Matrix features;  // n x input_dim
  ad::Adjacency adjacency;
};

// Raw (unstandardized) tensor view of a Mapper graph.
GraphTensor to_tensor(const RockGraph& graph);

// Several graphs stacked block-diagonally.
struct GraphBatch {
  ad::Matrix features;
  ad::Adjacency adjacency;
  std::vector<std::size_t> offsets;  // node row ranges, size graphs + 1

  std::size_t graphs() const { return offsets.size() - 1; }
};

GraphBatch make_batch(std::span<const GraphTensor* const> graphs);

struct LabeledGraph {
  GraphTensor graph;  // raw features
  ElasticModuli labels;
};

struct GinLayer {
  ad::Parameter eps;  // 1 x 1
  ad::Parameter w1, b1, w2, b2;
};

struct DenseLayer {
  ad::Parameter w, b;
};

// GIN regressor: per layer h <- ReLU(MLP((1 + eps) h + sum of neighbours)),
// readout = concat of per-layer node sums, then a 3-layer head with dropout
// after the first two hidden layers.
class GinModel {
 public:
  explicit GinModel(GinConfig config = {});

  const GinConfig& config() const { return config_; }
  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;
  std::size_t parameter_count() const;
  void zero_grad();

  // Records the forward pass for a batch whose features are already
  // standardized. `dropout_rng` is used only when train_mode and dropout > 0.
  ad::Var forward(ad::Tape& tape, const GraphBatch& batch, bool train_mode, double dropout = 0.0,
                  Rng* dropout_rng = nullptr);

  // Eval-mode forward of a single standardized graph; returns output_dim values.
  std::vector<double> forward_values(const GraphTensor& graph) const;

  // MSE over every output of every graph and accumulated parameter gradients.
  // `targets` is graphs x output_dim in the same space as the network output.
  double loss_and_grads(const GraphBatch& batch, const ad::Matrix& targets, bool train_mode = false,
                        double dropout = 0.0, Rng* dropout_rng = nullptr);

  // Eval-mode MSE without touching gradients.
  double eval_mse(const GraphBatch& batch, const ad::Matrix& targets) const;

  void set_standardizers(Standardizer features, Standardizer labels);
  const std::optional<Standardizer>& feature_standardizer() const { return feature_std_; }
  const std::optional<Standardizer>& label_standardizer() const { return label_std_; }
  GraphTensor standardize(const GraphTensor& raw) const;

  bool trained() const { return trained_; }
  void mark_trained() { trained_ = true; }

  // Standardizes, runs eval mode, maps outputs back to GPa, clamps at zero.
  ElasticModuli predict(const RockGraph& graph) const;
  ElasticModuli predict(const GraphTensor& raw) const;

  std::vector<EpochRecord>& history() { return history_; }
  const std::vector<EpochRecord>& history() const { return history_; }

  std::string serialize() const;
  static GinModel parse(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static GinModel load(const std::filesystem::path& path);

 private:
  // Builds the graph on `tape` from parameter handles given in parameters()
  // order.
  ad::Var build(ad::Tape& tape, std::span<const ad::Var> params, const GraphBatch& batch, bool train_mode,
                double dropout, Rng* dropout_rng) const;
  std::vector<ad::Var> bind_constants(ad::Tape& tape) const;

  GinConfig config_;
  std::vector<GinLayer> layers_;
  std::vector<DenseLayer> head_;
  std::optional<Standardizer> feature_std_;
  std::optional<Standardizer> label_std_;
  std::vector<EpochRecord> history_;
  bool trained_ = false;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
};

// Fits standardizers on `train_set`, runs Adam over shuffled minibatches and
// restores the weights of the epoch with the lowest validation loss. Throws
// NumericError when the loss becomes non-finite.
TrainResult train(GinModel& model, std::span<const LabeledGraph> train_set, std::span<const LabeledGraph> val_set,
                  const TrainConfig& config);

}  // namespace rockgraph
