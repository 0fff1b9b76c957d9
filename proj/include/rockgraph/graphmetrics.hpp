#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rockgraph {

struct RockGraph;

// Undirected graph with sorted, symmetric adjacency lists.
class SimpleGraph {
 public:
  SimpleGraph() = default;
  explicit SimpleGraph(std::size_t n) : adjacency_(n) {}

  // Builds from an edge list. Self-loops and out-of-range endpoints throw
  // InvalidArgument; duplicate edges are collapsed.
  static SimpleGraph from_edges(std::size_t n, std::span<const std::pair<std::size_t, std::size_t>> edges);

  std::size_t size() const { return adjacency_.size(); }
  std::size_t edge_count() const;
  const std::vector<std::size_t>& neighbors(std::size_t v) const { return adjacency_[v]; }

 private:
  std::vector<std::vector<std::size_t>> adjacency_;
};

struct IterationControl {
  double tol = 1e-10;
  std::size_t max_iter = 10'000;
};

// Budget for graph-feature extraction. Mapper components can have nearly
// degenerate leading eigenvalues, which power iteration resolves slowly.
inline constexpr IterationControl kFeatureIteration{1e-10, 1'000'000};

inline constexpr double kDefaultDamping = 0.85;

// Raised when a power iteration does not settle; carries the last iterate.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> last_iterate, double residual)
      : std::runtime_error(what), last_iterate_(std::move(last_iterate)), residual_(residual) {}

  const std::vector<double>& last_iterate() const { return last_iterate_; }
  double residual() const { return residual_; }

 private:
  std::vector<double> last_iterate_;
  double residual_;
};

std::vector<std::size_t> degree(const SimpleGraph& g);
double avg_degree(const SimpleGraph& g);

// 1 / (sum of BFS distances to reachable peers); 0 when nothing is reachable.
std::vector<double> closeness(const SimpleGraph& g);

// Perron vector of each connected component, unit L2 norm per component.
// Isolated vertices score 0. Iterates x <- (A + I) x so that bipartite
// components converge.
std::vector<double> eigencentrality(const SimpleGraph& g, IterationControl ctl = {});

// Standard damped PageRank with uniform teleport; dangling mass is spread
// uniformly. Output sums to 1.
std::vector<double> pagerank(const SimpleGraph& g, double damping = kDefaultDamping,
                             IterationControl ctl = {});

// Per-node metric bundle used for node features.
struct NodeMetrics {
  std::vector<std::size_t> degree;
  std::vector<double> closeness;
  std::vector<double> eigencentrality;
  std::vector<double> pagerank;
};

NodeMetrics compute_node_metrics(const SimpleGraph& g, IterationControl ctl = kFeatureIteration);

struct PhaseSummary {
  double node_count = 0;
  double edge_count = 0;
  double avg_degree = 0;
  double avg_closeness = 0;
  double avg_eigencentrality = 0;
  double avg_pagerank = 0;
};

// Solid block followed by pore block.
struct GraphSummary {
  PhaseSummary solid;
  PhaseSummary pore;

  std::array<double, 12> as_array() const;
  static const std::array<std::string, 12>& feature_names();
};

PhaseSummary summarize_phase(const SimpleGraph& g, IterationControl ctl = kFeatureIteration);
GraphSummary summarize(const RockGraph& graph);

}  // namespace rockgraph
