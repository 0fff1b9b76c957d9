#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rockgraph/graphmetrics.hpp"
#include "rockgraph/voxelgrid.hpp"

namespace rockgraph {

// Coordinate used as the Mapper filter (lens).
enum class FilterAxis : std::uint8_t { X = 0, Y = 1, Z = 2 };

struct MapperParams {
  std::size_t n_intervals = 10;
  double overlap = 0.5;  // fraction of the base interval width shared by neighbors
  FilterAxis axis = FilterAxis::X;

  // Throws InvalidArgument unless n_intervals >= 1 and 0 <= overlap < 1.
  void validate() const;
  bool operator==(const MapperParams&) const = default;
};

// Half-open filter range [lo, hi) in voxel units. A voxel belongs to the
// interval when its integer coordinate c along the filter axis satisfies
// lo <= c < hi.
struct CoverInterval {
  std::size_t index = 0;
  double lo = 0.0;
  double hi = 0.0;

  std::size_t first_voxel() const;
  std::size_t end_voxel(std::size_t length) const;
};

// Base width w = length / n; interval i spans [i*w - p*w/2, (i+1)*w + p*w/2)
// clamped to [0, length).
std::vector<CoverInterval> build_cover(std::size_t length, const MapperParams& params);

struct Cluster {
  std::size_t id = 0;  // discovery order within the interval
  Phase phase = Phase::Solid;
  std::size_t interval_index = 0;
  std::vector<Index3> voxels;
  std::array<double, 3> center{};  // mean voxel coordinate
  std::array<double, 3> extent{};  // bounding-box size (a, b, c) in voxels

  std::size_t point_count() const { return voxels.size(); }
};

// Face-connected (6-neighbour) components of `phase` voxels inside the
// interval's slab, in scan order of the first voxel found.
std::vector<Cluster> cluster_interval(const VoxelGrid& grid, const CoverInterval& interval, Phase phase,
                                      FilterAxis axis = FilterAxis::X);

inline constexpr std::size_t kNodeFeatureDim = 12;
using NodeFeatures = std::array<double, kNodeFeatureDim>;

// Slot layout of the node feature vector.
enum FeatureSlot : std::size_t {
  kCenterX = 0,
  kCenterY,
  kCenterZ,
  kExtentA,
  kExtentB,
  kExtentC,
  kPointCount,
  kDegree,
  kCloseness,
  kEigencentrality,
  kPagerank,
  kPhase,
};

const std::array<std::string, kNodeFeatureDim>& node_feature_names();

// `node` indexes the cluster's vertex in its phase subgraph.
NodeFeatures node_features(const Cluster& cluster, const NodeMetrics& phase_metrics, std::size_t node);

struct RockNode {
  Phase phase = Phase::Solid;
  std::size_t interval_index = 0;
  NodeFeatures features{};

  bool operator==(const RockNode&) const = default;
};

// Two-phase Mapper graph. Solid nodes come first, then pore nodes; edges are
// (i, j) with i < j, sorted, never crossing phases.
struct RockGraph {
  MapperParams params;
  std::vector<RockNode> nodes;
  std::vector<std::pair<std::size_t, std::size_t>> edges;

  std::size_t count(Phase phase) const;
  // Induced subgraph on one phase, nodes renumbered in order of appearance.
  SimpleGraph phase_subgraph(Phase phase) const;
  SimpleGraph structure() const;

  bool operator==(const RockGraph&) const = default;
};

RockGraph build_graph(const VoxelGrid& grid, const MapperParams& params);

// JSON layout: {"params": {...}, "nodes": [{"id", "phase", "interval",
// "feature": [12]}], "edges": [[i, j], ...]} with fixed key order.
std::string serialize_graph(const RockGraph& graph);
RockGraph parse_graph(std::string_view text);
void write_graph(const RockGraph& graph, const std::filesystem::path& path);
RockGraph read_graph(const std::filesystem::path& path);

}  // namespace rockgraph
