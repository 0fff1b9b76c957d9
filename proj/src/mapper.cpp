#include "rockgraph/mapper.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "rockgraph/errors.hpp"

namespace rockgraph {

using json = nlohmann::ordered_json;

void MapperParams::validate() const {
  if (n_intervals < 1) throw InvalidArgument("n_intervals must be at least 1");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw InvalidArgument("overlap must lie in [0, 1)");
}

std::size_t CoverInterval::first_voxel() const {
  return static_cast<std::size_t>(std::max(0.0, std::ceil(lo)));
}

std::size_t CoverInterval::end_voxel(std::size_t length) const {
  return std::min(length, static_cast<std::size_t>(std::max(0.0, std::ceil(hi))));
}

std::vector<CoverInterval> build_cover(std::size_t length, const MapperParams& params) {
  params.validate();
  if (params.n_intervals > length) {
    throw InvalidArgument("n_intervals (" + std::to_string(params.n_intervals) +
                          ") exceeds the filter range length (" + std::to_string(length) + ")");
  }
  const double len = static_cast<double>(length);
  const double width = len / static_cast<double>(params.n_intervals);
  const double ext = params.overlap * width / 2.0;

  std::vector<CoverInterval> cover(params.n_intervals);
  for (std::size_t i = 0; i < params.n_intervals; ++i) {
    const double base_lo = static_cast<double>(i) * width;
    const double base_hi = i + 1 == params.n_intervals ? len : static_cast<double>(i + 1) * width;
    cover[i] = {i, std::max(0.0, base_lo - ext), std::min(len, base_hi + ext)};
  }
  return cover;
}

namespace {

// Labelled slab of one interval: label[local] is the cluster index or -1.
struct Slab {
  std::array<std::size_t, 3> lo{};
  std::array<std::size_t, 3> ext{};
  std::vector<std::int32_t> label;

  std::size_t local(std::size_t x, std::size_t y, std::size_t z) const {
    return (x - lo[0]) + ext[0] * ((y - lo[1]) + ext[1] * (z - lo[2]));
  }
};

Slab make_slab(const VoxelGrid& grid, const CoverInterval& interval, FilterAxis axis) {
  const auto a = static_cast<std::size_t>(axis);
  Slab slab;
  for (std::size_t k = 0; k < 3; ++k) {
    slab.lo[k] = 0;
    slab.ext[k] = grid.dims()[k];
  }
  const auto first = interval.first_voxel();
  const auto end = interval.end_voxel(grid.dims()[a]);
  slab.lo[a] = first;
  slab.ext[a] = end > first ? end - first : 0;
  slab.label.assign(slab.ext[0] * slab.ext[1] * slab.ext[2], -1);
  return slab;
}

std::vector<Cluster> label_slab(const VoxelGrid& grid, const CoverInterval& interval, Phase phase,
                                Slab& slab) {
  std::vector<Cluster> clusters;
  if (slab.label.empty()) return clusters;

  const auto target = static_cast<std::uint8_t>(phase);
  const auto data = grid.data();
  const std::array<std::size_t, 3> hi{slab.lo[0] + slab.ext[0], slab.lo[1] + slab.ext[1],
                                      slab.lo[2] + slab.ext[2]};
  std::vector<Index3> stack;

  for (std::size_t z = slab.lo[2]; z < hi[2]; ++z) {
    for (std::size_t y = slab.lo[1]; y < hi[1]; ++y) {
      for (std::size_t x = slab.lo[0]; x < hi[0]; ++x) {
        if (data[grid.index(x, y, z)] != target || slab.label[slab.local(x, y, z)] >= 0) continue;

        const auto id = static_cast<std::int32_t>(clusters.size());
        Cluster& c = clusters.emplace_back();
        c.id = clusters.size() - 1;
        c.phase = phase;
        c.interval_index = interval.index;

        // Iterative depth-first flood fill over face neighbours.
        slab.label[slab.local(x, y, z)] = id;
        stack.push_back({x, y, z});
        while (!stack.empty()) {
          const Index3 p = stack.back();
          stack.pop_back();
          c.voxels.push_back(p);
          for (std::size_t k = 0; k < 3; ++k) {
            for (int dir : {-1, 1}) {
              if (dir < 0 && p[k] == slab.lo[k]) continue;
              if (dir > 0 && p[k] + 1 == hi[k]) continue;
              Index3 q = p;
              q[k] = dir < 0 ? p[k] - 1 : p[k] + 1;
              auto& lab = slab.label[slab.local(q[0], q[1], q[2])];
              if (lab >= 0 || data[grid.index(q[0], q[1], q[2])] != target) continue;
              lab = id;
              stack.push_back(q);
            }
          }
        }

        std::array<std::size_t, 3> mn = c.voxels.front(), mx = c.voxels.front();
        std::array<double, 3> sum{};
        for (const auto& v : c.voxels) {
          for (std::size_t k = 0; k < 3; ++k) {
            mn[k] = std::min(mn[k], v[k]);
            mx[k] = std::max(mx[k], v[k]);
            sum[k] += static_cast<double>(v[k]);
          }
        }
        for (std::size_t k = 0; k < 3; ++k) {
          c.center[k] = sum[k] / static_cast<double>(c.voxels.size());
          c.extent[k] = static_cast<double>(mx[k] - mn[k] + 1);
        }
      }
    }
  }
  return clusters;
}

}  // namespace

std::vector<Cluster> cluster_interval(const VoxelGrid& grid, const CoverInterval& interval, Phase phase,
                                      FilterAxis axis) {
  Slab slab = make_slab(grid, interval, axis);
  return label_slab(grid, interval, phase, slab);
}

const std::array<std::string, kNodeFeatureDim>& node_feature_names() {
  static const std::array<std::string, kNodeFeatureDim> names{
      "center_x", "center_y", "center_z",        "extent_a", "extent_b", "extent_c",
      "points",   "degree",   "closeness", "eigencentrality", "pagerank", "phase"};
  return names;
}

NodeFeatures node_features(const Cluster& cluster, const NodeMetrics& m, std::size_t node) {
  NodeFeatures f{};
  f[kCenterX] = cluster.center[0];
  f[kCenterY] = cluster.center[1];
  f[kCenterZ] = cluster.center[2];
  f[kExtentA] = cluster.extent[0];
  f[kExtentB] = cluster.extent[1];
  f[kExtentC] = cluster.extent[2];
  f[kPointCount] = static_cast<double>(cluster.point_count());
  f[kDegree] = static_cast<double>(m.degree[node]);
  f[kCloseness] = m.closeness[node];
  f[kEigencentrality] = m.eigencentrality[node];
  f[kPagerank] = m.pagerank[node];
  f[kPhase] = static_cast<double>(static_cast<std::uint8_t>(cluster.phase));
  return f;
}

std::size_t RockGraph::count(Phase phase) const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [&](const RockNode& n) { return n.phase == phase; }));
}

SimpleGraph RockGraph::phase_subgraph(Phase phase) const {
  constexpr auto kAbsent = static_cast<std::size_t>(-1);
  std::vector<std::size_t> local(nodes.size(), kAbsent);
  std::size_t n = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].phase == phase) local[i] = n++;
  }
  std::vector<std::pair<std::size_t, std::size_t>> sub;
  for (const auto& [a, b] : edges) {
    if (local[a] != kAbsent && local[b] != kAbsent) sub.emplace_back(local[a], local[b]);
  }
  return SimpleGraph::from_edges(n, sub);
}

SimpleGraph RockGraph::structure() const { return SimpleGraph::from_edges(nodes.size(), edges); }

namespace {

// Mapper on one phase: clusters of every interval plus overlap edges, with
// cluster indices local to the phase.
struct PhaseMapper {
  std::vector<Cluster> clusters;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
};

PhaseMapper run_phase(const VoxelGrid& grid, const std::vector<CoverInterval>& cover, FilterAxis axis,
                      Phase phase) {
  PhaseMapper out;
  const auto a = static_cast<std::size_t>(axis);
  Slab prev;
  std::size_t prev_offset = 0;

  for (std::size_t i = 0; i < cover.size(); ++i) {
    Slab slab = make_slab(grid, cover[i], axis);
    auto clusters = label_slab(grid, cover[i], phase, slab);
    const std::size_t offset = out.clusters.size();

    if (i > 0 && !prev.label.empty() && !slab.label.empty()) {
      // Only consecutive intervals overlap since the total extension p*w < w.
      const std::size_t band_lo = slab.lo[a];
      const std::size_t band_hi = std::min(prev.lo[a] + prev.ext[a], slab.lo[a] + slab.ext[a]);
      std::array<std::size_t, 3> lo = slab.lo, hi{slab.lo[0] + slab.ext[0], slab.lo[1] + slab.ext[1],
                                                  slab.lo[2] + slab.ext[2]};
      lo[a] = band_lo;
      hi[a] = band_hi;
      std::vector<std::pair<std::size_t, std::size_t>> band_edges;
      for (std::size_t z = lo[2]; z < hi[2]; ++z) {
        for (std::size_t y = lo[1]; y < hi[1]; ++y) {
          for (std::size_t x = lo[0]; x < hi[0]; ++x) {
            const auto l_prev = prev.label[prev.local(x, y, z)];
            if (l_prev < 0) continue;
            const auto l_cur = slab.label[slab.local(x, y, z)];
            band_edges.emplace_back(prev_offset + static_cast<std::size_t>(l_prev),
                                    offset + static_cast<std::size_t>(l_cur));
          }
        }
      }
      std::sort(band_edges.begin(), band_edges.end());
      band_edges.erase(std::unique(band_edges.begin(), band_edges.end()), band_edges.end());
      out.edges.insert(out.edges.end(), band_edges.begin(), band_edges.end());
    }

    for (auto& c : clusters) out.clusters.push_back(std::move(c));
    prev = std::move(slab);
    prev_offset = offset;
  }
  return out;
}

}  // namespace

RockGraph build_graph(const VoxelGrid& grid, const MapperParams& params) {
  params.validate();
  const auto length = grid.dims()[static_cast<std::size_t>(params.axis)];
  const auto cover = build_cover(length, params);

  RockGraph graph;
  graph.params = params;
  for (Phase phase : {Phase::Solid, Phase::Pore}) {
    const auto pm = run_phase(grid, cover, params.axis, phase);
    const auto sub = SimpleGraph::from_edges(pm.clusters.size(), pm.edges);
    const auto metrics = compute_node_metrics(sub);

    const std::size_t offset = graph.nodes.size();
    for (std::size_t i = 0; i < pm.clusters.size(); ++i) {
      graph.nodes.push_back({phase, pm.clusters[i].interval_index, node_features(pm.clusters[i], metrics, i)});
    }
    for (const auto& [u, v] : pm.edges) graph.edges.emplace_back(offset + u, offset + v);
  }
  std::sort(graph.edges.begin(), graph.edges.end());
  return graph;
}

namespace {

const char* axis_name(FilterAxis axis) {
  switch (axis) {
    case FilterAxis::X: return "x";
    case FilterAxis::Y: return "y";
    case FilterAxis::Z: return "z";
  }
  return "x";
}

FilterAxis parse_axis(const std::string& s) {
  if (s == "x") return FilterAxis::X;
  if (s == "y") return FilterAxis::Y;
  if (s == "z") return FilterAxis::Z;
  throw FormatError("unknown filter axis '" + s + "'");
}

}  // namespace

std::string serialize_graph(const RockGraph& graph) {
  json j;
  j["params"] = {{"n_intervals", graph.params.n_intervals},
                 {"overlap", graph.params.overlap},
                 {"filter_axis", axis_name(graph.params.axis)}};
  json nodes = json::array();
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    const auto& n = graph.nodes[i];
    nodes.push_back({{"id", i},
                     {"phase", n.phase == Phase::Solid ? "solid" : "pore"},
                     {"interval", n.interval_index},
                     {"feature", n.features}});
  }
  j["nodes"] = std::move(nodes);
  json edges = json::array();
  for (const auto& [a, b] : graph.edges) edges.push_back({a, b});
  j["edges"] = std::move(edges);
  return j.dump(1);
}

RockGraph parse_graph(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("graph file is not valid JSON: ") + e.what());
  }
  try {
    RockGraph g;
    const auto& p = j.at("params");
    g.params.n_intervals = p.at("n_intervals").get<std::size_t>();
    g.params.overlap = p.at("overlap").get<double>();
    g.params.axis = parse_axis(p.at("filter_axis").get<std::string>());

    const auto& nodes = j.at("nodes");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& n = nodes[i];
      if (n.at("id").get<std::size_t>() != i) throw FormatError("node ids must be 0..n-1 in order");
      const auto phase = n.at("phase").get<std::string>();
      if (phase != "solid" && phase != "pore") throw FormatError("unknown phase '" + phase + "'");
      const auto& f = n.at("feature");
      if (!f.is_array() || f.size() != kNodeFeatureDim) {
        throw FormatError("node feature vectors must have length 12");
      }
      RockNode node;
      node.phase = phase == "solid" ? Phase::Solid : Phase::Pore;
      node.interval_index = n.at("interval").get<std::size_t>();
      for (std::size_t k = 0; k < kNodeFeatureDim; ++k) node.features[k] = f[k].get<double>();
      g.nodes.push_back(node);
    }
    for (const auto& e : j.at("edges")) {
      const auto a = e.at(0).get<std::size_t>();
      const auto b = e.at(1).get<std::size_t>();
      if (a >= b || b >= g.nodes.size()) throw FormatError("edges must be (i, j) with i < j < n");
      if (g.nodes[a].phase != g.nodes[b].phase) throw FormatError("edge joins nodes of different phases");
      g.edges.emplace_back(a, b);
    }
    return g;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed graph file: ") + e.what());
  }
}

void write_graph(const RockGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << serialize_graph(graph) << '\n';
}

RockGraph read_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_graph(ss.str());
}

}  // namespace rockgraph
