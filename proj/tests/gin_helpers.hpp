#pragma once

// Random graph tensors for network tests.

#include <algorithm>
#include <numeric>
#include <vector>

#include "rockgraph/ginnet.hpp"

namespace testgraphs {

using rockgraph::GraphTensor;
using rockgraph::Rng;
using rockgraph::ad::Matrix;

GraphTensor random_graph(std::size_t n, std::size_t dim, double p_edge, Rng& rng) {
  GraphTensor g;
  g.features = Matrix(n, dim);
  for (auto& v : g.features.values()) v = rockgraph::uniform(rng, -1.0, 1.0);
  std::vector<std::vector<std::uint32_t>> adj(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rockgraph::uniform01(rng) < p_edge) {
        adj[i].push_back(static_cast<std::uint32_t>(j));
        adj[j].push_back(static_cast<std::uint32_t>(i));
      }
  g.adjacency.offsets = {0};
  for (auto& a : adj) {
    g.adjacency.neighbors.insert(g.adjacency.neighbors.end(), a.begin(), a.end());
    g.adjacency.offsets.push_back(static_cast<std::uint32_t>(g.adjacency.neighbors.size()));
  }
  return g;
}

// Node v of the result is node perm^-1(v) of the input: old node i moves to perm[i].
inline GraphTensor permute(const GraphTensor& g, const std::vector<std::size_t>& perm) {
  const std::size_t n = g.features.rows();
  GraphTensor out;
  out.features = Matrix(n, g.features.cols());
  std::vector<std::vector<std::uint32_t>> adj(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(g.features.row(i), g.features.row(i) + g.features.cols(), out.features.row(perm[i]));
    for (auto u : g.adjacency.of(i)) adj[perm[i]].push_back(static_cast<std::uint32_t>(perm[u]));
  }
  out.adjacency.offsets = {0};
  for (auto& a : adj) {
    std::sort(a.begin(), a.end());
    out.adjacency.neighbors.insert(out.adjacency.neighbors.end(), a.begin(), a.end());
    out.adjacency.offsets.push_back(static_cast<std::uint32_t>(out.adjacency.neighbors.size()));
  }
  return out;
}

inline std::vector<std::size_t> random_perm(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  rockgraph::shuffle(p.begin(), p.end(), rng);
  return p;
}

}  // namespace testgraphs
