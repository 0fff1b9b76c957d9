#include "rockgraph/graphmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "rockgraph/errors.hpp"
#include "rockgraph/mapper.hpp"

namespace rockgraph {

SimpleGraph SimpleGraph::from_edges(std::size_t n,
                                    std::span<const std::pair<std::size_t, std::size_t>> edges) {
  SimpleGraph g(n);
  for (const auto& [a, b] : edges) {
    if (a >= n || b >= n) throw InvalidArgument("edge endpoint out of range");
    if (a == b) throw InvalidArgument("self-loops are not allowed");
    g.adjacency_[a].push_back(b);
    g.adjacency_[b].push_back(a);
  }
  for (auto& nbrs : g.adjacency_) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }
  return g;
}

std::size_t SimpleGraph::edge_count() const {
  std::size_t twice = 0;
  for (const auto& nbrs : adjacency_) twice += nbrs.size();
  return twice / 2;
}

std::vector<std::size_t> degree(const SimpleGraph& g) {
  std::vector<std::size_t> out(g.size());
  for (std::size_t v = 0; v < g.size(); ++v) out[v] = g.neighbors(v).size();
  return out;
}

double avg_degree(const SimpleGraph& g) {
  if (g.size() == 0) return 0.0;
  return 2.0 * static_cast<double>(g.edge_count()) / static_cast<double>(g.size());
}

std::vector<double> closeness(const SimpleGraph& g) {
  const std::size_t n = g.size();
  std::vector<double> out(n, 0.0);
  std::vector<std::size_t> dist(n);
  std::queue<std::size_t> frontier;
  constexpr auto kUnseen = static_cast<std::size_t>(-1);

  for (std::size_t s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), kUnseen);
    dist[s] = 0;
    frontier.push(s);
    std::size_t total = 0;
    while (!frontier.empty()) {
      const auto v = frontier.front();
      frontier.pop();
      total += dist[v];
      for (auto u : g.neighbors(v)) {
        if (dist[u] == kUnseen) {
          dist[u] = dist[v] + 1;
          frontier.push(u);
        }
      }
    }
    out[s] = total > 0 ? 1.0 / static_cast<double>(total) : 0.0;
  }
  return out;
}

namespace {

std::vector<std::vector<std::size_t>> components(const SimpleGraph& g) {
  const std::size_t n = g.size();
  std::vector<bool> seen(n, false);
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> stack;
  for (std::size_t s = 0; s < n; ++s) {
    if (seen[s]) continue;
    auto& comp = out.emplace_back();
    seen[s] = true;
    stack.push_back(s);
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      comp.push_back(v);
      for (auto u : g.neighbors(v)) {
        if (!seen[u]) {
          seen[u] = true;
          stack.push_back(u);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
  }
  return out;
}

}  // namespace

std::vector<double> eigencentrality(const SimpleGraph& g, IterationControl ctl) {
  std::vector<double> out(g.size(), 0.0);
  std::vector<double> x, next;
  std::vector<std::size_t> local(g.size());

  for (const auto& comp : components(g)) {
    if (comp.size() < 2) continue;  // isolated vertex
    const std::size_t m = comp.size();
    for (std::size_t i = 0; i < m; ++i) local[comp[i]] = i;

    x.assign(m, 1.0 / std::sqrt(static_cast<double>(m)));
    next.assign(m, 0.0);
    double residual = 0.0;
    bool converged = false;
    for (std::size_t it = 0; it < ctl.max_iter; ++it) {
      double norm2 = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        double acc = x[i];
        for (auto u : g.neighbors(comp[i])) acc += x[local[u]];
        next[i] = acc;
        norm2 += acc * acc;
      }
      const double inv = 1.0 / std::sqrt(norm2);
      residual = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        next[i] *= inv;
        const double d = next[i] - x[i];
        residual += d * d;
      }
      residual = std::sqrt(residual);
      std::swap(x, next);
      if (residual < ctl.tol) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      throw ConvergenceError("eigenvector centrality did not converge", x, residual);
    }
    for (std::size_t i = 0; i < m; ++i) out[comp[i]] = x[i];
  }
  return out;
}

std::vector<double> pagerank(const SimpleGraph& g, double damping, IterationControl ctl) {
  const std::size_t n = g.size();
  if (n == 0) return {};
  if (!(damping >= 0.0 && damping < 1.0)) throw InvalidArgument("damping must lie in [0, 1)");

  const double nd = static_cast<double>(n);
  std::vector<double> pr(n, 1.0 / nd), next(n);
  double residual = 0.0;
  for (std::size_t it = 0; it < ctl.max_iter; ++it) {
    double dangling = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      if (g.neighbors(v).empty()) dangling += pr[v];
    }
    const double base = (1.0 - damping) / nd + damping * dangling / nd;
    for (std::size_t v = 0; v < n; ++v) {
      double acc = 0.0;
      for (auto u : g.neighbors(v)) acc += pr[u] / static_cast<double>(g.neighbors(u).size());
      next[v] = base + damping * acc;
    }
    residual = 0.0;
    for (std::size_t v = 0; v < n; ++v) residual += std::abs(next[v] - pr[v]);
    std::swap(pr, next);
    if (residual < ctl.tol) {
      const double sum = std::accumulate(pr.begin(), pr.end(), 0.0);
      for (auto& p : pr) p /= sum;
      return pr;
    }
  }
  throw ConvergenceError("pagerank did not converge", pr, residual);
}

NodeMetrics compute_node_metrics(const SimpleGraph& g, IterationControl ctl) {
  return NodeMetrics{degree(g), closeness(g), eigencentrality(g, ctl), pagerank(g, kDefaultDamping, ctl)};
}

namespace {

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

PhaseSummary summarize_phase(const SimpleGraph& g, IterationControl ctl) {
  PhaseSummary s;
  if (g.size() == 0) return s;
  s.node_count = static_cast<double>(g.size());
  s.edge_count = static_cast<double>(g.edge_count());
  s.avg_degree = avg_degree(g);
  s.avg_closeness = mean(closeness(g));
  s.avg_eigencentrality = mean(eigencentrality(g, ctl));
  s.avg_pagerank = mean(pagerank(g, kDefaultDamping, ctl));
  return s;
}

std::array<double, 12> GraphSummary::as_array() const {
  return {solid.node_count, solid.edge_count, solid.avg_degree,       solid.avg_closeness,
          solid.avg_eigencentrality, solid.avg_pagerank, pore.node_count, pore.edge_count,
          pore.avg_degree, pore.avg_closeness, pore.avg_eigencentrality, pore.avg_pagerank};
}

const std::array<std::string, 12>& GraphSummary::feature_names() {
  static const std::array<std::string, 12> names{
      "solid_nodes",    "solid_edges",        "solid_avg_degree", "solid_avg_closeness",
      "solid_avg_eigen", "solid_avg_pagerank", "pore_nodes",       "pore_edges",
      "pore_avg_degree", "pore_avg_closeness", "pore_avg_eigen",   "pore_avg_pagerank"};
  return names;
}

GraphSummary summarize(const RockGraph& graph) {
  GraphSummary out;
  out.solid = summarize_phase(graph.phase_subgraph(Phase::Solid));
  out.pore = summarize_phase(graph.phase_subgraph(Phase::Pore));
  return out;
}

}  // namespace rockgraph
