#pragma once

#include <algorithm>
#include <cstddef>
#include <queue>
#include <set>
#include <stdexcept>
#include <vector>

#include "flip/core/ids.hpp"
#include "flip/core/rng.hpp"

namespace flip::intercluster {

/// Undirected adjacency between local clusters, the AS-graph analogue.
class ClusterGraph {
 public:
  ClusterGraph() = default;
  explicit ClusterGraph(std::size_t n) : adj_(n) {}

  std::size_t size() const { return adj_.size(); }

  void add_edge(ClusterId a, ClusterId b) {
    if (a == b) return;
    if (!has_edge(a, b)) {
      adj_[a].push_back(b);
      adj_[b].push_back(a);
      std::sort(adj_[a].begin(), adj_[a].end());
      std::sort(adj_[b].begin(), adj_[b].end());
    }
  }

  bool has_edge(ClusterId a, ClusterId b) const {
    return std::binary_search(adj_[a].begin(), adj_[a].end(), b);
  }

  /// Direct neighbours, ascending. This is all a leader is aware of.
  const std::vector<ClusterId>& neighbours(ClusterId c) const { return adj_[c]; }

  bool connected() const {
    if (adj_.empty()) return true;
    std::vector<bool> seen(adj_.size(), false);
    std::queue<ClusterId> q;
    q.push(0);
    seen[0] = true;
    std::size_t visited = 1;
    while (!q.empty()) {
      const ClusterId c = q.front();
      q.pop();
      for (ClusterId n : adj_[c]) {
        if (!seen[n]) {
          seen[n] = true;
          ++visited;
          q.push(n);
        }
      }
    }
    return visited == adj_.size();
  }

 private:
  std::vector<std::vector<ClusterId>> adj_;
};

struct GraphGenParams {
  std::size_t n1 = 1;  // top-level nodes
  double p1 = 1.0;     // top-level edge probability
  std::size_t n2 = 1;  // sub-level nodes per top node
  double p2 = 1.0;     // sub-level edge probability
  int max_retries = 64;
};

/// Two-level nested random graph. A top-level G(n1, p1) is drawn, then each
/// of its nodes is expanded into a G(n2, p2) sub-graph; every top-level
/// edge is realized between random representatives of the two sub-graphs.
/// Resampled until connected; deterministic per seed.
inline ClusterGraph generate_cluster_graph(const GraphGenParams& params, Rng& rng) {
  if (params.n1 < 1 || params.n2 < 1) throw std::invalid_argument("graph levels need >= 1 node");
  if (params.p1 <= 0.0 || params.p1 > 1.0 || params.p2 <= 0.0 || params.p2 > 1.0)
    throw std::invalid_argument("edge probabilities must be in (0,1]");

  for (int attempt = 0; attempt < params.max_retries; ++attempt) {
    const std::size_t total = params.n1 * params.n2;
    ClusterGraph g(total);
    auto sub_node = [&](std::size_t top, std::size_t k) {
      return static_cast<ClusterId>(top * params.n2 + k);
    };
    // Sub-level graphs.
    for (std::size_t t = 0; t < params.n1; ++t)
      for (std::size_t i = 0; i < params.n2; ++i)
        for (std::size_t j = i + 1; j < params.n2; ++j)
          if (rng.uniform01() < params.p2) g.add_edge(sub_node(t, i), sub_node(t, j));
    // Top-level edges, realized between random sub-level representatives.
    for (std::size_t a = 0; a < params.n1; ++a)
      for (std::size_t b = a + 1; b < params.n1; ++b)
        if (rng.uniform01() < params.p1) {
          const auto ka = static_cast<std::size_t>(rng.uniform_index(params.n2));
          const auto kb = static_cast<std::size_t>(rng.uniform_index(params.n2));
          g.add_edge(sub_node(a, ka), sub_node(b, kb));
        }
    if (g.connected()) return g;
  }
  throw std::invalid_argument("cluster graph parameters never produced a connected graph");
}

}  // namespace flip::intercluster
