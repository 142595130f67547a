#pragma once

#include <limits>
#include <queue>
#include <stdexcept>
#include <vector>

#include "flip/intercluster/graph.hpp"

namespace flip::intercluster {

/// Minimal-hop path between two clusters, endpoints included. Among
/// equal-length paths the lexicographically smallest is returned: the walk
/// from the origin always steps to the lowest-id neighbour that still lies
/// on a shortest path. origin == destination yields the single-cluster
/// path {origin}.
inline std::vector<ClusterId> build_route(ClusterId origin, ClusterId destination,
                                          const ClusterGraph& graph) {
  if (origin >= graph.size() || destination >= graph.size())
    throw std::invalid_argument("route endpoints outside the cluster graph");

  constexpr std::size_t kUnreached = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> dist(graph.size(), kUnreached);
  std::queue<ClusterId> q;
  dist[destination] = 0;
  q.push(destination);
  while (!q.empty()) {
    const ClusterId c = q.front();
    q.pop();
    for (ClusterId n : graph.neighbours(c)) {
      if (dist[n] == kUnreached) {
        dist[n] = dist[c] + 1;
        q.push(n);
      }
    }
  }
  if (dist[origin] == kUnreached) throw std::runtime_error("destination cluster unreachable");

  std::vector<ClusterId> path{origin};
  ClusterId at = origin;
  while (at != destination) {
    // Neighbours are stored ascending, so the first one strictly closer to
    // the destination is the lexicographic tie-break.
    for (ClusterId n : graph.neighbours(at)) {
      if (dist[n] == dist[at] - 1) {
        at = n;
        break;
      }
    }
    path.push_back(at);
  }
  return path;
}

/// Hop distance oracle used by tests and by route length assertions.
inline std::vector<std::size_t> bfs_distances(ClusterId from, const ClusterGraph& graph) {
  constexpr std::size_t kUnreached = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> dist(graph.size(), kUnreached);
  std::queue<ClusterId> q;
  dist[from] = 0;
  q.push(from);
  while (!q.empty()) {
    const ClusterId c = q.front();
    q.pop();
    for (ClusterId n : graph.neighbours(c)) {
      if (dist[n] == kUnreached) {
        dist[n] = dist[c] + 1;
        q.push(n);
      }
    }
  }
  return dist;
}

}  // namespace flip::intercluster
