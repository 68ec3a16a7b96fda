#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>
#include <vector>

namespace ghsim::mesh {

/// Id reserved for the base radio in hop paths and adjacency.
inline constexpr int kBaseId = 0;

struct Position {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Position&) const = default;
};

inline double distance(Position a, Position b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Radio graph over the live nodes plus the base radio, with a static
/// fewest-hop route per reachable node. Ties go to the lowest-id next hop.
struct Topology {
  std::map<int, std::vector<int>> adjacency;  // node -> sorted neighbor ids (may include kBaseId)
  /// node -> [origin, relay, ...]; the last element is adjacent to the base.
  std::map<int, std::vector<int>> routes;

  bool reachable(int node) const { return routes.contains(node); }
  bool adjacent(int a, int b) const {
    const auto it = adjacency.find(a);
    return it != adjacency.end() && std::binary_search(it->second.begin(), it->second.end(), b);
  }
};

struct RadioSite {
  int id = 0;
  Position position;
};

inline Topology build_topology(const std::vector<RadioSite>& live, Position base, double range) {
  Topology t;
  for (const auto& a : live) {
    auto& adj = t.adjacency[a.id];
    if (distance(a.position, base) <= range) adj.push_back(kBaseId);
    for (const auto& b : live) {
      if (a.id != b.id && distance(a.position, b.position) <= range) adj.push_back(b.id);
    }
    std::sort(adj.begin(), adj.end());
  }

  // Breadth-first from the base; next hop = lowest-id neighbor one step closer.
  std::map<int, int> dist;
  dist[kBaseId] = 0;
  std::deque<int> frontier{kBaseId};
  std::map<int, std::vector<int>> rev;  // who hears whom
  for (const auto& [id, adj] : t.adjacency) {
    for (int n : adj) rev[n].push_back(id);
  }
  while (!frontier.empty()) {
    const int cur = frontier.front();
    frontier.pop_front();
    auto& hearers = rev[cur];
    std::sort(hearers.begin(), hearers.end());
    for (int n : hearers) {
      if (!dist.contains(n)) {
        dist[n] = dist[cur] + 1;
        frontier.push_back(n);
      }
    }
  }
  std::map<int, int> next_hop;
  for (const auto& [id, d] : dist) {
    if (id == kBaseId) continue;
    for (int n : t.adjacency[id]) {
      if (dist.contains(n) && dist[n] == d - 1) {
        next_hop[id] = n;
        break;
      }
    }
  }
  for (const auto& [id, d] : dist) {
    if (id == kBaseId) continue;
    std::vector<int> path{id};
    int cur = id;
    while (next_hop[cur] != kBaseId) {
      cur = next_hop[cur];
      path.push_back(cur);
    }
    t.routes[id] = std::move(path);
  }
  return t;
}

}  // namespace ghsim::mesh
