#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace meshnewton {

/// Undirected simple graph on vertices 0..m-1. Edges are stored as (i, j)
/// with i < j, sorted lexicographically.
class Graph {
 public:
  using Edge = std::pair<int, int>;

  /// Validates and normalizes `edges`; throws InvalidArgument on self-loops,
  /// duplicates or out-of-range endpoints.
  Graph(int m, std::vector<Edge> edges);

  int num_vertices() const { return m_; }
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<int>& neighbors(int i) const { return adj_.at(i); }
  int degree(int i) const { return static_cast<int>(adj_.at(i).size()); }
  bool has_edge(int i, int j) const;

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.m_ == b.m_ && a.edges_ == b.edges_;
  }

 private:
  int m_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adj_;
};

enum class Topology { path, ring, star, complete };

Topology parse_topology(const std::string& name);

/// G(m, p): each of the m(m-1)/2 pairs is kept independently with
/// probability p. Deterministic in (m, p, seed).
Graph erdos_renyi(int m, double p, std::uint64_t seed);

Graph named_topology(Topology kind, int m);

/// BFS from vertex 0.
bool is_connected(const Graph& g);

struct ConnectedDraw {
  Graph graph;
  std::uint64_t seed_used;
  int resamples;
};

/// Draws erdos_renyi(m, p, seed), then seed+1, seed+2, ... until connected.
/// Throws if no connected draw is found within `max_resamples`.
ConnectedDraw erdos_renyi_connected(int m, double p, std::uint64_t seed,
                                    int max_resamples = 10000);

/// Edge-list text: first line "m", then one "i j" pair per line.
void write_edge_list(std::ostream& os, const Graph& g);
Graph read_edge_list(std::istream& is);

}  // namespace meshnewton
