#include "meshnewton/graph.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <queue>
#include <random>
#include <sstream>

#include "meshnewton/error.hpp"

namespace meshnewton {

Graph::Graph(int m, std::vector<Edge> edges) : m_(m), adj_(m > 0 ? m : 0) {
  if (m < 1) throw InvalidArgument("graph needs at least one vertex");
  for (auto& [i, j] : edges) {
    if (i < 0 || j < 0 || i >= m || j >= m)
      throw InvalidArgument("edge endpoint out of range");
    if (i == j) throw InvalidArgument("self-loop on vertex " + std::to_string(i));
    if (i > j) std::swap(i, j);
  }
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
    throw InvalidArgument("duplicate edge");
  edges_ = std::move(edges);
  for (const auto& [i, j] : edges_) {
    adj_[i].push_back(j);
    adj_[j].push_back(i);
  }
  for (auto& nb : adj_) std::sort(nb.begin(), nb.end());
}

bool Graph::has_edge(int i, int j) const {
  if (i > j) std::swap(i, j);
  return std::binary_search(edges_.begin(), edges_.end(), Edge{i, j});
}

Topology parse_topology(const std::string& name) {
  if (name == "path") return Topology::path;
  if (name == "ring") return Topology::ring;
  if (name == "star") return Topology::star;
  if (name == "complete") return Topology::complete;
  throw InvalidArgument("unknown topology '" + name + "'");
}

Graph erdos_renyi(int m, double p, std::uint64_t seed) {
  if (m < 1) throw InvalidArgument("erdos_renyi: m must be >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("erdos_renyi: p must lie in [0,1]");
  std::mt19937_64 rng(seed);
  std::vector<Graph::Edge> edges;
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      // 53-bit uniform in [0,1); strict '<' makes p=0 and p=1 exact.
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      if (u < p) edges.emplace_back(i, j);
    }
  }
  return Graph(m, std::move(edges));
}

Graph named_topology(Topology kind, int m) {
  if (m < 1) throw InvalidArgument("named_topology: m must be >= 1");
  std::vector<Graph::Edge> edges;
  switch (kind) {
    case Topology::path:
      for (int i = 0; i + 1 < m; ++i) edges.emplace_back(i, i + 1);
      break;
    case Topology::ring:
      if (m < 3) throw InvalidArgument("ring needs m >= 3");
      for (int i = 0; i + 1 < m; ++i) edges.emplace_back(i, i + 1);
      edges.emplace_back(0, m - 1);
      break;
    case Topology::star:
      for (int i = 1; i < m; ++i) edges.emplace_back(0, i);
      break;
    case Topology::complete:
      for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) edges.emplace_back(i, j);
      break;
  }
  return Graph(m, std::move(edges));
}

bool is_connected(const Graph& g) {
  const int m = g.num_vertices();
  std::vector<char> seen(m, 0);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = 1;
  int reached = 1;
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (int v : g.neighbors(u)) {
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        frontier.push(v);
      }
    }
  }
  return reached == m;
}

ConnectedDraw erdos_renyi_connected(int m, double p, std::uint64_t seed,
                                    int max_resamples) {
  for (int r = 0; r <= max_resamples; ++r) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(r);
    Graph g = erdos_renyi(m, p, s);
    if (is_connected(g)) return {std::move(g), s, r};
  }
  throw Error("no connected G(" + std::to_string(m) + ", " + std::to_string(p) +
              ") draw within " + std::to_string(max_resamples) + " resamples");
}

void write_edge_list(std::ostream& os, const Graph& g) {
  os << g.num_vertices() << '\n';
  for (const auto& [i, j] : g.edges()) os << i << ' ' << j << '\n';
}

Graph read_edge_list(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  int m = -1;
  std::vector<Graph::Edge> edges;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    if (m < 0) {
      if (!(ls >> m) || m < 1) throw ParseError(lineno, "expected vertex count");
      continue;
    }
    int i = 0, j = 0;
    if (!(ls >> i >> j)) throw ParseError(lineno, "expected 'i j'");
    std::string rest;
    if (ls >> rest) throw ParseError(lineno, "trailing tokens");
    edges.emplace_back(i, j);
  }
  if (m < 0) throw ParseError(lineno, "empty edge list");
  try {
    return Graph(m, std::move(edges));
  } catch (const InvalidArgument& e) {
    throw ParseError(lineno, e.what());
  }
}

}  // namespace meshnewton
