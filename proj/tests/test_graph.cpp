#include <sstream>

#include "doctest.h"
#include "meshnewton/error.hpp"
#include "meshnewton/graph.hpp"
#include "oracles.hpp"

using namespace meshnewton;

TEST_CASE("erdos_renyi extremes") {
  CHECK(erdos_renyi(5, 1.0, 42).num_edges() == 10);
  CHECK(erdos_renyi(5, 0.0, 42).num_edges() == 0);
  CHECK(erdos_renyi(1, 0.5, 3).num_edges() == 0);
  CHECK_THROWS_AS(erdos_renyi(0, 0.5, 1), InvalidArgument);
  CHECK_THROWS_AS(erdos_renyi(4, 1.5, 1), InvalidArgument);
  CHECK_THROWS_AS(erdos_renyi(4, -0.1, 1), InvalidArgument);
}

TEST_CASE("erdos_renyi is deterministic in (m, p, seed)") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Graph a = erdos_renyi(30, 0.3, seed);
    const Graph b = erdos_renyi(30, 0.3, seed);
    CHECK(a == b);
    for (const auto& [i, j] : a.edges()) {
      CHECK(i < j);
      CHECK(j < 30);
    }
  }
  CHECK_FALSE(erdos_renyi(30, 0.3, 1) == erdos_renyi(30, 0.3, 2));
}

TEST_CASE("erdos_renyi edge density") {
  double edges = 0;
  for (std::uint64_t s = 0; s < 50; ++s) edges += static_cast<double>(erdos_renyi(40, 0.25, s).num_edges());
  const double expected = 50 * 0.25 * 40 * 39 / 2.0;
  CHECK(std::abs(edges - expected) < 0.05 * expected);
}

TEST_CASE("named topologies") {
  const Graph path = named_topology(Topology::path, 3);
  CHECK(path.edges() == std::vector<Graph::Edge>{{0, 1}, {1, 2}});
  const Graph star = named_topology(Topology::star, 4);
  CHECK(star.edges() == std::vector<Graph::Edge>{{0, 1}, {0, 2}, {0, 3}});
  CHECK(named_topology(Topology::complete, 4).num_edges() == 6);
  CHECK(named_topology(Topology::ring, 5).num_edges() == 5);
  CHECK_THROWS_AS(named_topology(Topology::ring, 2), InvalidArgument);
  CHECK_THROWS_AS(parse_topology("torus"), InvalidArgument);
}

TEST_CASE("graph construction rejects bad edges") {
  CHECK_THROWS_AS(Graph(3, {{0, 0}}), InvalidArgument);
  CHECK_THROWS_AS(Graph(3, {{0, 1}, {1, 0}}), InvalidArgument);
  CHECK_THROWS_AS(Graph(3, {{0, 3}}), InvalidArgument);
  CHECK_THROWS_AS(Graph(0, {}), InvalidArgument);
  const Graph g(3, {{2, 0}});
  CHECK(g.has_edge(0, 2));
  CHECK(g.has_edge(2, 0));
  CHECK(g.degree(1) == 0);
}

TEST_CASE("is_connected basics") {
  CHECK(is_connected(named_topology(Topology::path, 3)));
  CHECK_FALSE(is_connected(Graph(2, {})));
  CHECK(is_connected(Graph(1, {})));
}

TEST_CASE("is_connected matches transitive closure on every graph with m <= 4") {
  for (int m = 1; m <= 4; ++m) {
    std::vector<Graph::Edge> all;
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) all.emplace_back(i, j);
    for (unsigned mask = 0; mask < (1u << all.size()); ++mask) {
      std::vector<Graph::Edge> edges;
      for (std::size_t e = 0; e < all.size(); ++e)
        if (mask & (1u << e)) edges.push_back(all[e]);
      CHECK(is_connected(Graph(m, edges)) == oracle::connected_by_closure(m, edges));
    }
  }
}

TEST_CASE("is_connected matches transitive closure on random graphs with m <= 6") {
  for (int m = 5; m <= 6; ++m) {
    for (std::uint64_t s = 0; s < 200; ++s) {
      const Graph g = erdos_renyi(m, 0.35, s);
      CHECK(is_connected(g) == oracle::connected_by_closure(m, g.edges()));
    }
  }
}

TEST_CASE("erdos_renyi_connected resamples until connected") {
  const auto draw = erdos_renyi_connected(30, 0.6, 7);
  CHECK(is_connected(draw.graph));
  CHECK(draw.graph == erdos_renyi(30, 0.6, draw.seed_used));
  CHECK(draw.seed_used == 7 + static_cast<std::uint64_t>(draw.resamples));

  // Sparse graphs need retries; the count reports them.
  const auto sparse = erdos_renyi_connected(20, 0.12, 0);
  CHECK(is_connected(sparse.graph));
  for (int r = 0; r < sparse.resamples; ++r)
    CHECK_FALSE(is_connected(erdos_renyi(20, 0.12, static_cast<std::uint64_t>(r))));
  CHECK_THROWS(erdos_renyi_connected(5, 0.0, 0, 10));
}

TEST_CASE("edge list round trip and errors") {
  const Graph g = erdos_renyi(12, 0.4, 3);
  std::stringstream ss;
  write_edge_list(ss, g);
  CHECK(read_edge_list(ss) == g);

  std::stringstream golden("3\n0 1\n1 2\n");
  CHECK(read_edge_list(golden) == named_topology(Topology::path, 3));

  std::stringstream bad("3\n0 1\n1 x\n");
  try {
    read_edge_list(bad);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  std::stringstream loop("3\n1 1\n");
  CHECK_THROWS_AS(read_edge_list(loop), ParseError);
}
