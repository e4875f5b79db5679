#include <doctest.h>

#include <cmath>
#include <sstream>

#include "tokenopt/graph.hpp"

using namespace tokenopt;

namespace {

void check_basic_invariants(const Graph& g) {
  // symmetry, no self-loops, handshake identity
  std::int64_t degree_sum = 0;
  for (int v = 0; v < g.node_count(); ++v) {
    degree_sum += g.degree(v);
    for (int w : g.neighbors(v)) {
      CHECK(w != v);
      bool back = false;
      for (int u : g.neighbors(w))
        if (u == v) back = true;
      CHECK(back);
    }
  }
  CHECK(degree_sum == 2 * g.edge_count());
  CHECK(is_connected(g));
}

}  // namespace

TEST_CASE("cycle graphs") {
  const Graph tri = build_cycle(3);
  CHECK(tri.node_count() == 3);
  CHECK(tri.edge_count() == 3);
  for (int v = 0; v < 3; ++v) CHECK(tri.degree(v) == 2);
  check_basic_invariants(tri);

  const Graph c50 = build_cycle(50);
  CHECK(c50.edge_count() == 50);
  CHECK(diameter(c50) == 25);
  check_basic_invariants(c50);

  CHECK(diameter(build_cycle(4)) == 2);
  CHECK_THROWS_AS(build_cycle(2), std::invalid_argument);
}

TEST_CASE("torus graphs") {
  const Graph t1 = build_torus(3, 1);
  const Graph c3 = build_cycle(3);
  CHECK(t1.node_count() == c3.node_count());
  CHECK(t1.edge_count() == c3.edge_count());
  for (int v = 0; v < 3; ++v) CHECK(t1.degree(v) == c3.degree(v));

  const Graph t2 = build_torus(4, 2);
  CHECK(t2.node_count() == 16);
  for (int v = 0; v < 16; ++v) CHECK(t2.degree(v) == 4);
  CHECK(diameter(t2) == 4);
  check_basic_invariants(t2);

  const Graph t3 = build_torus(5, 2);
  CHECK(t3.node_count() == 25);
  CHECK(t3.edge_count() == 50);  // n * dim by the handshake count

  CHECK_THROWS_AS(build_torus(2, 2), std::invalid_argument);
  CHECK_THROWS_AS(build_torus(10, 5), std::invalid_argument);  // over the node cap
}

TEST_CASE("complete graphs") {
  const Graph k2 = build_complete(2);
  CHECK(k2.edge_count() == 1);
  const Graph k5 = build_complete(5);
  CHECK(k5.edge_count() == 10);
  CHECK(diameter(k5) == 1);
  check_basic_invariants(k5);
  const Graph k50 = build_complete(50);
  for (int v = 0; v < 50; ++v) CHECK(k50.degree(v) == 49);
  CHECK_THROWS_AS(build_complete(1), std::invalid_argument);
}

TEST_CASE("random geometric graphs") {
  // two nodes at radius sqrt(2) are always joined
  const Graph pair = build_random_geometric(2, std::sqrt(2.0), 9);
  CHECK(pair.edge_count() == 1);

  const Graph g1 = build_random_geometric(50, 0.3, 12345);
  check_basic_invariants(g1);
  const Graph g2 = build_random_geometric(50, 0.3, 12345);
  REQUIRE(g1.node_count() == g2.node_count());
  CHECK(g1.edge_count() == g2.edge_count());
  for (int v = 0; v < g1.node_count(); ++v) {
    REQUIRE(g1.degree(v) == g2.degree(v));
    const auto n1 = g1.neighbors(v);
    const auto n2 = g2.neighbors(v);
    for (std::size_t i = 0; i < n1.size(); ++i) CHECK(n1[i] == n2[i]);
  }

  CHECK_THROWS(build_random_geometric(10, -0.1, 3));
  // unreachable connectivity within the attempt budget
  CHECK_THROWS_AS(build_random_geometric(60, 0.01, 3, 5), std::runtime_error);
}

TEST_CASE("edge-list round trip") {
  const Graph g = build_random_geometric(20, 0.4, 777);
  std::stringstream buf;
  save_edge_list(g, buf);
  const Graph back = load_edge_list(buf);
  REQUIRE(back.node_count() == g.node_count());
  REQUIRE(back.edge_count() == g.edge_count());
  for (int v = 0; v < g.node_count(); ++v) {
    const auto a = g.neighbors(v);
    const auto b = back.neighbors(v);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  }

  std::stringstream bad("3 1\n2 1\n");
  CHECK_THROWS(load_edge_list(bad));  // u < v violated
}

TEST_CASE("adjacency validation") {
  CHECK_THROWS(Graph::from_adjacency({{1}, {0}, {}}));    // disconnected
  CHECK_THROWS(Graph::from_adjacency({{0, 1}, {0}}));     // self-loop
  CHECK_THROWS(Graph::from_adjacency({{1}, {}}));         // asymmetric
  CHECK_THROWS(Graph::from_adjacency({{1, 1}, {0, 0}}));  // duplicates
}
