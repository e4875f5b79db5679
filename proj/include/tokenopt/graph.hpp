#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace tokenopt {

// Undirected connected graph over nodes 0..n-1. Adjacency lists are sorted,
// free of self-loops and duplicates; immutable after construction.
class Graph {
 public:
  static Graph from_adjacency(std::vector<std::vector<int>> adjacency);

  int node_count() const { return n_; }
  std::int64_t edge_count() const { return edges_; }
  std::span<const int> neighbors(int v) const { return adjacency_[v]; }
  int degree(int v) const { return static_cast<int>(adjacency_[v].size()); }
  int max_degree() const;
  bool is_regular() const;

 private:
  Graph(int n, std::int64_t edges, std::vector<std::vector<int>> adjacency)
      : n_(n), edges_(edges), adjacency_(std::move(adjacency)) {}

  int n_ = 0;
  std::int64_t edges_ = 0;
  std::vector<std::vector<int>> adjacency_;
};

Graph build_cycle(int n);
Graph build_torus(int side, int dim);
Graph build_complete(int n);

// Nodes drawn i.i.d. uniform on [0,1]^2 from the seeded generator; an edge
// joins two nodes iff their Euclidean distance is below `radius`. Disconnected
// draws are rejected and redrawn, up to `max_attempts` fresh attempts.
Graph build_random_geometric(int n, double radius, std::uint64_t seed, int max_attempts = 1000);

// Longest shortest-path length over all pairs, by one BFS per node.
int diameter(const Graph& g);

bool is_connected(const Graph& g);

// Edge-list text format: first line "n m", then m lines "u v" with u < v.
void save_edge_list(const Graph& g, std::ostream& out);
void save_edge_list(const Graph& g, const std::string& path);
Graph load_edge_list(std::istream& in);
Graph load_edge_list(const std::string& path);

}  // namespace tokenopt
