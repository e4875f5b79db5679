#include "tokenopt/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "tokenopt/rng.hpp"

namespace tokenopt {

Graph Graph::from_adjacency(std::vector<std::vector<int>> adjacency) {
  const int n = static_cast<int>(adjacency.size());
  if (n <= 0) throw std::invalid_argument("graph: node count must be positive");
  std::int64_t half_edges = 0;
  for (int v = 0; v < n; ++v) {
    auto& nbrs = adjacency[v];
    std::sort(nbrs.begin(), nbrs.end());
    if (std::adjacent_find(nbrs.begin(), nbrs.end()) != nbrs.end())
      throw std::invalid_argument("graph: duplicate edge");
    for (int w : nbrs) {
      if (w < 0 || w >= n) throw std::invalid_argument("graph: neighbor out of range");
      if (w == v) throw std::invalid_argument("graph: self-loop");
    }
    half_edges += static_cast<std::int64_t>(nbrs.size());
  }
  // symmetry check once every row is sorted
  for (int v = 0; v < n; ++v)
    for (int w : adjacency[v])
      if (!std::binary_search(adjacency[w].begin(), adjacency[w].end(), v))
        throw std::invalid_argument("graph: asymmetric adjacency");
  if (half_edges % 2 != 0) throw std::invalid_argument("graph: odd degree sum");
  Graph g(n, half_edges / 2, std::move(adjacency));
  if (!is_connected(g)) throw std::invalid_argument("graph: not connected");
  return g;
}

int Graph::max_degree() const {
  int d = 0;
  for (int v = 0; v < n_; ++v) d = std::max(d, degree(v));
  return d;
}

bool Graph::is_regular() const {
  for (int v = 1; v < n_; ++v)
    if (degree(v) != degree(0)) return false;
  return true;
}

bool is_connected(const Graph& g) {
  const int n = g.node_count();
  std::vector<char> seen(n, 0);
  std::deque<int> queue{0};
  seen[0] = 1;
  int reached = 1;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (int w : g.neighbors(v)) {
      if (!seen[w]) {
        seen[w] = 1;
        ++reached;
        queue.push_back(w);
      }
    }
  }
  return reached == n;
}

Graph build_cycle(int n) {
  if (n < 3) throw std::invalid_argument("build_cycle: n must be >= 3");
  std::vector<std::vector<int>> adj(n);
  for (int v = 0; v < n; ++v) {
    adj[v].push_back((v + 1) % n);
    adj[v].push_back((v + n - 1) % n);
  }
  return Graph::from_adjacency(std::move(adj));
}

Graph build_torus(int side, int dim) {
  if (side < 3) throw std::invalid_argument("build_torus: side must be >= 3");
  if (dim < 1) throw std::invalid_argument("build_torus: dim must be >= 1");
  std::int64_t n64 = 1;
  for (int k = 0; k < dim; ++k) {
    n64 *= side;
    if (n64 > 5000) throw std::invalid_argument("build_torus: side^dim exceeds the 5000-node cap");
  }
  const int n = static_cast<int>(n64);
  std::vector<std::vector<int>> adj(n);
  std::vector<std::int64_t> stride(dim, 1);
  for (int k = 1; k < dim; ++k) stride[k] = stride[k - 1] * side;
  for (int v = 0; v < n; ++v) {
    for (int k = 0; k < dim; ++k) {
      const int coord = static_cast<int>((v / stride[k]) % side);
      const int up = static_cast<int>(v + ((coord + 1) % side - coord) * stride[k]);
      const int down = static_cast<int>(v + ((coord + side - 1) % side - coord) * stride[k]);
      adj[v].push_back(up);
      adj[v].push_back(down);
    }
  }
  return Graph::from_adjacency(std::move(adj));
}

Graph build_complete(int n) {
  if (n < 2) throw std::invalid_argument("build_complete: n must be >= 2");
  std::vector<std::vector<int>> adj(n);
  for (int v = 0; v < n; ++v)
    for (int w = 0; w < n; ++w)
      if (w != v) adj[v].push_back(w);
  return Graph::from_adjacency(std::move(adj));
}

Graph build_random_geometric(int n, double radius, std::uint64_t seed, int max_attempts) {
  if (n < 1) throw std::invalid_argument("build_random_geometric: n must be >= 1");
  if (!(radius > 0.0) || radius > std::sqrt(2.0) + 1e-12)
    throw std::invalid_argument("build_random_geometric: radius must be in (0, sqrt(2)]");
  Rng rng(seed);
  const double r2 = radius * radius;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::vector<double> xs(n), ys(n);
    for (int v = 0; v < n; ++v) {
      xs[v] = rng.uniform01();
      ys[v] = rng.uniform01();
    }
    std::vector<std::vector<int>> adj(n);
    for (int v = 0; v < n; ++v) {
      for (int w = v + 1; w < n; ++w) {
        const double dx = xs[v] - xs[w];
        const double dy = ys[v] - ys[w];
        if (dx * dx + dy * dy < r2) {
          adj[v].push_back(w);
          adj[w].push_back(v);
        }
      }
    }
    try {
      return Graph::from_adjacency(std::move(adj));
    } catch (const std::invalid_argument&) {
      // disconnected draw; retry with fresh points
    }
  }
  throw std::runtime_error("build_random_geometric: no connected graph within attempt budget");
}

int diameter(const Graph& g) {
  const int n = g.node_count();
  int best = 0;
  std::vector<int> dist(n);
  std::deque<int> queue;
  for (int src = 0; src < n; ++src) {
    std::fill(dist.begin(), dist.end(), -1);
    dist[src] = 0;
    queue.assign(1, src);
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      for (int w : g.neighbors(v)) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          best = std::max(best, dist[w]);
          queue.push_back(w);
        }
      }
    }
  }
  return best;
}

void save_edge_list(const Graph& g, std::ostream& out) {
  out << g.node_count() << ' ' << g.edge_count() << '\n';
  for (int v = 0; v < g.node_count(); ++v)
    for (int w : g.neighbors(v))
      if (v < w) out << v << ' ' << w << '\n';
}

void save_edge_list(const Graph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_edge_list: cannot open " + path);
  save_edge_list(g, out);
}

Graph load_edge_list(std::istream& in) {
  int n = 0;
  std::int64_t m = 0;
  if (!(in >> n >> m)) throw std::runtime_error("load_edge_list: bad header");
  if (n <= 0 || m < 0) throw std::runtime_error("load_edge_list: invalid header values");
  std::vector<std::vector<int>> adj(n);
  for (std::int64_t e = 0; e < m; ++e) {
    int u = 0, v = 0;
    if (!(in >> u >> v)) throw std::runtime_error("load_edge_list: truncated edge list");
    if (u < 0 || v < 0 || u >= n || v >= n || u >= v)
      throw std::runtime_error("load_edge_list: edge must satisfy 0 <= u < v < n");
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  return Graph::from_adjacency(std::move(adj));
}

Graph load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_edge_list: cannot open " + path);
  return load_edge_list(in);
}

}  // namespace tokenopt
