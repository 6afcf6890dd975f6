#include "topology.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <random>
#include <string>

#include "errors.hpp"

namespace hkcs {

namespace {

void require_size(int n) {
  if (n < 2) throw Error(ErrorKind::Config, "a digraph needs at least 2 agents, got " + std::to_string(n));
}

}  // namespace

Digraph Digraph::complete(int n) {
  require_size(n);
  std::vector<std::uint8_t> chi(static_cast<std::size_t>(n) * n, 1);
  for (int i = 0; i < n; ++i) chi[static_cast<std::size_t>(i) * n + i] = 0;
  return Digraph(n, std::move(chi));
}

Digraph Digraph::ring(int n) {
  require_size(n);
  std::vector<std::uint8_t> chi(static_cast<std::size_t>(n) * n, 0);
  for (int i = 0; i < n; ++i) chi[static_cast<std::size_t>(i) * n + (i + 1) % n] = 1;
  return Digraph(n, std::move(chi));
}

Digraph Digraph::from_matrix(const std::vector<std::vector<int>>& rows) {
  const int n = static_cast<int>(rows.size());
  if (n < 2) throw Error(ErrorKind::InvalidMatrix, "adjacency matrix must be at least 2x2");
  std::vector<std::uint8_t> chi(static_cast<std::size_t>(n) * n, 0);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != n)
      throw Error(ErrorKind::InvalidMatrix, "adjacency matrix row " + std::to_string(i) + " has wrong length");
    for (int j = 0; j < n; ++j) {
      const int v = rows[i][j];
      if (v != 0 && v != 1)
        throw Error(ErrorKind::InvalidMatrix, "adjacency entries must be 0 or 1");
      if (i == j && v != 0)
        throw Error(ErrorKind::InvalidMatrix, "self loop at vertex " + std::to_string(i));
      chi[static_cast<std::size_t>(i) * n + j] = static_cast<std::uint8_t>(v);
    }
  }
  return Digraph(n, std::move(chi));
}

Digraph Digraph::random(int n, std::uint64_t seed, double edge_prob) {
  require_size(n);
  if (!(edge_prob > 0.0 && edge_prob <= 1.0))
    throw Error(ErrorKind::Config, "edge_prob must lie in (0, 1]");
  std::mt19937_64 rng(seed);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::uint8_t> chi(static_cast<std::size_t>(n) * n, 0);
  for (int k = 0; k < n; ++k) {
    chi[static_cast<std::size_t>(order[k]) * n + order[(k + 1) % n]] = 1;
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      // Draw for every off-diagonal pair so the stream does not depend on the ring.
      if (i == j) continue;
      if (unit(rng) < edge_prob) chi[static_cast<std::size_t>(i) * n + j] = 1;
    }
  }
  return Digraph(n, std::move(chi));
}

std::vector<std::vector<int>> Digraph::matrix() const {
  std::vector<std::vector<int>> rows(n_, std::vector<int>(n_, 0));
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) rows[i][j] = adjacent(i, j) ? 1 : 0;
  return rows;
}

int Digraph::arc_count() const {
  return static_cast<int>(std::count(chi_.begin(), chi_.end(), std::uint8_t{1}));
}

DistanceMatrix distances(const Digraph& g) {
  const int n = g.size();
  DistanceMatrix dist(n, std::vector<std::optional<int>>(n));
  for (int source = 0; source < n; ++source) {
    auto& row = dist[source];
    row[source] = 0;
    std::queue<int> frontier;
    frontier.push(source);
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop();
      for (int w = 0; w < n; ++w) {
        if (g.adjacent(u, w) && !row[w]) {
          row[w] = *row[u] + 1;
          frontier.push(w);
        }
      }
    }
  }
  return dist;
}

bool strongly_connected(const Digraph& g) {
  for (const auto& row : distances(g))
    for (const auto& d : row)
      if (!d) return false;
  return true;
}

NeighborSummary neighbor_summary(const Digraph& g) {
  const int n = g.size();
  NeighborSummary summary;
  summary.dist = distances(g);
  summary.neighbor_sets.resize(n);
  summary.cardinalities.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j)
      if (g.adjacent(i, j)) summary.neighbor_sets[i].push_back(j);
    summary.cardinalities[i] = static_cast<int>(summary.neighbor_sets[i].size());
  }
  int gamma = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const auto& d = summary.dist[i][j];
      if (!d)
        throw Error(ErrorKind::DepthUndefined, "digraph is not strongly connected: vertex " +
                                                   std::to_string(j) + " unreachable from " +
                                                   std::to_string(i));
      gamma = std::max(gamma, *d);
    }
  }
  summary.depth = gamma;
  return summary;
}

int depth(const Digraph& g) { return neighbor_summary(g).depth; }

}  // namespace hkcs
