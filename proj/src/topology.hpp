#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace hkcs {

// Interaction digraph. Row i lists the agents that influence agent i:
// chi(i, j) == 1 means j transmits information to i, i.e. (i, j) is an arc
// and j belongs to the neighbour set of i. Self loops are never present.
class Digraph {
 public:
  static Digraph complete(int n);
  // chi(i, (i + 1) mod n) = 1.
  static Digraph ring(int n);
  // Throws InvalidMatrix on self loops, non-binary entries or a ragged shape.
  static Digraph from_matrix(const std::vector<std::vector<int>>& chi);
  // A directed ring over a seeded permutation of the vertices plus extra arcs
  // drawn independently with probability edge_prob; always strongly connected.
  static Digraph random(int n, std::uint64_t seed, double edge_prob);

  int size() const noexcept { return n_; }
  bool adjacent(int i, int j) const { return chi_[static_cast<std::size_t>(i) * n_ + j] != 0; }
  std::vector<std::vector<int>> matrix() const;
  int arc_count() const;

  bool operator==(const Digraph&) const = default;

 private:
  Digraph(int n, std::vector<std::uint8_t> chi) : n_(n), chi_(std::move(chi)) {}

  int n_ = 0;
  std::vector<std::uint8_t> chi_;
};

// Shortest path lengths along arcs (i, j); nullopt marks "unreachable".
using DistanceMatrix = std::vector<std::vector<std::optional<int>>>;

struct NeighborSummary {
  std::vector<std::vector<int>> neighbor_sets;
  std::vector<int> cardinalities;
  int depth = 0;
  DistanceMatrix dist;
};

DistanceMatrix distances(const Digraph& g);
bool strongly_connected(const Digraph& g);
// Throws DepthUndefined when g is not strongly connected.
NeighborSummary neighbor_summary(const Digraph& g);
int depth(const Digraph& g);

}  // namespace hkcs
