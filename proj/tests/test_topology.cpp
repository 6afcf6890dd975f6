#include <gtest/gtest.h>

#include <random>

#include "errors.hpp"
#include "oracles.hpp"
#include "topology.hpp"

using namespace hkcs;

TEST(Digraph, CompleteIsStronglyConnected) {
  EXPECT_TRUE(strongly_connected(Digraph::complete(4)));
  EXPECT_EQ(Digraph::complete(2).matrix(), (oracle::Matrix{{0, 1}, {1, 0}}));
}

TEST(Digraph, OneWayPairIsNotStronglyConnected) {
  const Digraph g = Digraph::from_matrix({{0, 1}, {0, 0}});
  EXPECT_FALSE(strongly_connected(g));
  EXPECT_THROW(depth(g), Error);
  try {
    depth(g);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DepthUndefined);
  }
}

TEST(Digraph, RingArcsAndConnectivity) {
  const Digraph g = Digraph::ring(3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_EQ(g.adjacent(i, j), j == (i + 1) % 3);
  EXPECT_TRUE(strongly_connected(Digraph::ring(5)));
  EXPECT_TRUE(oracle::strongly_connected(Digraph::ring(5).matrix()));
}

TEST(Digraph, DepthOfCompleteAndRing) {
  const NeighborSummary s = neighbor_summary(Digraph::complete(3));
  EXPECT_EQ(s.depth, 1);
  for (int c : s.cardinalities) EXPECT_EQ(c, 2);
  EXPECT_EQ(depth(Digraph::ring(5)), 4);
  for (int n = 2; n <= 10; ++n) EXPECT_EQ(depth(Digraph::ring(n)), n - 1);
}

TEST(Digraph, RandomIsStronglyConnected) {
  const Digraph g = Digraph::random(6, 7, 0.3);
  EXPECT_TRUE(strongly_connected(g));
  EXPECT_TRUE(oracle::strongly_connected(g.matrix()));
  EXPECT_EQ(g, Digraph::random(6, 7, 0.3));
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Digraph r = Digraph::random(2 + seed % 7, seed, 0.05 + 0.1 * (seed % 10));
    EXPECT_TRUE(oracle::strongly_connected(r.matrix()));
  }
}

TEST(Digraph, RejectsMalformedMatrices) {
  auto kind_of = [](const oracle::Matrix& m) {
    try {
      Digraph::from_matrix(m);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Io;
  };
  EXPECT_EQ(kind_of({{1, 1}, {1, 0}}), ErrorKind::InvalidMatrix);
  EXPECT_EQ(kind_of({{0, 2}, {1, 0}}), ErrorKind::InvalidMatrix);
  EXPECT_EQ(kind_of({{0, 1, 0}, {1, 0}}), ErrorKind::InvalidMatrix);
}

TEST(Digraph, AgreesWithClosureOracle) {
  std::mt19937_64 rng(99);
  for (int k = 0; k < 300; ++k) {
    const int n = 2 + static_cast<int>(rng() % 5);
    const auto chi = oracle::random_matrix(rng, n);
    const Digraph g = Digraph::from_matrix(chi);
    ASSERT_EQ(strongly_connected(g), oracle::strongly_connected(chi));
    if (oracle::strongly_connected(chi)) {
      const int d = depth(g);
      EXPECT_EQ(d, *oracle::depth(chi));
      EXPECT_GE(d, 1);
      EXPECT_LE(d, n - 1);
    }
  }
}

TEST(Digraph, DistancesFollowArcs) {
  const DistanceMatrix d = distances(Digraph::ring(4));
  EXPECT_EQ(d[0][0], 0);
  EXPECT_EQ(d[0][1], 1);
  EXPECT_EQ(d[0][3], 3);
  EXPECT_EQ(d[3][0], 1);
  const DistanceMatrix one_way = distances(Digraph::from_matrix({{0, 1}, {0, 0}}));
  EXPECT_FALSE(one_way[1][0].has_value());
}
