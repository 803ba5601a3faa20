#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <set>

#include "oracles.hpp"
#include "rep3net/chem/smiles.hpp"
#include "rep3net/error.hpp"
#include "rep3net/graph/molgraph.hpp"

using namespace rep3net;
using namespace rep3net::graph;

namespace {

float block_sum(const nn::Tensor& f, std::size_t row, std::size_t offset, std::size_t width) {
  float s = 0;
  for (std::size_t c = offset; c < offset + width; ++c) s += f(row, c);
  return s;
}

}  // namespace

TEST(MolGraph, WidthIs74) {
  EXPECT_EQ(43u + 11 + 7 + 1 + 1 + 5 + 1 + 5, kAtomFeatureWidth);
  EXPECT_EQ(kTotalHOffset + 5, kAtomFeatureWidth);
}

TEST(MolGraph, Methane) {
  const auto g = build_graph(chem::parse_smiles("C"));
  ASSERT_EQ(g.n, 1);
  EXPECT_TRUE(g.edges.empty());
  EXPECT_EQ(g.node_features(0, kElementOffset + 0), 1.0f);
  EXPECT_EQ(g.node_features(0, kDegreeOffset + 0), 1.0f);
  EXPECT_EQ(g.node_features(0, kTotalHOffset + 4), 1.0f);
  EXPECT_EQ(g.node_features(0, kHybridizationOffset + 2), 1.0f);
}

TEST(MolGraph, Benzene) {
  const auto g = build_graph(chem::parse_smiles("c1ccccc1"));
  ASSERT_EQ(g.n, 6);
  EXPECT_EQ(g.edges.size(), 6u);
  for (std::size_t v = 0; v < 6; ++v) {
    EXPECT_EQ(g.node_features(v, kAromaticColumn), 1.0f);
    EXPECT_EQ(g.node_features(v, kDegreeOffset + 2), 1.0f);
    EXPECT_EQ(g.node_features(v, kHybridizationOffset + 1), 1.0f);
    EXPECT_EQ(g.node_features(v, kTotalHOffset + 1), 1.0f);
    EXPECT_EQ(g.degrees[v], 2);
  }
}

TEST(MolGraph, ChargeAndUnknownElement) {
  const auto g = build_graph(chem::parse_smiles("C[N+](C)(C)C"));
  EXPECT_EQ(g.node_features(1, kChargeColumn), 1.0f);
  const auto h = build_graph(chem::parse_smiles("[Ge](C)(C)(C)C"));
  EXPECT_EQ(block_sum(h.node_features, 0, kElementOffset, 43), 1.0f);
  // Elements outside the vocabulary leave the block empty.
  const auto x = build_graph(chem::parse_smiles("[Xe]"));
  EXPECT_EQ(block_sum(x.node_features, 0, kElementOffset, 43), 0.0f);
}

TEST(MolGraph, OneHotBlocksSumToOneOnCorpus) {
  const auto t = oracle::read_table(oracle::data_path("parser_reference.csv"));
  for (const auto& row : t.rows) {
    const auto g = build_graph(chem::parse_smiles(row[0]));
    ASSERT_EQ(g.node_features.cols, kAtomFeatureWidth);
    std::set<std::pair<int, int>> seen;
    for (auto [a, b] : g.edges) {
      EXPECT_NE(a, b);
      EXPECT_TRUE(seen.emplace(std::min(a, b), std::max(a, b)).second);
    }
    for (std::size_t v = 0; v < static_cast<std::size_t>(g.n); ++v) {
      EXPECT_EQ(block_sum(g.node_features, v, kElementOffset, 43), 1.0f) << row[0];
      EXPECT_EQ(block_sum(g.node_features, v, kDegreeOffset, 11), 1.0f) << row[0];
      EXPECT_EQ(block_sum(g.node_features, v, kImplicitValenceOffset, 7), 1.0f) << row[0];
      EXPECT_LE(block_sum(g.node_features, v, kHybridizationOffset, 5), 1.0f) << row[0];
      EXPECT_EQ(block_sum(g.node_features, v, kTotalHOffset, 5), 1.0f) << row[0];
      EXPECT_EQ(g.node_features(v, kRadicalColumn), 0.0f);
    }
  }
}

TEST(MolGraph, PermutationMovesRowsAndEdgesConsistently) {
  const auto m = chem::parse_smiles("CC(C)NCC(O)COc1ccc(Cl)c2ccccc12");
  const auto g = build_graph(m);
  std::vector<int> perm(static_cast<std::size_t>(m.num_atoms()));
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(1);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto h = build_graph(m.renumbered(perm));
  for (int v = 0; v < g.n; ++v) {
    for (std::size_t c = 0; c < kAtomFeatureWidth; ++c) {
      EXPECT_EQ(g.node_features(static_cast<std::size_t>(v), c), h.node_features(static_cast<std::size_t>(perm[v]), c));
    }
  }
  std::set<std::pair<int, int>> ge, he;
  for (auto [a, b] : g.edges) ge.emplace(std::min(perm[a], perm[b]), std::max(perm[a], perm[b]));
  for (auto [a, b] : h.edges) he.emplace(std::min(a, b), std::max(a, b));
  EXPECT_EQ(ge, he);
}

TEST(MolGraph, MakeGraphValidates) {
  EXPECT_THROW(make_graph(2, {{0, 0}}, nn::Tensor(2, 74)), ShapeError);
  EXPECT_THROW(make_graph(2, {{0, 2}}, nn::Tensor(2, 74)), ShapeError);
  EXPECT_THROW(make_graph(2, {{0, 1}, {1, 0}}, nn::Tensor(2, 74)), ShapeError);
  EXPECT_THROW(make_graph(3, {}, nn::Tensor(2, 74)), ShapeError);
}
