#include "rep3net/graph/molgraph.hpp"

#include <algorithm>
#include <set>

namespace rep3net::graph {

namespace {

void one_hot(float* row, std::size_t offset, int value, int size) {
  if (value >= 0 && value < size) row[offset + static_cast<std::size_t>(value)] = 1.0f;
}

int element_column(std::string_view symbol) {
  for (std::size_t i = 0; i < kElementVocabulary.size(); ++i) {
    if (kElementVocabulary[i] == symbol) return static_cast<int>(i);
  }
  return -1;
}

int hybridization_column(chem::Hybridization h) {
  switch (h) {
    case chem::Hybridization::kSP: return 0;
    case chem::Hybridization::kSP2: return 1;
    case chem::Hybridization::kSP3: return 2;
    case chem::Hybridization::kSP3D: return 3;
    case chem::Hybridization::kSP3D2: return 4;
    case chem::Hybridization::kOther: return -1;
  }
  return -1;
}

}  // namespace

MolecularGraph make_graph(int n, std::vector<std::pair<int, int>> edges, nn::Tensor node_features) {
  nn::require(n >= 0 && node_features.rows == static_cast<std::size_t>(n), "graph: feature rows != node count");
  MolecularGraph g;
  g.n = n;
  g.degrees.assign(static_cast<std::size_t>(n), 0);
  g.neighbors.assign(static_cast<std::size_t>(n), {});
  std::set<std::pair<int, int>> seen;
  for (auto [a, b] : edges) {
    nn::require(a >= 0 && b >= 0 && a < n && b < n, "graph: edge endpoint out of range");
    nn::require(a != b, "graph: self-loop");
    nn::require(seen.emplace(std::min(a, b), std::max(a, b)).second, "graph: duplicate edge");
    ++g.degrees[a];
    ++g.degrees[b];
    g.neighbors[a].push_back(b);
    g.neighbors[b].push_back(a);
  }
  g.edges = std::move(edges);
  g.node_features = std::move(node_features);
  return g;
}

MolecularGraph build_graph(const chem::Molecule& mol) {
  const int n = mol.num_atoms();
  nn::Tensor features(static_cast<std::size_t>(n), kAtomFeatureWidth);
  for (int i = 0; i < n; ++i) {
    const chem::Atom& a = mol.atom(i);
    float* row = features.row(static_cast<std::size_t>(i));
    one_hot(row, kElementOffset, element_column(a.symbol()), 43);
    one_hot(row, kDegreeOffset, a.degree, 11);
    one_hot(row, kImplicitValenceOffset, a.implicit_h, 7);
    row[kChargeColumn] = static_cast<float>(a.formal_charge);
    row[kRadicalColumn] = 0.0f;
    one_hot(row, kHybridizationOffset, hybridization_column(a.hybridization), 5);
    row[kAromaticColumn] = a.aromatic ? 1.0f : 0.0f;
    one_hot(row, kTotalHOffset, a.total_h(), 5);
  }
  std::vector<std::pair<int, int>> edges;
  edges.reserve(static_cast<std::size_t>(mol.num_bonds()));
  for (const chem::Bond& b : mol.bonds()) edges.emplace_back(b.begin, b.end);
  return make_graph(n, std::move(edges), std::move(features));
}

}  // namespace rep3net::graph
