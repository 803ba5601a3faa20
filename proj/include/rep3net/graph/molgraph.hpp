#pragma once

#include <array>
#include <string_view>
#include <utility>
#include <vector>

#include "rep3net/chem/molecule.hpp"
#include "rep3net/nn/tensor.hpp"

namespace rep3net::graph {

inline constexpr std::size_t kAtomFeatureWidth = 74;

/// Element vocabulary of the one-hot block, in column order. Elements not
/// listed leave the whole block at zero.
inline constexpr std::array<std::string_view, 43> kElementVocabulary = {
    "C",  "N",  "O",  "S",  "F",  "Si", "P",  "Cl", "Br", "Mg", "Na", "Ca", "Fe", "As", "Al",
    "I",  "B",  "V",  "K",  "Tl", "Yb", "Sb", "Sn", "Ag", "Pd", "Co", "Se", "Ti", "Zn", "H",
    "Li", "Ge", "Cu", "Au", "Ni", "Cd", "In", "Mn", "Zr", "Cr", "Pt", "Hg", "Pb"};

// Column offsets of each block within a feature row.
inline constexpr std::size_t kElementOffset = 0;
inline constexpr std::size_t kDegreeOffset = 43;          // degree 0..10
inline constexpr std::size_t kImplicitValenceOffset = 54;  // 0..6
inline constexpr std::size_t kChargeColumn = 61;
inline constexpr std::size_t kRadicalColumn = 62;
inline constexpr std::size_t kHybridizationOffset = 63;  // SP, SP2, SP3, SP3D, SP3D2
inline constexpr std::size_t kAromaticColumn = 68;
inline constexpr std::size_t kTotalHOffset = 69;  // 0..4

struct MolecularGraph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;  // undirected, each pair once, no self-loops
  nn::Tensor node_features;                // n x 74
  std::vector<int> degrees;
  std::vector<std::vector<int>> neighbors;
};

MolecularGraph build_graph(const chem::Molecule& mol);

/// Builds a graph from an explicit edge list and feature matrix; used for
/// synthetic graphs in tests. Throws ShapeError on bad endpoints or loops.
MolecularGraph make_graph(int n, std::vector<std::pair<int, int>> edges, nn::Tensor node_features);

}  // namespace rep3net::graph
