#pragma once

#include <span>
#include <utility>
#include <vector>

#include "rep3net/chem/molecule.hpp"

namespace rep3net::chem {

/// Smallest set of smallest rings of an undirected simple graph given as an
/// edge list. Each ring is returned as atoms in cycle order, rotated so the
/// smallest index comes first. The number of rings equals
/// edges - vertices + connected components.
std::vector<std::vector<int>> smallest_set_of_smallest_rings(int num_vertices,
                                                             std::span<const std::pair<int, int>> edges);

/// Ring perception on a parsed molecule.
std::vector<std::vector<int>> perceive_rings(const Molecule& mol);

}  // namespace rep3net::chem
