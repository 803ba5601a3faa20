#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "rep3net/chem/molecule.hpp"

namespace rep3net::desc {

/// Identifier of the native descriptor set. Bumped whenever a column is
/// added, removed, or redefined.
inline constexpr std::string_view kSchemaId = "rep3net-native-v1";

/// Column names of the native descriptor set, in output order.
std::span<const std::string_view> descriptor_names();

struct DescriptorVector {
  std::vector<double> values;
  std::string_view schema_id = kSchemaId;
};

/// Every descriptor is a total function of the hydrogen-suppressed graph.
DescriptorVector compute_descriptors(const chem::Molecule& mol);

// Individual descriptors, exposed for testing and reuse.
double molecular_weight(const chem::Molecule& mol);
double topological_polar_surface_area(const chem::Molecule& mol);

struct CrippenContribution {
  double logp = 0.0;
  double mr = 0.0;
};
/// Wildman-Crippen atom-typed logP and molar refractivity (hydrogens
/// included through their parent atom).
CrippenContribution crippen(const chem::Molecule& mol);

/// All-pairs topological distances (BFS); unreachable pairs are -1.
std::vector<std::vector<int>> distance_matrix(const chem::Molecule& mol);

double wiener_index(const chem::Molecule& mol);
int rotatable_bonds(const chem::Molecule& mol);
int aromatic_ring_count(const chem::Molecule& mol);

}  // namespace rep3net::desc
