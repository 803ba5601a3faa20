#pragma once

#include <optional>
#include <span>
#include <string_view>

namespace rep3net::chem {

struct ElementInfo {
  std::string_view symbol;
  int atomic_number;
  double average_mass;
  // Allowed neutral valences in increasing order; empty for metals that take
  // no implicit hydrogens.
  std::span<const int> valences;
};

/// Looks up an element by its (case-sensitive) symbol.
std::optional<ElementInfo> find_element(std::string_view symbol);

/// Looks up an element by atomic number. Throws std::out_of_range if the
/// element is not in the table.
const ElementInfo& element(int atomic_number);

/// Mass of a hydrogen atom using the same table as every other element.
double hydrogen_mass();

/// Members of the SMILES organic subset may appear without brackets.
bool is_organic_subset(std::string_view symbol);

/// Elements that may be written in lowercase (aromatic) form.
bool can_be_aromatic(int atomic_number);

}  // namespace rep3net::chem
