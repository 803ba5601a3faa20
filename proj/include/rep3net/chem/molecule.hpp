#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rep3net::chem {

enum class BondOrder : std::uint8_t { kSingle = 1, kDouble = 2, kTriple = 3, kAromatic = 4 };

enum class Hybridization : std::uint8_t { kSP, kSP2, kSP3, kSP3D, kSP3D2, kOther };

/// Contribution of a bond to an atom's valence; aromatic bonds count as 1.5.
double valence_contribution(BondOrder order);

struct Atom {
  int atomic_number = 6;
  int formal_charge = 0;
  int isotope = 0;
  int explicit_h = 0;  // hydrogens written inside a bracket atom
  int implicit_h = 0;  // hydrogens derived from the valence model
  bool aromatic = false;
  bool in_ring = false;
  bool bracket = false;  // written as a bracket atom; such atoms never receive implicit H
  int degree = 0;        // heavy-atom neighbors == incident bonds
  Hybridization hybridization = Hybridization::kOther;

  int total_h() const { return explicit_h + implicit_h; }
  std::string_view symbol() const;

  friend bool operator==(const Atom&, const Atom&) = default;
};

struct Bond {
  int begin = 0;
  int end = 0;
  BondOrder order = BondOrder::kSingle;
  bool in_ring = false;

  int other(int atom) const { return atom == begin ? end : begin; }
  friend bool operator==(const Bond&, const Bond&) = default;
};

struct Neighbor {
  int atom;
  int bond;
};

/// An immutable molecular graph with hydrogens held implicitly on atoms.
/// Rings hold the smallest set of smallest rings as atom-index cycles in
/// traversal order.
class Molecule {
 public:
  Molecule() = default;
  /// Validates the structural invariants (bond endpoints, no duplicate
  /// edges, degrees, aromatic atoms in rings) and throws std::invalid_argument
  /// on violation.
  Molecule(std::vector<Atom> atoms, std::vector<Bond> bonds, std::vector<std::vector<int>> rings);

  std::span<const Atom> atoms() const { return atoms_; }
  std::span<const Bond> bonds() const { return bonds_; }
  const std::vector<std::vector<int>>& rings() const { return rings_; }
  const Atom& atom(int i) const { return atoms_[static_cast<std::size_t>(i)]; }
  const Bond& bond(int i) const { return bonds_[static_cast<std::size_t>(i)]; }
  int num_atoms() const { return static_cast<int>(atoms_.size()); }
  int num_bonds() const { return static_cast<int>(bonds_.size()); }

  std::span<const Neighbor> neighbors(int atom) const;
  /// Index of the bond joining a and b, or -1.
  int bond_between(int a, int b) const;
  int num_components() const;

  /// Returns the same molecule with atom i moved to position new_index[i].
  Molecule renumbered(std::span<const int> new_index) const;

 private:
  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<int>> rings_;
  std::vector<int> adjacency_offsets_;
  std::vector<Neighbor> adjacency_;
};

/// Molecular formula in Hill order, e.g. "C2H6O".
std::string molecular_formula(const Molecule& mol);

}  // namespace rep3net::chem
