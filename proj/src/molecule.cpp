#include "rep3net/chem/molecule.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

#include "rep3net/chem/elements.hpp"

namespace rep3net::chem {

double valence_contribution(BondOrder order) {
  switch (order) {
    case BondOrder::kSingle: return 1.0;
    case BondOrder::kDouble: return 2.0;
    case BondOrder::kTriple: return 3.0;
    case BondOrder::kAromatic: return 1.5;
  }
  return 1.0;
}

std::string_view Atom::symbol() const { return element(atomic_number).symbol; }

Molecule::Molecule(std::vector<Atom> atoms, std::vector<Bond> bonds, std::vector<std::vector<int>> rings)
    : atoms_(std::move(atoms)), bonds_(std::move(bonds)), rings_(std::move(rings)) {
  const int n = num_atoms();
  std::vector<int> degree(static_cast<std::size_t>(n), 0);
  std::set<std::pair<int, int>> seen;
  for (const Bond& b : bonds_) {
    if (b.begin < 0 || b.end < 0 || b.begin >= n || b.end >= n) {
      throw std::invalid_argument("bond endpoint out of range");
    }
    if (b.begin == b.end) throw std::invalid_argument("self-loop bond");
    if (!seen.emplace(std::min(b.begin, b.end), std::max(b.begin, b.end)).second) {
      throw std::invalid_argument("duplicate bond");
    }
    if (b.order == BondOrder::kAromatic && (!atoms_[b.begin].aromatic || !atoms_[b.end].aromatic)) {
      throw std::invalid_argument("aromatic bond between non-aromatic atoms");
    }
    ++degree[b.begin];
    ++degree[b.end];
  }
  for (int i = 0; i < n; ++i) {
    const Atom& a = atoms_[i];
    if (a.degree != degree[i]) throw std::invalid_argument("atom degree does not match bond list");
    if (a.implicit_h < 0 || a.explicit_h < 0) throw std::invalid_argument("negative hydrogen count");
    if (a.aromatic && !a.in_ring) throw std::invalid_argument("aromatic atom outside a ring");
  }
  for (const auto& ring : rings_) {
    for (int idx : ring) {
      if (idx < 0 || idx >= n) throw std::invalid_argument("ring atom out of range");
    }
  }

  adjacency_offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 0; i < n; ++i) adjacency_offsets_[i + 1] = adjacency_offsets_[i] + degree[i];
  adjacency_.resize(static_cast<std::size_t>(adjacency_offsets_[n]));
  std::vector<int> fill(adjacency_offsets_.begin(), adjacency_offsets_.end() - 1);
  for (int bi = 0; bi < num_bonds(); ++bi) {
    const Bond& b = bonds_[bi];
    adjacency_[fill[b.begin]++] = {b.end, bi};
    adjacency_[fill[b.end]++] = {b.begin, bi};
  }
}

std::span<const Neighbor> Molecule::neighbors(int atom) const {
  const auto begin = static_cast<std::size_t>(adjacency_offsets_[atom]);
  const auto end = static_cast<std::size_t>(adjacency_offsets_[atom + 1]);
  return std::span<const Neighbor>(adjacency_).subspan(begin, end - begin);
}

int Molecule::bond_between(int a, int b) const {
  for (const Neighbor& nb : neighbors(a)) {
    if (nb.atom == b) return nb.bond;
  }
  return -1;
}

int Molecule::num_components() const {
  const int n = num_atoms();
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  int components = n;
  for (const Bond& b : bonds_) {
    int ra = find(b.begin), rb = find(b.end);
    if (ra != rb) {
      parent[ra] = rb;
      --components;
    }
  }
  return components;
}

Molecule Molecule::renumbered(std::span<const int> new_index) const {
  const int n = num_atoms();
  if (static_cast<int>(new_index.size()) != n) throw std::invalid_argument("permutation size mismatch");
  std::vector<Atom> atoms(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) atoms[new_index[i]] = atoms_[i];
  std::vector<Bond> bonds = bonds_;
  for (Bond& b : bonds) {
    b.begin = new_index[b.begin];
    b.end = new_index[b.end];
  }
  std::vector<std::vector<int>> rings = rings_;
  for (auto& ring : rings) {
    for (int& idx : ring) idx = new_index[idx];
  }
  return Molecule(std::move(atoms), std::move(bonds), std::move(rings));
}

std::string molecular_formula(const Molecule& mol) {
  std::map<std::string, int> counts;
  int hydrogens = 0;
  bool has_carbon = false;
  for (const Atom& a : mol.atoms()) {
    if (a.atomic_number == 1) {
      ++hydrogens;
    } else {
      ++counts[std::string(a.symbol())];
      has_carbon = has_carbon || a.atomic_number == 6;
    }
    hydrogens += a.total_h();
  }
  std::string out;
  auto emit = [&](const std::string& sym, int count) {
    if (count == 0) return;
    out += sym;
    if (count > 1) out += std::to_string(count);
  };
  if (has_carbon) {
    emit("C", counts["C"]);
    emit("H", hydrogens);
    counts.erase("C");
    for (const auto& [sym, count] : counts) emit(sym, count);
  } else {
    counts["H"] += hydrogens;
    for (const auto& [sym, count] : counts) emit(sym, count);
  }
  int charge = 0;
  for (const Atom& a : mol.atoms()) charge += a.formal_charge;
  if (charge != 0) {
    out += charge > 0 ? '+' : '-';
    if (std::abs(charge) > 1) out += std::to_string(std::abs(charge));
  }
  return out;
}

}  // namespace rep3net::chem
