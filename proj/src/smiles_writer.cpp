#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <tuple>

#include "rep3net/chem/elements.hpp"
#include "rep3net/chem/smiles.hpp"

namespace rep3net::chem {

namespace {

// Replaces arbitrary comparable keys by dense ranks 0..k-1.
template <class Key>
std::vector<int> dense_ranks(const std::vector<Key>& keys) {
  std::vector<int> order(keys.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return keys[a] < keys[b]; });
  std::vector<int> ranks(keys.size());
  int rank = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i > 0 && keys[order[i - 1]] < keys[order[i]]) ++rank;
    ranks[order[i]] = rank;
  }
  return ranks;
}

int count_classes(const std::vector<int>& ranks) {
  return ranks.empty() ? 0 : *std::max_element(ranks.begin(), ranks.end()) + 1;
}

std::vector<int> refine(const Molecule& mol, std::vector<int> ranks) {
  const int n = mol.num_atoms();
  int classes = count_classes(ranks);
  while (true) {
    std::vector<std::pair<int, std::vector<std::pair<int, int>>>> keys(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) {
      keys[a].first = ranks[a];
      for (const Neighbor& nb : mol.neighbors(a)) {
        keys[a].second.emplace_back(ranks[nb.atom], static_cast<int>(mol.bond(nb.bond).order));
      }
      std::sort(keys[a].second.begin(), keys[a].second.end());
    }
    std::vector<int> next = dense_ranks(keys);
    const int next_classes = count_classes(next);
    ranks = std::move(next);
    if (next_classes == classes) break;
    classes = next_classes;
  }
  return ranks;
}

std::string bond_symbol(const Molecule& mol, int bond) {
  const Bond& b = mol.bond(bond);
  switch (b.order) {
    case BondOrder::kAromatic: return "";
    case BondOrder::kDouble: return "=";
    case BondOrder::kTriple: return "#";
    case BondOrder::kSingle:
      return (mol.atom(b.begin).aromatic && mol.atom(b.end).aromatic) ? "-" : "";
  }
  return "";
}

std::string atom_text(const Molecule& mol, int index) {
  const Atom& a = mol.atom(index);
  std::vector<BondOrder> orders;
  for (const Neighbor& nb : mol.neighbors(index)) orders.push_back(mol.bond(nb.bond).order);
  std::string symbol(a.symbol());
  if (a.aromatic) symbol[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(symbol[0])));

  const bool unbracketed_aromatic_ok = !a.aromatic || symbol == "b" || symbol == "c" || symbol == "n" ||
                                       symbol == "o" || symbol == "p" || symbol == "s";
  const bool plain = is_organic_subset(a.symbol()) && unbracketed_aromatic_ok && a.formal_charge == 0 &&
                     a.isotope == 0 && default_implicit_h(a.atomic_number, a.aromatic, orders) == a.total_h();
  if (plain) return symbol;

  std::string out = "[";
  if (a.isotope > 0) out += std::to_string(a.isotope);
  out += symbol;
  if (a.total_h() == 1) out += "H";
  if (a.total_h() > 1) out += "H" + std::to_string(a.total_h());
  if (a.formal_charge != 0) {
    out += a.formal_charge > 0 ? "+" : "-";
    if (std::abs(a.formal_charge) > 1) out += std::to_string(std::abs(a.formal_charge));
  }
  out += "]";
  return out;
}

}  // namespace

std::vector<int> canonical_ranks(const Molecule& mol) {
  const int n = mol.num_atoms();
  using Invariant = std::tuple<int, int, int, int, int, int>;
  std::vector<Invariant> initial(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) {
    const Atom& atom = mol.atom(a);
    initial[a] = {atom.atomic_number, atom.degree, atom.formal_charge, atom.total_h(), atom.aromatic ? 1 : 0,
                  atom.isotope};
  }
  std::vector<int> ranks = refine(mol, dense_ranks(initial));
  // Break remaining ties: the lowest-index atom of the first tied class is
  // promoted ahead of its class, then ranks are refined again.
  while (count_classes(ranks) < n) {
    std::vector<int> class_size(static_cast<std::size_t>(n), 0);
    for (int r : ranks) ++class_size[r];
    int tied_rank = 0;
    while (class_size[tied_rank] < 2) ++tied_rank;
    int chosen = -1;
    for (int a = 0; a < n; ++a) {
      if (ranks[a] == tied_rank) {
        chosen = a;
        break;
      }
    }
    std::vector<int> split(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) split[a] = 2 * ranks[a] + ((ranks[a] == tied_rank && a != chosen) ? 1 : 0);
    ranks = refine(mol, dense_ranks(split));
  }
  return ranks;
}

std::string canonical_smiles(const Molecule& mol) {
  const int n = mol.num_atoms();
  if (n == 0) return "";
  const std::vector<int> ranks = canonical_ranks(mol);

  auto sorted_neighbors = [&](int atom) {
    std::vector<Neighbor> nbs(mol.neighbors(atom).begin(), mol.neighbors(atom).end());
    std::sort(nbs.begin(), nbs.end(), [&](const Neighbor& x, const Neighbor& y) { return ranks[x.atom] < ranks[y.atom]; });
    return nbs;
  };

  // Pass 1: depth-first spanning tree, recording ring-closure bonds.
  std::vector<bool> visited(static_cast<std::size_t>(n), false), closure_bond(static_cast<std::size_t>(mol.num_bonds()), false);
  std::vector<std::vector<Neighbor>> children(static_cast<std::size_t>(n));
  std::vector<std::vector<std::pair<int, int>>> opens(static_cast<std::size_t>(n)), closes(static_cast<std::size_t>(n));
  std::function<void(int, int)> discover = [&](int u, int parent_bond) {
    visited[u] = true;
    for (const Neighbor& nb : sorted_neighbors(u)) {
      if (nb.bond == parent_bond) continue;
      if (visited[nb.atom]) {
        if (!closure_bond[nb.bond]) {
          closure_bond[nb.bond] = true;
          opens[nb.atom].emplace_back(u, nb.bond);
          closes[u].emplace_back(nb.atom, nb.bond);
        }
      } else {
        children[u].push_back(nb);
        discover(nb.atom, nb.bond);
      }
    }
  };

  std::vector<int> by_rank(static_cast<std::size_t>(n));
  std::iota(by_rank.begin(), by_rank.end(), 0);
  std::sort(by_rank.begin(), by_rank.end(), [&](int a, int b) { return ranks[a] < ranks[b]; });
  std::vector<int> roots;
  for (int a : by_rank) {
    if (!visited[a]) {
      roots.push_back(a);
      discover(a, -1);
    }
  }

  // Pass 2: emit, allocating the lowest free ring digit at each opening.
  std::string out;
  std::vector<bool> digit_used(100, false);
  std::map<int, int> bond_digit;
  auto digit_text = [](int d) { return d < 10 ? std::to_string(d) : "%" + std::to_string(d); };
  std::function<void(int)> emit = [&](int u) {
    out += atom_text(mol, u);
    auto by_partner_rank = [&](const std::pair<int, int>& x, const std::pair<int, int>& y) {
      return ranks[x.first] < ranks[y.first];
    };
    std::sort(closes[u].begin(), closes[u].end(), by_partner_rank);
    std::sort(opens[u].begin(), opens[u].end(), by_partner_rank);
    for (const auto& [partner, bond] : closes[u]) out += digit_text(bond_digit.at(bond));
    for (const auto& [partner, bond] : opens[u]) {
      int d = 1;
      while (digit_used[d]) ++d;
      digit_used[d] = true;
      bond_digit[bond] = d;
      out += bond_symbol(mol, bond) + digit_text(d);
    }
    for (const auto& [partner, bond] : closes[u]) digit_used[bond_digit.at(bond)] = false;
    for (std::size_t i = 0; i < children[u].size(); ++i) {
      const Neighbor& child = children[u][i];
      const bool last = i + 1 == children[u].size();
      if (!last) out += "(";
      out += bond_symbol(mol, child.bond);
      emit(child.atom);
      if (!last) out += ")";
    }
  };
  for (std::size_t r = 0; r < roots.size(); ++r) {
    if (r > 0) out += ".";
    emit(roots[r]);
  }
  return out;
}

std::string canonicalize(std::string_view text) { return canonical_smiles(parse_smiles(text)); }

}  // namespace rep3net::chem
