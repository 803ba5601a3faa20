#include "rep3net/descriptors/descriptors.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "rep3net/chem/elements.hpp"

namespace rep3net::desc {

using chem::Atom;
using chem::Bond;
using chem::BondOrder;
using chem::Molecule;
using chem::Neighbor;

namespace {

constexpr std::string_view kNames[] = {
    "mol_weight",        "heavy_atom_count",     "hydrogen_count",    "count_C",
    "count_N",           "count_O",              "count_S",           "count_P",
    "count_F",           "count_Cl",             "count_Br",          "count_I",
    "heteroatom_count",  "ring_count",           "aromatic_ring_count", "aliphatic_ring_count",
    "heterocycle_count", "largest_ring_size",    "aromatic_atom_count", "rotatable_bonds",
    "hbd",               "hba",                  "formal_charge_sum", "fraction_csp3",
    "double_bond_count", "triple_bond_count",    "wiener_index",      "zagreb_m1",
    "zagreb_m2",         "chi0",                 "chi1",              "chi2",
    "kappa1",            "kappa2",               "kappa3",            "tpsa",
    "crippen_logp",      "crippen_mr",           "graph_radius",      "graph_diameter",
    "branching_count",   "balaban_j",            "mean_distance",     "halogen_count",
    "carbonyl_count",    "charged_atom_count",
};

struct BondCounts {
  int single = 0, double_ = 0, triple = 0, aromatic = 0;
};

BondCounts count_bonds(const Molecule& mol, int atom) {
  BondCounts c;
  for (const Neighbor& nb : mol.neighbors(atom)) {
    switch (mol.bond(nb.bond).order) {
      case BondOrder::kSingle: ++c.single; break;
      case BondOrder::kDouble: ++c.double_; break;
      case BondOrder::kTriple: ++c.triple; break;
      case BondOrder::kAromatic: ++c.aromatic; break;
    }
  }
  return c;
}

bool in_three_ring(const Molecule& mol, int atom) {
  for (const auto& ring : mol.rings()) {
    if (ring.size() == 3 && std::find(ring.begin(), ring.end(), atom) != ring.end()) return true;
  }
  return false;
}

// Ertl fragment contributions for nitrogen and oxygen (sulfur and phosphorus
// excluded). Returns a negative value when no fragment applies.
double tpsa_nitrogen(int nbrs, int h, int chg, const BondCounts& b, bool ring3) {
  if (nbrs == 1) {
    if (h == 0 && chg == 0 && b.triple == 1) return 23.79;
    if (h == 1 && chg == 0 && b.double_ == 1) return 23.85;
    if (h == 2 && chg == 0 && b.single == 1) return 26.02;
    if (h == 2 && chg == 1 && b.double_ == 1) return 25.59;
    if (h == 3 && chg == 1 && b.single == 1) return 27.64;
  } else if (nbrs == 2) {
    if (h == 0 && chg == 0 && b.single == 1 && b.double_ == 1) return 12.36;
    if (h == 0 && chg == 0 && b.triple == 1 && b.double_ == 1) return 13.60;
    if (h == 1 && chg == 0 && b.single == 2) return ring3 ? 21.94 : 12.03;
    if (h == 0 && chg == 1 && b.triple == 1 && b.single == 1) return 4.36;
    if (h == 1 && chg == 1 && b.double_ == 1 && b.single == 1) return 13.97;
    if (h == 2 && chg == 1 && b.single == 2) return 16.61;
    if (h == 0 && chg == 0 && b.aromatic == 2) return 12.89;
    if (h == 1 && chg == 0 && b.aromatic == 2) return 15.79;
    if (h == 1 && chg == 1 && b.aromatic == 2) return 14.14;
  } else if (nbrs == 3) {
    if (h == 0 && chg == 0 && b.single == 3) return ring3 ? 3.01 : 3.24;
    if (h == 0 && chg == 0 && b.single == 1 && b.double_ == 2) return 11.68;
    if (h == 0 && chg == 1 && b.single == 2 && b.double_ == 1) return 3.01;
    if (h == 1 && chg == 1 && b.single == 3) return 4.44;
    if (h == 0 && chg == 0 && b.aromatic == 3) return 4.41;
    if (h == 0 && chg == 0 && b.single == 1 && b.aromatic == 2) return 4.93;
    if (h == 0 && chg == 0 && b.double_ == 1 && b.aromatic == 2) return 8.39;
    if (h == 0 && chg == 1 && b.aromatic == 3) return 4.10;
    if (h == 0 && chg == 1 && b.single == 1 && b.aromatic == 2) return 3.88;
  } else if (nbrs == 4) {
    if (h == 0 && chg == 1 && b.single == 4) return 0.0;
  }
  return -1.0;
}

double tpsa_oxygen(int nbrs, int h, int chg, const BondCounts& b, bool ring3) {
  if (nbrs == 1) {
    if (h == 0 && chg == 0 && b.double_ == 1) return 17.07;
    if (h == 1 && chg == 0 && b.single == 1) return 20.23;
    if (h == 0 && chg == -1 && b.single == 1) return 23.06;
  } else if (nbrs == 2) {
    if (h == 0 && chg == 0 && b.single == 2) return ring3 ? 12.53 : 9.23;
    if (h == 0 && chg == 0 && b.aromatic == 2) return 13.14;
  }
  return -1.0;
}

int count_paths_of_length_two(const Molecule& mol) {
  int p = 0;
  for (const Atom& a : mol.atoms()) p += a.degree * (a.degree - 1) / 2;
  return p;
}

int count_paths_of_length_three(const Molecule& mol) {
  int p = 0;
  for (const Bond& b : mol.bonds()) {
    for (const Neighbor& u : mol.neighbors(b.begin)) {
      if (u.atom == b.end) continue;
      for (const Neighbor& x : mol.neighbors(b.end)) {
        if (x.atom != b.begin && x.atom != u.atom) ++p;
      }
    }
  }
  return p;
}

double chi2_index(const Molecule& mol) {
  double s = 0.0;
  for (int v = 0; v < mol.num_atoms(); ++v) {
    const auto nbs = mol.neighbors(v);
    for (std::size_t i = 0; i < nbs.size(); ++i) {
      for (std::size_t j = i + 1; j < nbs.size(); ++j) {
        s += 1.0 / std::sqrt(static_cast<double>(mol.atom(v).degree) * mol.atom(nbs[i].atom).degree *
                             mol.atom(nbs[j].atom).degree);
      }
    }
  }
  return s;
}

// Not part of a triple bond, not terminal, not CX3 or tert-butyl center.
bool rotor_end_allowed(const Molecule& mol, int atom) {
  const Atom& a = mol.atom(atom);
  if (a.degree <= 1) return false;
  int f = 0, cl = 0, br = 0, methyl = 0;
  for (const Neighbor& nb : mol.neighbors(atom)) {
    if (mol.bond(nb.bond).order == BondOrder::kTriple) return false;
    const Atom& o = mol.atom(nb.atom);
    f += o.atomic_number == 9;
    cl += o.atomic_number == 17;
    br += o.atomic_number == 35;
    methyl += o.atomic_number == 6 && !o.aromatic && o.total_h() == 3;
  }
  if (a.atomic_number == 6 && !a.aromatic && (f >= 3 || cl >= 3 || br >= 3 || methyl >= 3)) return false;
  return true;
}

bool is_aliphatic(const Atom& a, int z) { return a.atomic_number == z && !a.aromatic; }

// Trigonal carbon double-bonded to an aliphatic N/O/S (or to N+ when
// `cationic`) as in amides, esters, amidines.
bool is_acyl_like_carbon(const Molecule& mol, int atom, bool cationic) {
  const Atom& a = mol.atom(atom);
  if (!is_aliphatic(a, 6) || a.degree != 3) return false;
  for (const Neighbor& nb : mol.neighbors(atom)) {
    if (mol.bond(nb.bond).order != BondOrder::kDouble) continue;
    const Atom& o = mol.atom(nb.atom);
    if (cationic) {
      if (is_aliphatic(o, 7) && o.formal_charge == 1) return true;
    } else if (is_aliphatic(o, 7) || is_aliphatic(o, 8) || is_aliphatic(o, 16)) {
      return true;
    }
  }
  return false;
}

bool is_heteroatom_partner(const Molecule& mol, int atom, bool cationic) {
  const Atom& a = mol.atom(atom);
  if (cationic) return a.atomic_number == 7 && a.degree != 1;
  return a.atomic_number == 7 || is_aliphatic(a, 8) || (is_aliphatic(a, 16) && a.degree != 1);
}

// Atom sits on either side of an acyclic amide-like C-X bond; such atoms can
// only anchor a rotor from the other end of the bond.
bool amide_like(const Molecule& mol, int atom) {
  for (bool cationic : {false, true}) {
    for (const Neighbor& nb : mol.neighbors(atom)) {
      const Bond& b = mol.bond(nb.bond);
      if (b.order != BondOrder::kSingle || b.in_ring) continue;
      if (is_acyl_like_carbon(mol, atom, cationic) && is_heteroatom_partner(mol, nb.atom, cationic)) return true;
      if (is_heteroatom_partner(mol, atom, cationic) && is_acyl_like_carbon(mol, nb.atom, cationic)) return true;
    }
  }
  return false;
}

}  // namespace

std::span<const std::string_view> descriptor_names() { return kNames; }

double molecular_weight(const Molecule& mol) {
  double mw = 0.0;
  for (const Atom& a : mol.atoms()) {
    mw += chem::element(a.atomic_number).average_mass + a.total_h() * chem::hydrogen_mass();
  }
  return mw;
}

double topological_polar_surface_area(const Molecule& mol) {
  double tpsa = 0.0;
  for (int i = 0; i < mol.num_atoms(); ++i) {
    const Atom& a = mol.atom(i);
    if (a.atomic_number != 7 && a.atomic_number != 8) continue;
    const BondCounts b = count_bonds(mol, i);
    const int h = a.total_h();
    const bool ring3 = in_three_ring(mol, i);
    double c = a.atomic_number == 7 ? tpsa_nitrogen(a.degree, h, a.formal_charge, b, ring3)
                                    : tpsa_oxygen(a.degree, h, a.formal_charge, b, ring3);
    if (c < 0.0) {
      c = a.atomic_number == 7 ? 30.5 - 8.2 * a.degree + 1.5 * h : 28.5 - 8.6 * a.degree + 1.5 * h;
      c = std::max(c, 0.0);
    }
    tpsa += c;
  }
  return tpsa;
}

std::vector<std::vector<int>> distance_matrix(const Molecule& mol) {
  const int n = mol.num_atoms();
  std::vector<std::vector<int>> d(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(n), -1));
  for (int s = 0; s < n; ++s) {
    std::queue<int> q;
    d[s][s] = 0;
    q.push(s);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (const Neighbor& nb : mol.neighbors(u)) {
        if (d[s][nb.atom] < 0) {
          d[s][nb.atom] = d[s][u] + 1;
          q.push(nb.atom);
        }
      }
    }
  }
  return d;
}

double wiener_index(const Molecule& mol) {
  const auto d = distance_matrix(mol);
  double w = 0.0;
  for (int i = 0; i < mol.num_atoms(); ++i) {
    for (int j = i + 1; j < mol.num_atoms(); ++j) {
      if (d[i][j] > 0) w += d[i][j];
    }
  }
  return w;
}

int rotatable_bonds(const Molecule& mol) {
  int count = 0;
  for (const Bond& b : mol.bonds()) {
    if (b.order != BondOrder::kSingle || b.in_ring) continue;
    if (!rotor_end_allowed(mol, b.begin) || !rotor_end_allowed(mol, b.end)) continue;
    if (amide_like(mol, b.begin) && amide_like(mol, b.end)) continue;
    ++count;
  }
  return count;
}

int aromatic_ring_count(const Molecule& mol) {
  int count = 0;
  for (const auto& ring : mol.rings()) {
    bool aromatic = true;
    for (std::size_t i = 0; i < ring.size() && aromatic; ++i) {
      const int bond = mol.bond_between(ring[i], ring[(i + 1) % ring.size()]);
      aromatic = bond >= 0 && mol.bond(bond).order == BondOrder::kAromatic;
    }
    count += aromatic;
  }
  return count;
}

DescriptorVector compute_descriptors(const Molecule& mol) {
  const int n = mol.num_atoms();
  std::vector<double> v;
  v.reserve(std::size(kNames));

  int hydrogens = 0, hetero = 0, aromatic_atoms = 0, hbd = 0, hba = 0, charge = 0, carbons = 0, sp3_carbons = 0;
  int halogens = 0, charged = 0, branching = 0;
  int per_element[9] = {};
  constexpr int kTracked[9] = {6, 7, 8, 16, 15, 9, 17, 35, 53};
  for (const Atom& a : mol.atoms()) {
    hydrogens += a.total_h();
    for (int k = 0; k < 9; ++k) per_element[k] += a.atomic_number == kTracked[k];
    hetero += a.atomic_number != 6 && a.atomic_number != 1;
    aromatic_atoms += a.aromatic;
    if (a.atomic_number == 7 || a.atomic_number == 8) {
      ++hba;
      hbd += a.total_h();
    }
    charge += a.formal_charge;
    charged += a.formal_charge != 0;
    if (a.atomic_number == 6) {
      ++carbons;
      sp3_carbons += a.hybridization == chem::Hybridization::kSP3;
    }
    halogens += a.atomic_number == 9 || a.atomic_number == 17 || a.atomic_number == 35 || a.atomic_number == 53;
    branching += a.degree >= 3;
  }

  const int rings = static_cast<int>(mol.rings().size());
  const int aromatic_rings = aromatic_ring_count(mol);
  int heterocycles = 0, largest_ring = 0;
  for (const auto& ring : mol.rings()) {
    largest_ring = std::max(largest_ring, static_cast<int>(ring.size()));
    heterocycles += std::any_of(ring.begin(), ring.end(), [&](int i) { return mol.atom(i).atomic_number != 6; });
  }

  int doubles = 0, triples = 0, carbonyls = 0;
  double zagreb2 = 0.0, chi1 = 0.0;
  for (const Bond& b : mol.bonds()) {
    doubles += b.order == BondOrder::kDouble;
    triples += b.order == BondOrder::kTriple;
    const int za = mol.atom(b.begin).atomic_number, zb = mol.atom(b.end).atomic_number;
    carbonyls += b.order == BondOrder::kDouble && ((za == 6 && zb == 8) || (za == 8 && zb == 6));
    const double da = mol.atom(b.begin).degree, db = mol.atom(b.end).degree;
    zagreb2 += da * db;
    chi1 += 1.0 / std::sqrt(da * db);
  }
  double zagreb1 = 0.0, chi0 = 0.0;
  for (const Atom& a : mol.atoms()) {
    zagreb1 += static_cast<double>(a.degree) * a.degree;
    chi0 += 1.0 / std::sqrt(static_cast<double>(std::max(a.degree, 1)));
  }

  // Kappa shape indices from path counts.
  const double A = n;
  const double p1 = mol.num_bonds();
  const double p2 = count_paths_of_length_two(mol);
  const double p3 = count_paths_of_length_three(mol);
  const double kappa1 = p1 > 0 ? A * (A - 1) * (A - 1) / (p1 * p1) : 0.0;
  const double kappa2 = p2 > 0 ? (A - 1) * (A - 2) * (A - 2) / (p2 * p2) : 0.0;
  double kappa3 = 0.0;
  if (p3 > 0) {
    kappa3 = n % 2 == 1 ? (A - 1) * (A - 3) * (A - 3) / (p3 * p3) : (A - 3) * (A - 2) * (A - 2) / (p3 * p3);
  }

  // Distance-based indices.
  const auto dist = distance_matrix(mol);
  double wiener = 0.0;
  int pairs = 0, radius = n > 0 ? n : 0, diameter = 0;
  std::vector<double> distance_sum(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    int ecc = 0;
    for (int j = 0; j < n; ++j) {
      if (dist[i][j] < 0) continue;
      ecc = std::max(ecc, dist[i][j]);
      distance_sum[i] += dist[i][j];
      if (j > i && dist[i][j] > 0) {
        wiener += dist[i][j];
        ++pairs;
      }
    }
    radius = std::min(radius, ecc);
    diameter = std::max(diameter, ecc);
  }
  if (n == 0) radius = 0;
  const double mean_distance = pairs > 0 ? wiener / pairs : 0.0;
  double balaban = 0.0;
  if (mol.num_bonds() > 0) {
    const int cyclomatic = mol.num_bonds() - n + mol.num_components();
    double s = 0.0;
    for (const Bond& b : mol.bonds()) s += 1.0 / std::sqrt(distance_sum[b.begin] * distance_sum[b.end]);
    balaban = mol.num_bonds() / (cyclomatic + 1.0) * s;
  }

  const CrippenContribution cr = crippen(mol);

  v.push_back(molecular_weight(mol));
  v.push_back(n);
  v.push_back(hydrogens);
  for (int k = 0; k < 9; ++k) v.push_back(per_element[k]);
  v.push_back(hetero);
  v.push_back(rings);
  v.push_back(aromatic_rings);
  v.push_back(rings - aromatic_rings);
  v.push_back(heterocycles);
  v.push_back(largest_ring);
  v.push_back(aromatic_atoms);
  v.push_back(rotatable_bonds(mol));
  v.push_back(hbd);
  v.push_back(hba);
  v.push_back(charge);
  v.push_back(carbons > 0 ? static_cast<double>(sp3_carbons) / carbons : 0.0);
  v.push_back(doubles);
  v.push_back(triples);
  v.push_back(wiener);
  v.push_back(zagreb1);
  v.push_back(zagreb2);
  v.push_back(chi0);
  v.push_back(chi1);
  v.push_back(chi2_index(mol));
  v.push_back(kappa1);
  v.push_back(kappa2);
  v.push_back(kappa3);
  v.push_back(topological_polar_surface_area(mol));
  v.push_back(cr.logp);
  v.push_back(cr.mr);
  v.push_back(radius);
  v.push_back(diameter);
  v.push_back(branching);
  v.push_back(balaban);
  v.push_back(mean_distance);
  v.push_back(halogens);
  v.push_back(carbonyls);
  v.push_back(charged);
  return {std::move(v), kSchemaId};
}

}  // namespace rep3net::desc
