#include <gtest/gtest.h>

#include <map>
#include <numeric>
#include <random>
#include <set>

#include "oracles.hpp"
#include "rep3net/chem/rings.hpp"
#include "rep3net/chem/smiles.hpp"
#include "rep3net/descriptors/descriptors.hpp"

using namespace rep3net;
using chem::BondOrder;
using chem::SmilesError;

namespace {

std::vector<std::string> corpus() {
  const auto t = oracle::read_table(oracle::data_path("parser_reference.csv"));
  std::vector<std::string> out;
  for (const auto& r : t.rows) out.push_back(r[t.col("smiles")]);
  return out;
}

int aromatic_atoms(const chem::Molecule& m) {
  int n = 0;
  for (const auto& a : m.atoms()) n += a.aromatic;
  return n;
}

}  // namespace

TEST(ParseSmiles, MethaneHasFourImplicitHydrogens) {
  const auto m = chem::parse_smiles("C");
  ASSERT_EQ(m.num_atoms(), 1);
  EXPECT_EQ(m.num_bonds(), 0);
  EXPECT_EQ(m.atom(0).implicit_h, 4);
}

TEST(ParseSmiles, EthanolFormula) {
  const auto m = chem::parse_smiles("CCO");
  EXPECT_EQ(m.num_atoms(), 3);
  ASSERT_EQ(m.num_bonds(), 2);
  for (const auto& b : m.bonds()) EXPECT_EQ(b.order, BondOrder::kSingle);
  EXPECT_EQ(chem::molecular_formula(m), "C2H6O");
}

TEST(ParseSmiles, BenzeneIsAromatic) {
  const auto m = chem::parse_smiles("c1ccccc1");
  ASSERT_EQ(m.num_atoms(), 6);
  for (const auto& a : m.atoms()) {
    EXPECT_TRUE(a.aromatic);
    EXPECT_EQ(a.implicit_h, 1);
  }
  ASSERT_EQ(m.num_bonds(), 6);
  for (const auto& b : m.bonds()) EXPECT_EQ(b.order, BondOrder::kAromatic);
  ASSERT_EQ(m.rings().size(), 1u);
  EXPECT_EQ(m.rings()[0].size(), 6u);
}

TEST(ParseSmiles, KekuleBenzeneIsPerceivedAromatic) {
  const auto m = chem::parse_smiles("C1=CC=CC=C1");
  EXPECT_EQ(aromatic_atoms(m), 6);
  EXPECT_EQ(chem::canonical_smiles(m), chem::canonicalize("c1ccccc1"));
}

TEST(ParseSmiles, UnclosedRingIsSyntaxError) {
  try {
    chem::parse_smiles("C1CC");
    FAIL() << "expected a syntax error";
  } catch (const SmilesError& e) {
    EXPECT_EQ(e.kind(), SmilesError::Kind::kSyntax);
  }
}

TEST(ParseSmiles, MalformedInputsAreRejected) {
  for (const char* bad : {"", "C(C", "CC)", "[CH4", "C%1", "C==C", "c"}) {
    EXPECT_THROW(chem::parse_smiles(bad), SmilesError) << bad;
  }
}

TEST(ParseSmiles, ValenceErrors) {
  for (const char* bad : {"C(C)(C)(C)(C)C", "O(C)(C)C", "O=C(=O)=O"}) {
    try {
      chem::parse_smiles(bad);
      FAIL() << bad;
    } catch (const SmilesError& e) {
      EXPECT_EQ(e.kind(), SmilesError::Kind::kValence) << bad;
    }
  }
}

TEST(ParseSmiles, BracketAtomsKeepChargeIsotopeAndHydrogens) {
  const auto m = chem::parse_smiles("[13CH3][NH3+]");
  EXPECT_EQ(m.atom(0).isotope, 13);
  EXPECT_EQ(m.atom(0).total_h(), 3);
  EXPECT_EQ(m.atom(1).formal_charge, 1);
  EXPECT_EQ(m.atom(1).total_h(), 3);
}

TEST(ParseSmiles, PercentRingClosures) {
  const auto a = chem::parse_smiles("C%12CCCCC%12");
  const auto b = chem::parse_smiles("C1CCCCC1");
  EXPECT_TRUE(oracle::isomorphic(a, b));
}

TEST(ParseSmiles, StereoMarksAreDroppedWithWarning) {
  chem::ParseDiagnostics diag;
  const auto m = chem::parse_smiles("F/C=C/F", &diag);
  EXPECT_FALSE(diag.warnings.empty());
  EXPECT_EQ(chem::canonical_smiles(m), chem::canonicalize("FC=CF"));
  chem::ParseDiagnostics diag2;
  chem::parse_smiles("N[C@@H](C)C(=O)O", &diag2);
  EXPECT_FALSE(diag2.warnings.empty());
}

TEST(ParseSmiles, LargestFragmentIsKept) {
  chem::ParseDiagnostics diag;
  const auto m = chem::parse_smiles("CCN(CC)CC.Cl", &diag);
  EXPECT_EQ(m.num_atoms(), 7);
  EXPECT_FALSE(diag.warnings.empty());
}

TEST(ParseSmiles, Deterministic) {
  for (const auto& s : corpus()) {
    const auto a = chem::parse_smiles(s);
    const auto b = chem::parse_smiles(s);
    ASSERT_EQ(std::vector(a.atoms().begin(), a.atoms().end()), std::vector(b.atoms().begin(), b.atoms().end()));
    ASSERT_EQ(std::vector(a.bonds().begin(), a.bonds().end()), std::vector(b.bonds().begin(), b.bonds().end()));
  }
}

TEST(CanonicalSmiles, AtomOrderDoesNotMatter) {
  EXPECT_EQ(chem::canonicalize("OCC"), chem::canonicalize("CCO"));
  EXPECT_EQ(chem::canonicalize("C"), "C");
}

TEST(CanonicalSmiles, HundredPermutationsOfTwentyAtomMolecule) {
  const auto m = chem::parse_smiles("CC(C)NCC(O)COc1ccc(Cl)c2ccccc12");
  ASSERT_EQ(m.num_atoms(), 20);
  const std::string expected = chem::canonical_smiles(m);
  std::mt19937_64 rng(2024);
  std::vector<int> perm(20);
  for (int trial = 0; trial < 100; ++trial) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    ASSERT_EQ(chem::canonical_smiles(m.renumbered(perm)), expected) << "trial " << trial;
  }
}

TEST(CanonicalSmiles, CorpusRoundTripIsIsomorphic) {
  for (const auto& s : corpus()) {
    const auto m = chem::parse_smiles(s);
    const std::string c = chem::canonical_smiles(m);
    const auto back = chem::parse_smiles(c);
    EXPECT_TRUE(oracle::isomorphic(m, back)) << s << " -> " << c;
    EXPECT_EQ(chem::canonical_smiles(back), c) << s;
  }
}

TEST(CanonicalSmiles, CorpusPermutationInvariance) {
  std::mt19937_64 rng(7);
  for (const auto& s : corpus()) {
    const auto m = chem::parse_smiles(s);
    const std::string c = chem::canonical_smiles(m);
    std::vector<int> perm(static_cast<std::size_t>(m.num_atoms()));
    for (int t = 0; t < 3; ++t) {
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      EXPECT_EQ(chem::canonical_smiles(m.renumbered(perm)), c) << s;
    }
  }
}

TEST(Rings, Examples) {
  EXPECT_EQ(chem::parse_smiles("c1ccccc1").rings().size(), 1u);
  const auto naph = chem::parse_smiles("c1ccc2ccccc2c1");
  ASSERT_EQ(naph.rings().size(), 2u);
  for (const auto& r : naph.rings()) EXPECT_EQ(r.size(), 6u);
  EXPECT_TRUE(chem::parse_smiles("CCO").rings().empty());
}

TEST(Rings, CountFormulaHoldsOnCorpus) {
  for (const auto& s : corpus()) {
    const auto m = chem::parse_smiles(s);
    EXPECT_EQ(static_cast<int>(m.rings().size()), m.num_bonds() - m.num_atoms() + m.num_components()) << s;
    std::set<int> covered;
    for (const auto& r : m.rings()) covered.insert(r.begin(), r.end());
    for (int i = 0; i < m.num_atoms(); ++i) EXPECT_EQ(m.atom(i).in_ring, covered.count(i) == 1) << s;
  }
}

TEST(Rings, CubaneNeedsFiveRings) {
  const auto m = chem::parse_smiles("C12C3C4C1C5C2C3C45");
  EXPECT_EQ(m.rings().size(), 5u);
  for (const auto& r : m.rings()) EXPECT_EQ(r.size(), 4u);
}

TEST(Valence, NonAromaticAtomsMatchValenceTable) {
  const std::map<int, std::vector<int>> allowed = {{5, {3}},    {6, {4}},    {7, {3, 5}}, {8, {2}},  {9, {1}},
                                                   {15, {3, 5}}, {16, {2, 4, 6}}, {17, {1}}, {35, {1}}, {53, {1, 3, 5}}};
  for (const auto& s : corpus()) {
    const auto m = chem::parse_smiles(s);
    for (int i = 0; i < m.num_atoms(); ++i) {
      const auto& a = m.atom(i);
      if (a.aromatic || a.bracket) continue;
      int valence = a.total_h();
      for (const auto& nb : m.neighbors(i)) valence += static_cast<int>(m.bond(nb.bond).order);
      const auto& ok = allowed.at(a.atomic_number);
      EXPECT_NE(std::find(ok.begin(), ok.end(), valence), ok.end()) << s << " atom " << i;
    }
  }
}

// Formula, ring, aromaticity and descriptor values from a reference toolkit.
TEST(ReferenceCorpus, AgreesWithReferenceToolkit) {
  const auto t = oracle::read_table(oracle::data_path("parser_reference.csv"));
  ASSERT_EQ(t.rows.size(), 200u);
  const auto names = desc::descriptor_names();
  auto index_of = [&](std::string_view n) {
    return static_cast<std::size_t>(std::find(names.begin(), names.end(), n) - names.begin());
  };
  int mismatches = 0;
  for (const auto& row : t.rows) {
    auto f = [&](const char* c) { return std::stod(row[t.col(c)]); };
    const auto m = chem::parse_smiles(row[t.col("smiles")]);
    const auto d = desc::compute_descriptors(m).values;
    const auto crip = desc::crippen(m);
    std::ostringstream why;
    auto check = [&](const char* what, double mine, double ref, double tol) {
      if (std::abs(mine - ref) > tol) why << " " << what << " " << mine << " vs " << ref;
    };
    if (chem::molecular_formula(m) != row[t.col("formula")]) why << " formula " << chem::molecular_formula(m);
    check("heavy_atoms", m.num_atoms(), f("heavy_atoms"), 0);
    check("rings", static_cast<double>(m.rings().size()), f("rings"), 0);
    check("aromatic_atoms", aromatic_atoms(m), f("aromatic_atoms"), 0);
    check("aromatic_rings", desc::aromatic_ring_count(m), f("aromatic_rings"), 0);
    check("mol_weight", desc::molecular_weight(m), f("mol_weight"), 1e-3);
    check("tpsa", desc::topological_polar_surface_area(m), f("tpsa"), 1e-3);
    check("logp", crip.logp, f("logp"), 1e-3);
    check("mr", crip.mr, f("mr"), 1e-3);
    check("hbd", d[index_of("hbd")], f("hbd"), 0);
    check("hba", d[index_of("hba")], f("hba"), 0);
    check("rotatable_bonds", desc::rotatable_bonds(m), f("rotatable_bonds"), 0);
    if (!why.str().empty()) {
      ++mismatches;
      ADD_FAILURE() << row[t.col("smiles")] << ":" << why.str();
    }
  }
  EXPECT_EQ(mismatches, 0);
}
