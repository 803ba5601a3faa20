#pragma once

// A tree-shaped SMARTS subset sufficient for atom-typing tables: bracket
// atoms with element, #n, A/a, H, X, D and charge primitives combined by
// !, &, implicit and, ',' and ';'; bonds - = # : ~ and the default
// single-or-aromatic bond; branches. No ring closures, no recursion.

#include <memory>
#include <string_view>
#include <vector>

#include "rep3net/chem/molecule.hpp"

namespace rep3net::chem::smarts {

/// A molecule with every implicit hydrogen promoted to an explicit node.
struct ExpandedGraph {
  struct Node {
    int atomic_number = 0;
    bool aromatic = false;
    int charge = 0;
    int total_h = 0;      // hydrogen neighbors, implicit or explicit
    int connections = 0;  // X: all neighbors including hydrogens
    int degree = 0;       // D: neighbors present as nodes
    int parent = -1;      // for hydrogen nodes: the heavy atom carrying it
  };
  std::vector<Node> nodes;
  std::vector<std::vector<std::pair<int, BondOrder>>> adjacency;
  int num_heavy = 0;
};

ExpandedGraph expand_hydrogens(const Molecule& mol);

class Pattern {
 public:
  explicit Pattern(std::string_view text);
  ~Pattern();
  Pattern(Pattern&&) noexcept;
  Pattern& operator=(Pattern&&) noexcept;

  /// True when the pattern matches with its first atom mapped to `root`.
  bool matches_at(const ExpandedGraph& g, int root) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace rep3net::chem::smarts
