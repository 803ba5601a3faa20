#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rep3net/chem/molecule.hpp"
#include "rep3net/error.hpp"

namespace rep3net::chem {

class SmilesError : public DataError {
 public:
  enum class Kind { kSyntax, kValence, kUnsupported };

  SmilesError(Kind kind, std::size_t position, const std::string& message);

  Kind kind() const { return kind_; }
  std::size_t position() const { return position_; }

 private:
  Kind kind_;
  std::size_t position_;
};

/// Non-fatal events raised while parsing (discarded stereo marks, stripped
/// fragments). Callers that do not care may pass nullptr.
struct ParseDiagnostics {
  std::vector<std::string> warnings;
};

/// Parses a SMILES string. Multi-fragment input keeps the fragment with the
/// most heavy atoms (first one on ties). Stereo marks are dropped.
Molecule parse_smiles(std::string_view text, ParseDiagnostics* diagnostics = nullptr);

/// Canonical SMILES: atoms ranked by iterative neighborhood refinement,
/// ties broken deterministically, written depth-first in rank order.
std::string canonical_smiles(const Molecule& mol);

/// Convenience: canonical_smiles(parse_smiles(text)).
std::string canonicalize(std::string_view text);

/// Canonical rank of every atom (0 = first written).
std::vector<int> canonical_ranks(const Molecule& mol);

/// Implicit hydrogens the parser would assign to an unbracketed atom with
/// the given element, aromatic flag, and incident bond orders. Returns -1
/// when no allowed valence fits.
int default_implicit_h(int atomic_number, bool aromatic, std::span<const BondOrder> bonds);

}  // namespace rep3net::chem
