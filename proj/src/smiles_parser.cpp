#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>

#include "rep3net/chem/elements.hpp"
#include "rep3net/chem/rings.hpp"
#include "rep3net/chem/smiles.hpp"

namespace rep3net::chem {

namespace {

struct RawAtom {
  Atom atom;
  bool lowercase = false;
  std::size_t position = 0;
};

struct RawBond {
  int a = 0;
  int b = 0;
  std::optional<BondOrder> order;  // explicit symbol, if any
};

const char* kind_name(SmilesError::Kind kind) {
  switch (kind) {
    case SmilesError::Kind::kSyntax: return "syntax error";
    case SmilesError::Kind::kValence: return "valence error";
    case SmilesError::Kind::kUnsupported: return "unsupported feature";
  }
  return "error";
}

[[noreturn]] void fail(SmilesError::Kind kind, std::size_t pos, const std::string& what) {
  throw SmilesError(kind, pos, what);
}

class Tokenizer {
 public:
  Tokenizer(std::string_view text, ParseDiagnostics* diag) : text_(text), diag_(diag) {}

  void run() {
    std::vector<int> branch_stack;
    int prev = -1;
    std::optional<BondOrder> pending;
    std::size_t pending_pos = 0;
    bool have_pending = false;

    auto add_atom = [&](RawAtom atom) {
      const int idx = static_cast<int>(atoms.size());
      atoms.push_back(std::move(atom));
      if (prev >= 0) {
        bonds.push_back({prev, idx, have_pending ? pending : std::nullopt});
      } else if (have_pending) {
        fail(SmilesError::Kind::kSyntax, pending_pos, "bond symbol without a preceding atom");
      }
      have_pending = false;
      pending.reset();
      prev = idx;
    };

    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) break;  // trailing title
      if (c == '[') {
        add_atom(parse_bracket());
      } else if (std::isalpha(static_cast<unsigned char>(c))) {
        add_atom(parse_organic());
      } else if (c == '*') {
        fail(SmilesError::Kind::kUnsupported, pos_, "wildcard atom '*'");
      } else if (c == '(') {
        if (prev < 0) fail(SmilesError::Kind::kSyntax, pos_, "branch opened before any atom");
        if (have_pending) fail(SmilesError::Kind::kSyntax, pos_, "bond symbol before '('");
        branch_stack.push_back(prev);
        ++pos_;
      } else if (c == ')') {
        if (branch_stack.empty()) fail(SmilesError::Kind::kSyntax, pos_, "unmatched ')'");
        if (have_pending) fail(SmilesError::Kind::kSyntax, pos_, "dangling bond symbol before ')'");
        prev = branch_stack.back();
        branch_stack.pop_back();
        ++pos_;
      } else if (c == '-' || c == '=' || c == '#' || c == ':' || c == '/' || c == '\\' || c == '$') {
        if (have_pending) fail(SmilesError::Kind::kSyntax, pos_, "two consecutive bond symbols");
        if (c == '$') fail(SmilesError::Kind::kUnsupported, pos_, "quadruple bond '$'");
        if (c == '/' || c == '\\') warn("directional bond '" + std::string(1, c) + "' ignored (stereo is not used)");
        pending = c == '=' ? BondOrder::kDouble
                  : c == '#' ? BondOrder::kTriple
                  : c == ':' ? BondOrder::kAromatic
                             : BondOrder::kSingle;
        have_pending = true;
        pending_pos = pos_;
        ++pos_;
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '%') {
        if (prev < 0) fail(SmilesError::Kind::kSyntax, pos_, "ring-closure digit before any atom");
        const std::size_t start = pos_;
        int number = 0;
        if (c == '%') {
          if (pos_ + 2 >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])) ||
              !std::isdigit(static_cast<unsigned char>(text_[pos_ + 2]))) {
            fail(SmilesError::Kind::kSyntax, pos_, "'%' must be followed by two digits");
          }
          number = (text_[pos_ + 1] - '0') * 10 + (text_[pos_ + 2] - '0');
          pos_ += 3;
        } else {
          number = c - '0';
          ++pos_;
        }
        auto open = ring_open_.find(number);
        if (open == ring_open_.end()) {
          ring_open_[number] = {prev, have_pending ? pending : std::nullopt, start};
        } else {
          auto [other, open_order, open_pos] = open->second;
          ring_open_.erase(open);
          std::optional<BondOrder> order = open_order;
          if (have_pending) {
            if (order && *order != *pending) {
              fail(SmilesError::Kind::kSyntax, start, "conflicting bond symbols on ring closure " + std::to_string(number));
            }
            order = pending;
          }
          if (other == prev) fail(SmilesError::Kind::kSyntax, start, "ring closure to the same atom");
          for (const RawBond& b : bonds) {
            if ((b.a == other && b.b == prev) || (b.a == prev && b.b == other)) {
              fail(SmilesError::Kind::kSyntax, start, "ring closure duplicates an existing bond");
            }
          }
          bonds.push_back({other, prev, order});
        }
        have_pending = false;
        pending.reset();
      } else if (c == '.') {
        if (have_pending) fail(SmilesError::Kind::kSyntax, pos_, "bond symbol before '.'");
        if (!branch_stack.empty()) fail(SmilesError::Kind::kSyntax, pos_, "'.' inside a branch");
        prev = -1;
        ++pos_;
      } else if (c == '@') {
        fail(SmilesError::Kind::kSyntax, pos_, "chirality mark outside brackets");
      } else {
        fail(SmilesError::Kind::kSyntax, pos_, std::string("unexpected character '") + c + "'");
      }
    }
    if (have_pending) fail(SmilesError::Kind::kSyntax, pending_pos, "dangling bond symbol at end of input");
    if (!branch_stack.empty()) fail(SmilesError::Kind::kSyntax, pos_, "unmatched '('");
    if (!ring_open_.empty()) {
      const auto& [number, open] = *ring_open_.begin();
      fail(SmilesError::Kind::kSyntax, std::get<2>(open), "unclosed ring bond " + std::to_string(number));
    }
    if (atoms.empty()) fail(SmilesError::Kind::kSyntax, 0, "no atoms");
  }

  std::vector<RawAtom> atoms;
  std::vector<RawBond> bonds;

 private:
  void warn(const std::string& message) {
    if (diag_ != nullptr) diag_->warnings.push_back(message);
  }

  RawAtom parse_organic() {
    const std::size_t start = pos_;
    const char c = text_[pos_];
    RawAtom raw;
    raw.position = start;
    std::string symbol(1, c);
    if (c == 'C' && pos_ + 1 < text_.size() && text_[pos_ + 1] == 'l') symbol = "Cl";
    if (c == 'B' && pos_ + 1 < text_.size() && text_[pos_ + 1] == 'r') symbol = "Br";
    pos_ += symbol.size();
    if (std::islower(static_cast<unsigned char>(c))) {
      static const std::string kAromaticOrganic = "bcnops";
      if (kAromaticOrganic.find(c) == std::string::npos) {
        fail(SmilesError::Kind::kSyntax, start, "'" + symbol + "' is not an aromatic organic-subset atom");
      }
      raw.lowercase = true;
      symbol[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    } else if (!is_organic_subset(symbol)) {
      fail(SmilesError::Kind::kSyntax, start, "'" + symbol + "' must be written in brackets");
    }
    raw.atom.atomic_number = find_element(symbol)->atomic_number;
    raw.atom.aromatic = raw.lowercase;
    return raw;
  }

  RawAtom parse_bracket() {
    const std::size_t start = pos_;
    const std::size_t close = text_.find(']', pos_);
    if (close == std::string_view::npos) fail(SmilesError::Kind::kSyntax, start, "unmatched '['");
    std::string_view body = text_.substr(pos_ + 1, close - pos_ - 1);
    pos_ = close + 1;
    RawAtom raw;
    raw.position = start;
    raw.atom.bracket = true;
    std::size_t i = 0;
    auto at_end = [&] { return i >= body.size(); };
    auto bad = [&](const std::string& what) { fail(SmilesError::Kind::kSyntax, start + 1 + i, what); };

    while (!at_end() && std::isdigit(static_cast<unsigned char>(body[i]))) {
      raw.atom.isotope = raw.atom.isotope * 10 + (body[i] - '0');
      ++i;
    }
    if (at_end()) bad("empty bracket atom");
    if (body[i] == '*') fail(SmilesError::Kind::kUnsupported, start, "wildcard atom '*'");

    std::string symbol;
    if (std::isupper(static_cast<unsigned char>(body[i]))) {
      if (i + 1 < body.size() && std::islower(static_cast<unsigned char>(body[i + 1])) &&
          find_element(body.substr(i, 2))) {
        symbol = std::string(body.substr(i, 2));
      } else {
        symbol = std::string(1, body[i]);
      }
      i += symbol.size();
    } else if (std::islower(static_cast<unsigned char>(body[i]))) {
      static constexpr std::string_view kTwo[] = {"se", "as", "te"};
      for (std::string_view two : kTwo) {
        if (body.substr(i, 2) == two) symbol = std::string(two);
      }
      if (symbol.empty()) symbol = std::string(1, body[i]);
      static const std::set<std::string> kAromatic = {"b", "c", "n", "o", "p", "s", "se", "as", "te"};
      if (!kAromatic.count(symbol)) bad("'" + symbol + "' cannot be aromatic");
      i += symbol.size();
      raw.lowercase = true;
      symbol[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(symbol[0])));
    } else {
      bad("expected element symbol");
    }
    auto info = find_element(symbol);
    if (!info) bad("unknown element '" + symbol + "'");
    raw.atom.atomic_number = info->atomic_number;
    raw.atom.aromatic = raw.lowercase;

    if (!at_end() && body[i] == '@') {
      ++i;
      if (!at_end() && body[i] == '@') ++i;
      // Extended classes such as @TH1, @SP2, @OH12.
      if (i + 1 < body.size() && std::isupper(static_cast<unsigned char>(body[i])) &&
          std::isupper(static_cast<unsigned char>(body[i + 1]))) {
        i += 2;
        while (!at_end() && std::isdigit(static_cast<unsigned char>(body[i]))) ++i;
      }
      warn("chirality mark on atom at position " + std::to_string(start) + " ignored (stereo is not used)");
    }
    if (!at_end() && body[i] == 'H') {
      ++i;
      int count = 1;
      if (!at_end() && std::isdigit(static_cast<unsigned char>(body[i]))) {
        count = 0;
        while (!at_end() && std::isdigit(static_cast<unsigned char>(body[i]))) count = count * 10 + (body[i++] - '0');
      }
      raw.atom.explicit_h = count;
    }
    if (!at_end() && (body[i] == '+' || body[i] == '-')) {
      const char sign = body[i];
      ++i;
      int magnitude = 1;
      if (!at_end() && std::isdigit(static_cast<unsigned char>(body[i]))) {
        magnitude = 0;
        while (!at_end() && std::isdigit(static_cast<unsigned char>(body[i]))) magnitude = magnitude * 10 + (body[i++] - '0');
      } else {
        while (!at_end() && body[i] == sign) {
          ++magnitude;
          ++i;
        }
      }
      raw.atom.formal_charge = sign == '+' ? magnitude : -magnitude;
    }
    if (!at_end() && body[i] == ':') {
      ++i;
      if (at_end()) bad("empty atom class");
      while (!at_end() && std::isdigit(static_cast<unsigned char>(body[i]))) ++i;
    }
    if (!at_end()) bad("unexpected characters in bracket atom");
    return raw;
  }

  std::string_view text_;
  ParseDiagnostics* diag_;
  std::size_t pos_ = 0;
  std::map<int, std::tuple<int, std::optional<BondOrder>, std::size_t>> ring_open_;
};

// Isoelectronic valence list for charged organic atoms (N+ behaves like C,
// O- like F, ...). Empty when the element takes no valence check.
std::span<const int> allowed_valences(int atomic_number, int charge) {
  const int iso = atomic_number - charge;
  if (iso < 1 || iso > 86) return {};
  if (element(atomic_number).valences.empty()) return {};
  return element(iso).valences;
}

// Pi-electron contribution of an atom (Kekulé bonds) to a candidate aromatic
// ring system, or -1 if the atom cannot be part of one.
int pi_electrons(int atom, const std::vector<Atom>& atoms, const std::vector<Bond>& bonds,
                 const std::vector<std::vector<Neighbor>>& adj) {
  const Atom& a = atoms[atom];
  const int connections = a.degree + a.total_h();
  if (connections > 3) return -1;
  int double_in_ring = 0, double_exo_hetero = 0, double_exo_carbon = 0, triple = 0;
  for (const Neighbor& nb : adj[atom]) {
    const Bond& b = bonds[nb.bond];
    if (b.order == BondOrder::kTriple) ++triple;
    if (b.order == BondOrder::kDouble) {
      if (b.in_ring) {
        ++double_in_ring;
      } else if (atoms[nb.atom].atomic_number == 6) {
        ++double_exo_carbon;
      } else {
        ++double_exo_hetero;
      }
    }
  }
  if (triple > 0 || double_exo_carbon > 0 || double_in_ring > 1) return -1;
  const int z = a.atomic_number;
  const int q = a.formal_charge;
  if (double_in_ring == 1) return double_exo_hetero == 0 ? 1 : -1;
  if (double_exo_hetero == 1) {
    // C=O style exocyclic bonds leave an empty p orbital.
    return (z == 6 || (z == 7 && q == 1)) ? 0 : -1;
  }
  switch (z) {
    case 6: return q < 0 ? 2 : (q > 0 ? 0 : -1);
    case 5: return q == 0 ? 0 : -1;
    case 7:
    case 15:
    case 33: return q == 0 ? 2 : -1;
    case 8:
    case 16:
    case 34:
    case 52: return (q == 0 && connections == 2) ? 2 : -1;
    default: return -1;
  }
}

// Assigns alternating single/double bonds to the aromatic bonds of a
// lowercase SMILES. Atoms whose valence is one short of an allowed value need
// exactly one double bond; the assignment is a perfect matching of those atoms
// over aromatic bonds, found by most-constrained-first backtracking.
bool kekulize(std::vector<Atom>& atoms, std::vector<Bond>& bonds, const std::vector<std::vector<Neighbor>>& adj) {
  const int n = static_cast<int>(atoms.size());
  std::vector<bool> needs(static_cast<std::size_t>(n), false);
  for (int i = 0; i < n; ++i) {
    int used = atoms[i].total_h(), aromatic_bonds = 0;
    for (const Neighbor& nb : adj[i]) {
      const BondOrder o = bonds[nb.bond].order;
      aromatic_bonds += o == BondOrder::kAromatic;
      used += o == BondOrder::kAromatic ? 1 : static_cast<int>(o);
    }
    if (aromatic_bonds == 0) continue;
    for (int v : allowed_valences(atoms[i].atomic_number, atoms[i].formal_charge)) {
      if (v >= used) {
        needs[i] = v > used;
        break;
      }
    }
  }
  std::vector<int> partner(static_cast<std::size_t>(n), -1);
  auto options = [&](int i) {
    std::vector<Neighbor> out;
    for (const Neighbor& nb : adj[i]) {
      if (bonds[nb.bond].order == BondOrder::kAromatic && needs[nb.atom] && partner[nb.atom] < 0) out.push_back(nb);
    }
    return out;
  };
  std::function<bool()> solve = [&]() {
    int best = -1;
    std::size_t best_count = 0;
    for (int i = 0; i < n; ++i) {
      if (!needs[i] || partner[i] >= 0) continue;
      const std::size_t c = options(i).size();
      if (best < 0 || c < best_count) {
        best = i;
        best_count = c;
      }
      if (c == 0) return false;
    }
    if (best < 0) return true;
    for (const Neighbor& nb : options(best)) {
      partner[best] = nb.atom;
      partner[nb.atom] = best;
      if (solve()) return true;
      partner[best] = partner[nb.atom] = -1;
    }
    return false;
  };
  if (!solve()) return false;
  for (int i = 0; i < n; ++i) {
    for (const Neighbor& nb : adj[i]) {
      Bond& b = bonds[nb.bond];
      if (b.order == BondOrder::kAromatic) b.order = partner[i] == nb.atom ? BondOrder::kDouble : BondOrder::kSingle;
    }
  }
  return true;
}

}  // namespace

SmilesError::SmilesError(Kind kind, std::size_t position, const std::string& message)
    : DataError(std::string(kind_name(kind)) + " at position " + std::to_string(position) + ": " + message),
      kind_(kind),
      position_(position) {}

int default_implicit_h(int atomic_number, bool aromatic, std::span<const BondOrder> bond_orders) {
  const auto valences = element(atomic_number).valences;
  if (valences.empty()) return 0;
  if (aromatic) {
    int used = 0, aromatic_bonds = 0;
    for (BondOrder o : bond_orders) {
      if (o == BondOrder::kAromatic) {
        ++aromatic_bonds;
        ++used;
      } else {
        used += static_cast<int>(o);
      }
    }
    const int lowest = valences.front();
    const bool pi_donor = atomic_number == 5 || atomic_number == 6 || atomic_number == 7 || atomic_number == 15;
    if (pi_donor && aromatic_bonds > 0 && lowest - used - 1 >= 0) return lowest - used - 1;
    if (lowest - used >= 0) return lowest - used;
    return -1;
  }
  int used = 0;
  for (BondOrder o : bond_orders) used += o == BondOrder::kAromatic ? 1 : static_cast<int>(o);
  for (int v : valences) {
    if (v >= used) return v - used;
  }
  return -1;
}

Molecule parse_smiles(std::string_view text, ParseDiagnostics* diagnostics) {
  if (text.empty()) throw SmilesError(SmilesError::Kind::kSyntax, 0, "empty SMILES");
  Tokenizer tok(text, diagnostics);
  tok.run();
  std::vector<RawAtom> raw_atoms = std::move(tok.atoms);
  std::vector<RawBond> raw_bonds = std::move(tok.bonds);

  // Resolve bond orders: implicit bonds between two lowercase atoms are
  // aromatic, every other implicit bond is single.
  std::vector<Bond> bonds;
  bonds.reserve(raw_bonds.size());
  for (const RawBond& rb : raw_bonds) {
    Bond b;
    b.begin = rb.a;
    b.end = rb.b;
    if (rb.order) {
      b.order = *rb.order;
      if (b.order == BondOrder::kAromatic && !(raw_atoms[rb.a].lowercase && raw_atoms[rb.b].lowercase)) {
        throw SmilesError(SmilesError::Kind::kSyntax, raw_atoms[rb.b].position, "':' bond between non-aromatic atoms");
      }
    } else {
      b.order = (raw_atoms[rb.a].lowercase && raw_atoms[rb.b].lowercase) ? BondOrder::kAromatic : BondOrder::kSingle;
    }
    bonds.push_back(b);
  }

  // Implicit hydrogens for unbracketed atoms (bonds to explicit [H] atoms count).
  {
    std::vector<std::vector<BondOrder>> orders(raw_atoms.size());
    for (const Bond& b : bonds) {
      orders[b.begin].push_back(b.order);
      orders[b.end].push_back(b.order);
    }
    for (std::size_t i = 0; i < raw_atoms.size(); ++i) {
      Atom& a = raw_atoms[i].atom;
      if (a.bracket) {
        double used = a.explicit_h;
        int aromatic_bonds = 0;
        for (BondOrder o : orders[i]) {
          if (o == BondOrder::kAromatic) {
            ++aromatic_bonds;
            used += 1.0;
          } else {
            used += static_cast<int>(o);
          }
        }
        const auto allowed = allowed_valences(a.atomic_number, a.formal_charge);
        if (!allowed.empty() && used > allowed.back() + 1e-9) {
          throw SmilesError(SmilesError::Kind::kValence, raw_atoms[i].position,
                            "atom " + std::string(a.symbol()) + " exceeds its allowed valence");
        }
        continue;
      }
      const int h = default_implicit_h(a.atomic_number, a.aromatic, orders[i]);
      if (h < 0) {
        throw SmilesError(SmilesError::Kind::kValence, raw_atoms[i].position,
                          "atom " + std::string(a.symbol()) + " exceeds its allowed valence");
      }
      a.implicit_h = h;
    }
  }

  // Fold plain explicit hydrogen atoms into their heavy neighbor.
  {
    std::vector<int> h_neighbor(raw_atoms.size(), -1);
    std::vector<int> degree(raw_atoms.size(), 0);
    for (const Bond& b : bonds) {
      ++degree[b.begin];
      ++degree[b.end];
    }
    for (const Bond& b : bonds) {
      for (int side = 0; side < 2; ++side) {
        const int h = side == 0 ? b.begin : b.end;
        const int other = side == 0 ? b.end : b.begin;
        const Atom& ha = raw_atoms[h].atom;
        if (ha.atomic_number == 1 && ha.isotope == 0 && ha.formal_charge == 0 && ha.explicit_h == 0 &&
            degree[h] == 1 && raw_atoms[other].atom.atomic_number != 1 && b.order == BondOrder::kSingle) {
          h_neighbor[h] = other;
        }
      }
    }
    if (std::any_of(h_neighbor.begin(), h_neighbor.end(), [](int v) { return v >= 0; })) {
      std::vector<int> remap(raw_atoms.size(), -1);
      std::vector<RawAtom> kept;
      for (std::size_t i = 0; i < raw_atoms.size(); ++i) {
        if (h_neighbor[i] >= 0) {
          ++raw_atoms[h_neighbor[i]].atom.explicit_h;
        }
      }
      for (std::size_t i = 0; i < raw_atoms.size(); ++i) {
        if (h_neighbor[i] < 0) {
          remap[i] = static_cast<int>(kept.size());
          kept.push_back(raw_atoms[i]);
        }
      }
      std::vector<Bond> kept_bonds;
      for (Bond b : bonds) {
        if (remap[b.begin] < 0 || remap[b.end] < 0) continue;
        b.begin = remap[b.begin];
        b.end = remap[b.end];
        kept_bonds.push_back(b);
      }
      raw_atoms = std::move(kept);
      bonds = std::move(kept_bonds);
    }
  }

  // Keep the largest fragment by heavy-atom count.
  {
    const int n = static_cast<int>(raw_atoms.size());
    std::vector<int> comp(static_cast<std::size_t>(n), -1);
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (const Bond& b : bonds) {
      adj[b.begin].push_back(b.end);
      adj[b.end].push_back(b.begin);
    }
    int num_comp = 0;
    for (int s = 0; s < n; ++s) {
      if (comp[s] >= 0) continue;
      std::vector<int> stack{s};
      comp[s] = num_comp;
      while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (int v : adj[u]) {
          if (comp[v] < 0) {
            comp[v] = num_comp;
            stack.push_back(v);
          }
        }
      }
      ++num_comp;
    }
    if (num_comp > 1) {
      std::vector<int> heavy(static_cast<std::size_t>(num_comp), 0), total(static_cast<std::size_t>(num_comp), 0);
      for (int i = 0; i < n; ++i) {
        ++total[comp[i]];
        if (raw_atoms[i].atom.atomic_number != 1) ++heavy[comp[i]];
      }
      int best = 0;
      for (int c = 1; c < num_comp; ++c) {
        if (heavy[c] > heavy[best] || (heavy[c] == heavy[best] && total[c] > total[best])) best = c;
      }
      if (diagnostics != nullptr) {
        diagnostics->warnings.push_back("multi-fragment input: kept the largest of " + std::to_string(num_comp) +
                                        " fragments (" + std::to_string(heavy[best]) + " heavy atoms)");
      }
      std::vector<int> remap(static_cast<std::size_t>(n), -1);
      std::vector<RawAtom> kept;
      for (int i = 0; i < n; ++i) {
        if (comp[i] == best) {
          remap[i] = static_cast<int>(kept.size());
          kept.push_back(raw_atoms[i]);
        }
      }
      std::vector<Bond> kept_bonds;
      for (Bond b : bonds) {
        if (comp[b.begin] != best) continue;
        b.begin = remap[b.begin];
        b.end = remap[b.end];
        kept_bonds.push_back(b);
      }
      raw_atoms = std::move(kept);
      bonds = std::move(kept_bonds);
    }
  }

  const int n = static_cast<int>(raw_atoms.size());
  std::vector<Atom> atoms(static_cast<std::size_t>(n));
  std::vector<bool> lowercase(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    atoms[i] = raw_atoms[i].atom;
    lowercase[i] = raw_atoms[i].lowercase;
  }
  std::vector<std::vector<Neighbor>> adj(static_cast<std::size_t>(n));
  for (int bi = 0; bi < static_cast<int>(bonds.size()); ++bi) {
    adj[bonds[bi].begin].push_back({bonds[bi].end, bi});
    adj[bonds[bi].end].push_back({bonds[bi].begin, bi});
  }
  for (int i = 0; i < n; ++i) atoms[i].degree = static_cast<int>(adj[i].size());

  // Rings.
  std::vector<std::pair<int, int>> edges;
  for (const Bond& b : bonds) edges.emplace_back(b.begin, b.end);
  std::vector<std::vector<int>> rings = smallest_set_of_smallest_rings(n, edges);
  std::vector<bool> in_any_ring(static_cast<std::size_t>(n), false);
  std::vector<std::vector<int>> ring_bonds(rings.size());
  for (std::size_t r = 0; r < rings.size(); ++r) {
    const auto& ring = rings[r];
    for (std::size_t k = 0; k < ring.size(); ++k) {
      const int a = ring[k], b = ring[(k + 1) % ring.size()];
      in_any_ring[a] = true;
      for (const Neighbor& nb : adj[a]) {
        if (nb.atom == b) {
          bonds[nb.bond].in_ring = true;
          ring_bonds[r].push_back(nb.bond);
        }
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    atoms[i].in_ring = in_any_ring[i];
    if (lowercase[i] && !in_any_ring[i]) {
      throw SmilesError(SmilesError::Kind::kSyntax, raw_atoms[i].position, "aromatic atom outside a ring");
    }
  }

  // Lowercase input is reduced to a Kekulé structure so that both spellings
  // of a molecule go through the same perception below.
  for (Bond& b : bonds) {
    if (b.order == BondOrder::kAromatic && !b.in_ring) b.order = BondOrder::kSingle;
  }
  if (!kekulize(atoms, bonds, adj)) {
    std::size_t pos = 0;
    for (int i = 0; i < n; ++i) {
      if (lowercase[i]) {
        pos = raw_atoms[i].position;
        break;
      }
    }
    throw SmilesError(SmilesError::Kind::kValence, pos, "cannot assign a Kekulé structure to the aromatic system");
  }
  for (Atom& a : atoms) a.aromatic = false;

  // Aromaticity: Hückel 4n+2 on rings of size 5-7, alone or as fused
  // combinations. A combination marks the bonds of its outer envelope only.
  std::vector<int> contribution(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) contribution[i] = pi_electrons(i, atoms, bonds, adj);
  std::vector<bool> candidate(rings.size(), false);
  for (std::size_t r = 0; r < rings.size(); ++r) {
    candidate[r] = rings[r].size() >= 5 && rings[r].size() <= 7 &&
                   std::all_of(rings[r].begin(), rings[r].end(), [&](int a) { return contribution[a] >= 0; });
  }
  std::vector<bool> aromatic_ring(rings.size(), false);
  std::vector<bool> aromatic_bond(bonds.size(), false);
  auto huckel = [&](const std::set<int>& members) {
    int electrons = 0;
    for (int a : members) electrons += contribution[a];
    return electrons % 4 == 2;
  };
  for (std::size_t r = 0; r < rings.size(); ++r) {
    if (candidate[r] && huckel(std::set<int>(rings[r].begin(), rings[r].end()))) {
      aromatic_ring[r] = true;
      for (int a : rings[r]) atoms[a].aromatic = true;
      for (int bi : ring_bonds[r]) aromatic_bond[bi] = true;
    }
  }
  auto shares_bond = [&](std::size_t r, std::size_t s) {
    for (int bi : ring_bonds[r]) {
      if (std::find(ring_bonds[s].begin(), ring_bonds[s].end(), bi) != ring_bonds[s].end()) return true;
    }
    return false;
  };
  // Fused systems of candidate rings.
  std::vector<int> system(rings.size(), -1);
  int num_systems = 0;
  for (std::size_t r = 0; r < rings.size(); ++r) {
    if (!candidate[r] || system[r] >= 0) continue;
    std::vector<std::size_t> stack{r};
    system[r] = num_systems;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v = 0; v < rings.size(); ++v) {
        if (candidate[v] && system[v] < 0 && shares_bond(u, v)) {
          system[v] = num_systems;
          stack.push_back(v);
        }
      }
    }
    ++num_systems;
  }
  for (int sys = 0; sys < num_systems; ++sys) {
    std::vector<std::size_t> members;
    for (std::size_t r = 0; r < rings.size(); ++r) {
      if (system[r] == sys) members.push_back(r);
    }
    const std::size_t k = members.size();
    if (k < 2) continue;
    const std::size_t max_size = std::min<std::size_t>(k, k > 12 ? 3 : 6);
    // Enumerate connected subsets of 2..max_size rings in lexicographic order.
    std::vector<std::size_t> pick;
    std::function<void(std::size_t)> visit = [&](std::size_t next) {
      if (pick.size() >= 2) {
        bool connected = true;
        std::vector<bool> reached(pick.size(), false);
        std::vector<std::size_t> stack{0};
        reached[0] = true;
        while (!stack.empty()) {
          const std::size_t u = stack.back();
          stack.pop_back();
          for (std::size_t v = 0; v < pick.size(); ++v) {
            if (!reached[v] && shares_bond(members[pick[u]], members[pick[v]])) {
              reached[v] = true;
              stack.push_back(v);
            }
          }
        }
        for (bool x : reached) connected = connected && x;
        bool any_new = false;
        for (std::size_t p : pick) any_new = any_new || !aromatic_ring[members[p]];
        std::set<int> atoms_in;
        for (std::size_t p : pick) atoms_in.insert(rings[members[p]].begin(), rings[members[p]].end());
        if (connected && any_new && huckel(atoms_in)) {
          std::map<int, int> bond_uses;
          for (std::size_t p : pick) {
            for (int bi : ring_bonds[members[p]]) ++bond_uses[bi];
          }
          for (int a : atoms_in) atoms[a].aromatic = true;
          for (const auto& [bi, uses] : bond_uses) {
            if (uses == 1) aromatic_bond[bi] = true;
          }
        }
      }
      if (pick.size() == max_size) return;
      for (std::size_t i = next; i < k; ++i) {
        pick.push_back(i);
        visit(i + 1);
        pick.pop_back();
      }
    };
    visit(0);
  }
  for (std::size_t bi = 0; bi < bonds.size(); ++bi) {
    if (aromatic_bond[bi]) bonds[bi].order = BondOrder::kAromatic;
  }

  // Hybridization.
  for (int i = 0; i < n; ++i) {
    Atom& a = atoms[i];
    int doubles = 0, triples = 0;
    for (const Neighbor& nb : adj[i]) {
      if (bonds[nb.bond].order == BondOrder::kDouble) ++doubles;
      if (bonds[nb.bond].order == BondOrder::kTriple) ++triples;
    }
    const int connections = a.degree + a.total_h();
    if (connections == 0) {
      a.hybridization = Hybridization::kOther;
    } else if (a.aromatic) {
      a.hybridization = Hybridization::kSP2;
    } else if (triples > 0 || doubles > 1) {
      a.hybridization = Hybridization::kSP;
    } else if (doubles == 1) {
      a.hybridization = Hybridization::kSP2;
    } else if (connections == 5) {
      a.hybridization = Hybridization::kSP3D;
    } else if (connections >= 6) {
      a.hybridization = Hybridization::kSP3D2;
    } else {
      a.hybridization = Hybridization::kSP3;
      // Lone pairs conjugated with an adjacent pi system (amides, anilines, phenols).
      const bool lone_pair = (a.atomic_number == 7 || a.atomic_number == 8 || a.atomic_number == 16) &&
                             a.formal_charge <= 0 && connections <= 3;
      if (lone_pair) {
        for (const Neighbor& nb : adj[i]) {
          bool pi = atoms[nb.atom].aromatic;
          for (const Neighbor& nb2 : adj[nb.atom]) {
            const auto order = bonds[nb2.bond].order;
            if (order == BondOrder::kDouble || order == BondOrder::kTriple) pi = true;
          }
          if (pi) {
            a.hybridization = Hybridization::kSP2;
            break;
          }
        }
      }
    }
  }

  return Molecule(std::move(atoms), std::move(bonds), std::move(rings));
}

}  // namespace rep3net::chem
