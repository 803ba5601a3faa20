#include "smarts_lite.hpp"

#include <cctype>
#include <functional>
#include <stdexcept>
#include <string>

#include "rep3net/chem/elements.hpp"

namespace rep3net::chem::smarts {

ExpandedGraph expand_hydrogens(const Molecule& mol) {
  ExpandedGraph g;
  const int n = mol.num_atoms();
  g.num_heavy = n;
  g.nodes.resize(static_cast<std::size_t>(n));
  g.adjacency.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Atom& a = mol.atom(i);
    g.nodes[i] = {a.atomic_number, a.aromatic, a.formal_charge, a.total_h(), a.degree + a.total_h(),
                  a.degree + a.total_h(), -1};
  }
  for (const Bond& b : mol.bonds()) {
    g.adjacency[b.begin].emplace_back(b.end, b.order);
    g.adjacency[b.end].emplace_back(b.begin, b.order);
  }
  for (int i = 0; i < n; ++i) {
    for (int h = 0; h < mol.atom(i).total_h(); ++h) {
      const int id = static_cast<int>(g.nodes.size());
      g.nodes.push_back({1, false, 0, 0, 1, 1, i});
      g.adjacency.push_back({{i, BondOrder::kSingle}});
      g.adjacency[i].emplace_back(id, BondOrder::kSingle);
    }
  }
  return g;
}

namespace {

using Node = ExpandedGraph::Node;
using AtomTest = std::function<bool(const Node&)>;

enum class BondQuery { kDefault, kSingle, kDouble, kTriple, kAromatic, kAny };

bool bond_matches(BondQuery q, BondOrder order) {
  switch (q) {
    case BondQuery::kDefault: return order == BondOrder::kSingle || order == BondOrder::kAromatic;
    case BondQuery::kSingle: return order == BondOrder::kSingle;
    case BondQuery::kDouble: return order == BondOrder::kDouble;
    case BondQuery::kTriple: return order == BondOrder::kTriple;
    case BondQuery::kAromatic: return order == BondOrder::kAromatic;
    case BondQuery::kAny: return true;
  }
  return false;
}

AtomTest element_test(int z, int aromatic) {  // aromatic: 0 aliphatic, 1 aromatic, -1 either
  return [z, aromatic](const Node& n) {
    return n.atomic_number == z && (aromatic < 0 || n.aromatic == (aromatic == 1));
  };
}

class ExprParser {
 public:
  explicit ExprParser(std::string_view s) : s_(s) {}

  AtomTest parse() {
    AtomTest t = low_and();
    if (pos_ != s_.size()) fail("trailing characters");
    return t;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw std::invalid_argument("bad atom query '" + std::string(s_) + "': " + what);
  }
  bool at(char c) const { return pos_ < s_.size() && s_[pos_] == c; }

  int number(int fallback) {
    if (pos_ >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_]))) return fallback;
    int v = 0;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) v = v * 10 + (s_[pos_++] - '0');
    return v;
  }

  AtomTest low_and() {
    AtomTest t = disjunction();
    while (at(';')) {
      ++pos_;
      t = [a = t, b = disjunction()](const Node& n) { return a(n) && b(n); };
    }
    return t;
  }

  AtomTest disjunction() {
    AtomTest t = high_and();
    while (at(',')) {
      ++pos_;
      t = [a = t, b = high_and()](const Node& n) { return a(n) || b(n); };
    }
    return t;
  }

  AtomTest high_and() {
    AtomTest t = primitive();
    while (pos_ < s_.size() && !at(',') && !at(';')) {
      if (at('&')) ++pos_;
      t = [a = t, b = primitive()](const Node& n) { return a(n) && b(n); };
    }
    return t;
  }

  AtomTest primitive() {
    if (pos_ >= s_.size()) fail("unexpected end");
    const char c = s_[pos_];
    if (c == '!') {
      ++pos_;
      return [t = primitive()](const Node& n) { return !t(n); };
    }
    if (c == '#') {
      ++pos_;
      const int z = number(-1);
      if (z < 0) fail("expected atomic number");
      return element_test(z, -1);
    }
    if (c == '*') {
      ++pos_;
      return [](const Node&) { return true; };
    }
    if (c == 'A') {
      ++pos_;
      return [](const Node& n) { return !n.aromatic; };
    }
    if (c == 'a') {
      ++pos_;
      return [](const Node& n) { return n.aromatic; };
    }
    if (c == 'H') {
      ++pos_;
      const int h = number(1);
      return [h](const Node& n) { return n.total_h == h; };
    }
    if (c == 'X') {
      ++pos_;
      const int x = number(1);
      return [x](const Node& n) { return n.connections == x; };
    }
    if (c == 'D') {
      ++pos_;
      const int d = number(1);
      return [d](const Node& n) { return n.degree == d; };
    }
    if (c == '+' || c == '-') {
      ++pos_;
      const int sign = c == '+' ? 1 : -1;
      const int charge = sign * number(1);
      return [charge](const Node& n) { return n.charge == charge; };
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const bool aromatic = std::islower(static_cast<unsigned char>(c)) != 0;
      std::string sym(1, static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
      if (!aromatic && pos_ + 1 < s_.size() && std::islower(static_cast<unsigned char>(s_[pos_ + 1]))) {
        const std::string two = sym + s_[pos_ + 1];
        if (find_element(two)) {
          pos_ += 2;
          return element_test(find_element(two)->atomic_number, 0);
        }
      }
      const auto e = find_element(sym);
      if (!e) fail("unknown element");
      ++pos_;
      return element_test(e->atomic_number, aromatic ? 1 : 0);
    }
    fail(std::string("unexpected '") + c + "'");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

struct Pattern::Impl {
  struct PatternAtom {
    AtomTest test;
    int parent = -1;
    BondQuery bond = BondQuery::kDefault;
  };
  std::vector<PatternAtom> atoms;

  bool extend(const ExpandedGraph& g, std::size_t k, std::vector<int>& mapping, std::vector<bool>& used) const {
    if (k == atoms.size()) return true;
    const PatternAtom& pa = atoms[k];
    for (const auto& [target, order] : g.adjacency[mapping[pa.parent]]) {
      if (used[target] || !bond_matches(pa.bond, order) || !pa.test(g.nodes[target])) continue;
      used[target] = true;
      mapping[k] = target;
      if (extend(g, k + 1, mapping, used)) return true;
      used[target] = false;
    }
    return false;
  }
};

Pattern::Pattern(std::string_view text) : impl_(std::make_unique<Impl>()) {
  std::vector<int> branch_stack;
  int previous = -1;
  BondQuery pending = BondQuery::kDefault;
  std::size_t pos = 0;
  auto add_atom = [&](AtomTest t) {
    impl_->atoms.push_back({std::move(t), previous, pending});
    previous = static_cast<int>(impl_->atoms.size()) - 1;
    pending = BondQuery::kDefault;
  };
  while (pos < text.size()) {
    const char c = text[pos];
    if (c == '[') {
      const std::size_t close = text.find(']', pos);
      if (close == std::string_view::npos) throw std::invalid_argument("unclosed bracket in pattern");
      add_atom(ExprParser(text.substr(pos + 1, close - pos - 1)).parse());
      pos = close + 1;
    } else if (c == '(') {
      branch_stack.push_back(previous);
      ++pos;
    } else if (c == ')') {
      if (branch_stack.empty()) throw std::invalid_argument("unbalanced branch in pattern");
      previous = branch_stack.back();
      branch_stack.pop_back();
      ++pos;
    } else if (c == '-' || c == '=' || c == '#' || c == ':' || c == '~') {
      pending = c == '-'   ? BondQuery::kSingle
                : c == '=' ? BondQuery::kDouble
                : c == '#' ? BondQuery::kTriple
                : c == ':' ? BondQuery::kAromatic
                           : BondQuery::kAny;
      ++pos;
    } else {
      std::size_t len = 1;
      if (pos + 1 < text.size() && std::isupper(static_cast<unsigned char>(c)) &&
          (text.substr(pos, 2) == "Cl" || text.substr(pos, 2) == "Br")) {
        len = 2;
      }
      add_atom(ExprParser(text.substr(pos, len)).parse());
      pos += len;
    }
  }
  if (impl_->atoms.empty()) throw std::invalid_argument("empty pattern");
}

Pattern::~Pattern() = default;
Pattern::Pattern(Pattern&&) noexcept = default;
Pattern& Pattern::operator=(Pattern&&) noexcept = default;

bool Pattern::matches_at(const ExpandedGraph& g, int root) const {
  if (!impl_->atoms[0].test(g.nodes[root])) return false;
  std::vector<int> mapping(impl_->atoms.size(), -1);
  std::vector<bool> used(g.nodes.size(), false);
  mapping[0] = root;
  used[root] = true;
  return impl_->extend(g, 1, mapping, used);
}

}  // namespace rep3net::chem::smarts
