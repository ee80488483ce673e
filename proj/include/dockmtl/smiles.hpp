#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dockmtl {

enum class Chirality : std::uint8_t { none, clockwise, counterclockwise, other };

enum class BondOrder : std::uint8_t { single, double_, triple, aromatic };

enum class BondDirection : std::uint8_t { none, up, down, begin_wedge, begin_dash, either, unknown };

struct Atom {
  int atomic_number = 0;
  int formal_charge = 0;
  std::optional<int> explicit_h;  // bracket atoms only
  int implicit_h = 0;             // total attached hydrogens
  bool aromatic = false;
  bool bracket = false;
  Chirality chirality = Chirality::none;
  int degree = 0;
};

struct Bond {
  std::size_t begin = 0;
  std::size_t end = 0;
  BondOrder order = BondOrder::single;
  BondDirection direction = BondDirection::none;
  bool in_ring = false;

  [[nodiscard]] std::size_t other(std::size_t atom) const { return atom == begin ? end : begin; }
};

struct MolGraph {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  // adjacency[a] lists the indices of bonds incident to atom a.
  std::vector<std::vector<std::size_t>> adjacency;

  [[nodiscard]] std::size_t atom_count() const { return atoms.size(); }
  [[nodiscard]] std::size_t bond_count() const { return bonds.size(); }

  [[nodiscard]] std::optional<std::size_t> find_bond(std::size_t a, std::size_t b) const {
    for (std::size_t bi : adjacency[a]) {
      if (bonds[bi].other(a) == b) return bi;
    }
    return std::nullopt;
  }
};

enum class ParseErrorKind : std::uint8_t {
  empty_input,
  unclosed_ring,
  unmatched_parenthesis,
  unknown_atom,
  charge_or_hydrogen_syntax,
  bad_bracket_atom,
  unexpected_character,
  dangling_bond,
  ring_bond_conflict,
  duplicate_bond,
  multiple_fragments,
};

inline std::string_view to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::empty_input: return "empty_input";
    case ParseErrorKind::unclosed_ring: return "unclosed_ring";
    case ParseErrorKind::unmatched_parenthesis: return "unmatched_parenthesis";
    case ParseErrorKind::unknown_atom: return "unknown_atom";
    case ParseErrorKind::charge_or_hydrogen_syntax: return "charge_or_hydrogen_syntax";
    case ParseErrorKind::bad_bracket_atom: return "bad_bracket_atom";
    case ParseErrorKind::unexpected_character: return "unexpected_character";
    case ParseErrorKind::dangling_bond: return "dangling_bond";
    case ParseErrorKind::ring_bond_conflict: return "ring_bond_conflict";
    case ParseErrorKind::duplicate_bond: return "duplicate_bond";
    case ParseErrorKind::multiple_fragments: return "multiple_fragments";
  }
  return "unknown";
}

class SmilesParseError : public std::runtime_error {
 public:
  SmilesParseError(ParseErrorKind kind, std::size_t offset, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + " at offset " + std::to_string(offset) +
                           ": " + detail),
        kind_(kind),
        offset_(offset) {}

  [[nodiscard]] ParseErrorKind kind() const { return kind_; }
  [[nodiscard]] std::size_t offset() const { return offset_; }

 private:
  ParseErrorKind kind_;
  std::size_t offset_;
};

namespace elements {

inline constexpr std::array<std::string_view, 119> kSymbols = {
    "*",  "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg", "Al", "Si",
    "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",  "Cr", "Mn", "Fe", "Co", "Ni", "Cu",
    "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru",
    "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr",
    "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W",
    "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac",
    "Th", "Pa", "U",  "Np", "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf",
    "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og"};

inline int atomic_number(std::string_view symbol) {
  for (std::size_t z = 1; z < kSymbols.size(); ++z) {
    if (kSymbols[z] == symbol) return static_cast<int>(z);
  }
  return 0;
}

// Default valences for the organic subset; empty for everything else.
inline std::vector<int> organic_valences(int z) {
  switch (z) {
    case 5: return {3};
    case 6: return {4};
    case 7: return {3, 5};
    case 8: return {2};
    case 15: return {3, 5};
    case 16: return {2, 4, 6};
    case 9:
    case 17:
    case 35:
    case 53: return {1};
    default: return {};
  }
}

}  // namespace elements

// Bond-order sum of an atom with aromatic bonds counted as 1.5, floored.
inline int bond_order_sum(const MolGraph& g, std::size_t atom) {
  int twice = 0;
  for (std::size_t bi : g.adjacency[atom]) {
    switch (g.bonds[bi].order) {
      case BondOrder::single: twice += 2; break;
      case BondOrder::double_: twice += 4; break;
      case BondOrder::triple: twice += 6; break;
      case BondOrder::aromatic: twice += 3; break;
    }
  }
  return twice / 2;
}

// Marks every bond that is not a bridge (i.e. lies on a cycle) as in_ring.
inline MolGraph perceive_rings(MolGraph g) {
  const std::size_t n = g.atoms.size();
  constexpr std::size_t kUnvisited = static_cast<std::size_t>(-1);
  std::vector<std::size_t> disc(n, kUnvisited), low(n, 0);
  for (auto& b : g.bonds) b.in_ring = true;
  std::size_t timer = 0;

  struct Frame {
    std::size_t atom;
    std::size_t parent_bond;
    std::size_t next;
  };
  std::vector<Frame> stack;
  for (std::size_t root = 0; root < n; ++root) {
    if (disc[root] != kUnvisited) continue;
    disc[root] = low[root] = timer++;
    stack.push_back({root, kUnvisited, 0});
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next < g.adjacency[f.atom].size()) {
        const std::size_t bi = g.adjacency[f.atom][f.next++];
        if (bi == f.parent_bond) continue;
        const std::size_t to = g.bonds[bi].other(f.atom);
        if (disc[to] == kUnvisited) {
          disc[to] = low[to] = timer++;
          stack.push_back({to, bi, 0});
        } else {
          low[f.atom] = std::min(low[f.atom], disc[to]);
        }
      } else {
        const Frame done = f;
        stack.pop_back();
        if (!stack.empty()) {
          const std::size_t parent = stack.back().atom;
          low[parent] = std::min(low[parent], low[done.atom]);
          if (low[done.atom] > disc[parent]) g.bonds[done.parent_bond].in_ring = false;
        }
      }
    }
  }
  return g;
}

namespace detail {

class SmilesParser {
 public:
  explicit SmilesParser(std::string_view s) : s_(s) {}

  MolGraph parse() {
    if (s_.empty()) fail(ParseErrorKind::empty_input, 0, "empty SMILES string");

    std::optional<std::size_t> prev;
    std::vector<std::pair<std::size_t, std::size_t>> branches;  // (atom, offset of '(')

    while (pos_ < s_.size()) {
      const char c = s_[pos_];
      if (c == '(') {
        if (!prev) fail(ParseErrorKind::unexpected_character, pos_, "branch before any atom");
        if (pending_) fail(ParseErrorKind::dangling_bond, pos_, "bond before '('");
        branches.emplace_back(*prev, pos_);
        ++pos_;
        if (pos_ < s_.size() && s_[pos_] == ')') {
          fail(ParseErrorKind::unexpected_character, pos_, "empty branch");
        }
      } else if (c == ')') {
        if (branches.empty()) fail(ParseErrorKind::unmatched_parenthesis, pos_, "unmatched ')'");
        if (pending_) fail(ParseErrorKind::dangling_bond, pending_->offset, "bond not followed by atom");
        prev = branches.back().first;
        branches.pop_back();
        ++pos_;
      } else if (is_bond_char(c)) {
        if (!prev) fail(ParseErrorKind::dangling_bond, pos_, "bond before any atom");
        if (pending_) fail(ParseErrorKind::unexpected_character, pos_, "two consecutive bonds");
        pending_ = bond_from_char(c, pos_);
        ++pos_;
      } else if (c == '.') {
        fail(ParseErrorKind::multiple_fragments, pos_, "multi-fragment SMILES are not supported");
      } else if (c == '%' || (c >= '0' && c <= '9')) {
        if (!prev) fail(ParseErrorKind::unexpected_character, pos_, "ring closure before any atom");
        ring_closure(*prev);
      } else {
        const std::size_t atom = read_atom();
        if (prev) {
          connect(*prev, atom, pending_, pos_);
        } else if (pending_) {
          fail(ParseErrorKind::dangling_bond, pending_->offset, "bond before first atom");
        }
        pending_.reset();
        prev = atom;
      }
    }

    if (pending_) fail(ParseErrorKind::dangling_bond, pending_->offset, "trailing bond");
    if (!branches.empty()) {
      fail(ParseErrorKind::unmatched_parenthesis, branches.back().second, "unclosed '('");
    }
    if (!rings_.empty()) {
      const auto& open = rings_.begin()->second;
      fail(ParseErrorKind::unclosed_ring, open.offset,
           "ring bond " + std::to_string(rings_.begin()->first) + " never closed");
    }

    assign_hydrogens();
    return perceive_rings(std::move(g_));
  }

 private:
  struct PendingBond {
    BondOrder order = BondOrder::single;
    BondDirection direction = BondDirection::none;
    bool explicit_order = false;
    std::size_t offset = 0;
  };
  struct OpenRing {
    std::size_t atom;
    std::optional<PendingBond> bond;
    std::size_t offset;
  };

  [[noreturn]] static void fail(ParseErrorKind kind, std::size_t offset, const std::string& msg) {
    throw SmilesParseError(kind, offset, msg);
  }

  static bool is_bond_char(char c) {
    return c == '-' || c == '=' || c == '#' || c == ':' || c == '/' || c == '\\';
  }

  static PendingBond bond_from_char(char c, std::size_t offset) {
    PendingBond b;
    b.offset = offset;
    b.explicit_order = true;
    switch (c) {
      case '=': b.order = BondOrder::double_; break;
      case '#': b.order = BondOrder::triple; break;
      case ':': b.order = BondOrder::aromatic; break;
      case '/':
        b.direction = BondDirection::up;
        break;
      case '\\':
        b.direction = BondDirection::down;
        break;
      default: break;
    }
    return b;
  }

  void ring_closure(std::size_t atom) {
    const std::size_t start = pos_;
    int number = 0;
    if (s_[pos_] == '%') {
      if (pos_ + 2 >= s_.size() || !isdigit(s_[pos_ + 1]) || !isdigit(s_[pos_ + 2])) {
        fail(ParseErrorKind::unexpected_character, pos_, "'%' must be followed by two digits");
      }
      number = (s_[pos_ + 1] - '0') * 10 + (s_[pos_ + 2] - '0');
      pos_ += 3;
    } else {
      number = s_[pos_] - '0';
      ++pos_;
    }

    auto it = rings_.find(number);
    if (it == rings_.end()) {
      rings_.emplace(number, OpenRing{atom, pending_, start});
      pending_.reset();
      return;
    }
    OpenRing open = it->second;
    rings_.erase(it);
    std::optional<PendingBond> bond = open.bond;
    if (pending_) {
      if (bond && (bond->order != pending_->order || bond->explicit_order != pending_->explicit_order)) {
        fail(ParseErrorKind::ring_bond_conflict, start, "ring closure bond symbols disagree");
      }
      bond = pending_;
    }
    pending_.reset();
    if (open.atom == atom) fail(ParseErrorKind::duplicate_bond, start, "ring closure onto itself");
    connect(open.atom, atom, bond, start);
  }

  void connect(std::size_t a, std::size_t b, const std::optional<PendingBond>& pending, std::size_t offset) {
    if (g_.find_bond(a, b)) fail(ParseErrorKind::duplicate_bond, offset, "atoms already bonded");
    Bond bond;
    bond.begin = a;
    bond.end = b;
    if (pending && pending->explicit_order) {
      bond.order = pending->order;
      bond.direction = pending->direction;
    } else if (g_.atoms[a].aromatic && g_.atoms[b].aromatic) {
      bond.order = BondOrder::aromatic;
    }
    if (bond.order == BondOrder::aromatic && !(g_.atoms[a].aromatic && g_.atoms[b].aromatic)) {
      bond.order = BondOrder::single;
    }
    const std::size_t index = g_.bonds.size();
    g_.bonds.push_back(bond);
    g_.adjacency[a].push_back(index);
    g_.adjacency[b].push_back(index);
    ++g_.atoms[a].degree;
    ++g_.atoms[b].degree;
  }

  std::size_t add_atom(const Atom& atom) {
    g_.atoms.push_back(atom);
    g_.adjacency.emplace_back();
    return g_.atoms.size() - 1;
  }

  std::size_t read_atom() {
    const char c = s_[pos_];
    if (c == '[') return read_bracket_atom();

    Atom atom;
    const std::size_t start = pos_;
    auto two = [&](char next) { return pos_ + 1 < s_.size() && s_[pos_ + 1] == next; };
    switch (c) {
      case 'B':
        if (two('r')) {
          atom.atomic_number = 35;
          ++pos_;
        } else {
          atom.atomic_number = 5;
        }
        break;
      case 'C':
        if (two('l')) {
          atom.atomic_number = 17;
          ++pos_;
        } else {
          atom.atomic_number = 6;
        }
        break;
      case 'N': atom.atomic_number = 7; break;
      case 'O': atom.atomic_number = 8; break;
      case 'P': atom.atomic_number = 15; break;
      case 'S': atom.atomic_number = 16; break;
      case 'F': atom.atomic_number = 9; break;
      case 'I': atom.atomic_number = 53; break;
      case 'b': atom.atomic_number = 5; atom.aromatic = true; break;
      case 'c': atom.atomic_number = 6; atom.aromatic = true; break;
      case 'n': atom.atomic_number = 7; atom.aromatic = true; break;
      case 'o': atom.atomic_number = 8; atom.aromatic = true; break;
      case 'p': atom.atomic_number = 15; atom.aromatic = true; break;
      case 's': atom.atomic_number = 16; atom.aromatic = true; break;
      default:
        fail(ParseErrorKind::unknown_atom, start, std::string("unknown atom symbol '") + c + "'");
    }
    ++pos_;
    return add_atom(atom);
  }

  std::size_t read_bracket_atom() {
    const std::size_t open = pos_;
    const std::size_t close = s_.find(']', pos_);
    if (close == std::string_view::npos) fail(ParseErrorKind::bad_bracket_atom, open, "missing ']'");
    ++pos_;
    Atom atom;
    atom.bracket = true;

    while (pos_ < close && isdigit(s_[pos_])) ++pos_;  // isotope, discarded

    if (pos_ >= close) fail(ParseErrorKind::unknown_atom, pos_, "bracket atom without element");
    const std::size_t sym_start = pos_;
    if (std::islower(static_cast<unsigned char>(s_[pos_]))) {
      // Aromatic: b c n o p s se as
      static constexpr std::array<std::pair<std::string_view, int>, 8> kAromatic = {{
          {"se", 34}, {"as", 33}, {"b", 5}, {"c", 6}, {"n", 7}, {"o", 8}, {"p", 15}, {"s", 16}}};
      bool found = false;
      for (const auto& [sym, z] : kAromatic) {
        if (s_.substr(pos_, sym.size()) == sym && pos_ + sym.size() <= close) {
          atom.atomic_number = z;
          atom.aromatic = true;
          pos_ += sym.size();
          found = true;
          break;
        }
      }
      if (!found) fail(ParseErrorKind::unknown_atom, sym_start, "unknown aromatic symbol");
    } else if (std::isupper(static_cast<unsigned char>(s_[pos_]))) {
      // Prefer a two-letter symbol when it exists.
      int z = 0;
      if (pos_ + 1 < close && std::islower(static_cast<unsigned char>(s_[pos_ + 1]))) {
        z = elements::atomic_number(s_.substr(pos_, 2));
        if (z != 0) pos_ += 2;
      }
      if (z == 0) {
        z = elements::atomic_number(s_.substr(pos_, 1));
        if (z == 0) fail(ParseErrorKind::unknown_atom, sym_start, "unknown element symbol");
        ++pos_;
      }
      atom.atomic_number = z;
    } else if (s_[pos_] == '*') {
      fail(ParseErrorKind::unknown_atom, sym_start, "wildcard atoms are not supported");
    } else {
      fail(ParseErrorKind::unknown_atom, sym_start, "expected element symbol");
    }

    if (pos_ < close && s_[pos_] == '@') {
      ++pos_;
      if (pos_ < close && s_[pos_] == '@') {
        atom.chirality = Chirality::clockwise;
        ++pos_;
      } else if (pos_ < close && std::isupper(static_cast<unsigned char>(s_[pos_])) && s_[pos_] != 'H') {
        // @TH1, @AL2, @SP3, @TB5, @OH12 ...
        atom.chirality = Chirality::other;
        pos_ += 2;
        while (pos_ < close && isdigit(s_[pos_])) ++pos_;
      } else {
        atom.chirality = Chirality::counterclockwise;
      }
    }

    if (pos_ < close && s_[pos_] == 'H') {
      ++pos_;
      int count = 1;
      if (pos_ < close && isdigit(s_[pos_])) {
        count = s_[pos_] - '0';
        ++pos_;
        if (pos_ < close && isdigit(s_[pos_])) {
          fail(ParseErrorKind::charge_or_hydrogen_syntax, pos_, "hydrogen count has more than one digit");
        }
      }
      atom.explicit_h = count;
    } else {
      atom.explicit_h = 0;
    }

    if (pos_ < close && (s_[pos_] == '+' || s_[pos_] == '-')) {
      const char sign = s_[pos_];
      const int unit = sign == '+' ? 1 : -1;
      ++pos_;
      if (pos_ < close && s_[pos_] == sign) {
        ++pos_;
        atom.formal_charge = 2 * unit;
      } else if (pos_ < close && isdigit(s_[pos_])) {
        int magnitude = 0;
        while (pos_ < close && isdigit(s_[pos_])) magnitude = magnitude * 10 + (s_[pos_++] - '0');
        if (magnitude > 15) fail(ParseErrorKind::charge_or_hydrogen_syntax, pos_, "charge too large");
        atom.formal_charge = unit * magnitude;
      } else {
        atom.formal_charge = unit;
      }
    }

    if (pos_ < close && s_[pos_] == ':') {
      ++pos_;
      if (pos_ >= close || !isdigit(s_[pos_])) {
        fail(ParseErrorKind::bad_bracket_atom, pos_, "atom class needs digits");
      }
      while (pos_ < close && isdigit(s_[pos_])) ++pos_;
    }

    if (pos_ != close) {
      fail(ParseErrorKind::charge_or_hydrogen_syntax, pos_,
           std::string("unexpected '") + s_[pos_] + "' inside bracket atom");
    }
    pos_ = close + 1;
    return add_atom(atom);
  }

  void assign_hydrogens() {
    for (std::size_t i = 0; i < g_.atoms.size(); ++i) {
      Atom& a = g_.atoms[i];
      if (a.bracket) {
        a.implicit_h = a.explicit_h.value_or(0);
        continue;
      }
      const int used = bond_order_sum(g_, i);
      a.implicit_h = 0;
      for (int v : elements::organic_valences(a.atomic_number)) {
        if (v >= used) {
          a.implicit_h = v - used;
          break;
        }
      }
    }
  }

  static bool isdigit(char c) { return c >= '0' && c <= '9'; }

  std::string_view s_;
  std::size_t pos_ = 0;
  MolGraph g_;
  std::optional<PendingBond> pending_;
  std::map<int, OpenRing> rings_;
};

}  // namespace detail

// Parses a single-molecule SMILES string. Throws SmilesParseError.
inline MolGraph parse_smiles(std::string_view smiles) { return detail::SmilesParser(smiles).parse(); }

}  // namespace dockmtl
