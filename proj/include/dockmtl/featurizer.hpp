#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "dockmtl/rng.hpp"
#include "dockmtl/smiles.hpp"

namespace dockmtl {

// Categorical widths of the one-hot atom and bond features.
struct FeatureSchema {
  static constexpr std::size_t kAtomFields = 7;
  static constexpr std::size_t kBondFields = 3;

  // atomic type, formal charge, degree, chirality tag, number of hydrogens,
  // aromaticity, hybridization
  static constexpr std::array<std::size_t, kAtomFields> kAtomWidths = {119, 16, 11, 4, 9, 2, 5};
  // bond direction, bond type, is in ring
  static constexpr std::array<std::size_t, kBondFields> kBondWidths = {7, 4, 2};

  static constexpr std::size_t atom_width() {
    std::size_t s = 0;
    for (auto w : kAtomWidths) s += w;
    return s;
  }
  static constexpr std::size_t bond_width() {
    std::size_t s = 0;
    for (auto w : kBondWidths) s += w;
    return s;
  }

  // Identifies the schema in checkpoints; changes whenever a width changes.
  static std::uint64_t hash() {
    std::string text = "atom:";
    for (auto w : kAtomWidths) text += std::to_string(w) + ",";
    text += "bond:";
    for (auto w : kBondWidths) text += std::to_string(w) + ",";
    return Rng::fnv1a(text);
  }
};

enum class Hybridization : std::uint8_t { s = 0, sp = 1, sp2 = 2, sp3 = 3, other = 4 };

using AtomFeatures = std::array<int, FeatureSchema::kAtomFields>;
using BondFeatures = std::array<int, FeatureSchema::kBondFields>;

struct FeaturizedGraph {
  std::vector<AtomFeatures> atom_indices;
  std::vector<BondFeatures> bond_indices;
  std::vector<std::pair<std::size_t, std::size_t>> bond_endpoints;

  [[nodiscard]] std::size_t atom_count() const { return atom_indices.size(); }
  [[nodiscard]] std::size_t bond_count() const { return bond_indices.size(); }
};

// Heuristic hybridization: the parser does not perceive it.
inline Hybridization infer_hybridization(const MolGraph& g, std::size_t atom) {
  const Atom& a = g.atoms[atom];
  if (a.atomic_number == 1) return Hybridization::s;
  int doubles = 0;
  int triples = 0;
  for (std::size_t bi : g.adjacency[atom]) {
    if (g.bonds[bi].order == BondOrder::double_) ++doubles;
    if (g.bonds[bi].order == BondOrder::triple) ++triples;
  }
  const int steric = a.degree + a.implicit_h;
  if (steric > 4) return Hybridization::other;
  if (triples > 0 || doubles >= 2) return Hybridization::sp;
  if (a.aromatic || (doubles > 0 && steric <= 3)) return Hybridization::sp2;
  return Hybridization::sp3;
}

inline AtomFeatures atom_features(const MolGraph& g, std::size_t atom) {
  const Atom& a = g.atoms[atom];
  AtomFeatures f{};
  f[0] = (a.atomic_number >= 1 && a.atomic_number <= 118) ? a.atomic_number : 0;
  f[1] = (a.formal_charge >= -7 && a.formal_charge <= 7) ? a.formal_charge + 7 : 15;
  f[2] = a.degree <= 9 ? a.degree : 10;
  f[3] = static_cast<int>(a.chirality);
  f[4] = a.implicit_h <= 7 ? a.implicit_h : 8;
  f[5] = a.aromatic ? 1 : 0;
  f[6] = static_cast<int>(infer_hybridization(g, atom));
  return f;
}

inline BondFeatures bond_features(const Bond& b) {
  return {static_cast<int>(b.direction), static_cast<int>(b.order), b.in_ring ? 1 : 0};
}

inline FeaturizedGraph featurize(const MolGraph& g) {
  FeaturizedGraph out;
  out.atom_indices.reserve(g.atoms.size());
  for (std::size_t i = 0; i < g.atoms.size(); ++i) out.atom_indices.push_back(atom_features(g, i));
  out.bond_indices.reserve(g.bonds.size());
  out.bond_endpoints.reserve(g.bonds.size());
  for (const Bond& b : g.bonds) {
    out.bond_indices.push_back(bond_features(b));
    out.bond_endpoints.emplace_back(b.begin, b.end);
  }
  return out;
}

inline FeaturizedGraph featurize_smiles(std::string_view smiles) { return featurize(parse_smiles(smiles)); }

}  // namespace dockmtl
