#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dockmtl/dataset.hpp"
#include "dockmtl/featurizer.hpp"
#include "dockmtl/rng.hpp"
#include "dockmtl/smiles.hpp"

namespace dockmtl {

// Interpretable whole-molecule descriptors behind the synthetic scores.
struct Descriptors {
  double atom_count = 0;
  double ring_bond_count = 0;
  double heteroatom_count = 0;
  double mean_degree = 0;

  [[nodiscard]] std::array<double, 4> as_array() const {
    return {atom_count, ring_bond_count, heteroatom_count, mean_degree};
  }
};

inline Descriptors compute_descriptors(const MolGraph& g) {
  Descriptors d;
  d.atom_count = static_cast<double>(g.atoms.size());
  for (const Bond& b : g.bonds) d.ring_bond_count += b.in_ring ? 1 : 0;
  double degree_sum = 0;
  for (const Atom& a : g.atoms) {
    d.heteroatom_count += (a.atomic_number != 6 && a.atomic_number != 1) ? 1 : 0;
    degree_sum += a.degree;
  }
  d.mean_degree = g.atoms.empty() ? 0 : degree_sum / static_cast<double>(g.atoms.size());
  return d;
}

struct SynthOptions {
  std::size_t n_tasks = 4;
  std::size_t n_compounds = 1000;  // every compound is labeled for every task
  std::uint64_t seed = 0;
  std::size_t min_atoms = 6;
  std::size_t max_atoms = 18;
  double noise = 0.1;
  // a_i = 1 and b_i = 0 for every task when set.
  bool unit_coefficients = false;
};

struct SynthTruth {
  // latent = bias + sum_j weights[j] * descriptor_j (docking-like: lower is better)
  std::array<double, 4> weights = {-0.15, -0.35, -0.6, -1.5};
  double bias = 8.5;
  std::vector<double> slope;
  std::vector<double> intercept;
  std::vector<double> noise;

  [[nodiscard]] double latent(const Descriptors& d) const {
    const auto x = d.as_array();
    double s = bias;
    for (std::size_t j = 0; j < x.size(); ++j) s += weights[j] * x[j];
    return s;
  }
};

struct SynthDataset {
  TaskDataset data;
  SynthTruth truth;
  std::vector<double> latent;
};

namespace detail {

// Random connected C/N/O skeleton: a random tree, a few ring-closing bonds
// between atoms four or five bonds apart, and occasional double bonds;
// written out as SMILES by depth-first traversal.
class RandomMolecule {
 public:
  RandomMolecule(Rng& rng, std::size_t min_atoms, std::size_t max_atoms) {
    const std::size_t n = min_atoms + rng.below(max_atoms - min_atoms + 1);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = rng.uniform();
      element_.push_back(u < 0.7 ? 'C' : u < 0.85 ? 'N' : 'O');
      adj_.emplace_back();
      if (i == 0) continue;
      std::vector<std::size_t> open;
      for (std::size_t j = 0; j < i; ++j)
        if (free_valence(j) >= 1 && compatible(j, i)) open.push_back(j);
      if (open.empty()) {
        element_[i] = 'C';
        for (std::size_t j = 0; j < i; ++j)
          if (free_valence(j) >= 1) open.push_back(j);
      }
      add_bond(open[rng.below(open.size())], i, 1);
    }
    const std::size_t rings = rng.below(3);
    for (std::size_t r = 0; r < rings; ++r) {
      std::vector<std::pair<std::size_t, std::size_t>> candidates;
      for (std::size_t a = 0; a < n; ++a) {
        if (free_valence(a) < 1) continue;
        const auto dist = distances(a);
        for (std::size_t b = a + 1; b < n; ++b) {
          if ((dist[b] == 4 || dist[b] == 5) && free_valence(b) >= 1 && compatible(a, b)) candidates.emplace_back(a, b);
        }
      }
      if (candidates.empty()) break;
      const auto [a, b] = candidates[rng.below(candidates.size())];
      add_bond(a, b, 1);
    }
    for (auto& e : edges_) {
      if (rng.uniform() < 0.12 && free_valence(e.a) >= 1 && free_valence(e.b) >= 1) {
        e.order = 2;
        used_[e.a] += 1;
        used_[e.b] += 1;
      }
    }
  }

  [[nodiscard]] std::string smiles() const {
    const std::size_t n = element_.size();
    std::vector<std::size_t> pre(n, kNone), parent_edge(n, kNone);
    std::vector<std::vector<std::size_t>> children(n);
    std::size_t counter = 0;
    discover(0, kNone, pre, parent_edge, children, counter);

    // Ring bonds open at the endpoint visited first.
    std::vector<std::vector<std::size_t>> opens(n), closes(n);
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const Edge& ed = edges_[e];
      if (parent_edge[ed.a] == e || parent_edge[ed.b] == e) continue;
      const std::size_t first = pre[ed.a] < pre[ed.b] ? ed.a : ed.b;
      opens[first].push_back(e);
      closes[first == ed.a ? ed.b : ed.a].push_back(e);
    }
    std::string out;
    std::vector<int> digit_of(edges_.size(), 0);
    std::vector<bool> in_use(10, false);
    emit(0, children, opens, closes, digit_of, in_use, out);
    return out;
  }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  struct Edge {
    std::size_t a, b;
    int order;
  };

  [[nodiscard]] int max_valence(std::size_t i) const { return element_[i] == 'C' ? 4 : element_[i] == 'N' ? 3 : 2; }
  [[nodiscard]] int free_valence(std::size_t i) const { return max_valence(i) - used_[i]; }
  // No peroxide-like O-O bonds.
  [[nodiscard]] bool compatible(std::size_t a, std::size_t b) const { return !(element_[a] == 'O' && element_[b] == 'O'); }

  void add_bond(std::size_t a, std::size_t b, int order) {
    if (used_.size() < element_.size()) used_.resize(element_.size(), 0);
    edges_.push_back({a, b, order});
    adj_[a].push_back(edges_.size() - 1);
    adj_[b].push_back(edges_.size() - 1);
    used_[a] += order;
    used_[b] += order;
  }

  [[nodiscard]] std::vector<std::size_t> distances(std::size_t from) const {
    std::vector<std::size_t> dist(element_.size(), kNone);
    std::vector<std::size_t> queue{from};
    dist[from] = 0;
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      const std::size_t v = queue[qi];
      for (std::size_t e : adj_[v]) {
        const std::size_t w = edges_[e].a == v ? edges_[e].b : edges_[e].a;
        if (dist[w] == kNone) {
          dist[w] = dist[v] + 1;
          queue.push_back(w);
        }
      }
    }
    return dist;
  }

  void discover(std::size_t v, std::size_t via, std::vector<std::size_t>& pre, std::vector<std::size_t>& parent_edge,
                std::vector<std::vector<std::size_t>>& children, std::size_t& counter) const {
    pre[v] = counter++;
    parent_edge[v] = via;
    for (std::size_t e : adj_[v]) {
      const std::size_t w = edges_[e].a == v ? edges_[e].b : edges_[e].a;
      if (pre[w] != kNone) continue;
      children[v].push_back(e);
      discover(w, e, pre, parent_edge, children, counter);
    }
  }

  static const char* bond_symbol(int order) { return order == 2 ? "=" : ""; }

  void emit(std::size_t v, const std::vector<std::vector<std::size_t>>& children,
            const std::vector<std::vector<std::size_t>>& opens, const std::vector<std::vector<std::size_t>>& closes,
            std::vector<int>& digit_of, std::vector<bool>& in_use, std::string& out) const {
    out += element_[v];
    for (std::size_t e : closes[v]) {
      out += bond_symbol(edges_[e].order);
      out += static_cast<char>('0' + digit_of[e]);
      in_use[static_cast<std::size_t>(digit_of[e])] = false;
    }
    for (std::size_t e : opens[v]) {
      int d = 1;
      while (in_use[static_cast<std::size_t>(d)]) ++d;
      in_use[static_cast<std::size_t>(d)] = true;
      digit_of[e] = d;
      out += bond_symbol(edges_[e].order);
      out += static_cast<char>('0' + d);
    }
    for (std::size_t i = 0; i < children[v].size(); ++i) {
      const std::size_t e = children[v][i];
      const std::size_t w = edges_[e].a == v ? edges_[e].b : edges_[e].a;
      const bool last = i + 1 == children[v].size();
      if (!last) out += '(';
      out += bond_symbol(edges_[e].order);
      emit(w, children, opens, closes, digit_of, in_use, out);
      if (!last) out += ')';
    }
  }

  std::vector<char> element_;
  std::vector<int> used_ = std::vector<int>(64, 0);
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> adj_;
};

}  // namespace detail

inline std::string random_smiles(Rng& rng, std::size_t min_atoms = 6, std::size_t max_atoms = 18) {
  if (min_atoms < 1 || max_atoms < min_atoms || max_atoms > 60) throw std::invalid_argument("random_smiles: bad atom range");
  return detail::RandomMolecule(rng, min_atoms, max_atoms).smiles();
}

// Desk-scale docking stand-in: random molecules scored by task-specific
// affine maps of one shared descriptor-linear latent plus Gaussian noise.
inline SynthDataset synth_generate(const SynthOptions& opt) {
  if (opt.n_tasks < 2) throw std::invalid_argument("synth_generate: at least 2 tasks required");
  if (opt.n_compounds == 0) throw std::invalid_argument("synth_generate: no compounds requested");
  const Rng root(opt.seed);
  SynthDataset out;
  Rng coef = root.split("coefficients");
  for (std::size_t t = 0; t < opt.n_tasks; ++t) {
    out.truth.slope.push_back(opt.unit_coefficients ? 1.0 : coef.uniform(0.6, 1.4));
    out.truth.intercept.push_back(opt.unit_coefficients ? 0.0 : coef.uniform(-1.0, 1.0));
    out.truth.noise.push_back(opt.noise);
    out.data.task_names.push_back("T" + std::to_string(t));
    out.data.directions.push_back(HitDirection::lower_is_better);
  }
  Rng mol_rng = root.split("molecules");
  Rng noise_rng = root.split("noise");
  for (std::size_t i = 0; i < opt.n_compounds; ++i) {
    const std::string smi = random_smiles(mol_rng, opt.min_atoms, opt.max_atoms);
    const MolGraph g = parse_smiles(smi);
    const double s = out.truth.latent(compute_descriptors(g));
    std::vector<std::optional<double>> labels;
    for (std::size_t t = 0; t < opt.n_tasks; ++t) {
      const double eps = opt.noise > 0 ? noise_rng.normal(0.0, opt.noise) : 0.0;
      labels.push_back(out.truth.slope[t] * s + out.truth.intercept[t] + eps);
    }
    out.latent.push_back(s);
    out.data.add_compound(smi, featurize(g), labels);
  }
  return out;
}

}  // namespace dockmtl
