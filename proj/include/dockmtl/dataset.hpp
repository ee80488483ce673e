#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dockmtl/featurizer.hpp"

namespace dockmtl {

enum class HitDirection : std::uint8_t { lower_is_better, higher_is_better };

inline std::string_view to_string(HitDirection d) {
  return d == HitDirection::lower_is_better ? "lower_is_better" : "higher_is_better";
}

inline HitDirection parse_hit_direction(std::string_view s) {
  if (s == "lower_is_better" || s == "lower") return HitDirection::lower_is_better;
  if (s == "higher_is_better" || s == "higher") return HitDirection::higher_is_better;
  throw std::invalid_argument("unknown hit direction '" + std::string(s) + "'");
}

// True when score a is strictly better than score b.
inline bool better(HitDirection d, double a, double b) {
  return d == HitDirection::lower_is_better ? a < b : a > b;
}

// Compounds with sparse per-task labels. Task 0 is the new target.
struct TaskDataset {
  std::vector<std::string> smiles;
  std::vector<FeaturizedGraph> compounds;
  std::vector<std::string> task_names;
  std::vector<HitDirection> directions;
  // Row-major compound x task; mask 1 marks a labeled entry.
  std::vector<double> values;
  std::vector<std::uint8_t> mask;

  [[nodiscard]] std::size_t size() const { return compounds.size(); }
  [[nodiscard]] std::size_t task_count() const { return task_names.size(); }

  [[nodiscard]] bool labeled(std::size_t row, std::size_t task) const { return mask[row * task_count() + task] != 0; }
  [[nodiscard]] double value(std::size_t row, std::size_t task) const { return values[row * task_count() + task]; }

  [[nodiscard]] std::optional<double> label(std::size_t row, std::size_t task) const {
    if (!labeled(row, task)) return std::nullopt;
    return value(row, task);
  }

  [[nodiscard]] std::size_t labeled_count(std::size_t task) const {
    std::size_t n = 0;
    for (std::size_t r = 0; r < size(); ++r) n += labeled(r, task) ? 1 : 0;
    return n;
  }

  void add_compound(std::string smi, FeaturizedGraph g, const std::vector<std::optional<double>>& labels) {
    if (labels.size() != task_count()) throw std::invalid_argument("add_compound: one label slot per task required");
    smiles.push_back(std::move(smi));
    compounds.push_back(std::move(g));
    for (const auto& l : labels) {
      values.push_back(l.value_or(0.0));
      mask.push_back(l ? 1 : 0);
    }
  }

  // Throws when a compound has no labeled task or the arrays disagree.
  void validate() const {
    if (task_names.empty()) throw std::invalid_argument("dataset has no tasks");
    if (directions.size() != task_names.size()) throw std::invalid_argument("one hit direction per task required");
    if (smiles.size() != compounds.size() || values.size() != size() * task_count() || mask.size() != values.size()) {
      throw std::invalid_argument("dataset arrays have inconsistent sizes");
    }
    for (std::size_t r = 0; r < size(); ++r) {
      bool any = false;
      for (std::size_t t = 0; t < task_count(); ++t) any = any || labeled(r, t);
      if (!any) throw std::invalid_argument("compound " + std::to_string(r) + " has no labeled task");
    }
  }
};

// Empty dataset sharing task metadata with `like`.
inline TaskDataset empty_like(const TaskDataset& like) {
  TaskDataset out;
  out.task_names = like.task_names;
  out.directions = like.directions;
  return out;
}

// Keeps only `tasks` (in that order) and drops compounds left unlabeled.
inline TaskDataset select_tasks(const TaskDataset& ds, const std::vector<std::size_t>& tasks) {
  TaskDataset out;
  for (std::size_t t : tasks) {
    if (t >= ds.task_count()) throw std::out_of_range("select_tasks: task out of range");
    out.task_names.push_back(ds.task_names[t]);
    out.directions.push_back(ds.directions[t]);
  }
  for (std::size_t r = 0; r < ds.size(); ++r) {
    std::vector<std::optional<double>> labels;
    bool any = false;
    for (std::size_t t : tasks) {
      labels.push_back(ds.label(r, t));
      any = any || labels.back().has_value();
    }
    if (any) out.add_compound(ds.smiles[r], ds.compounds[r], labels);
  }
  return out;
}

inline TaskDataset select_rows(const TaskDataset& ds, const std::vector<std::size_t>& rows) {
  TaskDataset out = empty_like(ds);
  for (std::size_t r : rows) {
    std::vector<std::optional<double>> labels;
    for (std::size_t t = 0; t < ds.task_count(); ++t) labels.push_back(ds.label(r, t));
    out.add_compound(ds.smiles[r], ds.compounds[r], labels);
  }
  return out;
}

}  // namespace dockmtl
