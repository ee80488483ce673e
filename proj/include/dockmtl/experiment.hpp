#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dockmtl/dataset.hpp"
#include "dockmtl/rng.hpp"

namespace dockmtl {

enum class TrainMode : std::uint8_t { single, mtl };

inline TrainMode parse_train_mode(const std::string& s) {
  if (s == "single") return TrainMode::single;
  if (s == "mtl") return TrainMode::mtl;
  throw std::invalid_argument("unknown mode '" + s + "' (expected single or mtl)");
}

// Which labels of a pooled dataset go into one training run.
struct TaskSelection {
  std::string new_target;
  TrainMode mode = TrainMode::mtl;
  std::optional<std::size_t> new_size;  // labeled new-target compounds to keep
  std::optional<std::size_t> aux_size;  // labeled compounds kept per auxiliary task
  std::uint64_t seed = 0;
};

inline std::size_t task_index(const TaskDataset& ds, const std::string& name) {
  for (std::size_t t = 0; t < ds.task_count(); ++t)
    if (ds.task_names[t] == name) return t;
  throw std::invalid_argument("no task named '" + name + "' in dataset");
}

// Rows labeled for `task`, optionally reduced to a seeded random subset.
inline std::vector<std::size_t> sample_labeled(const TaskDataset& ds, std::size_t task, std::optional<std::size_t> limit,
                                               std::uint64_t seed) {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < ds.size(); ++r)
    if (ds.labeled(r, task)) rows.push_back(r);
  if (!limit) return rows;
  if (*limit > rows.size()) {
    throw std::invalid_argument("task '" + ds.task_names[task] + "' has " + std::to_string(rows.size()) +
                                " labels, " + std::to_string(*limit) + " requested");
  }
  Rng(seed).split("subsample").split(ds.task_names[task]).shuffle(rows);
  rows.resize(*limit);
  return rows;
}

// The new target becomes task 0; auxiliary tasks follow in file order and
// are dropped entirely in single mode.
inline TaskDataset assemble_training_set(const TaskDataset& ds, const TaskSelection& sel) {
  const std::size_t target = task_index(ds, sel.new_target);
  std::vector<std::size_t> tasks{target};
  if (sel.mode == TrainMode::mtl) {
    for (std::size_t t = 0; t < ds.task_count(); ++t)
      if (t != target) tasks.push_back(t);
  }
  std::vector<std::vector<std::uint8_t>> keep(tasks.size(), std::vector<std::uint8_t>(ds.size(), 0));
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    for (std::size_t r : sample_labeled(ds, tasks[i], i == 0 ? sel.new_size : sel.aux_size, sel.seed)) keep[i][r] = 1;
  }
  TaskDataset out;
  for (std::size_t t : tasks) {
    out.task_names.push_back(ds.task_names[t]);
    out.directions.push_back(ds.directions[t]);
  }
  for (std::size_t r = 0; r < ds.size(); ++r) {
    std::vector<std::optional<double>> labels;
    bool any = false;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      labels.push_back(keep[i][r] ? ds.label(r, tasks[i]) : std::nullopt);
      any = any || labels.back().has_value();
    }
    if (any) out.add_compound(ds.smiles[r], ds.compounds[r], labels);
  }
  return out;
}

}  // namespace dockmtl
