#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dockmtl/adam.hpp"
#include "dockmtl/dataset.hpp"
#include "dockmtl/gin.hpp"
#include "dockmtl/rng.hpp"

namespace dockmtl {

struct TrainConfig {
  ModelConfig model;  // d, K, head width, dropout
  Scalar lr = 0.001;
  std::size_t batch_size = 128;
  Scalar val_fraction = 0.2;
  std::size_t min_epochs = 100;
  std::size_t patience = 50;
  std::size_t max_epochs = 1000;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(val_fraction > 0 && val_fraction < 1)) throw std::invalid_argument("val_fraction must lie in (0, 1)");
    if (patience < 1) throw std::invalid_argument("patience must be at least 1");
    if (batch_size < 2) throw std::invalid_argument("batch_size must be at least 2");
    if (max_epochs < 1) throw std::invalid_argument("max_epochs must be at least 1");
    if (!(lr > 0)) throw std::invalid_argument("lr must be positive");
    if (!(model.dropout >= 0 && model.dropout < 1)) throw std::invalid_argument("dropout must lie in [0, 1)");
  }
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Rows of a dataset together with the subset of their labels that belong to
// one partition.
struct DataSplit {
  std::vector<std::size_t> rows;
  std::vector<std::uint8_t> mask;  // rows.size() x task_count

  [[nodiscard]] std::size_t labeled_count(std::size_t task, std::size_t task_count) const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) n += mask[i * task_count + task];
    return n;
  }
};

struct TrainValSplit {
  DataSplit train;
  DataSplit val;
};

// Every labeled entry of `ds` in the training partition.
inline DataSplit full_split(const TaskDataset& ds) {
  DataSplit s;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    bool any = false;
    for (std::size_t t = 0; t < ds.task_count(); ++t) any = any || ds.labeled(r, t);
    if (!any) continue;
    s.rows.push_back(r);
    for (std::size_t t = 0; t < ds.task_count(); ++t) s.mask.push_back(ds.labeled(r, t) ? 1 : 0);
  }
  return s;
}

inline std::size_t validation_count(std::size_t labeled, Scalar val_fraction) {
  return static_cast<std::size_t>(std::llround(val_fraction * static_cast<Scalar>(labeled)));
}

// Per-task random split of labeled entries. A compound's labels for
// different tasks may land in different partitions.
inline TrainValSplit split_train_val(const TaskDataset& ds, std::uint64_t seed, Scalar val_fraction = 0.2) {
  if (ds.size() == 0) throw std::invalid_argument("split_train_val: empty dataset");
  const std::size_t T = ds.task_count();
  std::vector<std::uint8_t> in_val(ds.size() * T, 0);
  const Rng root = Rng(seed).split("split");
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<std::size_t> labeled;
    for (std::size_t r = 0; r < ds.size(); ++r)
      if (ds.labeled(r, t)) labeled.push_back(r);
    if (labeled.size() < 5) {
      throw std::invalid_argument("split_train_val: task '" + ds.task_names[t] + "' has " +
                                  std::to_string(labeled.size()) + " labeled entries, at least 5 required");
    }
    Rng rng = root.split(t);
    rng.shuffle(labeled);
    const std::size_t n_val = std::max<std::size_t>(1, validation_count(labeled.size(), val_fraction));
    for (std::size_t i = 0; i < n_val; ++i) in_val[labeled[i] * T + t] = 1;
  }
  TrainValSplit out;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    bool any_train = false, any_val = false;
    for (std::size_t t = 0; t < T; ++t) {
      if (!ds.labeled(r, t)) continue;
      (in_val[r * T + t] ? any_val : any_train) = true;
    }
    if (any_train) {
      out.train.rows.push_back(r);
      for (std::size_t t = 0; t < T; ++t) out.train.mask.push_back(ds.labeled(r, t) && !in_val[r * T + t]);
    }
    if (any_val) {
      out.val.rows.push_back(r);
      for (std::size_t t = 0; t < T; ++t) out.val.mask.push_back(ds.labeled(r, t) && in_val[r * T + t]);
    }
  }
  return out;
}

// Squared error summed over labeled (compound, task) pairs divided by their
// count; unlabeled predictions get exactly zero gradient.
inline Var masked_loss(Tape& tape, Var pred, const Tensor& labels, const Tensor& mask) {
  return ops::masked_mse_loss(tape, pred, labels, mask);
}

inline Scalar masked_loss(const Tensor& pred, const Tensor& labels, const Tensor& mask) {
  Tape tape(false);
  return tape.value(ops::masked_mse_loss(tape, tape.constant(pred), labels, mask)).item();
}

// Stop once epoch > min_epochs and val_loss > train_loss held for more than
// `patience` consecutive epochs counted after the minimum. Remembers the
// earliest epoch with the smallest validation loss.
class EarlyStopping {
 public:
  EarlyStopping(std::size_t min_epochs, std::size_t patience) : min_epochs_(min_epochs), patience_(patience) {}

  bool observe(std::size_t epoch, Scalar train_loss, Scalar val_loss) {
    improved_ = val_loss < best_val_;
    if (improved_) {
      best_val_ = val_loss;
      best_epoch_ = epoch;
    }
    if (epoch > min_epochs_) violations_ = val_loss > train_loss ? violations_ + 1 : 0;
    return violations_ > patience_;
  }

  [[nodiscard]] bool improved() const { return improved_; }
  [[nodiscard]] std::size_t best_epoch() const { return best_epoch_; }
  [[nodiscard]] Scalar best_val() const { return best_val_; }
  [[nodiscard]] std::size_t violations() const { return violations_; }

 private:
  std::size_t min_epochs_;
  std::size_t patience_;
  std::size_t violations_ = 0;
  std::size_t best_epoch_ = 0;
  Scalar best_val_ = std::numeric_limits<Scalar>::infinity();
  bool improved_ = false;
};

struct EpochRecord {
  std::size_t epoch = 0;
  Scalar train_loss = 0;
  Scalar val_loss = 0;
  std::uint64_t backbone_hash = 0;
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  Scalar best_val_loss = std::numeric_limits<Scalar>::infinity();
  std::size_t stop_epoch = 0;
  std::string stop_reason;
  std::uint64_t seed = 0;
};

struct TrainResult {
  ModelParams params;
  TrainingLog log;
};

namespace detail {

struct BatchData {
  GraphBatch graphs;
  Tensor labels;
  Tensor mask;
};

inline BatchData make_batch_data(const TaskDataset& ds, const DataSplit& split, std::span<const std::size_t> positions) {
  const std::size_t T = ds.task_count();
  std::vector<const FeaturizedGraph*> graphs;
  graphs.reserve(positions.size());
  BatchData b;
  b.labels = Tensor::matrix(positions.size(), T);
  b.mask = Tensor::matrix(positions.size(), T);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const std::size_t pos = positions[i];
    const std::size_t row = split.rows[pos];
    graphs.push_back(&ds.compounds[row]);
    for (std::size_t t = 0; t < T; ++t) {
      if (!split.mask[pos * T + t]) continue;
      b.labels(i, t) = ds.value(row, t);
      b.mask(i, t) = 1;
    }
  }
  b.graphs = make_batch(std::span<const FeaturizedGraph* const>(graphs));
  return b;
}

// Batch boundaries over n items; a trailing batch of one is merged into its
// predecessor so train-mode batch norm always sees at least two graphs.
inline std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t batch_size) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t start = 0; start < n; start += batch_size) out.emplace_back(start, std::min(n, start + batch_size));
  if (out.size() > 1 && out.back().second - out.back().first < 2) {
    out[out.size() - 2].second = out.back().second;
    out.pop_back();
  }
  return out;
}

}  // namespace detail

// Mean over fixed-order batches of the eval-mode masked loss.
class SplitEvaluator {
 public:
  SplitEvaluator(const TaskDataset& ds, const DataSplit& split, std::size_t batch_size) {
    std::vector<std::size_t> positions(split.rows.size());
    for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;
    for (auto [lo, hi] : detail::batch_ranges(positions.size(), batch_size)) {
      batches_.push_back(detail::make_batch_data(
          ds, split, std::span<const std::size_t>(positions).subspan(lo, hi - lo)));
    }
  }

  [[nodiscard]] Scalar loss(const ModelParams& params) const {
    if (batches_.empty()) throw std::invalid_argument("SplitEvaluator: empty partition");
    const auto tasks = all_tasks(params);
    Scalar total = 0;
    for (const auto& b : batches_) total += masked_loss(predict_values(b.graphs, params, tasks), b.labels, b.mask);
    return total / static_cast<Scalar>(batches_.size());
  }

 private:
  std::vector<detail::BatchData> batches_;
};

struct FitOptions {
  std::size_t first_epoch = 1;
  // Exactly this many epochs when set; otherwise run until early stopping
  // or max_epochs.
  std::optional<std::size_t> fixed_epochs;
  bool train_backbone = true;
  bool update_running_stats = true;
};

// Runs epochs on `params` in place. `best` receives a copy of the parameters
// whenever the validation loss reaches a new minimum.
inline void fit(ModelParams& params, const TaskDataset& ds, const TrainValSplit& split, const TrainConfig& cfg,
                const FitOptions& opt, EarlyStopping& stopper, TrainingLog& log, ModelParams& best) {
  if (split.train.rows.empty() || split.val.rows.empty()) throw std::invalid_argument("fit: empty partition");
  if (params.task_count() != ds.task_count()) throw std::invalid_argument("fit: head count differs from task count");

  params.set_requires_grad(opt.train_backbone, true);
  std::vector<Tensor*> trainable = params.trainable(opt.train_backbone, true);
  AdamState adam;
  adam.lr = cfg.lr;

  const SplitEvaluator train_eval(ds, split.train, cfg.batch_size);
  const SplitEvaluator val_eval(ds, split.val, cfg.batch_size);
  const Rng shuffle_root = Rng(cfg.seed).split("shuffle");
  const Rng dropout_root = Rng(cfg.seed).split("dropout");
  const auto tasks = all_tasks(params);

  std::size_t epoch = opt.first_epoch;
  for (std::size_t done = 0;; ++done, ++epoch) {
    if (opt.fixed_epochs && done == *opt.fixed_epochs) break;
    if (!opt.fixed_epochs && epoch > cfg.max_epochs) {
      log.stop_reason = "max_epochs";
      break;
    }
    std::vector<std::size_t> order(split.train.rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle = shuffle_root.split(epoch);
    shuffle.shuffle(order);

    const auto ranges = detail::batch_ranges(order.size(), cfg.batch_size);
    for (std::size_t bi = 0; bi < ranges.size(); ++bi) {
      const auto [lo, hi] = ranges[bi];
      const detail::BatchData batch =
          detail::make_batch_data(ds, split.train, std::span<const std::size_t>(order).subspan(lo, hi - lo));
      Tape tape;
      ForwardOptions fo;
      fo.train = true;
      fo.update_running_stats = opt.update_running_stats;
      fo.rng = dropout_root.split(epoch).split(bi);
      const Var pred = predict(tape, batch.graphs, params, tasks, fo);
      const Var loss = masked_loss(tape, pred, batch.labels, batch.mask);
      const Scalar loss_value = tape.value(loss).item();
      if (!std::isfinite(loss_value)) {
        std::ostringstream msg;
        msg << "non-finite training loss at epoch " << epoch << ", batch " << bi << " (" << batch.graphs.num_graphs
            << " graphs, " << batch.graphs.num_nodes << " atoms)";
        throw TrainingError(msg.str());
      }
      tape.backward(loss);
      std::vector<const Tensor*> grads;
      grads.reserve(trainable.size());
      for (Tensor* p : trainable) grads.push_back(tape.grad_of(*p));
      try {
        adam_step(trainable, grads, adam);
      } catch (const NonFiniteGradientError& e) {
        throw TrainingError(std::string(e.what()) + " at epoch " + std::to_string(epoch));
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_eval.loss(params);
    rec.val_loss = val_eval.loss(params);
    rec.backbone_hash = parameter_hash(params, true, false);
    if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.val_loss)) {
      throw TrainingError("non-finite epoch loss at epoch " + std::to_string(epoch));
    }
    log.epochs.push_back(rec);
    const bool stop = stopper.observe(epoch, rec.train_loss, rec.val_loss);
    if (stopper.improved()) {
      best = params;
      log.best_epoch = stopper.best_epoch();
      log.best_val_loss = stopper.best_val();
    }
    log.stop_epoch = epoch;
    if (stop && !opt.fixed_epochs) {
      log.stop_reason = "early_stopping";
      break;
    }
  }
  params.set_requires_grad(true, true);
}

inline TrainResult train_with_split(const TaskDataset& ds, const TrainValSplit& split, const TrainConfig& cfg) {
  cfg.validate();
  ModelParams params = init_model(cfg.model, ds.task_count(), cfg.seed);
  TrainResult result{params, {}};
  result.log.seed = cfg.seed;
  EarlyStopping stopper(cfg.min_epochs, cfg.patience);
  fit(params, ds, split, cfg, FitOptions{}, stopper, result.log, result.params);
  result.params.set_requires_grad(true, true);
  return result;
}

// Multi-task training on pooled data (single-task when the dataset has one task).
inline TrainResult train(const TaskDataset& ds, const TrainConfig& cfg) {
  ds.validate();
  cfg.validate();
  return train_with_split(ds, split_train_val(ds, cfg.seed, cfg.val_fraction), cfg);
}

inline TrainResult train_single_task(const TaskDataset& ds, const TrainConfig& cfg) {
  return train(select_tasks(ds, {0}), cfg);
}

// Eval-mode predictions for every compound, batched.
inline Tensor predict_dataset(const ModelParams& params, std::span<const FeaturizedGraph> graphs,
                              std::span<const std::size_t> tasks, std::size_t batch_size = 128) {
  Tensor out = Tensor::matrix(graphs.size(), tasks.size());
  for (std::size_t lo = 0; lo < graphs.size(); lo += batch_size) {
    const std::size_t hi = std::min(graphs.size(), lo + batch_size);
    const Tensor p = predict_values(make_batch(graphs.subspan(lo, hi - lo)), params, tasks);
    std::copy(p.data().begin(), p.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(lo * tasks.size()));
  }
  return out;
}

}  // namespace dockmtl
