#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <future>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "dockmtl/metrics.hpp"
#include "dockmtl/trainer.hpp"

namespace dockmtl {

enum class Acquisition : std::uint8_t { greedy_mean, ucb };

struct ALConfig {
  std::size_t ensemble_size = 5;
  std::size_t total_budget = 1000;
  std::size_t n_rounds = 4;
  double init_fraction = 0.5;
  Acquisition acquisition = Acquisition::greedy_mean;
  double ucb_beta = 1.0;

  [[nodiscard]] std::size_t init_size() const {
    return static_cast<std::size_t>(std::llround(init_fraction * static_cast<double>(total_budget)));
  }
  [[nodiscard]] std::size_t round_batch() const {
    return n_rounds == 0 ? 0 : (total_budget - init_size()) / n_rounds;
  }

  void validate() const {
    if (ensemble_size < 1) throw std::invalid_argument("ensemble_size must be at least 1");
    if (total_budget < 1) throw std::invalid_argument("total_budget must be positive");
    if (!(init_fraction > 0 && init_fraction <= 1)) throw std::invalid_argument("init_fraction must lie in (0, 1]");
    if (init_size() > total_budget) throw std::invalid_argument("initial batch exceeds the budget");
    if (init_size() + n_rounds * round_batch() != total_budget) {
      throw std::invalid_argument("budget does not split evenly: init " + std::to_string(init_size()) + " + " +
                                  std::to_string(n_rounds) + " rounds must equal " + std::to_string(total_budget));
    }
    if (n_rounds > 0 && round_batch() == 0) throw std::invalid_argument("rounds would acquire nothing");
  }
};

class ActiveLearningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using LabelOracle = std::function<double(std::size_t pool_index)>;

struct ALRoundLog {
  std::size_t round = 0;
  std::size_t labeled_count = 0;
  std::size_t pool_size = 0;  // unlabeled compounds left
  double mean_acquisition_score = std::numeric_limits<double>::quiet_NaN();
};

struct ALResult {
  std::vector<ModelParams> ensemble;
  std::vector<std::size_t> labeled;  // pool indices in acquisition order
  std::vector<double> labels;
  std::vector<ALRoundLog> log;
};

inline void write_round_log_csv(std::ostream& os, const std::vector<ALRoundLog>& log) {
  os << "round,labeled_count,pool_size,mean_acquisition_score\n";
  for (const auto& r : log) {
    os << r.round << ',' << r.labeled_count << ',' << r.pool_size << ',';
    if (std::isnan(r.mean_acquisition_score)) {
      os << "nan";
    } else {
      os << r.mean_acquisition_score;
    }
    os << '\n';
  }
}

// Arithmetic mean of member predictions for task 0.
inline std::vector<double> ensemble_predict(std::span<const ModelParams> ensemble, std::span<const FeaturizedGraph> graphs) {
  if (ensemble.empty()) throw std::invalid_argument("ensemble_predict: empty ensemble");
  const std::size_t task0[] = {0};
  std::vector<double> mean(graphs.size(), 0.0);
  for (const ModelParams& m : ensemble) {
    const Tensor p = predict_dataset(m, graphs, task0);
    for (std::size_t i = 0; i < graphs.size(); ++i) mean[i] += p[i];
  }
  for (auto& v : mean) v /= static_cast<double>(ensemble.size());
  return mean;
}

// Scores used to rank candidates: the ensemble mean, optionally shifted by
// beta standard deviations towards the better end.
inline std::vector<double> acquisition_scores(const std::vector<std::vector<double>>& member_predictions, Acquisition acq,
                                              double beta, HitDirection dir) {
  if (member_predictions.empty()) throw std::invalid_argument("acquisition_scores: no members");
  const std::size_t n = member_predictions[0].size();
  const double m = static_cast<double>(member_predictions.size());
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0;
    for (const auto& p : member_predictions) mean += p[i];
    mean /= m;
    if (acq == Acquisition::greedy_mean) {
      out[i] = mean;
      continue;
    }
    double var = 0;
    for (const auto& p : member_predictions) var += (p[i] - mean) * (p[i] - mean);
    const double sd = std::sqrt(var / m);
    out[i] = dir == HitDirection::lower_is_better ? mean - beta * sd : mean + beta * sd;
  }
  return out;
}

namespace detail {

inline std::vector<ModelParams> train_ensemble(const TaskDataset& ds, const TrainConfig& base, std::size_t members) {
  std::vector<std::future<ModelParams>> jobs;
  std::vector<ModelParams> out;
  const bool parallel = std::thread::hardware_concurrency() > 1 && members > 1;
  for (std::size_t i = 0; i < members; ++i) {
    TrainConfig cfg = base;
    cfg.seed = base.seed + i;
    if (parallel) {
      jobs.push_back(std::async(std::launch::async, [&ds, cfg] { return train(ds, cfg).params; }));
    } else {
      out.push_back(train(ds, cfg).params);
    }
  }
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

}  // namespace detail

// Pool-based single-task active learning: a random initial batch, then
// n_rounds of (train ensemble, score the unlabeled pool, label the best
// round_batch), and a final ensemble trained on the whole labeled set.
inline ALResult al_run(std::span<const FeaturizedGraph> pool, const LabelOracle& oracle, const ALConfig& cfg,
                       const TrainConfig& train_cfg, HitDirection direction, const std::string& task_name = "T0") {
  cfg.validate();
  if (pool.size() < cfg.total_budget) {
    throw ActiveLearningError("pool of " + std::to_string(pool.size()) + " compounds is smaller than the budget " +
                              std::to_string(cfg.total_budget));
  }

  ALResult result;
  std::vector<std::uint8_t> taken(pool.size(), 0);
  auto acquire = [&](std::size_t index) {
    double y = 0;
    try {
      y = oracle(index);
    } catch (const std::exception& e) {
      throw ActiveLearningError("oracle failed on pool index " + std::to_string(index) + ": " + e.what());
    }
    if (!std::isfinite(y)) throw ActiveLearningError("oracle returned a non-finite label for pool index " + std::to_string(index));
    taken[index] = 1;
    result.labeled.push_back(index);
    result.labels.push_back(y);
  };
  auto labeled_dataset = [&] {
    TaskDataset ds;
    ds.task_names = {task_name};
    ds.directions = {direction};
    for (std::size_t i = 0; i < result.labeled.size(); ++i) {
      ds.add_compound(std::to_string(result.labeled[i]), pool[result.labeled[i]], {result.labels[i]});
    }
    return ds;
  };

  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng(train_cfg.seed).split("al_init").shuffle(order);
  for (std::size_t i = 0; i < cfg.init_size(); ++i) acquire(order[i]);
  result.log.push_back({0, result.labeled.size(), pool.size() - result.labeled.size(),
                        std::numeric_limits<double>::quiet_NaN()});

  for (std::size_t round = 1; round <= cfg.n_rounds; ++round) {
    const std::vector<ModelParams> ensemble = detail::train_ensemble(labeled_dataset(), train_cfg, cfg.ensemble_size);
    std::vector<std::size_t> candidates;
    std::vector<FeaturizedGraph> candidate_graphs;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (taken[i]) continue;
      candidates.push_back(i);
      candidate_graphs.push_back(pool[i]);
    }
    if (candidates.size() < cfg.round_batch()) throw ActiveLearningError("pool exhausted");
    std::vector<std::vector<double>> member_predictions;
    const std::size_t task0[] = {0};
    for (const ModelParams& m : ensemble) {
      const Tensor p = predict_dataset(m, candidate_graphs, task0);
      member_predictions.emplace_back(p.data().begin(), p.data().end());
    }
    const auto scores = acquisition_scores(member_predictions, cfg.acquisition, cfg.ucb_beta, direction);
    const auto chosen = top_indices(scores, direction, cfg.round_batch());
    double score_sum = 0;
    for (std::size_t c : chosen) {
      score_sum += scores[c];
      acquire(candidates[c]);
    }
    result.log.push_back({round, result.labeled.size(), pool.size() - result.labeled.size(),
                          chosen.empty() ? std::numeric_limits<double>::quiet_NaN()
                                         : score_sum / static_cast<double>(chosen.size())});
  }

  result.ensemble = detail::train_ensemble(labeled_dataset(), train_cfg, cfg.ensemble_size);
  return result;
}

}  // namespace dockmtl
