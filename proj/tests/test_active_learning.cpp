#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>
#include <vector>

#include "dockmtl/active_learning.hpp"
#include "dockmtl/allocator.hpp"
#include "dockmtl/metrics.hpp"
#include "dockmtl/synth.hpp"

using namespace dockmtl;

namespace {

TrainConfig tiny_train(std::uint64_t seed) {
  TrainConfig c;
  c.model.embed_dim = 8;
  c.model.num_layers = 2;
  c.model.head_hidden = 8;
  c.batch_size = 16;
  c.min_epochs = 2;
  c.patience = 1;
  c.max_epochs = 3;
  c.seed = seed;
  return c;
}

SynthDataset pool_data(std::size_t n, std::uint64_t seed) {
  SynthOptions o;
  o.n_compounds = n;
  o.n_tasks = 2;
  o.seed = seed;
  o.max_atoms = 12;
  return synth_generate(o);
}

class AllocatorEnv : public ::testing::Environment {
 public:
  void SetUp() override { tune_allocator(); }
};
const auto* const kEnv = ::testing::AddGlobalTestEnvironment(new AllocatorEnv);

}  // namespace

TEST(ALConfig, BudgetArithmetic) {
  ALConfig c;
  c.total_budget = 1000;
  c.init_fraction = 0.5;
  c.n_rounds = 4;
  EXPECT_EQ(c.init_size(), 500u);
  EXPECT_EQ(c.round_batch(), 125u);
  EXPECT_NO_THROW(c.validate());
  c.total_budget = 1002;  // 501 up front leaves 501, not divisible by 4
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.total_budget = 200;
  c.n_rounds = 0;
  c.init_fraction = 1.0;
  EXPECT_NO_THROW(c.validate());
  c.ensemble_size = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Acquisition, EnsembleMean) {
  const std::vector<std::vector<double>> preds{{1.0, 10.0}, {3.0, 10.0}, {5.0, 10.0}};
  const auto s = acquisition_scores(preds, Acquisition::greedy_mean, 1.0, HitDirection::lower_is_better);
  EXPECT_DOUBLE_EQ(s[0], 3.0);
  EXPECT_DOUBLE_EQ(s[1], 10.0);
}

TEST(Acquisition, UcbShiftsTowardBetterEnd) {
  const std::vector<std::vector<double>> preds{{1.0}, {3.0}, {5.0}};
  const double sd = std::sqrt(8.0 / 3.0);
  EXPECT_DOUBLE_EQ(acquisition_scores(preds, Acquisition::ucb, 2.0, HitDirection::lower_is_better)[0], 3.0 - 2 * sd);
  EXPECT_DOUBLE_EQ(acquisition_scores(preds, Acquisition::ucb, 2.0, HitDirection::higher_is_better)[0], 3.0 + 2 * sd);
}

TEST(Acquisition, UcbEqualsGreedyWithoutDisagreement) {
  Rng rng(1);
  std::vector<double> p(50);
  for (auto& v : p) v = rng.normal();
  const std::vector<std::vector<double>> preds{p, p, p};
  const auto g = acquisition_scores(preds, Acquisition::greedy_mean, 1.0, HitDirection::lower_is_better);
  const auto u = acquisition_scores(preds, Acquisition::ucb, 1.0, HitDirection::lower_is_better);
  EXPECT_EQ(top_indices(g, HitDirection::lower_is_better, 10), top_indices(u, HitDirection::lower_is_better, 10));
}

TEST(ActiveLearning, AcquiresBudgetWithoutRepeats) {
  const SynthDataset d = pool_data(120, 2);
  ALConfig cfg;
  cfg.total_budget = 40;
  cfg.init_fraction = 0.5;
  cfg.n_rounds = 2;
  cfg.ensemble_size = 2;
  std::vector<std::size_t> calls;
  const LabelOracle oracle = [&](std::size_t i) {
    calls.push_back(i);
    return d.data.value(i, 0);
  };
  const ALResult r = al_run(d.data.compounds, oracle, cfg, tiny_train(3), HitDirection::lower_is_better);
  EXPECT_EQ(r.labeled.size(), 40u);
  EXPECT_EQ(std::set<std::size_t>(r.labeled.begin(), r.labeled.end()).size(), 40u);
  EXPECT_EQ(calls, r.labeled);  // the oracle is asked once per acquisition
  EXPECT_EQ(r.ensemble.size(), 2u);
  ASSERT_EQ(r.log.size(), 3u);
  EXPECT_EQ(r.log[0].labeled_count, 20u);
  EXPECT_EQ(r.log[1].labeled_count, 30u);
  EXPECT_EQ(r.log[2].labeled_count, 40u);
  EXPECT_EQ(r.log[2].pool_size, 80u);
  for (std::size_t i = 0; i < r.labeled.size(); ++i) EXPECT_EQ(r.labels[i], d.data.value(r.labeled[i], 0));
  std::ostringstream os;
  write_round_log_csv(os, r.log);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "round,labeled_count,pool_size,mean_acquisition_score");
}

TEST(ActiveLearning, RoundPicksAreTopScoredCandidates) {
  // With one round, the acquired batch must be the best-scored unlabeled
  // compounds under an ensemble retrained on the initial batch.
  const SynthDataset d = pool_data(80, 4);
  ALConfig cfg;
  cfg.total_budget = 30;
  cfg.init_fraction = 0.5;
  cfg.n_rounds = 1;
  cfg.ensemble_size = 2;
  const TrainConfig tc = tiny_train(4);
  const ALResult r = al_run(d.data.compounds, [&](std::size_t i) { return d.data.value(i, 0); }, cfg, tc,
                            HitDirection::lower_is_better);
  TaskDataset init;
  init.task_names = {"T0"};
  init.directions = {HitDirection::lower_is_better};
  for (std::size_t i = 0; i < 15; ++i)
    init.add_compound(std::to_string(r.labeled[i]), d.data.compounds[r.labeled[i]], {r.labels[i]});
  const auto ensemble = detail::train_ensemble(init, tc, 2);
  std::vector<std::size_t> cand;
  std::vector<FeaturizedGraph> graphs;
  std::set<std::size_t> first(r.labeled.begin(), r.labeled.begin() + 15);
  for (std::size_t i = 0; i < 80; ++i) {
    if (first.count(i)) continue;
    cand.push_back(i);
    graphs.push_back(d.data.compounds[i]);
  }
  const auto mean = ensemble_predict(ensemble, graphs);
  std::vector<std::size_t> expected;
  for (auto c : top_indices(mean, HitDirection::lower_is_better, 15)) expected.push_back(cand[c]);
  EXPECT_EQ(std::vector<std::size_t>(r.labeled.begin() + 15, r.labeled.end()), expected);
}

TEST(ActiveLearning, Deterministic) {
  const SynthDataset d = pool_data(60, 5);
  ALConfig cfg;
  cfg.total_budget = 20;
  cfg.n_rounds = 1;
  cfg.ensemble_size = 2;
  const LabelOracle oracle = [&](std::size_t i) { return d.data.value(i, 0); };
  const auto a = al_run(d.data.compounds, oracle, cfg, tiny_train(9), HitDirection::lower_is_better);
  const auto b = al_run(d.data.compounds, oracle, cfg, tiny_train(9), HitDirection::lower_is_better);
  EXPECT_EQ(a.labeled, b.labeled);
  EXPECT_EQ(parameter_hash(a.ensemble[1], true, true), parameter_hash(b.ensemble[1], true, true));
}

TEST(ActiveLearning, DegenerateInputs) {
  const SynthDataset d = pool_data(30, 6);
  ALConfig cfg;
  cfg.total_budget = 40;
  cfg.n_rounds = 1;
  cfg.ensemble_size = 1;
  const LabelOracle oracle = [&](std::size_t i) { return d.data.value(i, 0); };
  EXPECT_THROW(al_run(d.data.compounds, oracle, cfg, tiny_train(1), HitDirection::lower_is_better), ActiveLearningError);
  cfg.total_budget = 20;
  const LabelOracle broken = [](std::size_t) { return std::nan(""); };
  EXPECT_THROW(al_run(d.data.compounds, broken, cfg, tiny_train(1), HitDirection::lower_is_better), ActiveLearningError);
  // The whole budget up front: no rounds, just the final ensemble.
  cfg.init_fraction = 1.0;
  cfg.n_rounds = 0;
  const auto r = al_run(d.data.compounds, oracle, cfg, tiny_train(1), HitDirection::lower_is_better);
  EXPECT_EQ(r.labeled.size(), 20u);
  EXPECT_EQ(r.log.size(), 1u);
}
