#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "dockmtl/allocator.hpp"
#include "dockmtl/metrics.hpp"
#include "dockmtl/synth.hpp"
#include "dockmtl/trainer.hpp"

using namespace dockmtl;

namespace {

class AllocatorEnv : public ::testing::Environment {
 public:
  void SetUp() override { tune_allocator(); }
};
const auto* const kEnv = ::testing::AddGlobalTestEnvironment(new AllocatorEnv);

}  // namespace

TEST(Synth, Deterministic) {
  SynthOptions o;
  o.n_compounds = 50;
  o.seed = 11;
  const auto a = synth_generate(o), b = synth_generate(o);
  EXPECT_EQ(a.data.smiles, b.data.smiles);
  EXPECT_EQ(a.data.values, b.data.values);
  o.seed = 12;
  EXPECT_NE(synth_generate(o).data.smiles, a.data.smiles);
}

TEST(Synth, ShapesAndMetadata) {
  SynthOptions o;
  o.n_compounds = 30;
  o.n_tasks = 3;
  const auto d = synth_generate(o);
  EXPECT_EQ(d.data.size(), 30u);
  EXPECT_EQ(d.data.task_names, (std::vector<std::string>{"T0", "T1", "T2"}));
  for (auto dir : d.data.directions) EXPECT_EQ(dir, HitDirection::lower_is_better);
  EXPECT_EQ(d.latent.size(), 30u);
  EXPECT_EQ(d.truth.slope.size(), 3u);
  for (std::size_t r = 0; r < 30; ++r)
    for (std::size_t t = 0; t < 3; ++t) EXPECT_TRUE(d.data.labeled(r, t));
  o.n_tasks = 1;
  EXPECT_THROW(synth_generate(o), std::invalid_argument);
}

TEST(Synth, UnitCoefficientsWithoutNoiseGiveIdenticalColumns) {
  SynthOptions o;
  o.n_compounds = 40;
  o.noise = 0.0;
  o.unit_coefficients = true;
  const auto d = synth_generate(o);
  for (std::size_t r = 0; r < d.data.size(); ++r) {
    for (std::size_t t = 0; t < d.data.task_count(); ++t) EXPECT_EQ(d.data.value(r, t), d.latent[r]);
  }
}

TEST(Synth, LabelsFollowTheLatentModel) {
  SynthOptions o;
  o.n_compounds = 60;
  o.noise = 0.0;
  o.seed = 5;
  const auto d = synth_generate(o);
  for (std::size_t r = 0; r < d.data.size(); ++r) {
    const double latent = d.truth.latent(compute_descriptors(parse_smiles(d.data.smiles[r])));
    EXPECT_NEAR(latent, d.latent[r], 1e-12);
    for (std::size_t t = 0; t < d.data.task_count(); ++t) {
      EXPECT_NEAR(d.data.value(r, t), d.truth.slope[t] * latent + d.truth.intercept[t], 1e-12);
    }
  }
  for (double s : d.truth.slope) {
    EXPECT_GE(s, 0.6);
    EXPECT_LE(s, 1.4);
  }
}

TEST(Synth, TasksAreCorrelatedButDistinct) {
  SynthOptions o;
  o.n_compounds = 800;
  o.noise = 0.3;
  const auto d = synth_generate(o);
  std::vector<double> a, b;
  for (std::size_t r = 0; r < d.data.size(); ++r) {
    a.push_back(d.data.value(r, 0));
    b.push_back(d.data.value(r, 1));
  }
  const double r = pearson(a, b);
  EXPECT_GT(r, 0.9);
  EXPECT_LT(r, 1.0);
}

TEST(Synth, RandomMoleculesParseWithinSizeRange) {
  Rng rng(3);
  std::set<std::string> distinct;
  for (int i = 0; i < 500; ++i) {
    const std::string s = random_smiles(rng, 4, 15);
    const MolGraph g = parse_smiles(s);
    ASSERT_GE(g.atoms.size(), 4u) << s;
    ASSERT_LE(g.atoms.size(), 15u) << s;
    distinct.insert(s);
  }
  EXPECT_GT(distinct.size(), 450u);
}

TEST(Synth, DescriptorsOfKnownMolecules) {
  const Descriptors benzene = compute_descriptors(parse_smiles("c1ccccc1"));
  EXPECT_EQ(benzene.atom_count, 6);
  EXPECT_EQ(benzene.ring_bond_count, 6);
  EXPECT_EQ(benzene.heteroatom_count, 0);
  EXPECT_EQ(benzene.mean_degree, 2);
  const Descriptors ethanol = compute_descriptors(parse_smiles("CCO"));
  EXPECT_EQ(ethanol.atom_count, 3);
  EXPECT_EQ(ethanol.ring_bond_count, 0);
  EXPECT_EQ(ethanol.heteroatom_count, 1);
  EXPECT_DOUBLE_EQ(ethanol.mean_degree, 4.0 / 3.0);
}

TEST(Synth, OracleIsLearnableFromTwoThousandSamples) {
  SynthOptions o;
  o.n_tasks = 2;
  o.n_compounds = 2500;
  o.seed = 21;
  const TaskDataset all = synth_generate(o).data;
  std::vector<std::size_t> train_rows(2000), test_rows(500);
  for (std::size_t i = 0; i < 2000; ++i) train_rows[i] = i;
  for (std::size_t i = 0; i < 500; ++i) test_rows[i] = 2000 + i;
  TrainConfig cfg;
  cfg.model.embed_dim = 32;
  cfg.model.num_layers = 3;
  cfg.model.head_hidden = 32;
  cfg.min_epochs = 60;
  cfg.max_epochs = 60;
  cfg.seed = 21;
  const TrainResult r = train_single_task(select_rows(all, train_rows), cfg);
  const TaskDataset test = select_rows(all, test_rows);
  const std::size_t task0[] = {0};
  const Tensor p = predict_dataset(r.params, test.compounds, task0);
  std::vector<double> y, pred(p.data().begin(), p.data().end());
  for (std::size_t i = 0; i < test.size(); ++i) y.push_back(test.value(i, 0));
  EXPECT_GE(pearson(y, pred), 0.9);
}
