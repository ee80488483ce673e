// Train a small multi-task model on a synthetic benchmark and screen a
// held-out library with it.

#include <cstdio>
#include <vector>

#include "dockmtl/dockmtl.hpp"

int main() {
  dockmtl::tune_allocator();

  dockmtl::SynthOptions synth;
  synth.n_tasks = 3;
  synth.n_compounds = 900;
  synth.seed = 7;
  const auto bench = dockmtl::synth_generate(synth);

  // First 700 compounds for training, the rest as the screening library.
  std::vector<std::size_t> train_rows, test_rows;
  for (std::size_t i = 0; i < bench.data.size(); ++i) (i < 700 ? train_rows : test_rows).push_back(i);
  const auto train_ds = dockmtl::select_rows(bench.data, train_rows);
  const auto test_ds = dockmtl::select_rows(bench.data, test_rows);

  dockmtl::TrainConfig cfg;
  cfg.model.embed_dim = 32;
  cfg.model.num_layers = 3;
  cfg.model.head_hidden = 32;
  cfg.min_epochs = 30;
  cfg.patience = 10;
  cfg.max_epochs = 60;
  cfg.seed = 7;
  const auto result = dockmtl::train(train_ds, cfg);
  std::printf("best epoch %zu, validation loss %.4f\n", result.log.best_epoch, result.log.best_val_loss);

  const std::size_t task0[] = {0};
  const auto pred = dockmtl::predict_dataset(result.params, test_ds.compounds, task0);
  std::vector<double> truth, predicted;
  for (std::size_t i = 0; i < test_ds.size(); ++i) {
    truth.push_back(test_ds.value(i, 0));
    predicted.push_back(pred[i]);
  }
  std::printf("task %s: pearson %.3f  mse %.3f  recall(top 20 in top 10%%) %.3f\n", test_ds.task_names[0].c_str(),
              dockmtl::pearson(truth, predicted), dockmtl::mse(truth, predicted),
              dockmtl::recall_at(truth, predicted, test_ds.directions[0], 20, 0.10));
}
