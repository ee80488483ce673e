#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "dockmtl/trainer.hpp"

namespace dockmtl {

struct TransferConfig {
  TrainConfig train;
  std::size_t warmup_epochs = 20;  // head-only epochs before full fine-tuning
};

struct TransferResult {
  ModelParams params;
  TrainingLog log;
  std::size_t phase2_first_epoch = 0;
};

// Copies every backbone array (embeddings, self-loop vectors, GIN MLPs,
// batch-norm affine and running statistics) from `source` into `target`.
inline void copy_backbone(const ModelParams& source, ModelParams& target) {
  if (!(source.config.embed_dim == target.config.embed_dim && source.config.num_layers == target.config.num_layers)) {
    throw std::invalid_argument("backbone dimensions differ: pretrained d=" + std::to_string(source.config.embed_dim) +
                                ", K=" + std::to_string(source.config.num_layers) + " vs configured d=" +
                                std::to_string(target.config.embed_dim) + ", K=" +
                                std::to_string(target.config.num_layers));
  }
  target.node_tables = source.node_tables;
  target.layers = source.layers;
}

// Phase 1 trains only the freshly initialised head for warmup_epochs with the
// pretrained backbone frozen (batch-norm statistics included); phase 2
// continues with every parameter under the early-stopping protocol.
inline TransferResult transfer_train(const ModelParams& pretrained, const TaskDataset& new_ds, const TransferConfig& cfg) {
  if (new_ds.task_count() != 1) throw std::invalid_argument("transfer_train: new dataset must have exactly one task");
  new_ds.validate();
  cfg.train.validate();
  ModelParams params = init_model(cfg.train.model, 1, cfg.train.seed);
  copy_backbone(pretrained, params);

  const TrainValSplit split = split_train_val(new_ds, cfg.train.seed, cfg.train.val_fraction);
  TransferResult result{params, {}, cfg.warmup_epochs + 1};
  result.log.seed = cfg.train.seed;
  EarlyStopping stopper(cfg.train.min_epochs, cfg.train.patience);

  if (cfg.warmup_epochs > 0) {
    FitOptions warmup;
    warmup.fixed_epochs = cfg.warmup_epochs;
    warmup.train_backbone = false;
    warmup.update_running_stats = false;
    fit(params, new_ds, split, cfg.train, warmup, stopper, result.log, result.params);
  }

  FitOptions finetune;
  finetune.first_epoch = cfg.warmup_epochs + 1;
  fit(params, new_ds, split, cfg.train, finetune, stopper, result.log, result.params);
  result.params.set_requires_grad(true, true);
  return result;
}

}  // namespace dockmtl
