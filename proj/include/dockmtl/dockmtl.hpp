#pragma once

#include "dockmtl/active_learning.hpp"
#include "dockmtl/adam.hpp"
#include "dockmtl/allocator.hpp"
#include "dockmtl/dataset.hpp"
#include "dockmtl/embeddings.hpp"
#include "dockmtl/experiment.hpp"
#include "dockmtl/featurizer.hpp"
#include "dockmtl/gin.hpp"
#include "dockmtl/grad_check.hpp"
#include "dockmtl/metrics.hpp"
#include "dockmtl/rng.hpp"
#include "dockmtl/smiles.hpp"
#include "dockmtl/synth.hpp"
#include "dockmtl/tensor.hpp"
#include "dockmtl/trainer.hpp"
#include "dockmtl/transfer.hpp"
