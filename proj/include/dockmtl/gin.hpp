#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dockmtl/featurizer.hpp"
#include "dockmtl/rng.hpp"
#include "dockmtl/tensor.hpp"

namespace dockmtl {

struct ModelConfig {
  std::size_t embed_dim = 256;   // d
  std::size_t num_layers = 8;    // K
  std::size_t head_hidden = 256;
  Scalar dropout = 0.2;
  Scalar bn_momentum = 0.1;
  Scalar bn_eps = 1e-5;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct Linear {
  Tensor weight;  // in x out
  Tensor bias;    // 1 x out
};

struct BatchNorm {
  Tensor gamma;
  Tensor beta;
  Tensor running_mean;
  Tensor running_var;
};

struct GinLayer {
  std::array<Tensor, FeatureSchema::kBondFields> edge_tables;
  Tensor self_loop;  // 1 x d, the edge term of the implicit (v, v) self edge
  Linear hidden;     // d -> 2d
  Linear out;        // 2d -> d
  BatchNorm norm;
};

struct TaskHead {
  Linear hidden;  // d -> head_hidden
  Linear out;     // head_hidden -> 1
};

enum class ParamRole : std::uint8_t { backbone, head, running_stat };

class SchemaError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ModelParams {
  ModelConfig config;
  std::array<Tensor, FeatureSchema::kAtomFields> node_tables;
  std::vector<GinLayer> layers;
  std::vector<TaskHead> heads;

  [[nodiscard]] std::size_t task_count() const { return heads.size(); }

  // Visits every array in a fixed order: f(name, tensor, role).
  template <class F>
  void visit(F&& f) {
    for (std::size_t i = 0; i < node_tables.size(); ++i) f("node_table." + std::to_string(i), node_tables[i], ParamRole::backbone);
    for (std::size_t k = 0; k < layers.size(); ++k) {
      GinLayer& l = layers[k];
      const std::string p = "layer." + std::to_string(k) + ".";
      for (std::size_t j = 0; j < l.edge_tables.size(); ++j) f(p + "edge_table." + std::to_string(j), l.edge_tables[j], ParamRole::backbone);
      f(p + "self_loop", l.self_loop, ParamRole::backbone);
      f(p + "hidden.weight", l.hidden.weight, ParamRole::backbone);
      f(p + "hidden.bias", l.hidden.bias, ParamRole::backbone);
      f(p + "out.weight", l.out.weight, ParamRole::backbone);
      f(p + "out.bias", l.out.bias, ParamRole::backbone);
      f(p + "norm.gamma", l.norm.gamma, ParamRole::backbone);
      f(p + "norm.beta", l.norm.beta, ParamRole::backbone);
      f(p + "norm.running_mean", l.norm.running_mean, ParamRole::running_stat);
      f(p + "norm.running_var", l.norm.running_var, ParamRole::running_stat);
    }
    for (std::size_t t = 0; t < heads.size(); ++t) {
      TaskHead& h = heads[t];
      const std::string p = "head." + std::to_string(t) + ".";
      f(p + "hidden.weight", h.hidden.weight, ParamRole::head);
      f(p + "hidden.bias", h.hidden.bias, ParamRole::head);
      f(p + "out.weight", h.out.weight, ParamRole::head);
      f(p + "out.bias", h.out.bias, ParamRole::head);
    }
  }

  template <class F>
  void visit(F&& f) const {
    const_cast<ModelParams*>(this)->visit([&](const std::string& name, Tensor& t, ParamRole role) {
      f(name, static_cast<const Tensor&>(t), role);
    });
  }

  // Learnable arrays (everything except batch-norm running statistics).
  std::vector<Tensor*> trainable(bool include_backbone = true, bool include_heads = true) {
    std::vector<Tensor*> out;
    visit([&](const std::string&, Tensor& t, ParamRole role) {
      if ((role == ParamRole::backbone && include_backbone) || (role == ParamRole::head && include_heads)) out.push_back(&t);
    });
    return out;
  }

  void set_requires_grad(bool backbone, bool heads_flag) {
    visit([&](const std::string&, Tensor& t, ParamRole role) {
      t.requires_grad = role == ParamRole::backbone ? backbone : role == ParamRole::head ? heads_flag : false;
    });
  }

  [[nodiscard]] bool all_finite() const {
    bool ok = true;
    visit([&](const std::string&, const Tensor& t, ParamRole) { ok = ok && t.all_finite(); });
    return ok;
  }
};

// FNV-1a over the raw bytes of every array with the given roles.
inline std::uint64_t parameter_hash(const ModelParams& p, bool backbone, bool heads, bool running_stats = true) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  p.visit([&](const std::string&, const Tensor& t, ParamRole role) {
    const bool take = (role == ParamRole::backbone && backbone) || (role == ParamRole::head && heads) ||
                      (role == ParamRole::running_stat && running_stats && backbone);
    if (!take) return;
    const auto* bytes = reinterpret_cast<const unsigned char*>(t.data().data());
    for (std::size_t i = 0; i < t.size() * sizeof(Scalar); ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  });
  return h;
}

namespace detail {

inline Tensor glorot(std::size_t fan_in, std::size_t fan_out, Rng rng) {
  const Scalar limit = std::sqrt(6.0 / static_cast<Scalar>(fan_in + fan_out));
  Tensor w = Tensor::matrix(fan_in, fan_out);
  for (auto& x : w.data()) x = rng.uniform(-limit, limit);
  return w;
}

inline Tensor normal_table(std::size_t rows, std::size_t cols, Scalar stddev, Rng rng) {
  Tensor w = Tensor::matrix(rows, cols);
  for (auto& x : w.data()) x = rng.normal(0.0, stddev);
  return w;
}

inline Linear make_linear(std::size_t in, std::size_t out, Rng rng) {
  return Linear{glorot(in, out, rng), Tensor::matrix(1, out, 0.0)};
}

}  // namespace detail

// Task heads are keyed by index so adding or removing other heads never
// changes how a given head is initialised.
inline TaskHead init_head(const ModelConfig& cfg, std::size_t task, std::uint64_t seed) {
  const Rng root = Rng(seed).split("head").split(task);
  return TaskHead{detail::make_linear(cfg.embed_dim, cfg.head_hidden, root.split("hidden")),
                  detail::make_linear(cfg.head_hidden, 1, root.split("out"))};
}

inline ModelParams init_model(const ModelConfig& cfg, std::size_t num_tasks, std::uint64_t seed) {
  if (cfg.embed_dim == 0 || cfg.num_layers == 0 || cfg.head_hidden == 0) {
    throw std::invalid_argument("init_model: dimensions must be positive");
  }
  if (num_tasks == 0) throw std::invalid_argument("init_model: at least one task head required");
  const Rng root(seed);
  const std::size_t d = cfg.embed_dim;
  ModelParams p;
  p.config = cfg;
  for (std::size_t i = 0; i < p.node_tables.size(); ++i) {
    p.node_tables[i] = detail::normal_table(FeatureSchema::kAtomWidths[i], d, 0.02, root.split("node").split(i));
  }
  for (std::size_t k = 0; k < cfg.num_layers; ++k) {
    const Rng lr = root.split("layer").split(k);
    GinLayer l;
    for (std::size_t j = 0; j < l.edge_tables.size(); ++j) {
      l.edge_tables[j] = detail::normal_table(FeatureSchema::kBondWidths[j], d, 0.02, lr.split("edge").split(j));
    }
    l.self_loop = detail::normal_table(1, d, 0.02, lr.split("self_loop"));
    l.hidden = detail::make_linear(d, 2 * d, lr.split("hidden"));
    l.out = detail::make_linear(2 * d, d, lr.split("out"));
    l.norm = BatchNorm{Tensor::matrix(1, d, 1.0), Tensor::matrix(1, d, 0.0), Tensor::matrix(1, d, 0.0),
                       Tensor::matrix(1, d, 1.0)};
    p.layers.push_back(std::move(l));
  }
  for (std::size_t t = 0; t < num_tasks; ++t) p.heads.push_back(init_head(cfg, t, seed));
  p.set_requires_grad(true, true);
  return p;
}

// B featurized graphs concatenated into one disjoint graph.
struct GraphBatch {
  std::size_t num_graphs = 0;
  std::size_t num_nodes = 0;
  std::size_t num_bonds = 0;
  std::array<std::vector<std::uint32_t>, FeatureSchema::kAtomFields> atom_fields;
  std::array<std::vector<std::uint32_t>, FeatureSchema::kBondFields> bond_fields;
  // Each bond appears twice, once per direction.
  std::vector<std::uint32_t> edge_src;
  std::vector<std::uint32_t> edge_dst;
  std::vector<std::uint32_t> edge_bond;
  std::vector<std::uint32_t> node_graph;
  std::vector<std::uint32_t> node_counts;
};

inline GraphBatch make_batch(std::span<const FeaturizedGraph* const> graphs) {
  GraphBatch b;
  b.num_graphs = graphs.size();
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const FeaturizedGraph& g = *graphs[gi];
    if (g.atom_count() == 0) throw std::invalid_argument("make_batch: empty graph");
    const auto offset = static_cast<std::uint32_t>(b.num_nodes);
    for (const AtomFeatures& f : g.atom_indices) {
      for (std::size_t i = 0; i < f.size(); ++i) {
        if (f[i] < 0 || static_cast<std::size_t>(f[i]) >= FeatureSchema::kAtomWidths[i]) {
          throw SchemaError("atom feature " + std::to_string(i) + " out of range");
        }
        b.atom_fields[i].push_back(static_cast<std::uint32_t>(f[i]));
      }
      b.node_graph.push_back(static_cast<std::uint32_t>(gi));
    }
    for (std::size_t bi = 0; bi < g.bond_count(); ++bi) {
      const BondFeatures& f = g.bond_indices[bi];
      for (std::size_t j = 0; j < f.size(); ++j) {
        if (f[j] < 0 || static_cast<std::size_t>(f[j]) >= FeatureSchema::kBondWidths[j]) {
          throw SchemaError("bond feature " + std::to_string(j) + " out of range");
        }
        b.bond_fields[j].push_back(static_cast<std::uint32_t>(f[j]));
      }
      const auto [u, v] = g.bond_endpoints[bi];
      if (u >= g.atom_count() || v >= g.atom_count()) throw SchemaError("bond endpoint out of range");
      const auto bond_id = static_cast<std::uint32_t>(b.num_bonds + bi);
      b.edge_src.push_back(offset + static_cast<std::uint32_t>(u));
      b.edge_dst.push_back(offset + static_cast<std::uint32_t>(v));
      b.edge_bond.push_back(bond_id);
      b.edge_src.push_back(offset + static_cast<std::uint32_t>(v));
      b.edge_dst.push_back(offset + static_cast<std::uint32_t>(u));
      b.edge_bond.push_back(bond_id);
    }
    b.num_nodes += g.atom_count();
    b.num_bonds += g.bond_count();
    b.node_counts.push_back(static_cast<std::uint32_t>(g.atom_count()));
  }
  return b;
}

inline GraphBatch make_batch(std::span<const FeaturizedGraph> graphs) {
  std::vector<const FeaturizedGraph*> ptrs;
  ptrs.reserve(graphs.size());
  for (const auto& g : graphs) ptrs.push_back(&g);
  return make_batch(std::span<const FeaturizedGraph* const>(ptrs));
}

struct ForwardOptions {
  bool train = false;
  // Train-mode batch norm folds batch statistics into the running estimates.
  bool update_running_stats = true;
  // Dropout masks come from rng.split(layer); callers key it by (seed, epoch, batch).
  Rng rng{0};
};

struct EmbeddedInputs {
  Var nodes;                     // h^0, num_nodes x d
  std::vector<Var> edge_states;  // per layer, num_bonds x d (invalid if no bonds)
};

inline EmbeddedInputs embed_inputs(Tape& tape, const GraphBatch& batch, const ModelParams& params) {
  EmbeddedInputs e;
  Var h;
  for (std::size_t i = 0; i < FeatureSchema::kAtomFields; ++i) {
    const Tensor& table = params.node_tables[i];
    if (table.rows() != FeatureSchema::kAtomWidths[i]) throw SchemaError("node table height differs from schema");
    const Var rows = ops::embedding_lookup(tape, tape.leaf(table), batch.atom_fields[i]);
    h = i == 0 ? rows : ops::add(tape, h, rows);
  }
  e.nodes = h;
  if (batch.num_bonds == 0) return e;
  for (const GinLayer& layer : params.layers) {
    Var s;
    for (std::size_t j = 0; j < FeatureSchema::kBondFields; ++j) {
      const Tensor& table = layer.edge_tables[j];
      if (table.rows() != FeatureSchema::kBondWidths[j]) throw SchemaError("edge table height differs from schema");
      const Var rows = ops::embedding_lookup(tape, tape.leaf(table), batch.bond_fields[j]);
      s = j == 0 ? rows : ops::add(tape, s, rows);
    }
    e.edge_states.push_back(s);
  }
  return e;
}

struct GinOutput {
  Var graph_embedding;            // z, num_graphs x d
  std::vector<Var> layer_states;  // h^1 .. h^K
};

inline Var linear(Tape& tape, Var x, const Linear& l) {
  return ops::add_row(tape, ops::matmul(tape, x, tape.leaf(l.weight)), tape.leaf(l.bias));
}

// h^k_v = relu(g^k(sum_{u in N(v) + v} h^{k-1}_u + sum_{edges (v,u)} e^{k-1} + selfloop^{k-1}))
// with g^k = linear, relu, linear, batch norm; z = mean over nodes of h^K.
inline GinOutput gin_forward(Tape& tape, const GraphBatch& batch, ModelParams& params, const ForwardOptions& opt) {
  if (batch.num_graphs == 0 || batch.num_nodes == 0) throw std::invalid_argument("gin_forward: empty batch");
  const EmbeddedInputs in = embed_inputs(tape, batch, params);
  GinOutput out;
  Var h = in.nodes;
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    GinLayer& layer = params.layers[k];
    Var agg = h;
    if (batch.num_bonds > 0) {
      const Var neighbor = ops::gather_rows(tape, h, batch.edge_src);
      const Var edge = ops::gather_rows(tape, in.edge_states[k], batch.edge_bond);
      const Var messages = ops::segment_sum(tape, ops::add(tape, neighbor, edge), batch.edge_dst, batch.num_nodes);
      agg = ops::add(tape, messages, h);
    }
    agg = ops::add_row(tape, agg, tape.leaf(layer.self_loop));
    Var x = ops::relu(tape, linear(tape, agg, layer.hidden));
    x = linear(tape, x, layer.out);
    x = ops::batch_norm(tape, x, tape.leaf(layer.norm.gamma), tape.leaf(layer.norm.beta), layer.norm.running_mean,
                        layer.norm.running_var,
                        ops::BatchNormOptions{opt.train, opt.update_running_stats, params.config.bn_momentum,
                                              params.config.bn_eps});
    x = ops::relu(tape, x);
    x = ops::dropout(tape, x, params.config.dropout, opt.train, opt.rng.split(k));
    out.layer_states.push_back(x);
    h = x;
  }
  out.graph_embedding = ops::segment_mean(tape, h, batch.node_graph, batch.num_graphs);
  return out;
}

class UnknownTaskError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

inline Var head_forward(Tape& tape, Var z, const TaskHead& head, std::size_t task, const ModelConfig& cfg,
                        const ForwardOptions& opt) {
  Var x = ops::relu(tape, linear(tape, z, head.hidden));
  x = ops::dropout(tape, x, cfg.dropout, opt.train, opt.rng.split(1000 + task));
  return linear(tape, x, head.out);
}

// Predictions for the requested heads, num_graphs x task_ids.size().
inline Var predict(Tape& tape, const GraphBatch& batch, ModelParams& params, std::span<const std::size_t> task_ids,
                   const ForwardOptions& opt) {
  for (std::size_t t : task_ids) {
    if (t >= params.heads.size()) throw UnknownTaskError("predict: unknown task id " + std::to_string(t));
  }
  if (task_ids.empty()) throw UnknownTaskError("predict: no task ids requested");
  const GinOutput g = gin_forward(tape, batch, params, opt);
  std::vector<Var> columns;
  columns.reserve(task_ids.size());
  for (std::size_t t : task_ids) columns.push_back(head_forward(tape, g.graph_embedding, params.heads[t], t, params.config, opt));
  return columns.size() == 1 ? columns[0] : ops::concat_cols(tape, columns);
}

inline std::vector<std::size_t> all_tasks(const ModelParams& params) {
  std::vector<std::size_t> ids(params.heads.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  return ids;
}

// Eval-mode predictions without recording a tape.
inline Tensor predict_values(const GraphBatch& batch, const ModelParams& params, std::span<const std::size_t> task_ids) {
  Tape tape(false);
  // Eval mode never writes to the parameters.
  auto& mutable_params = const_cast<ModelParams&>(params);
  return tape.value(predict(tape, batch, mutable_params, task_ids, ForwardOptions{}));
}

inline Tensor embed_values(const GraphBatch& batch, const ModelParams& params) {
  Tape tape(false);
  auto& mutable_params = const_cast<ModelParams&>(params);
  return tape.value(gin_forward(tape, batch, mutable_params, ForwardOptions{}).graph_embedding);
}

}  // namespace dockmtl
