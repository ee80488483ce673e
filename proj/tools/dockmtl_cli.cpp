// dockmtl command-line front end.
//
// Every subcommand prints a one-line JSON summary on stdout when it
// succeeds. Failures print {"error": ..., "message": ..., "exit_code": ...}
// on stderr and exit with a code that identifies the failure class.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dockmtl/dockmtl.hpp"
#include "dockmtl/io/checkpoint.hpp"
#include "dockmtl/io/config.hpp"
#include "dockmtl/io/csv.hpp"

namespace {

using dockmtl::io::Checkpoint;
using dockmtl::io::RunConfig;
using nlohmann::json;

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kBadConfig = 2,
  kSchemaMismatch = 3,
  kIo = 4,
  kBadData = 5,
  kTrainingFailed = 6,
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

int report_failure(const char* kind, const std::string& message, int code) {
  std::cerr << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << std::endl;
  return code;
}

void warn(const json& j) { std::cerr << json{{"warning", j}}.dump() << '\n'; }

// Flags shared by the training-style subcommands. Unset flags leave the
// config file (or built-in default) value alone.
struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> lr;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> min_epochs;
  std::optional<std::size_t> patience;
  std::optional<std::size_t> max_epochs;
  std::optional<std::size_t> embed_dim;
  std::optional<std::size_t> num_layers;
  std::optional<std::size_t> head_hidden;
  std::optional<double> dropout;
};

void add_overrides(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
  sub->add_option("--seed", o.seed, "seed for every random choice of the run");
  sub->add_option("--lr", o.lr, "Adam learning rate");
  sub->add_option("--batch-size", o.batch_size);
  sub->add_option("--min-epochs", o.min_epochs);
  sub->add_option("--patience", o.patience);
  sub->add_option("--max-epochs", o.max_epochs);
  sub->add_option("--embed-dim", o.embed_dim, "node embedding width d");
  sub->add_option("--num-layers", o.num_layers, "GIN layer count K");
  sub->add_option("--head-hidden", o.head_hidden);
  sub->add_option("--dropout", o.dropout);
}

// Defaults, then the config file, then flags. `model_given` reports whether
// anything touched the architecture.
RunConfig resolve(const Overrides& o, bool* model_given = nullptr) {
  RunConfig rc;
  if (!o.config_path.empty()) dockmtl::io::load_config_file(o.config_path, rc);
  auto& t = rc.train;
  if (o.seed) t.seed = *o.seed;
  if (o.lr) t.lr = *o.lr;
  if (o.batch_size) t.batch_size = *o.batch_size;
  if (o.min_epochs) t.min_epochs = *o.min_epochs;
  if (o.patience) t.patience = *o.patience;
  if (o.max_epochs) t.max_epochs = *o.max_epochs;
  if (o.embed_dim) t.model.embed_dim = *o.embed_dim;
  if (o.num_layers) t.model.num_layers = *o.num_layers;
  if (o.head_hidden) t.model.head_hidden = *o.head_hidden;
  if (o.dropout) t.model.dropout = *o.dropout;
  const bool model = rc.model_specified || o.embed_dim || o.num_layers || o.head_hidden || o.dropout;
  if (model_given) *model_given = model;
  dockmtl::io::validate(rc);
  return rc;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream os(path, mode);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  return os;
}

void close_out(std::ofstream& os, const std::string& path) {
  os.close();
  if (!os) throw IoError("failed writing '" + path + "'");
}

json errors_json(const dockmtl::io::IngestReport& r) {
  json errs = json::array();
  for (const auto& e : r.errors) errs.push_back({{"line", e.line}, {"message", e.message}});
  return errs;
}

dockmtl::io::IngestResult read_dataset(const std::string& path, bool labeled) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  dockmtl::io::IngestOptions opt;
  opt.require_labels = labeled;
  opt.merge_duplicates = labeled;
  auto result = dockmtl::io::ingest_csv(in, opt);
  if (in.bad()) throw IoError("failed reading '" + path + "'");
  if (!result.report.errors.empty()) warn({{"file", path}, {"rejected_rows", errors_json(result.report)}});
  if (result.dataset.size() == 0) throw DataError("no usable rows in '" + path + "'");
  return result;
}

Checkpoint read_checkpoint(const std::string& path) {
  if (!std::filesystem::exists(path)) throw IoError("checkpoint '" + path + "' does not exist");
  return dockmtl::io::load_checkpoint_file(path);
}

void write_checkpoint(const std::string& path, const dockmtl::ModelParams& params, const dockmtl::TaskDataset& ds,
                      std::uint64_t seed, const dockmtl::TrainingLog& log) {
  Checkpoint ck;
  ck.params = params;
  ck.task_names = ds.task_names;
  ck.directions = ds.directions;
  ck.seed = seed;
  ck.training_summary = dockmtl::io::summarize(log);
  dockmtl::io::save_checkpoint_file(path, ck);
}

void write_log(const std::string& path, const dockmtl::TrainingLog& log) {
  auto os = open_out(path);
  os << "epoch,train_loss,val_loss\n";
  for (const auto& e : log.epochs) {
    os << e.epoch << ',' << dockmtl::io::format_double(e.train_loss) << ',' << dockmtl::io::format_double(e.val_loss) << '\n';
  }
  close_out(os, path);
}

std::size_t checkpoint_task(const Checkpoint& ck, const std::string& name) {
  if (name.empty()) return 0;
  for (std::size_t t = 0; t < ck.task_names.size(); ++t)
    if (ck.task_names[t] == name) return t;
  throw DataError("checkpoint has no task named '" + name + "'");
}

// ---- subcommands ---------------------------------------------------------

struct IngestArgs {
  std::string input, output;
};

int run_ingest(const IngestArgs& a) {
  auto [ds, report] = read_dataset(a.input, true);
  auto os = open_out(a.output);
  dockmtl::io::write_dataset_csv(os, ds);
  close_out(os, a.output);
  std::cout << json{{"command", "ingest"},       {"rows", report.rows},
                    {"accepted", report.accepted}, {"rejected", report.rejected},
                    {"duplicates_merged", report.duplicates_merged}, {"compounds", ds.size()},
                    {"tasks", ds.task_names},      {"errors", errors_json(report)}}
                   .dump()
            << '\n';
  return kOk;
}

struct TrainArgs {
  Overrides o;
  std::string data, out, log, mode = "mtl", new_target;
  std::optional<std::size_t> new_size, aux_size;
};

dockmtl::TaskDataset training_set(const dockmtl::TaskDataset& pooled, const std::string& target, dockmtl::TrainMode mode,
                                  std::optional<std::size_t> new_size, std::optional<std::size_t> aux_size,
                                  std::uint64_t seed) {
  dockmtl::TaskSelection sel;
  sel.new_target = target.empty() ? pooled.task_names.at(0) : target;
  sel.mode = mode;
  sel.new_size = new_size;
  sel.aux_size = aux_size;
  sel.seed = seed;
  try {
    return dockmtl::assemble_training_set(pooled, sel);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
}

int run_train(const TrainArgs& a) {
  const RunConfig rc = resolve(a.o);
  const auto mode = dockmtl::parse_train_mode(a.mode);
  const auto pooled = read_dataset(a.data, true).dataset;
  const auto ds = training_set(pooled, a.new_target, mode, a.new_size, a.aux_size, rc.train.seed);
  const auto result = dockmtl::train(ds, rc.train);
  write_checkpoint(a.out, result.params, ds, rc.train.seed, result.log);
  if (!a.log.empty()) write_log(a.log, result.log);
  std::cout << json{{"command", "train"},
                    {"mode", a.mode},
                    {"seed", rc.train.seed},
                    {"tasks", ds.task_names},
                    {"compounds", ds.size()},
                    {"best_epoch", result.log.best_epoch},
                    {"best_val_loss", result.log.best_val_loss},
                    {"stop_epoch", result.log.stop_epoch},
                    {"stop_reason", result.log.stop_reason}}
                   .dump()
            << '\n';
  return kOk;
}

struct ActiveLearnArgs {
  Overrides o;
  std::string pool, task, out_dir, acquisition;
  std::optional<std::size_t> budget, rounds, ensemble_size;
  std::optional<double> init_fraction, ucb_beta;
};

int run_active_learn(const ActiveLearnArgs& a) {
  RunConfig rc = resolve(a.o);
  auto& al = rc.active_learning;
  if (a.budget) al.total_budget = *a.budget;
  if (a.rounds) al.n_rounds = *a.rounds;
  if (a.ensemble_size) al.ensemble_size = *a.ensemble_size;
  if (a.init_fraction) al.init_fraction = *a.init_fraction;
  if (a.ucb_beta) al.ucb_beta = *a.ucb_beta;
  if (!a.acquisition.empty()) al.acquisition = dockmtl::io::parse_acquisition(a.acquisition);
  try {
    al.validate();
  } catch (const std::invalid_argument& e) {
    throw dockmtl::io::ConfigError(e.what());
  }

  // The pool's label column stands in for the docking run: a compound's
  // score is revealed only when the loop acquires it.
  const auto pool_ds = read_dataset(a.pool, true).dataset;
  std::size_t task = 0;
  try {
    if (!a.task.empty()) task = dockmtl::task_index(pool_ds, a.task);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  const dockmtl::LabelOracle oracle = [&](std::size_t i) {
    const auto y = pool_ds.label(i, task);
    if (!y) throw std::runtime_error("compound has no score in the pool file");
    return *y;
  };
  const auto result = dockmtl::al_run(pool_ds.compounds, oracle, al, rc.train, pool_ds.directions[task],
                                      pool_ds.task_names[task]);

  std::filesystem::create_directories(a.out_dir);
  const std::filesystem::path dir(a.out_dir);
  dockmtl::TaskDataset meta;
  meta.task_names = {pool_ds.task_names[task]};
  meta.directions = {pool_ds.directions[task]};
  for (std::size_t m = 0; m < result.ensemble.size(); ++m) {
    dockmtl::TrainingLog none;
    write_checkpoint((dir / ("member_" + std::to_string(m) + ".ckpt")).string(), result.ensemble[m], meta,
                     rc.train.seed + m, none);
  }
  const std::string rounds_path = (dir / "rounds.csv").string();
  auto rounds = open_out(rounds_path);
  dockmtl::write_round_log_csv(rounds, result.log);
  close_out(rounds, rounds_path);
  const std::string labeled_path = (dir / "labeled.csv").string();
  auto labeled = open_out(labeled_path);
  labeled << "smiles," << dockmtl::io::csv_escape(pool_ds.task_names[task]) << '\n';
  for (std::size_t i = 0; i < result.labeled.size(); ++i) {
    labeled << pool_ds.smiles[result.labeled[i]] << ',' << dockmtl::io::format_double(result.labels[i]) << '\n';
  }
  close_out(labeled, labeled_path);

  double mean_label = 0;
  for (double y : result.labels) mean_label += y;
  mean_label /= static_cast<double>(result.labels.size());
  std::cout << json{{"command", "active-learn"},
                    {"seed", rc.train.seed},
                    {"task", pool_ds.task_names[task]},
                    {"budget", al.total_budget},
                    {"rounds", al.n_rounds},
                    {"labeled", result.labeled.size()},
                    {"mean_acquired_score", mean_label},
                    {"ensemble_size", result.ensemble.size()}}
                   .dump()
            << '\n';
  return kOk;
}

struct TransferArgs {
  Overrides o;
  std::string pretrained, data, out, log, new_target;
  std::optional<std::size_t> new_size, warmup;
};

int run_transfer(const TransferArgs& a) {
  bool model_given = false;
  RunConfig rc = resolve(a.o, &model_given);
  if (a.warmup) rc.warmup_epochs = *a.warmup;
  const Checkpoint pre = read_checkpoint(a.pretrained);
  if (!model_given) {
    rc.train.model.embed_dim = pre.params.config.embed_dim;
    rc.train.model.num_layers = pre.params.config.num_layers;
  }
  const auto& pm = pre.params.config;
  if (pm.embed_dim != rc.train.model.embed_dim || pm.num_layers != rc.train.model.num_layers) {
    throw dockmtl::io::ConfigError("pretrained backbone has d=" + std::to_string(pm.embed_dim) + ", K=" +
                                   std::to_string(pm.num_layers) + "; configuration asks for d=" +
                                   std::to_string(rc.train.model.embed_dim) + ", K=" +
                                   std::to_string(rc.train.model.num_layers));
  }
  const auto pooled = read_dataset(a.data, true).dataset;
  const auto ds = training_set(pooled, a.new_target, dockmtl::TrainMode::single, a.new_size, std::nullopt, rc.train.seed);
  const auto result = dockmtl::transfer_train(pre.params, ds, rc.transfer());
  write_checkpoint(a.out, result.params, ds, rc.train.seed, result.log);
  if (!a.log.empty()) write_log(a.log, result.log);
  std::cout << json{{"command", "transfer"},
                    {"seed", rc.train.seed},
                    {"task", ds.task_names[0]},
                    {"warmup_epochs", rc.warmup_epochs},
                    {"phase2_first_epoch", result.phase2_first_epoch},
                    {"best_epoch", result.log.best_epoch},
                    {"best_val_loss", result.log.best_val_loss},
                    {"stop_epoch", result.log.stop_epoch}}
                   .dump()
            << '\n';
  return kOk;
}

struct PredictArgs {
  std::string checkpoint, input, output;
};

int run_predict(const PredictArgs& a) {
  const Checkpoint ck = read_checkpoint(a.checkpoint);
  const auto ds = read_dataset(a.input, false).dataset;
  const auto tasks = dockmtl::all_tasks(ck.params);
  const dockmtl::Tensor p = dockmtl::predict_dataset(ck.params, ds.compounds, tasks);
  auto os = open_out(a.output);
  os << "smiles";
  for (const auto& name : ck.task_names) os << ',' << dockmtl::io::csv_escape(name);
  os << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    os << dockmtl::io::csv_escape(ds.smiles[i]);
    for (std::size_t t = 0; t < tasks.size(); ++t) os << ',' << dockmtl::io::format_double(p(i, t));
    os << '\n';
  }
  close_out(os, a.output);
  std::cout << json{{"command", "predict"}, {"seed", ck.seed}, {"compounds", ds.size()}, {"tasks", ck.task_names}}.dump()
            << '\n';
  return kOk;
}

struct ScreenArgs {
  std::string checkpoint, input, output, task;
  double top_frac = 0.02;
  bool all = false;
};

int run_screen(const ScreenArgs& a) {
  if (!(a.top_frac > 0 && a.top_frac < 1)) throw dockmtl::io::ConfigError("--top-frac must lie in (0, 1)");
  const Checkpoint ck = read_checkpoint(a.checkpoint);
  const std::size_t task = checkpoint_task(ck, a.task);
  const auto ds = read_dataset(a.input, false).dataset;
  const std::size_t tasks[] = {task};
  const dockmtl::Tensor p = dockmtl::predict_dataset(ck.params, ds.compounds, tasks);
  const std::vector<double> scores(p.data().begin(), p.data().end());
  const auto order = dockmtl::top_indices(scores, ck.directions[task], scores.size());
  const std::size_t hits = dockmtl::cutoff_count(a.top_frac, scores.size());
  const std::size_t emit = a.all ? order.size() : hits;
  auto os = open_out(a.output);
  os << "smiles,predicted_score,rank,is_predicted_hit\n";
  for (std::size_t r = 0; r < emit; ++r) {
    const std::size_t i = order[r];
    os << dockmtl::io::csv_escape(ds.smiles[i]) << ',' << dockmtl::io::format_double(scores[i]) << ',' << r + 1 << ','
       << (r < hits ? 1 : 0) << '\n';
  }
  close_out(os, a.output);
  std::cout << json{{"command", "screen"}, {"seed", ck.seed},      {"task", ck.task_names[task]},
                    {"library", ds.size()}, {"predicted_hits", hits}, {"rows_written", emit}}
                   .dump()
            << '\n';
  return kOk;
}

struct EvalArgs {
  std::string checkpoint, data, output, task;
  std::vector<std::size_t> k;
  std::vector<double> top_frac{0.02, 0.03, 0.05};
};

int run_eval(const EvalArgs& a) {
  const Checkpoint ck = read_checkpoint(a.checkpoint);
  const std::size_t task = checkpoint_task(ck, a.task);
  const std::string& name = ck.task_names[task];
  const auto ds = read_dataset(a.data, true).dataset;
  std::size_t column = 0;
  try {
    column = dockmtl::task_index(ds, name);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  std::vector<dockmtl::FeaturizedGraph> graphs;
  std::vector<double> truth;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    if (!ds.labeled(r, column)) continue;
    graphs.push_back(ds.compounds[r]);
    truth.push_back(ds.value(r, column));
  }
  const std::size_t tasks[] = {task};
  const dockmtl::Tensor p = dockmtl::predict_dataset(ck.params, graphs, tasks);
  const std::vector<double> pred(p.data().begin(), p.data().end());
  const auto dir = ck.directions[task];

  std::ostringstream out;
  const auto fmt = dockmtl::io::format_double;
  out << "metric,task,value,k,p\n";
  try {
    out << "pearson," << name << ',' << fmt(dockmtl::pearson(truth, pred)) << ",,\n";
    out << "mse," << name << ',' << fmt(dockmtl::mse(truth, pred)) << ",,\n";
    out << "concordance_index," << name << ',' << fmt(dockmtl::concordance_index(truth, pred)) << ",,\n";
    for (std::size_t k : a.k) {
      for (double frac : a.top_frac) {
        out << "recall," << name << ',' << fmt(dockmtl::recall_at(truth, pred, dir, k, frac)) << ',' << k << ','
            << fmt(frac) << '\n';
      }
    }
  } catch (const dockmtl::MetricError& e) {
    throw DataError(e.what());
  }
  if (a.output.empty()) {
    std::cerr << out.str();
  } else {
    auto os = open_out(a.output);
    os << out.str();
    close_out(os, a.output);
  }
  std::cout << json{{"command", "eval"}, {"seed", ck.seed}, {"task", name}, {"compounds", truth.size()}}.dump() << '\n';
  return kOk;
}

struct EmbedArgs {
  std::string checkpoint, input, output;
};

int run_export_embeddings(const EmbedArgs& a) {
  const Checkpoint ck = read_checkpoint(a.checkpoint);
  const auto ds = read_dataset(a.input, false).dataset;
  const dockmtl::Tensor z = dockmtl::export_embeddings(ck.params, ds.compounds);
  auto os = open_out(a.output);
  dockmtl::write_embeddings_csv(os, ds.smiles, z);
  close_out(os, a.output);
  std::cout << json{{"command", "export-embeddings"}, {"seed", ck.seed}, {"compounds", z.rows()}, {"dim", z.cols()}}.dump()
            << '\n';
  return kOk;
}

struct SynthArgs {
  dockmtl::SynthOptions opt;
  std::string out, truth;
};

int run_synth_gen(const SynthArgs& a) {
  dockmtl::SynthDataset s;
  try {
    s = dockmtl::synth_generate(a.opt);
  } catch (const std::invalid_argument& e) {
    throw dockmtl::io::ConfigError(e.what());
  }
  auto os = open_out(a.out);
  dockmtl::io::write_dataset_csv(os, s.data);
  close_out(os, a.out);
  if (!a.truth.empty()) {
    const json truth = {{"seed", a.opt.seed},
                        {"descriptors", {"atom_count", "ring_bond_count", "heteroatom_count", "mean_degree"}},
                        {"weights", s.truth.weights},
                        {"bias", s.truth.bias},
                        {"tasks", s.data.task_names},
                        {"slope", s.truth.slope},
                        {"intercept", s.truth.intercept},
                        {"noise_sd", s.truth.noise},
                        {"latent", s.latent}};
    auto ts = open_out(a.truth);
    ts << truth.dump(1) << '\n';
    close_out(ts, a.truth);
  }
  std::cout << json{{"command", "synth-gen"}, {"seed", a.opt.seed}, {"compounds", s.data.size()}, {"tasks", s.data.task_names}}
                   .dump()
            << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  dockmtl::tune_allocator();
  CLI::App app{"Graph neural network surrogates for docking-score screening"};
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "validate a dataset CSV and write it in normalized form");
  c_ingest->add_option("--input", ingest.input)->required()->check(CLI::ExistingFile);
  c_ingest->add_option("--output", ingest.output)->required();

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "train a single-task or multi-task model");
  add_overrides(c_train, tr.o);
  c_train->add_option("--data", tr.data)->required()->check(CLI::ExistingFile);
  c_train->add_option("--out", tr.out, "checkpoint path")->required();
  c_train->add_option("--mode", tr.mode)->check(CLI::IsMember({"single", "mtl"}));
  c_train->add_option("--new-target", tr.new_target, "task trained as the new target (default: first column)");
  c_train->add_option("--new-size", tr.new_size, "labeled new-target compounds to sample");
  c_train->add_option("--aux-size", tr.aux_size, "labeled compounds to sample per auxiliary task");
  c_train->add_option("--log", tr.log, "per-epoch loss CSV");

  ActiveLearnArgs al;
  auto* c_al = app.add_subcommand("active-learn", "ensemble active learning against a scored pool");
  add_overrides(c_al, al.o);
  c_al->add_option("--pool", al.pool)->required()->check(CLI::ExistingFile);
  c_al->add_option("--task", al.task);
  c_al->add_option("--budget", al.budget);
  c_al->add_option("--rounds", al.rounds);
  c_al->add_option("--ensemble-size", al.ensemble_size);
  c_al->add_option("--init-fraction", al.init_fraction);
  c_al->add_option("--acquisition", al.acquisition)->check(CLI::IsMember({"greedy_mean", "ucb"}));
  c_al->add_option("--ucb-beta", al.ucb_beta);
  c_al->add_option("--out-dir", al.out_dir)->required();

  TransferArgs tf;
  auto* c_tf = app.add_subcommand("transfer", "fine-tune a pretrained backbone on a new target");
  add_overrides(c_tf, tf.o);
  c_tf->add_option("--pretrained", tf.pretrained)->required();
  c_tf->add_option("--data", tf.data)->required()->check(CLI::ExistingFile);
  c_tf->add_option("--new-target", tf.new_target);
  c_tf->add_option("--new-size", tf.new_size);
  c_tf->add_option("--warmup", tf.warmup, "head-only epochs before full fine-tuning");
  c_tf->add_option("--out", tf.out)->required();
  c_tf->add_option("--log", tf.log);

  PredictArgs pr;
  auto* c_pr = app.add_subcommand("predict", "predict every task for a compound list");
  c_pr->add_option("--checkpoint", pr.checkpoint)->required();
  c_pr->add_option("--input", pr.input)->required()->check(CLI::ExistingFile);
  c_pr->add_option("--output", pr.output)->required();

  ScreenArgs sc;
  auto* c_sc = app.add_subcommand("screen", "rank a library and emit the predicted hits");
  c_sc->add_option("--checkpoint", sc.checkpoint)->required();
  c_sc->add_option("--input", sc.input)->required()->check(CLI::ExistingFile);
  c_sc->add_option("--output", sc.output)->required();
  c_sc->add_option("--task", sc.task);
  c_sc->add_option("--top-frac", sc.top_frac);
  c_sc->add_flag("--all", sc.all, "write every compound, not only the predicted hits");

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval", "score predictions against known labels");
  c_ev->add_option("--checkpoint", ev.checkpoint)->required();
  c_ev->add_option("--data", ev.data)->required()->check(CLI::ExistingFile);
  c_ev->add_option("--task", ev.task);
  c_ev->add_option("--k", ev.k, "virtual-hit counts")->required();
  c_ev->add_option("--top-frac", ev.top_frac, "predicted-hit fractions");
  c_ev->add_option("--output", ev.output, "metrics CSV (stderr when omitted)");

  EmbedArgs em;
  auto* c_em = app.add_subcommand("export-embeddings", "write graph embeddings for a compound list");
  c_em->add_option("--checkpoint", em.checkpoint)->required();
  c_em->add_option("--input", em.input)->required()->check(CLI::ExistingFile);
  c_em->add_option("--output", em.output)->required();

  SynthArgs sy;
  auto* c_sy = app.add_subcommand("synth-gen", "generate a synthetic docking-like benchmark");
  c_sy->add_option("--tasks", sy.opt.n_tasks);
  c_sy->add_option("--per-task", sy.opt.n_compounds, "compounds, each scored for every task");
  c_sy->add_option("--seed", sy.opt.seed);
  c_sy->add_option("--noise", sy.opt.noise, "label noise standard deviation");
  c_sy->add_option("--min-atoms", sy.opt.min_atoms);
  c_sy->add_option("--max-atoms", sy.opt.max_atoms);
  c_sy->add_flag("--unit-coefficients", sy.opt.unit_coefficients, "identical affine map for every task");
  c_sy->add_option("--out", sy.out)->required();
  c_sy->add_option("--truth", sy.truth, "ground-truth JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report_failure("usage", e.what(), kBadConfig);
  }

  try {
    if (*c_ingest) return run_ingest(ingest);
    if (*c_train) return run_train(tr);
    if (*c_al) return run_active_learn(al);
    if (*c_tf) return run_transfer(tf);
    if (*c_pr) return run_predict(pr);
    if (*c_sc) return run_screen(sc);
    if (*c_ev) return run_eval(ev);
    if (*c_em) return run_export_embeddings(em);
    if (*c_sy) return run_synth_gen(sy);
  } catch (const dockmtl::io::ConfigError& e) {
    return report_failure("bad_config", e.what(), kBadConfig);
  } catch (const dockmtl::io::SchemaMismatchError& e) {
    return report_failure("schema_mismatch", e.what(), kSchemaMismatch);
  } catch (const dockmtl::io::CheckpointError& e) {
    return report_failure("checkpoint", e.what(), kIo);
  } catch (const IoError& e) {
    return report_failure("io", e.what(), kIo);
  } catch (const std::filesystem::filesystem_error& e) {
    return report_failure("io", e.what(), kIo);
  } catch (const dockmtl::TrainingError& e) {
    return report_failure("training_failed", e.what(), kTrainingFailed);
  } catch (const dockmtl::ActiveLearningError& e) {
    return report_failure("active_learning_failed", e.what(), kTrainingFailed);
  } catch (const DataError& e) {
    return report_failure("bad_data", e.what(), kBadData);
  } catch (const dockmtl::io::CsvFormatError& e) {
    return report_failure("bad_data", e.what(), kBadData);
  } catch (const dockmtl::SmilesParseError& e) {
    return report_failure("bad_data", e.what(), kBadData);
  } catch (const std::invalid_argument& e) {
    return report_failure("bad_data", e.what(), kBadData);
  } catch (const std::exception& e) {
    return report_failure("internal", e.what(), kInternal);
  }
  return kInternal;
}
