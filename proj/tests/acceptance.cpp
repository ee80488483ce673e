// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "dockmtl/dockmtl.hpp"
#include "smiles_corpus.hpp"

using namespace dockmtl;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

// ---------------------------------------------------------------- 1

Outcome gradient_integrity() {
  const auto t0 = Clock::now();
  ModelConfig mc;
  mc.embed_dim = 8;
  mc.num_layers = 2;
  mc.head_hidden = 8;
  mc.dropout = 0.2;
  ModelParams p = init_model(mc, 2, 101);
  const std::vector<FeaturizedGraph> graphs{featurize_smiles("CC(=O)Nc1ccc(O)cc1"), featurize_smiles("C1CCOC1CN")};
  const GraphBatch batch = make_batch(std::span<const FeaturizedGraph>(graphs));
  const Tensor y({2, 2}, std::vector<Scalar>{-6.5, 1.2, -4.0, 0.3});
  const Tensor mask = Tensor::matrix(2, 2, 1.0);
  ForwardOptions opt;
  opt.train = true;
  opt.update_running_stats = false;
  opt.rng = Rng(7);
  const std::vector<std::size_t> tasks{0, 1};
  auto loss = [&](Tape& t) { return ops::masked_mse_loss(t, predict(t, batch, p, tasks, opt), y, mask); };

  // Parameter classes by name.
  const std::vector<std::pair<std::string, std::function<bool(const std::string&)>>> classes{
      {"node_embedding", [](const std::string& n) { return n.starts_with("node_table"); }},
      {"edge_embedding", [](const std::string& n) { return n.find("edge_table") != std::string::npos; }},
      {"self_loop", [](const std::string& n) { return n.ends_with("self_loop"); }},
      {"gin_mlp", [](const std::string& n) { return n.starts_with("layer") && (n.find(".hidden.") != std::string::npos || n.find(".out.") != std::string::npos); }},
      {"batch_norm", [](const std::string& n) { return n.ends_with("gamma") || n.ends_with("beta"); }},
      {"heads", [](const std::string& n) { return n.starts_with("head"); }},
  };
  double worst = 0;
  std::string worst_class;
  std::ostringstream per_class;
  for (const auto& [name, match] : classes) {
    std::vector<Tensor*> inputs;
    p.visit([&](const std::string& n, Tensor& t, ParamRole role) {
      if (role != ParamRole::running_stat && match(n)) inputs.push_back(&t);
    });
    const GradCheckResult r = grad_check(loss, inputs);
    per_class << name << '=' << fmt(r.max_relative_error, 2) << ' ';
    if (r.max_relative_error > worst) {
      worst = r.max_relative_error;
      worst_class = name;
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-3 && secs < 60,
          "max rel err " + fmt(worst, 3) + " (" + worst_class + ") <= 1e-3; " + per_class.str() + "in " + fmt(secs, 3) + " s < 60 s"};
}

// ---------------------------------------------------------------- 2

FeaturizedGraph permute_atoms(const FeaturizedGraph& g, Rng& rng) {
  std::vector<std::size_t> perm(g.atom_count());
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  std::vector<std::size_t> bond_order(g.bond_count());
  std::iota(bond_order.begin(), bond_order.end(), 0);
  rng.shuffle(bond_order);
  FeaturizedGraph out;
  out.atom_indices.resize(g.atom_count());
  for (std::size_t i = 0; i < g.atom_count(); ++i) out.atom_indices[perm[i]] = g.atom_indices[i];
  for (std::size_t b : bond_order) {
    out.bond_indices.push_back(g.bond_indices[b]);
    auto [u, v] = g.bond_endpoints[b];
    if (rng.bernoulli(0.5)) std::swap(u, v);
    out.bond_endpoints.emplace_back(perm[u], perm[v]);
  }
  return out;
}

Outcome invariance() {
  Rng rng(202);
  ModelConfig mc;
  mc.embed_dim = 16;
  mc.num_layers = 3;
  mc.head_hidden = 16;
  ModelParams p = init_model(mc, 2, 202);
  for (auto& l : p.layers) {
    for (auto& v : l.norm.running_mean.data()) v = rng.uniform(-0.5, 0.5);
    for (auto& v : l.norm.running_var.data()) v = rng.uniform(0.5, 2.0);
  }
  std::vector<FeaturizedGraph> mols;
  for (int i = 0; i < 100; ++i) mols.push_back(featurize_smiles(random_smiles(rng, 2, 24)));
  const std::vector<std::size_t> tasks{0, 1};

  std::vector<std::array<double, 2>> reference;
  for (const auto& g : mols) {
    const Tensor y = predict_values(make_batch(std::span<const FeaturizedGraph>(&g, 1)), p, tasks);
    reference.push_back({y[0], y[1]});
  }

  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::size_t> order(mols.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::vector<FeaturizedGraph> permuted;
    for (std::size_t i : order) permuted.push_back(permute_atoms(mols[i], rng));
    std::size_t lo = 0;
    while (lo < permuted.size()) {
      const std::size_t hi = std::min(permuted.size(), lo + 1 + rng.below(30));
      const Tensor y = predict_values(make_batch(std::span<const FeaturizedGraph>(permuted).subspan(lo, hi - lo)), p, tasks);
      for (std::size_t j = lo; j < hi; ++j)
        for (std::size_t t = 0; t < 2; ++t) worst = std::max(worst, std::abs(y(j - lo, t) - reference[order[j]][t]));
      lo = hi;
    }
  }
  return {worst <= 1e-9, "max |delta| " + fmt(worst, 3) + " <= 1e-9 over 100 molecules x 20 permutation/grouping trials"};
}

// ---------------------------------------------------------------- 3

double brute_ci(const std::vector<double>& y, const std::vector<double>& p) {
  std::uint64_t num = 0, den = 0;
  for (std::size_t k = 0; k < y.size(); ++k)
    for (std::size_t l = 0; l < y.size(); ++l)
      if (y[k] > y[l]) {
        ++den;
        num += p[k] > p[l];
      }
  return static_cast<double>(num) / static_cast<double>(den);
}

double brute_recall(const std::vector<double>& y, const std::vector<double>& p, HitDirection dir, std::size_t k,
                    double frac) {
  auto ranked = [&](const std::vector<double>& s) {
    std::vector<std::size_t> idx(s.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return dir == HitDirection::lower_is_better ? s[a] < s[b] : s[a] > s[b];
    });
    return idx;
  };
  // ceil(frac * n), treating products within 1e-9 of an integer as exact
  const double x = frac * static_cast<double>(y.size());
  const std::size_t cut = std::abs(x - std::round(x)) <= 1e-9 * std::max(1.0, x) ? static_cast<std::size_t>(std::round(x))
                                                                                  : static_cast<std::size_t>(std::ceil(x));
  const auto t = ranked(y), q = ranked(p);
  std::vector<bool> predicted(y.size(), false);
  for (std::size_t i = 0; i < cut; ++i) predicted[q[i]] = true;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k; ++i) hits += predicted[t[i]];
  return static_cast<double>(hits) / static_cast<double>(k);
}

long double brute_pearson(const std::vector<double>& y, const std::vector<double>& p) {
  const auto n = static_cast<long double>(y.size());
  long double my = 0, mp = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    my += y[i];
    mp += p[i];
  }
  my /= n;
  mp /= n;
  long double sy = 0, sp = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sy += (y[i] - my) * (y[i] - my);
    sp += (p[i] - mp) * (p[i] - mp);
  }
  sy = std::sqrt(sy / n);
  sp = std::sqrt(sp / n);
  long double r = 0;
  for (std::size_t i = 0; i < y.size(); ++i) r += ((y[i] - my) / sy) * ((p[i] - mp) / sp);
  return r / n;
}

Outcome metric_oracles() {
  Rng rng(303);
  std::size_t ci_bad = 0, recall_bad = 0, pearson_bad = 0, mse_bad = 0;
  double pearson_err = 0, mse_err = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.below(150);
    const bool coarse = trial % 2 == 0;  // coarse values force ties
    std::vector<double> y(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = coarse ? std::floor(rng.uniform(0, 6)) : rng.normal(-7, 2);
      p[i] = coarse ? std::floor(rng.uniform(0, 6)) : y[i] + rng.normal(0, 1.5);
    }
    if (std::any_of(y.begin(), y.end(), [&](double v) { return v != y[0]; })) {
      ci_bad += concordance_index(y, p) != brute_ci(y, p);
    } else {
      y[0] += 1;  // keep the instance usable for the other metrics
      ci_bad += concordance_index(y, p) != brute_ci(y, p);
    }
    const std::size_t k = 1 + rng.below(n);
    const double frac = std::min(0.99, 0.01 + rng.uniform(0, 0.98));
    const auto dir = trial % 3 == 0 ? HitDirection::higher_is_better : HitDirection::lower_is_better;
    recall_bad += recall_at(y, p, dir, k, frac) != brute_recall(y, p, dir, k, frac);
    const bool p_const = std::all_of(p.begin(), p.end(), [&](double v) { return v == p[0]; });
    if (!p_const) {
      const double e = std::abs(pearson(y, p) - static_cast<double>(brute_pearson(y, p)));
      pearson_err = std::max(pearson_err, e);
      pearson_bad += e > 1e-12;
    }
    long double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += (static_cast<long double>(y[i]) - p[i]) * (static_cast<long double>(y[i]) - p[i]);
    const double e = std::abs(mse(y, p) - static_cast<double>(s / n));
    mse_err = std::max(mse_err, e);
    mse_bad += e > 1e-12 * std::max(1.0, static_cast<double>(s / n));
  }
  const std::vector<double> y3{1, 2, 3};
  const bool hand = concordance_index(y3, std::vector<double>{1, 2, 3}) == 1.0 &&
                    concordance_index(y3, std::vector<double>{3, 2, 1}) == 0.0 &&
                    concordance_index(y3, std::vector<double>{1, 3, 2}) == 2.0 / 3.0;
  const bool pass = ci_bad + recall_bad + pearson_bad + mse_bad == 0 && hand;
  return {pass, "1000 instances each: CI mismatches " + std::to_string(ci_bad) + ", recall mismatches " +
                    std::to_string(recall_bad) + ", Pearson max err " + fmt(pearson_err, 2) + ", MSE max err " +
                    fmt(mse_err, 2) + "; CI hand examples {1, 0, 2/3} " + (hand ? "reproduced" : "WRONG")};
}

// ---------------------------------------------------------------- 4

Outcome pchembl_example() {
  const double v = pchembl(10e-6);
  return {v == 5.0, "pchembl(10 uM) = " + fmt(v, 17)};
}

// ---------------------------------------------------------------- 5

struct StopOutcome {
  std::size_t stop = 0;  // 0 = ran to the end
  std::size_t best = 0;
};

StopOutcome run_script(std::size_t epochs, const std::function<std::pair<double, double>(std::size_t)>& curve) {
  EarlyStopping es(100, 50);
  for (std::size_t e = 1; e <= epochs; ++e) {
    const auto [tr, va] = curve(e);
    if (es.observe(e, tr, va)) return {e, es.best_epoch()};
  }
  return {0, es.best_epoch()};
}

Outcome early_stopping_scripts() {
  // Always violating, flat validation loss: counting starts at epoch 101, the
  // 51st violation is epoch 151; the first epoch holds the minimum.
  const StopOutcome a = run_script(1000, [](std::size_t) { return std::pair{1.0, 2.0}; });
  // Never violating, validation loss bottoming out at epoch 250: no stop.
  const StopOutcome b = run_script(400, [](std::size_t e) {
    return std::pair{10.0, 1.0 + std::abs(static_cast<double>(e) - 250.0) / 1000.0};
  });
  // Violations on 101..140 (40, under patience), recovery on 141..145 resets
  // the count, violations again from 146: the 51st is epoch 196. Validation
  // minimum at epoch 60.
  const StopOutcome c = run_script(1000, [](std::size_t e) {
    double va = 0;
    if (e <= 100) {
      va = 0.5 + 0.004 * std::abs(static_cast<double>(e) - 60.0);
    } else if (e <= 140) {
      va = 1.2;
    } else if (e <= 145) {
      va = 0.8;
    } else {
      va = 1.3;
    }
    return std::pair{1.0, va};
  });
  const bool pass = a.stop == 151 && a.best == 1 && b.stop == 0 && b.best == 250 && c.stop == 196 && c.best == 60;
  return {pass, "always-violating stop " + std::to_string(a.stop) + "/best " + std::to_string(a.best) +
                    " (expect 151/1); never-violating stop " + (b.stop ? std::to_string(b.stop) : "none") + "/best " +
                    std::to_string(b.best) + " (expect none/250); violate-recover stop " + std::to_string(c.stop) +
                    "/best " + std::to_string(c.best) + " (expect 196/60)"};
}

// ---------------------------------------------------------------- 6

Outcome transfer_freeze() {
  SynthOptions so;
  so.n_tasks = 3;
  so.n_compounds = 200;
  so.seed = 606;
  so.max_atoms = 12;
  const TaskDataset all = synth_generate(so).data;
  std::vector<std::size_t> a(120), b(80);
  std::iota(a.begin(), a.end(), 0);
  std::iota(b.begin(), b.end(), 120);
  TrainConfig tc;
  tc.model.embed_dim = 16;
  tc.model.num_layers = 2;
  tc.model.head_hidden = 16;
  tc.batch_size = 32;
  tc.min_epochs = 5;
  tc.patience = 3;
  tc.max_epochs = 10;
  tc.seed = 6;
  const TrainResult pre = train(select_tasks(select_rows(all, a), {1, 2}), tc);
  tc.min_epochs = 25;
  tc.max_epochs = 25;
  const TransferResult r = transfer_train(pre.params, select_tasks(select_rows(all, b), {0}), TransferConfig{tc, 20});
  const std::uint64_t h = parameter_hash(pre.params, true, false);
  std::size_t frozen = 0;
  for (std::size_t i = 0; i < 20 && i < r.log.epochs.size(); ++i) frozen += r.log.epochs[i].backbone_hash == h;
  bool moved = r.log.epochs.size() > 20;
  for (std::size_t i = 20; i < r.log.epochs.size(); ++i) moved = moved && r.log.epochs[i].backbone_hash != h;
  return {frozen == 20 && moved && r.phase2_first_epoch == 21,
          std::to_string(frozen) + "/20 phase-1 epochs with unchanged backbone hash; phase 2 from epoch " +
              std::to_string(r.phase2_first_epoch) + (moved ? ", hash changes every phase-2 epoch" : ", hash did NOT change")};
}

// ---------------------------------------------------------------- 7-9

// One synthetic benchmark per seed: 2000 auxiliary compounds scored for T1..T3
// (also the active-learning pool for T0), 200 new-target training compounds,
// 1000 held-out new-target compounds.
struct Benchmark {
  TaskDataset aux;
  TaskDataset single;
  TaskDataset mtl;
  std::vector<FeaturizedGraph> test_graphs;
  std::vector<double> test_y;
  std::vector<FeaturizedGraph> pool;
  std::vector<double> pool_y;
};

constexpr std::size_t kAux = 2000, kNew = 200, kTest = 1000;

Benchmark make_benchmark(std::uint64_t seed) {
  SynthOptions so;
  so.n_tasks = 4;
  so.n_compounds = kAux + kNew + kTest;
  so.seed = seed;
  const TaskDataset all = synth_generate(so).data;
  Benchmark b;
  b.mtl = empty_like(all);
  b.aux.task_names = {"T1", "T2", "T3"};
  b.aux.directions = {all.directions[1], all.directions[2], all.directions[3]};
  b.single.task_names = {"T0"};
  b.single.directions = {all.directions[0]};
  for (std::size_t r = 0; r < all.size(); ++r) {
    if (r < kAux) {
      b.aux.add_compound(all.smiles[r], all.compounds[r], {all.label(r, 1), all.label(r, 2), all.label(r, 3)});
      b.mtl.add_compound(all.smiles[r], all.compounds[r], {std::nullopt, all.label(r, 1), all.label(r, 2), all.label(r, 3)});
      b.pool.push_back(all.compounds[r]);
      b.pool_y.push_back(all.value(r, 0));
    } else if (r < kAux + kNew) {
      b.single.add_compound(all.smiles[r], all.compounds[r], {all.label(r, 0)});
      b.mtl.add_compound(all.smiles[r], all.compounds[r], {all.label(r, 0), std::nullopt, std::nullopt, std::nullopt});
    } else {
      b.test_graphs.push_back(all.compounds[r]);
      b.test_y.push_back(all.value(r, 0));
    }
  }
  return b;
}

// Reduced architecture for desk-scale runs; optimiser settings and the
// early-stopping protocol stay at their defaults.
TrainConfig bench_config(std::uint64_t seed, std::size_t max_epochs) {
  TrainConfig c;
  c.model.embed_dim = 32;
  c.model.num_layers = 3;
  c.model.head_hidden = 32;
  c.max_epochs = max_epochs;
  c.seed = seed;
  return c;
}

constexpr std::size_t kMtlMaxEpochs = 150;     // caps the 2200-compound runs
constexpr std::size_t kSmallMaxEpochs = 1000;  // 200-compound runs stop early

struct TestScores {
  double mse = 0;
  double pearson = 0;
  double recall = 0;
};

TestScores score(const ModelParams& params, const Benchmark& b) {
  const std::size_t task0[] = {0};
  const Tensor p = predict_dataset(params, b.test_graphs, task0);
  const std::vector<double> pred(p.data().begin(), p.data().end());
  const auto k = static_cast<std::size_t>(0.1 * kTest);
  return {mse(b.test_y, pred), pearson(b.test_y, pred), recall_at(b.test_y, pred, HitDirection::lower_is_better, k, 0.1)};
}

struct SeedRun {
  TestScores single, mtl, transfer;
  double al_mean = 0, random_mean = 0;
};

std::string join_wins(const std::vector<bool>& wins) {
  std::string s;
  for (bool w : wins) s += w ? 'W' : 'L';
  return s;
}

}  // namespace

int main() {
  tune_allocator();
  const auto start = Clock::now();
  int failures = 0;
  auto report = [&](int id, const std::string& name, const Outcome& o) {
    std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << id << "] " << name << ": " << o.detail << std::endl;
    failures += o.pass ? 0 : 1;
  };

  report(1, "gradient integrity", gradient_integrity());
  report(2, "permutation/batch invariance", invariance());
  report(3, "metric oracles", metric_oracles());
  report(4, "pChEMBL conversion", pchembl_example());
  report(5, "early-stopping automaton", early_stopping_scripts());
  report(6, "transfer freeze", transfer_freeze());

  const std::vector<std::uint64_t> seeds{1, 2, 3};
  std::vector<SeedRun> runs;
  double mtl_seconds = 0;
  double al_seconds = 0;
  double transfer_seconds = 0;
  for (std::uint64_t seed : seeds) {
    const Benchmark b = make_benchmark(seed);
    SeedRun run;

    auto t0 = Clock::now();
    const TrainResult single = train(b.single, bench_config(seed, kSmallMaxEpochs));
    const TrainResult mtl = train(b.mtl, bench_config(seed, kMtlMaxEpochs));
    run.single = score(single.params, b);
    run.mtl = score(mtl.params, b);
    mtl_seconds += seconds_since(t0);

    t0 = Clock::now();
    ALConfig al;
    al.ensemble_size = 5;
    al.total_budget = 200;
    al.n_rounds = 4;
    al.init_fraction = 0.5;
    TrainConfig member;
    member.model.embed_dim = 16;
    member.model.num_layers = 3;
    member.model.head_hidden = 16;
    member.min_epochs = 40;
    member.patience = 10;
    member.max_epochs = 80;
    member.seed = seed;
    const ALResult ar = al_run(b.pool, [&](std::size_t i) { return b.pool_y[i]; }, al, member, HitDirection::lower_is_better);
    run.al_mean = std::accumulate(ar.labels.begin(), ar.labels.end(), 0.0) / static_cast<double>(ar.labels.size());
    std::vector<std::size_t> idx(b.pool.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng(seed).split("random_baseline").shuffle(idx);
    double s = 0;
    for (std::size_t i = 0; i < al.total_budget; ++i) s += b.pool_y[idx[i]];
    run.random_mean = s / static_cast<double>(al.total_budget);
    al_seconds += seconds_since(t0);

    t0 = Clock::now();
    const TrainResult pre = train(b.aux, bench_config(seed, kMtlMaxEpochs));
    const TransferResult tr = transfer_train(pre.params, b.single, TransferConfig{bench_config(seed, kSmallMaxEpochs), 20});
    run.transfer = score(tr.params, b);
    transfer_seconds += seconds_since(t0);

    std::cout << "      seed " << seed << ": single mse " << fmt(run.single.mse) << " r " << fmt(run.single.pearson)
              << " recall " << fmt(run.single.recall) << " | mtl mse " << fmt(run.mtl.mse) << " r " << fmt(run.mtl.pearson)
              << " recall " << fmt(run.mtl.recall) << " | transfer mse " << fmt(run.transfer.mse) << " r "
              << fmt(run.transfer.pearson) << " | AL mean " << fmt(run.al_mean) << " vs random " << fmt(run.random_mean)
              << std::endl;
    runs.push_back(run);
  }

  std::vector<bool> mtl_wins, al_wins, transfer_wins;
  for (const auto& r : runs) {
    mtl_wins.push_back(r.mtl.mse < r.single.mse && r.mtl.recall >= r.single.recall);
    al_wins.push_back(r.al_mean < r.random_mean);
    transfer_wins.push_back(r.transfer.mse < r.single.mse);
  }
  auto count = [](const std::vector<bool>& v) { return std::count(v.begin(), v.end(), true); };
  report(7, "multi-task beats single-task",
         {count(mtl_wins) >= 2 && mtl_seconds < 900,
          join_wins(mtl_wins) + " over seeds 1-3 (need >= 2 wins on test MSE and top-10% recall), " + fmt(mtl_seconds, 3) +
              " s < 900 s"});
  report(8, "active learning beats random acquisition",
         {count(al_wins) >= 2, join_wins(al_wins) + " over seeds 1-3 on mean true score of the 200 acquired (lower is better), " +
                                   fmt(al_seconds, 3) + " s"});
  report(9, "transfer beats cold start",
         {count(transfer_wins) >= 2, join_wins(transfer_wins) + " over seeds 1-3 on new-target test MSE at 200 labels, " +
                                         fmt(transfer_seconds, 3) + " s"});

  // ---------------------------------------------------------------- 10
  {
    using namespace dockmtl::testing_corpus;
    std::size_t ok = 0;
    for (const auto& e : kCorpus) {
      const MolGraph g = parse_smiles(e.smiles);
      std::size_t ring = 0, arom = 0;
      for (const auto& bd : g.bonds) ring += bd.in_ring;
      for (const auto& a : g.atoms) arom += a.aromatic;
      ok += g.atom_count() == e.atoms && g.bond_count() == e.bonds && hydrogen_total(g) == e.hydrogens &&
            ring == e.ring_bonds && arom == e.aromatic_atoms;
    }
    const std::vector<std::pair<std::string, ParseErrorKind>> errors{
        {"C1CC", ParseErrorKind::unclosed_ring},
        {"CC(C", ParseErrorKind::unmatched_parenthesis},
        {"CXC", ParseErrorKind::unknown_atom},
        {"[CH+a]", ParseErrorKind::charge_or_hydrogen_syntax},
        {"", ParseErrorKind::empty_input},
    };
    std::size_t raised = 0;
    for (const auto& [s, kind] : errors) {
      try {
        parse_smiles(s);
      } catch (const SmilesParseError& e) {
        raised += e.kind() == kind;
      }
    }
    const std::size_t corpus_size = std::size(kCorpus);
    report(10, "SMILES corpus",
           {ok == corpus_size && corpus_size == 20 && raised == errors.size(),
            std::to_string(ok) + "/" + std::to_string(corpus_size) + " molecules match; " + std::to_string(raised) + "/" +
                std::to_string(errors.size()) + " error cases raise their variant"});
  }

  // ---------------------------------------------------------------- 11
  {
    const fs::path dir = fs::temp_directory_path() / "dockmtl_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string cli = std::string("'") + DOCKMTL_CLI + "'";
    const std::string data = (dir / "data.csv").string();
    const std::string quiet = " >/dev/null 2>&1";
    bool ran = std::system((cli + " synth-gen --tasks 3 --per-task 300 --seed 11 --out " + data + quiet).c_str()) == 0;
    const std::string train = cli + " train --mode mtl --new-target T0 --new-size 100 --aux-size 200 --seed 5"
                              " --embed-dim 16 --num-layers 2 --head-hidden 16 --min-epochs 5 --patience 2 --max-epochs 8"
                              " --data " + data + " --out ";
    for (const char* name : {"a.ckpt", "b.ckpt"}) ran = ran && std::system((train + (dir / name).string() + quiet).c_str()) == 0;
    auto slurp = [](const fs::path& p) {
      std::ifstream in(p, std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      return ss.str();
    };
    const std::string a = ran ? slurp(dir / "a.ckpt") : "", b = ran ? slurp(dir / "b.ckpt") : "";
    report(11, "reproducible checkpoints",
           {ran && !a.empty() && a == b, ran ? "two `train --mode mtl` runs: " + std::to_string(a.size()) + " bytes, " +
                                                   (a == b ? "bit-identical" : "DIFFER")
                                             : "CLI invocation failed"});
    fs::remove_all(dir);
  }

  std::cout << (failures == 0 ? "ALL CRITERIA PASS" : std::to_string(failures) + " CRITERIA FAILED") << " in "
            << fmt(seconds_since(start), 4) << " s" << std::endl;
  return failures == 0 ? 0 : 1;
}
