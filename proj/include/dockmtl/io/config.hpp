#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "dockmtl/active_learning.hpp"
#include "dockmtl/trainer.hpp"
#include "dockmtl/transfer.hpp"

namespace dockmtl::io {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Everything a run can be configured with. Defaults are the standard
// training settings; a JSON file overrides them and command-line flags
// override the file.
struct RunConfig {
  TrainConfig train;
  ALConfig active_learning;
  std::size_t warmup_epochs = 20;
  bool model_specified = false;  // the config named architecture fields

  [[nodiscard]] TransferConfig transfer() const { return {train, warmup_epochs}; }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& known, const std::string& where) {
  if (!obj.is_object()) throw ConfigError("'" + where + "' must be a JSON object");
  for (const auto& [key, _] : obj.items()) {
    if (!known.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read(const nlohmann::json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

}  // namespace detail

inline Acquisition parse_acquisition(const std::string& s) {
  if (s == "greedy_mean" || s == "greedy") return Acquisition::greedy_mean;
  if (s == "ucb") return Acquisition::ucb;
  throw ConfigError("unknown acquisition '" + s + "' (expected greedy_mean or ucb)");
}

inline void apply_config(const nlohmann::json& j, RunConfig& rc) {
  detail::reject_unknown(j, {"seed", "model", "train", "active_learning", "transfer"}, "config");
  detail::read(j, "seed", rc.train.seed, "config");
  if (j.contains("model")) {
    const auto& m = j["model"];
    rc.model_specified = true;
    detail::reject_unknown(m, {"embed_dim", "num_layers", "head_hidden", "dropout"}, "model");
    detail::read(m, "embed_dim", rc.train.model.embed_dim, "model");
    detail::read(m, "num_layers", rc.train.model.num_layers, "model");
    detail::read(m, "head_hidden", rc.train.model.head_hidden, "model");
    detail::read(m, "dropout", rc.train.model.dropout, "model");
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    detail::reject_unknown(t, {"lr", "batch_size", "val_fraction", "min_epochs", "patience", "max_epochs"}, "train");
    detail::read(t, "lr", rc.train.lr, "train");
    detail::read(t, "batch_size", rc.train.batch_size, "train");
    detail::read(t, "val_fraction", rc.train.val_fraction, "train");
    detail::read(t, "min_epochs", rc.train.min_epochs, "train");
    detail::read(t, "patience", rc.train.patience, "train");
    detail::read(t, "max_epochs", rc.train.max_epochs, "train");
  }
  if (j.contains("active_learning")) {
    const auto& a = j["active_learning"];
    detail::reject_unknown(a, {"ensemble_size", "total_budget", "n_rounds", "init_fraction", "acquisition", "ucb_beta"},
                           "active_learning");
    detail::read(a, "ensemble_size", rc.active_learning.ensemble_size, "active_learning");
    detail::read(a, "total_budget", rc.active_learning.total_budget, "active_learning");
    detail::read(a, "n_rounds", rc.active_learning.n_rounds, "active_learning");
    detail::read(a, "init_fraction", rc.active_learning.init_fraction, "active_learning");
    detail::read(a, "ucb_beta", rc.active_learning.ucb_beta, "active_learning");
    std::string acq;
    detail::read(a, "acquisition", acq, "active_learning");
    if (!acq.empty()) rc.active_learning.acquisition = parse_acquisition(acq);
  }
  if (j.contains("transfer")) {
    const auto& t = j["transfer"];
    detail::reject_unknown(t, {"warmup_epochs"}, "transfer");
    detail::read(t, "warmup_epochs", rc.warmup_epochs, "transfer");
  }
}

inline void load_config_file(const std::string& path, RunConfig& rc) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  apply_config(j, rc);
}

inline void validate(const RunConfig& rc) {
  try {
    rc.train.validate();
    if (rc.train.model.embed_dim < 1 || rc.train.model.num_layers < 1 || rc.train.model.head_hidden < 1) {
      throw std::invalid_argument("model dimensions must be positive");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

inline nlohmann::json to_json(const RunConfig& rc) {
  const auto& t = rc.train;
  const auto& a = rc.active_learning;
  return {{"seed", t.seed},
          {"model",
           {{"embed_dim", t.model.embed_dim},
            {"num_layers", t.model.num_layers},
            {"head_hidden", t.model.head_hidden},
            {"dropout", t.model.dropout}}},
          {"train",
           {{"lr", t.lr},
            {"batch_size", t.batch_size},
            {"val_fraction", t.val_fraction},
            {"min_epochs", t.min_epochs},
            {"patience", t.patience},
            {"max_epochs", t.max_epochs}}},
          {"active_learning",
           {{"ensemble_size", a.ensemble_size},
            {"total_budget", a.total_budget},
            {"n_rounds", a.n_rounds},
            {"init_fraction", a.init_fraction},
            {"acquisition", a.acquisition == Acquisition::ucb ? "ucb" : "greedy_mean"},
            {"ucb_beta", a.ucb_beta}}},
          {"transfer", {{"warmup_epochs", rc.warmup_epochs}}}};
}

}  // namespace dockmtl::io
