#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include <nlohmann/json.hpp>

#include "dockmtl/dataset.hpp"
#include "dockmtl/gin.hpp"
#include "dockmtl/trainer.hpp"

namespace dockmtl::io {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaMismatchError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

inline constexpr char kCheckpointMagic[8] = {'D', 'O', 'C', 'K', 'M', 'T', 'L', 'C'};
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams params;
  std::vector<std::string> task_names;
  std::vector<HitDirection> directions;
  std::uint64_t seed = 0;
  std::uint64_t schema_hash = FeatureSchema::hash();
  nlohmann::json training_summary = nlohmann::json::object();
};

inline nlohmann::json summarize(const TrainingLog& log) {
  return {{"epochs", log.epochs.size()},
          {"best_epoch", log.best_epoch},
          {"best_val_loss", log.best_val_loss},
          {"stop_epoch", log.stop_epoch},
          {"stop_reason", log.stop_reason}};
}

namespace detail {

template <class T>
void put_le(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw CheckpointError("truncated checkpoint");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace detail

// Layout: 8-byte magic, u64 header length, JSON header, u64 array count,
// then per array: u32 name length, name, u32 rank, u64 dims, f64 data.
// All integers and floats little-endian.
inline void save_checkpoint(std::ostream& os, const Checkpoint& ck) {
  const ModelConfig& c = ck.params.config;
  std::vector<std::string> dirs;
  for (auto d : ck.directions) dirs.emplace_back(to_string(d));
  const nlohmann::json header = {
      {"format_version", kCheckpointVersion},
      {"embed_dim", c.embed_dim},
      {"num_layers", c.num_layers},
      {"head_hidden", c.head_hidden},
      {"dropout", c.dropout},
      {"bn_momentum", c.bn_momentum},
      {"bn_eps", c.bn_eps},
      {"task_names", ck.task_names},
      {"hit_directions", dirs},
      {"feature_schema_hash", ck.schema_hash},
      {"seed", ck.seed},
      {"training", ck.training_summary},
  };
  const std::string text = header.dump();
  os.write(kCheckpointMagic, sizeof kCheckpointMagic);
  detail::put_le<std::uint64_t>(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));

  std::uint64_t count = 0;
  ck.params.visit([&](const std::string&, const Tensor&, ParamRole) { ++count; });
  detail::put_le<std::uint64_t>(os, count);
  ck.params.visit([&](const std::string& name, const Tensor& t, ParamRole) {
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.shape().size()));
    for (auto d : t.shape()) detail::put_le<std::uint64_t>(os, d);
    for (double v : t.data()) detail::put_le<double>(os, v);
  });
  if (!os) throw CheckpointError("failed to write checkpoint");
}

inline Checkpoint load_checkpoint(std::istream& is, bool require_schema_match = true) {
  char magic[sizeof kCheckpointMagic];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    throw CheckpointError("not a checkpoint file");
  }
  const auto header_len = detail::get_le<std::uint64_t>(is);
  if (header_len > (1u << 26)) throw CheckpointError("implausible header length");
  std::string text(header_len, '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(header_len))) throw CheckpointError("truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint header: ") + e.what());
  }

  Checkpoint ck;
  try {
    if (header.at("format_version").get<int>() != kCheckpointVersion) throw CheckpointError("unsupported checkpoint version");
    ck.schema_hash = header.at("feature_schema_hash").get<std::uint64_t>();
    if (require_schema_match && ck.schema_hash != FeatureSchema::hash()) {
      throw SchemaMismatchError("checkpoint feature schema does not match this build");
    }
    ModelConfig cfg;
    cfg.embed_dim = header.at("embed_dim").get<std::size_t>();
    cfg.num_layers = header.at("num_layers").get<std::size_t>();
    cfg.head_hidden = header.at("head_hidden").get<std::size_t>();
    cfg.dropout = header.at("dropout").get<double>();
    cfg.bn_momentum = header.at("bn_momentum").get<double>();
    cfg.bn_eps = header.at("bn_eps").get<double>();
    ck.task_names = header.at("task_names").get<std::vector<std::string>>();
    for (const auto& d : header.at("hit_directions").get<std::vector<std::string>>()) ck.directions.push_back(parse_hit_direction(d));
    ck.seed = header.at("seed").get<std::uint64_t>();
    ck.training_summary = header.value("training", nlohmann::json::object());
    if (ck.task_names.empty() || ck.directions.size() != ck.task_names.size()) {
      throw CheckpointError("checkpoint task metadata is inconsistent");
    }
    ck.params = init_model(cfg, ck.task_names.size(), 0);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint header field error: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("checkpoint header field error: ") + e.what());
  }

  std::map<std::string, Tensor*> slots;
  ck.params.visit([&](const std::string& name, Tensor& t, ParamRole) { slots.emplace(name, &t); });
  const auto count = detail::get_le<std::uint64_t>(is);
  if (count != slots.size()) throw CheckpointError("checkpoint holds " + std::to_string(count) + " arrays, expected " + std::to_string(slots.size()));
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = detail::get_le<std::uint32_t>(is);
    if (name_len > 4096) throw CheckpointError("implausible array name length");
    std::string name(name_len, '\0');
    if (!is.read(name.data(), name_len)) throw CheckpointError("truncated array name");
    auto slot = slots.find(name);
    if (slot == slots.end()) throw CheckpointError("unexpected array '" + name + "'");
    const auto rank = detail::get_le<std::uint32_t>(is);
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(detail::get_le<std::uint64_t>(is));
    Tensor& t = *slot->second;
    if (shape != t.shape()) throw CheckpointError("array '" + name + "' has the wrong shape");
    for (auto& v : t.data()) v = detail::get_le<double>(is);
  }
  ck.params.set_requires_grad(true, true);
  return ck;
}

inline void save_checkpoint_file(const std::string& path, const Checkpoint& ck) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw CheckpointError("cannot open '" + path + "' for writing");
  save_checkpoint(os, ck);
}

inline Checkpoint load_checkpoint_file(const std::string& path, bool require_schema_match = true) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open '" + path + "'");
  return load_checkpoint(is, require_schema_match);
}

}  // namespace dockmtl::io
