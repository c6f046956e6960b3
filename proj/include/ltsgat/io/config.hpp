#pragma once

// Training configuration as JSON: presets, strict loading, and resolution
// order preset < file < flags.

#include <algorithm>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "ltsgat/io/binary.hpp"
#include "ltsgat/io/dataset.hpp"
#include "ltsgat/train/config.hpp"

namespace ltsgat::io {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"hci-dep", "hci-indep", "deap-dep", "deap-indep", "custom"};
  return names;
}

inline train::TrainConfig preset(const std::string& name) {
  train::TrainConfig c;
  c.preset = name;
  c.model.n = 32;
  c.model.k = 10;
  c.model.gat_layers = 4;
  c.regions = 9;
  auto set = [&](std::size_t d_h, std::size_t gat_hidden, std::size_t heads, double lr, std::size_t batch,
                 std::size_t epochs, bool da) {
    c.model.d_h = d_h;
    c.model.gat_hidden = gat_hidden;
    c.model.heads = heads;
    c.learning_rate = lr;
    c.batch_size = batch;
    c.epochs = epochs;
    c.model.domain_adaptation = da;
  };
  if (name == "hci-dep") set(16, 28, 2, 1e-3, 24, 20, false);
  else if (name == "hci-indep") set(48, 16, 4, 1e-3, 128, 15, true);
  else if (name == "deap-dep") set(32, 18, 2, 1e-3, 128, 20, false);
  else if (name == "deap-indep") set(32, 16, 4, 1e-4, 80, 30, true);
  else if (name == "custom") set(16, 28, 2, 1e-3, 24, 20, false);
  else throw ConfigError("config: unknown preset '" + name + "'");
  return c;
}

inline nlohmann::json to_json(const train::TrainConfig& c) {
  return {{"schema_version", kSchemaVersion},
          {"preset", c.preset},
          {"n", c.model.n},
          {"k", c.model.k},
          {"regions", c.regions},
          {"d_h", c.model.d_h},
          {"region_dim", c.model.region_dim},
          {"node_dim", c.model.node_dim},
          {"gat_hidden", c.model.gat_hidden},
          {"heads", c.model.heads},
          {"gat_layers", c.model.gat_layers},
          {"discriminator_hidden", c.model.discriminator_hidden},
          {"leaky_slope", c.model.leaky_slope},
          {"disable_temporal", c.model.disable_temporal},
          {"disable_spatial", c.model.disable_spatial},
          {"domain_adaptation", c.model.domain_adaptation},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"seed", c.seed},
          {"dimension", c.dimension},
          {"bands", c.bands},
          {"region_map", c.region_map},
          {"topology", c.topology},
          {"folds", c.folds}};
}

// Applies the keys present in `j` on top of `c`. Unknown keys are rejected
// together, by name.
inline void apply_json(train::TrainConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  const nlohmann::json known = to_json(c);
  std::vector<std::string> unknown;
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) unknown.push_back(key);
  if (!unknown.empty()) {
    std::string list;
    for (const std::string& k : unknown) list += (list.empty() ? "" : ", ") + k;
    throw ConfigError("config: unknown keys: " + list);
  }
  if (j.contains("schema_version") && j.at("schema_version") != kSchemaVersion) {
    throw ConfigError("config: schema_version " + j.at("schema_version").dump() + ", expected " +
                      std::to_string(kSchemaVersion));
  }
  std::string key;
  try {
    auto get = [&]<typename T>(const char* name, T& out) {
      key = name;
      if (j.contains(name)) out = j.at(name).get<T>();
    };
    get("preset", c.preset);
    get("n", c.model.n);
    get("k", c.model.k);
    get("regions", c.regions);
    get("d_h", c.model.d_h);
    get("region_dim", c.model.region_dim);
    get("node_dim", c.model.node_dim);
    get("gat_hidden", c.model.gat_hidden);
    get("heads", c.model.heads);
    get("gat_layers", c.model.gat_layers);
    get("discriminator_hidden", c.model.discriminator_hidden);
    get("leaky_slope", c.model.leaky_slope);
    get("disable_temporal", c.model.disable_temporal);
    get("disable_spatial", c.model.disable_spatial);
    get("domain_adaptation", c.model.domain_adaptation);
    get("learning_rate", c.learning_rate);
    get("batch_size", c.batch_size);
    get("epochs", c.epochs);
    get("seed", c.seed);
    get("dimension", c.dimension);
    get("bands", c.bands);
    get("region_map", c.region_map);
    get("topology", c.topology);
    get("folds", c.folds);
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config: key '" + key + "' has the wrong type: " + j.at(key).dump());
  }
}

inline train::TrainConfig from_json(const nlohmann::json& j) {
  train::TrainConfig c;
  apply_json(c, j);
  return c;
}

// Preset (flag, else file, else "custom"), then file keys, then flag keys.
inline train::TrainConfig resolve_config(const nlohmann::json& file, const nlohmann::json& flags) {
  std::string name = "custom";
  if (file.is_object() && file.contains("preset")) name = file.at("preset").get<std::string>();
  if (flags.is_object() && flags.contains("preset")) name = flags.at("preset").get<std::string>();
  train::TrainConfig c = preset(name);
  if (!file.is_null()) apply_json(c, file);
  if (!flags.is_null()) apply_json(c, flags);
  c.preset = name;
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

// An empty file is an empty object.
inline train::TrainConfig load_config(const std::filesystem::path& path, const nlohmann::json& flags) {
  nlohmann::json file = nlohmann::json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
      try {
        file = nlohmann::json::parse(text);
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: " + path.string() + ": " + e.what());
      }
    }
  }
  return resolve_config(file, flags);
}

}  // namespace ltsgat::io
