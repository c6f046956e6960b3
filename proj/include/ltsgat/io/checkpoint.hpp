#pragma once

// Model construction from a resolved config, band selection, and checkpoints:
//   model.json  {schema_version, config, d_b, bands, region_map, topology,
//                parameters: [{name, rows, cols}], scalar_count}
//   model.f64   parameter values in registry order
//   standardizer.f64  feature means then standard deviations, when present

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ltsgat/io/binary.hpp"
#include "ltsgat/io/config.hpp"
#include "ltsgat/io/dataset.hpp"
#include "ltsgat/model/lts_gat.hpp"

namespace ltsgat::io {

inline model::RegionMap resolve_region_map(const std::string& spec) {
  return model::RegionMap::load(spec == "default" ? model::default_region_map_path() : spec);
}

inline model::GraphTopology resolve_topology(const std::string& spec, std::size_t n) {
  return spec == "full" ? model::GraphTopology::full(n) : model::GraphTopology::load(spec, n);
}

inline model::LtsGat make_model(const train::TrainConfig& cfg, std::size_t d_b) {
  model::ModelConfig mc = cfg.model;
  mc.d_b = d_b;
  model::RegionMap map = resolve_region_map(cfg.region_map);
  if (map.region_count() != cfg.regions) {
    throw ConfigError("config: regions = " + std::to_string(cfg.regions) + " but the region map has " +
                      std::to_string(map.region_count()));
  }
  return model::LtsGat(mc, std::move(map), resolve_topology(cfg.topology, mc.n));
}

// Keeps the named bands, in the given order. An empty list keeps all.
inline void select_bands(FeatureSet& set, const std::vector<std::string>& names) {
  if (names.empty()) return;
  std::vector<std::size_t> keep;
  for (const std::string& name : names) {
    std::size_t found = set.bands.size();
    for (std::size_t b = 0; b < set.bands.size(); ++b)
      if (set.bands[b].name == name) found = b;
    if (found == set.bands.size()) throw ConfigError("config: feature set has no band '" + name + "'");
    keep.push_back(found);
  }
  std::vector<signal::BandSpec> bands;
  for (std::size_t b : keep) bands.push_back(set.bands[b]);
  for (signal::FeatureSample& s : set.samples) {
    std::vector<double> values(s.n * s.k * keep.size());
    for (std::size_t c = 0; c < s.n; ++c)
      for (std::size_t t = 0; t < s.k; ++t)
        for (std::size_t j = 0; j < keep.size(); ++j) values[(c * s.k + t) * keep.size() + j] = s.at(c, t, keep[j]);
    s.values = std::move(values);
    s.bands = keep.size();
  }
  set.bands = std::move(bands);
}

inline void write_checkpoint(const fs::path& dir, const model::LtsGat& net, const train::TrainConfig& cfg,
                             const std::vector<std::string>& band_names = {},
                             const std::optional<signal::Standardizer>& standardizer = std::nullopt) {
  fs::create_directories(dir);
  json params = json::array();
  const model::ParameterSet& set = net.params();
  for (std::size_t i = 0; i < set.size(); ++i)
    params.push_back({{"name", set.name(i)}, {"rows", set.value(i).rows()}, {"cols", set.value(i).cols()}});
  write_json(dir / "model.json", {{"schema_version", kSchemaVersion},
                                  {"config", to_json(cfg)},
                                  {"d_b", net.config().d_b},
                                  {"bands", band_names},
                                  {"region_map", net.region_map().to_json()},
                                  {"topology", net.topology().to_json()},
                                  {"parameters", params},
                                  {"scalar_count", set.scalar_count()},
                                  {"standardizer", standardizer ? json(standardizer->mean.size()) : json(nullptr)}});
  write_f64(dir / "model.f64", set.flatten());
  if (standardizer) {
    std::vector<double> blob = standardizer->mean;
    blob.insert(blob.end(), standardizer->sd.begin(), standardizer->sd.end());
    write_f64(dir / "standardizer.f64", blob);
  } else {
    fs::remove(dir / "standardizer.f64");
  }
}

struct Checkpoint {
  train::TrainConfig config;
  std::vector<std::string> bands;
  model::LtsGat model;
  std::optional<signal::Standardizer> standardizer;
};

inline Checkpoint load_checkpoint(const fs::path& dir) {
  const fs::path mpath = dir / "model.json";
  const json m = read_json(mpath);
  check_schema(m, mpath);
  try {
    train::TrainConfig cfg = from_json(m.at("config"));
    model::ModelConfig mc = cfg.model;
    mc.d_b = m.at("d_b").get<std::size_t>();
    const model::RegionMap map = model::RegionMap::from_json(m.at("region_map"));
    model::LtsGat net(mc, map, model::GraphTopology::from_json(m.at("topology"), mc.n));
    const json& params = m.at("parameters");
    const model::ParameterSet& set = net.params();
    if (params.size() != set.size()) {
      throw DataFormatError(mpath.string() + ": " + std::to_string(params.size()) + " parameters, model has " +
                            std::to_string(set.size()));
    }
    for (std::size_t i = 0; i < set.size(); ++i) {
      const json& p = params[i];
      if (p.at("name") != set.name(i) || p.at("rows") != set.value(i).rows() || p.at("cols") != set.value(i).cols()) {
        throw DataFormatError(mpath.string() + ": parameter " + std::to_string(i) + " is " + p.dump() +
                              ", model expects " + set.name(i) + " " + set.value(i).shape());
      }
    }
    const std::vector<double> blob = read_f64(dir / "model.f64");
    if (blob.size() != set.scalar_count()) {
      throw DataFormatError((dir / "model.f64").string() + ": " + std::to_string(blob.size()) + " values, expected " +
                            std::to_string(set.scalar_count()));
    }
    net.params().unflatten(blob);
    std::optional<signal::Standardizer> st;
    if (m.contains("standardizer") && !m.at("standardizer").is_null()) {
      const auto dim = m.at("standardizer").get<std::size_t>();
      const std::vector<double> values = read_f64(dir / "standardizer.f64");
      if (values.size() != 2 * dim) {
        throw DataFormatError((dir / "standardizer.f64").string() + ": " + std::to_string(values.size()) +
                              " values, expected " + std::to_string(2 * dim));
      }
      st = signal::Standardizer{{values.begin(), values.begin() + static_cast<std::ptrdiff_t>(dim)},
                                {values.begin() + static_cast<std::ptrdiff_t>(dim), values.end()}};
    }
    return {cfg, m.value("bands", std::vector<std::string>{}), std::move(net), std::move(st)};
  } catch (const json::exception& e) {
    throw DataFormatError(mpath.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw DataFormatError(mpath.string() + ": " + e.what());
  } catch (const model::RegionMapError& e) {
    throw DataFormatError(mpath.string() + ": " + e.what());
  } catch (const model::TopologyError& e) {
    throw DataFormatError(mpath.string() + ": " + e.what());
  }
}

}  // namespace ltsgat::io
