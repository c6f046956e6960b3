#pragma once

// On-disk dataset and feature formats.
//
// Dataset directory:
//   manifest.json  {schema_version, n_channels, sampling_rate, channel_names,
//                   participants: [{id, file, trials: [{trial_id, length,
//                   retained_window: {start, length}, valence, arousal}]}],
//                   config}
//   pXX.f64        little-endian doubles, layout [trial][channel][time]
//
// Feature directory:
//   features.json  {schema_version, n, k, d_b, bands, channel_names,
//                   sample_count, samples: [{participant, trial, index,
//                   valence, arousal, label_valence, label_arousal}], config}
//   features.f64   layout [sample][channel][segment][band]

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ltsgat/io/binary.hpp"
#include "ltsgat/signal/features.hpp"

namespace ltsgat::io {

namespace fs = std::filesystem;
using nlohmann::json;

inline json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataFormatError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataFormatError(path.string() + ": " + e.what());
  }
}

inline void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

inline void check_schema(const json& j, const fs::path& path) {
  const int v = j.value("schema_version", -1);
  if (v != kSchemaVersion) {
    throw DataFormatError(path.string() + ": schema_version " + std::to_string(v) + ", expected " +
                          std::to_string(kSchemaVersion));
  }
}

struct Dataset {
  std::vector<std::string> channel_names;
  double sampling_rate = 0.0;
  std::vector<signal::RawTrial> trials;  // already cut to the retained window
  json config = json::object();          // generator or converter settings echo
};

inline void write_dataset(const fs::path& dir, const Dataset& data) {
  fs::create_directories(dir);
  json manifest = {{"schema_version", kSchemaVersion},
                   {"n_channels", data.channel_names.size()},
                   {"sampling_rate", data.sampling_rate},
                   {"channel_names", data.channel_names},
                   {"participants", json::array()},
                   {"config", data.config}};
  std::vector<std::string> order;
  for (const auto& t : data.trials)
    if (std::find(order.begin(), order.end(), t.participant) == order.end()) order.push_back(t.participant);
  for (const std::string& who : order) {
    json entry = {{"id", who}, {"file", who + ".f64"}, {"trials", json::array()}};
    std::vector<double> blob;
    for (const auto& t : data.trials) {
      if (t.participant != who) continue;
      if (t.channel_count() != data.channel_names.size()) {
        throw std::invalid_argument("write_dataset: trial channel count differs from channel_names");
      }
      entry["trials"].push_back({{"trial_id", t.trial},
                                 {"length", t.length()},
                                 {"retained_window", {{"start", 0}, {"length", t.length()}}},
                                 {"valence", t.valence},
                                 {"arousal", t.arousal}});
      for (const auto& ch : t.channels) blob.insert(blob.end(), ch.begin(), ch.end());
    }
    write_f64(dir / (who + ".f64"), blob);
    manifest["participants"].push_back(std::move(entry));
  }
  write_json(dir / "manifest.json", manifest);
}

inline Dataset load_dataset(const fs::path& dir) {
  const fs::path mpath = dir / "manifest.json";
  const json m = read_json(mpath);
  check_schema(m, mpath);
  Dataset out;
  try {
    out.sampling_rate = m.at("sampling_rate").get<double>();
    out.channel_names = m.at("channel_names").get<std::vector<std::string>>();
    out.config = m.value("config", json::object());
    const auto n = m.at("n_channels").get<std::size_t>();
    if (n != out.channel_names.size()) {
      throw DataFormatError(mpath.string() + ": n_channels " + std::to_string(n) + " but " +
                            std::to_string(out.channel_names.size()) + " channel names");
    }
    for (const json& p : m.at("participants")) {
      const std::string who = p.at("id").get<std::string>();
      const fs::path blob_path = dir / p.at("file").get<std::string>();
      const std::vector<double> blob = read_f64(blob_path);
      std::size_t offset = 0;
      for (const json& t : p.at("trials")) {
        const auto len = t.at("length").get<std::size_t>();
        const auto start = t.at("retained_window").at("start").get<std::size_t>();
        const auto keep = t.at("retained_window").at("length").get<std::size_t>();
        if (start + keep > len) {
          throw DataFormatError(mpath.string() + ": retained window exceeds trial length for " + who);
        }
        if (offset + n * len > blob.size()) {
          throw DataFormatError(blob_path.string() + ": holds " + std::to_string(blob.size()) +
                                " values, manifest needs more");
        }
        signal::RawTrial trial;
        trial.participant = who;
        trial.trial = t.at("trial_id").get<int>();
        trial.sampling_rate = out.sampling_rate;
        trial.valence = t.at("valence").get<double>();
        trial.arousal = t.at("arousal").get<double>();
        for (std::size_t c = 0; c < n; ++c) {
          const auto first = blob.begin() + static_cast<std::ptrdiff_t>(offset + c * len + start);
          trial.channels.emplace_back(first, first + static_cast<std::ptrdiff_t>(keep));
        }
        offset += n * len;
        out.trials.push_back(std::move(trial));
      }
      if (offset != blob.size()) {
        throw DataFormatError(blob_path.string() + ": " + std::to_string(blob.size() - offset) +
                              " trailing values not described by the manifest");
      }
    }
  } catch (const json::exception& e) {
    throw DataFormatError(mpath.string() + ": " + e.what());
  }
  return out;
}

struct FeatureSet {
  std::size_t n = 0, k = 0;
  std::vector<signal::BandSpec> bands;
  std::vector<std::string> channel_names;
  json config = json::object();  // extraction settings echo
  std::vector<signal::FeatureSample> samples;

  std::size_t d_b() const noexcept { return bands.size(); }
};

inline json bands_to_json(const std::vector<signal::BandSpec>& bands) {
  json j = json::array();
  for (const auto& b : bands) j.push_back({{"name", b.name}, {"low_hz", b.low_hz}, {"high_hz", b.high_hz}});
  return j;
}

inline void write_features(const fs::path& dir, const FeatureSet& set) {
  fs::create_directories(dir);
  json table = json::array();
  std::vector<double> blob;
  blob.reserve(set.samples.size() * set.n * set.k * set.d_b());
  for (const auto& s : set.samples) {
    if (s.n != set.n || s.k != set.k || s.bands != set.d_b()) {
      throw std::invalid_argument("write_features: sample shape differs from set shape");
    }
    table.push_back({{"participant", s.participant},
                     {"trial", s.trial},
                     {"index", s.index},
                     {"valence", s.valence},
                     {"arousal", s.arousal},
                     {"label_valence", s.label_valence},
                     {"label_arousal", s.label_arousal}});
    blob.insert(blob.end(), s.values.begin(), s.values.end());
  }
  write_json(dir / "features.json", {{"schema_version", kSchemaVersion},
                                     {"n", set.n},
                                     {"k", set.k},
                                     {"d_b", set.d_b()},
                                     {"bands", bands_to_json(set.bands)},
                                     {"channel_names", set.channel_names},
                                     {"sample_count", set.samples.size()},
                                     {"samples", table},
                                     {"config", set.config}});
  write_f64(dir / "features.f64", blob);
}

inline FeatureSet load_features(const fs::path& dir) {
  const fs::path mpath = dir / "features.json";
  const json m = read_json(mpath);
  check_schema(m, mpath);
  FeatureSet set;
  try {
    set.n = m.at("n").get<std::size_t>();
    set.k = m.at("k").get<std::size_t>();
    for (const json& b : m.at("bands")) {
      set.bands.push_back({b.at("name").get<std::string>(), b.at("low_hz").get<double>(),
                           b.at("high_hz").get<double>()});
    }
    if (m.at("d_b").get<std::size_t>() != set.bands.size()) {
      throw DataFormatError(mpath.string() + ": d_b disagrees with the band list");
    }
    set.channel_names = m.value("channel_names", std::vector<std::string>{});
    set.config = m.value("config", json::object());
    const auto count = m.at("sample_count").get<std::size_t>();
    const json& table = m.at("samples");
    if (table.size() != count) throw DataFormatError(mpath.string() + ": sample table length != sample_count");
    const std::vector<double> blob = read_f64(dir / "features.f64");
    const std::size_t stride = set.n * set.k * set.d_b();
    if (blob.size() != count * stride) {
      throw DataFormatError((dir / "features.f64").string() + ": expected " + std::to_string(count * stride) +
                            " values, found " + std::to_string(blob.size()));
    }
    for (std::size_t i = 0; i < count; ++i) {
      const json& row = table[i];
      signal::FeatureSample s;
      s.participant = row.at("participant").get<std::string>();
      s.trial = row.at("trial").get<int>();
      s.index = row.at("index").get<int>();
      s.valence = row.at("valence").get<double>();
      s.arousal = row.at("arousal").get<double>();
      s.label_valence = row.at("label_valence").get<int>();
      s.label_arousal = row.at("label_arousal").get<int>();
      s.n = set.n;
      s.k = set.k;
      s.bands = set.d_b();
      s.values.assign(blob.begin() + static_cast<std::ptrdiff_t>(i * stride),
                      blob.begin() + static_cast<std::ptrdiff_t>((i + 1) * stride));
      set.samples.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw DataFormatError(mpath.string() + ": " + e.what());
  }
  return set;
}

}  // namespace ltsgat::io
