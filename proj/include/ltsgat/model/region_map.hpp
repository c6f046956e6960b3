#pragma once

// Partition of electrodes into cortical regions, loaded from JSON:
//   {"regions": [{"name": "prefrontal", "channels": [0, 16, 1, 17]}, ...],
//    "montage": ["Fp1", "AF3", ...]}            // montage is optional

#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace ltsgat::model {

struct Region {
  std::string name;
  std::vector<std::size_t> channels;  // sequence order used when concatenating
};

class RegionMapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RegionMap {
 public:
  RegionMap() = default;

  // Validates that the regions partition channels 0..n-1 with no empty region.
  RegionMap(std::vector<Region> regions, std::vector<std::string> montage = {})
      : regions_(std::move(regions)), montage_(std::move(montage)) {
    if (regions_.empty()) throw RegionMapError("region map: no regions");
    std::size_t total = 0;
    for (const Region& r : regions_) {
      if (r.channels.empty()) throw RegionMapError("region map: region '" + r.name + "' is empty");
      total += r.channels.size();
    }
    owner_.assign(total, kNone);
    for (std::size_t ri = 0; ri < regions_.size(); ++ri) {
      for (std::size_t c : regions_[ri].channels) {
        if (c >= total) {
          throw RegionMapError("region map: channel " + std::to_string(c) + " in region '" +
                               regions_[ri].name + "' outside 0.." + std::to_string(total - 1));
        }
        if (owner_[c] != kNone) {
          throw RegionMapError("region map: channel " + std::to_string(c) +
                               " assigned to both '" + regions_[owner_[c]].name + "' and '" +
                               regions_[ri].name + "'");
        }
        owner_[c] = ri;
      }
    }
    if (!montage_.empty() && montage_.size() != total) {
      throw RegionMapError("region map: montage lists " + std::to_string(montage_.size()) +
                           " names for " + std::to_string(total) + " channels");
    }
  }

  std::size_t region_count() const noexcept { return regions_.size(); }
  std::size_t channel_count() const noexcept { return owner_.size(); }
  const std::vector<Region>& regions() const noexcept { return regions_; }
  const Region& region(std::size_t i) const { return regions_.at(i); }
  std::size_t region_of(std::size_t channel) const { return owner_.at(channel); }
  const std::vector<std::string>& montage() const noexcept { return montage_; }

  std::optional<std::size_t> find(const std::string& name) const {
    for (std::size_t i = 0; i < regions_.size(); ++i)
      if (regions_[i].name == name) return i;
    return std::nullopt;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["regions"] = nlohmann::json::array();
    for (const Region& r : regions_) j["regions"].push_back({{"name", r.name}, {"channels", r.channels}});
    if (!montage_.empty()) j["montage"] = montage_;
    return j;
  }

  static RegionMap from_json(const nlohmann::json& j) {
    try {
      std::vector<Region> regions;
      for (const auto& r : j.at("regions")) {
        regions.push_back({r.at("name").get<std::string>(),
                           r.at("channels").get<std::vector<std::size_t>>()});
      }
      std::vector<std::string> montage;
      if (j.contains("montage")) montage = j.at("montage").get<std::vector<std::string>>();
      return RegionMap(std::move(regions), std::move(montage));
    } catch (const nlohmann::json::exception& e) {
      throw RegionMapError(std::string("region map: malformed JSON: ") + e.what());
    }
  }

  static RegionMap load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw RegionMapError("region map: cannot open " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw RegionMapError("region map: " + path + ": " + e.what());
    }
    return from_json(j);
  }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<Region> regions_;
  std::vector<std::string> montage_;
  std::vector<std::size_t> owner_;
};

#ifdef LTSGAT_DATA_DIR
inline std::string default_region_map_path() { return std::string(LTSGAT_DATA_DIR) + "/regions_32.json"; }
#endif

}  // namespace ltsgat::model
