#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ltsgat/model/lts_gat.hpp"

namespace ltsgat::train {

struct TrainConfig {
  std::string preset = "custom";
  model::ModelConfig model;
  std::size_t regions = 9;  // N; must match the region map
  double learning_rate = 1e-3;
  std::size_t batch_size = 24;
  std::size_t epochs = 20;
  std::uint64_t seed = 0;
  std::string dimension = "valence";
  std::vector<std::string> bands;       // empty: every band in the feature set
  std::string region_map = "default";   // "default" or a JSON path
  std::string topology = "full";        // "full" or a JSON path
  std::size_t folds = 10;               // dependent-paradigm folds

  void validate() const {
    model.validate();
    if (!(learning_rate > 0.0)) throw std::invalid_argument("config: learning_rate must be > 0");
    if (batch_size == 0) throw std::invalid_argument("config: batch_size must be > 0");
    if (epochs == 0) throw std::invalid_argument("config: epochs must be > 0");
    if (regions == 0) throw std::invalid_argument("config: regions must be > 0");
    if (folds < 2) throw std::invalid_argument("config: folds must be >= 2");
    if (dimension != "valence" && dimension != "arousal") {
      throw std::invalid_argument("config: dimension must be valence or arousal, got '" + dimension + "'");
    }
  }
};

}  // namespace ltsgat::train
