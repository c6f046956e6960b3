#pragma once

// Labeled synthetic EEG-like recordings for desk-scale verification.
//
// Each channel is white noise plus theta/alpha/beta/gamma rhythms with random
// per-trial amplitude, frequency and phase. Class-1 trials scale the alpha and
// gamma rhythm amplitude by (1 + separation) on a fixed channel subset. Each
// participant multiplies channel c by exp(domain_shift * u_c), u_c ~ N(0, 1).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "ltsgat/model/region_map.hpp"
#include "ltsgat/random.hpp"
#include "ltsgat/signal/features.hpp"

namespace ltsgat::signal {

struct SynthOptions {
  std::uint64_t seed = 0;
  std::size_t participants = 4;
  std::size_t trials_per_participant = 20;
  double separation = 1.0;
  double domain_shift = 0.0;
  double sampling_rate = 128.0;
  double duration_s = 30.0;
  std::size_t channels = 32;
  std::vector<std::size_t> planted_channels;
};

struct SyntheticDataset {
  std::vector<std::string> channel_names;
  double sampling_rate = 0.0;
  std::vector<RawTrial> trials;
};

// Frontal and right-temporal channels of the map.
inline std::vector<std::size_t> default_planted_channels(const model::RegionMap& map) {
  std::vector<std::size_t> out;
  for (const model::Region& r : map.regions()) {
    if (r.name.rfind("frontal", 0) == 0 || r.name == "temporal-right") {
      out.insert(out.end(), r.channels.begin(), r.channels.end());
    }
  }
  return out;
}

inline std::string participant_name(std::size_t p) {
  std::string digits = std::to_string(p + 1);
  if (digits.size() < 2) digits = "0" + digits;
  return "p" + digits;
}

inline SyntheticDataset gen_synthetic(const SynthOptions& opt) {
  if (opt.separation < 0.0 || opt.domain_shift < 0.0) {
    throw std::invalid_argument("gen_synthetic: separation and domain shift must be >= 0");
  }
  struct Rhythm {
    double hz, jitter, amplitude;
    bool modulated;
  };
  const Rhythm rhythms[] = {
      {5.5, 0.8, 1.5, false}, {10.0, 1.0, 1.5, true}, {20.0, 3.0, 0.8, false}, {37.0, 3.0, 0.5, true}};

  std::vector<bool> planted(opt.channels, false);
  for (std::size_t c : opt.planted_channels) {
    if (c >= opt.channels) throw std::invalid_argument("gen_synthetic: planted channel out of range");
    planted[c] = true;
  }
  const auto length = static_cast<std::size_t>(std::llround(opt.duration_s * opt.sampling_rate));
  const double fs = opt.sampling_rate;

  SyntheticDataset out;
  out.sampling_rate = fs;
  for (std::size_t c = 0; c < opt.channels; ++c) out.channel_names.push_back("ch" + std::to_string(c));

  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (std::size_t p = 0; p < opt.participants; ++p) {
    std::mt19937_64 prng(derive_seed(opt.seed, {p}));
    std::vector<double> gain(opt.channels);
    for (double& g : gain) g = std::exp(opt.domain_shift * normal(prng));

    std::vector<int> classes(opt.trials_per_participant);
    for (std::size_t t = 0; t < classes.size(); ++t) classes[t] = t < (classes.size() + 1) / 2 ? 1 : 0;
    std::shuffle(classes.begin(), classes.end(), prng);

    for (std::size_t t = 0; t < opt.trials_per_participant; ++t) {
      std::mt19937_64 rng(derive_seed(opt.seed, {p, t + 1}));
      RawTrial trial;
      trial.participant = participant_name(p);
      trial.trial = static_cast<int>(t);
      trial.sampling_rate = fs;
      trial.valence = trial.arousal = classes[t] == 1 ? 7.5 : 2.5;
      trial.channels.assign(opt.channels, std::vector<double>(length));
      for (std::size_t c = 0; c < opt.channels; ++c) {
        std::vector<double>& x = trial.channels[c];
        for (double& v : x) v = normal(rng);
        for (std::size_t r = 0; r < std::size(rhythms); ++r) {
          const Rhythm& rh = rhythms[r];
          double amp = rh.amplitude * std::exp(0.25 * normal(rng));
          if (rh.modulated && classes[t] == 1 && planted[c]) amp *= 1.0 + opt.separation;
          const double hz = rh.hz + rh.jitter * (2.0 * uniform(rng) - 1.0);
          const double phase = 2.0 * std::numbers::pi * uniform(rng);
          const double env_phase = 2.0 * std::numbers::pi * uniform(rng);
          for (std::size_t i = 0; i < length; ++i) {
            const double time = static_cast<double>(i) / fs;
            const double envelope = 1.0 + 0.2 * std::sin(2.0 * std::numbers::pi * time / 7.0 + env_phase);
            x[i] += amp * envelope * std::sin(2.0 * std::numbers::pi * hz * time + phase);
          }
        }
        for (double& v : x) v *= gain[c];
      }
      out.trials.push_back(std::move(trial));
    }
  }
  return out;
}

}  // namespace ltsgat::signal
