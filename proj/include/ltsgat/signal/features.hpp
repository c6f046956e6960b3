#pragma once

// Differential-entropy features organized on the electrode graph: every trial
// becomes three samples, each an n x k x d_b tensor (channel, segment, band).

#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ltsgat/autodiff/matrix.hpp"
#include "ltsgat/signal/filter.hpp"

namespace ltsgat::signal {

struct RawTrial {
  std::string participant;
  int trial = 0;
  double sampling_rate = 0.0;
  std::vector<std::vector<double>> channels;  // n series of equal length
  double valence = 5.0;
  double arousal = 5.0;

  std::size_t channel_count() const noexcept { return channels.size(); }
  std::size_t length() const noexcept { return channels.empty() ? 0 : channels.front().size(); }

  void validate() const {
    if (!(sampling_rate > 0.0)) throw std::invalid_argument("trial: sampling rate must be > 0");
    for (const auto& ch : channels) {
      if (ch.size() != length()) throw std::invalid_argument("trial: channels differ in length");
    }
    for (double r : {valence, arousal}) {
      if (!(r >= 1.0 && r <= 9.0)) {
        throw std::invalid_argument("trial: rating " + std::to_string(r) + " outside [1, 9]");
      }
    }
  }
};

struct BandSpec {
  std::string name;
  double low_hz;
  double high_hz;
};

inline std::vector<BandSpec> default_bands() {
  return {{"theta", 4.0, 7.0}, {"alpha", 8.0, 12.0}, {"beta", 13.0, 30.0}, {"gamma", 30.0, 45.0}};
}

inline BandSpec band_by_name(const std::string& name) {
  for (const BandSpec& b : default_bands())
    if (b.name == name) return b;
  throw std::invalid_argument("unknown band '" + name + "' (expected theta, alpha, beta, gamma)");
}

// Anti-aliased integer-factor decimation. The low-pass is an order-8
// Butterworth at 80% of the new Nyquist, run forward and backward.
inline RawTrial downsample(const RawTrial& trial, double target_hz) {
  if (!(target_hz < trial.sampling_rate)) {
    throw std::invalid_argument("downsample: target " + std::to_string(target_hz) +
                                " Hz must be below source " + std::to_string(trial.sampling_rate) +
                                " Hz");
  }
  const double ratio = trial.sampling_rate / target_hz;
  const auto factor = static_cast<std::size_t>(std::llround(ratio));
  if (std::abs(ratio - static_cast<double>(factor)) > 1e-9) {
    throw std::invalid_argument("downsample: source rate must be an integer multiple of target");
  }
  const Sos lowpass = butter_lowpass(8, 0.8 * target_hz / 2.0, trial.sampling_rate);
  RawTrial out = trial;
  out.sampling_rate = target_hz;
  const std::size_t out_len = trial.length() / factor;
  for (std::size_t c = 0; c < trial.channels.size(); ++c) {
    const std::vector<double> smooth = sosfiltfilt(lowpass, trial.channels[c]);
    out.channels[c].assign(out_len, 0.0);
    for (std::size_t i = 0; i < out_len; ++i) out.channels[c][i] = smooth[i * factor];
  }
  return out;
}

// Zero-phase band-pass of every channel (order-4 prototype, forward-backward).
inline RawTrial bandpass(const RawTrial& trial, const BandSpec& band) {
  const Sos sos = butter_bandpass(4, band.low_hz, band.high_hz, trial.sampling_rate);
  RawTrial out = trial;
  for (auto& ch : out.channels) ch = sosfiltfilt(sos, ch);
  return out;
}

struct SegmentSpan {
  std::size_t begin;
  std::size_t length;
};

// samples[s][j] is segment j of sample s. Segments are equal length
// floor(len / (samples * k)); the remainder at the end is dropped.
inline std::vector<std::vector<SegmentSpan>> segment_and_split(std::size_t length,
                                                               std::size_t samples = 3,
                                                               std::size_t k = 10) {
  if (samples == 0 || k == 0) throw std::invalid_argument("segment_and_split: zero samples or k");
  const std::size_t required = samples * k;
  if (length < required) {
    throw std::invalid_argument("segment_and_split: trial has " + std::to_string(length) +
                                " points, needs at least " + std::to_string(required));
  }
  const std::size_t seg = length / required;
  std::vector<std::vector<SegmentSpan>> out(samples);
  for (std::size_t s = 0; s < samples; ++s)
    for (std::size_t j = 0; j < k; ++j) out[s].push_back({(s * k + j) * seg, seg});
  return out;
}

inline constexpr double kVarianceFloor = 1e-10;

// Gaussian closed form 0.5 * ln(2 pi e var) with the unbiased variance.
inline double differential_entropy(std::span<const double> segment) {
  if (segment.size() < 2) throw std::invalid_argument("differential_entropy: need >= 2 points");
  double mean = 0.0;
  for (double v : segment) mean += v;
  mean /= static_cast<double>(segment.size());
  double ss = 0.0;
  for (double v : segment) ss += (v - mean) * (v - mean);
  const double var = std::max(ss / static_cast<double>(segment.size() - 1), kVarianceFloor);
  return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * var);
}

// r > 5 is high; with `inclusive` the boundary rating 5 is high as well.
inline int binarize_rating(double rating, bool inclusive = false) {
  if (!(rating >= 1.0 && rating <= 9.0)) {
    throw std::invalid_argument("binarize_rating: " + std::to_string(rating) + " outside [1, 9]");
  }
  return (inclusive ? rating >= 5.0 : rating > 5.0) ? 1 : 0;
}

struct FeatureSample {
  std::string participant;
  int trial = 0;
  int index = 0;  // 0..samples-1 within the trial
  std::size_t n = 0, k = 0, bands = 0;
  std::vector<double> values;  // [channel][segment][band]
  int label_valence = 0;
  int label_arousal = 0;
  double valence = 5.0;
  double arousal = 5.0;

  double& at(std::size_t c, std::size_t s, std::size_t b) { return values[(c * k + s) * bands + b]; }
  double at(std::size_t c, std::size_t s, std::size_t b) const {
    return values[(c * k + s) * bands + b];
  }

  // n x k matrix of one band.
  ad::Matrix band_slice(std::size_t b) const {
    ad::Matrix m(n, k);
    for (std::size_t c = 0; c < n; ++c)
      for (std::size_t s = 0; s < k; ++s) m(c, s) = at(c, s, b);
    return m;
  }

  int label(const std::string& dimension) const {
    if (dimension == "valence") return label_valence;
    if (dimension == "arousal") return label_arousal;
    throw std::invalid_argument("unknown emotion dimension '" + dimension + "'");
  }
};

struct ExtractOptions {
  std::vector<BandSpec> bands = default_bands();
  std::size_t k = 10;
  std::size_t samples_per_trial = 3;
  bool rating_threshold_inclusive = false;
};

inline std::vector<FeatureSample> extract_features(const RawTrial& trial,
                                                   const ExtractOptions& opt = {}) {
  trial.validate();
  const auto plan = segment_and_split(trial.length(), opt.samples_per_trial, opt.k);
  const std::size_t n = trial.channel_count(), nb = opt.bands.size();
  std::vector<FeatureSample> out(opt.samples_per_trial);
  for (std::size_t s = 0; s < out.size(); ++s) {
    FeatureSample& fs = out[s];
    fs.participant = trial.participant;
    fs.trial = trial.trial;
    fs.index = static_cast<int>(s);
    fs.n = n;
    fs.k = opt.k;
    fs.bands = nb;
    fs.values.assign(n * opt.k * nb, 0.0);
    fs.valence = trial.valence;
    fs.arousal = trial.arousal;
    fs.label_valence = binarize_rating(trial.valence, opt.rating_threshold_inclusive);
    fs.label_arousal = binarize_rating(trial.arousal, opt.rating_threshold_inclusive);
  }
  for (std::size_t b = 0; b < nb; ++b) {
    const RawTrial filtered = bandpass(trial, opt.bands[b]);
    for (std::size_t c = 0; c < n; ++c) {
      std::span<const double> series(filtered.channels[c]);
      for (std::size_t s = 0; s < plan.size(); ++s)
        for (std::size_t j = 0; j < plan[s].size(); ++j)
          out[s].at(c, j, b) = differential_entropy(series.subspan(plan[s][j].begin, plan[s][j].length));
    }
  }
  return out;
}

// Per-coordinate mean and population standard deviation over a sample set.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> sd;

  static Standardizer fit(std::span<const FeatureSample> samples) {
    if (samples.size() < 2) {
      throw std::invalid_argument("standardize: need >= 2 samples, got " +
                                  std::to_string(samples.size()));
    }
    const std::size_t dim = samples.front().values.size();
    Standardizer st;
    st.mean.assign(dim, 0.0);
    st.sd.assign(dim, 0.0);
    for (const FeatureSample& s : samples) {
      if (s.values.size() != dim) throw std::invalid_argument("standardize: mixed feature shapes");
      for (std::size_t i = 0; i < dim; ++i) st.mean[i] += s.values[i];
    }
    const double count = static_cast<double>(samples.size());
    for (double& m : st.mean) m /= count;
    for (const FeatureSample& s : samples)
      for (std::size_t i = 0; i < dim; ++i) st.sd[i] += (s.values[i] - st.mean[i]) * (s.values[i] - st.mean[i]);
    for (double& v : st.sd) v = std::sqrt(v / count);
    return st;
  }

  // Zero-variance coordinates map to 0.
  void apply(FeatureSample& s) const {
    if (s.values.size() != mean.size()) throw std::invalid_argument("standardize: shape mismatch");
    for (std::size_t i = 0; i < mean.size(); ++i)
      s.values[i] = sd[i] > 0.0 ? (s.values[i] - mean[i]) / sd[i] : 0.0;
  }
};

// In-place per-participant standardization over each participant's own samples.
inline void standardize(std::vector<FeatureSample>& samples) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < samples.size(); ++i) groups[samples[i].participant].push_back(i);
  for (const auto& [participant, idx] : groups) {
    std::vector<FeatureSample> group;
    for (std::size_t i : idx) group.push_back(samples[i]);
    if (group.size() < 2) {
      throw std::invalid_argument("standardize: participant '" + participant +
                                  "' has a single sample");
    }
    const Standardizer st = Standardizer::fit(group);
    for (std::size_t i : idx) st.apply(samples[i]);
  }
}

}  // namespace ltsgat::signal
