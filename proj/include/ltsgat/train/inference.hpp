#pragma once

// Forward passes without gradients: class probabilities and pooled features.

#include <algorithm>
#include <span>
#include <vector>

#include "ltsgat/model/lts_gat.hpp"

namespace ltsgat::train {

using signal::FeatureSample;

inline std::vector<const FeatureSample*> pointers(std::span<const FeatureSample> samples) {
  std::vector<const FeatureSample*> out;
  out.reserve(samples.size());
  for (const FeatureSample& s : samples) out.push_back(&s);
  return out;
}

// Calls fn(first index, ForwardResult, BoundParameters) for consecutive chunks.
template <typename Fn>
void for_each_chunk(const model::LtsGat& net, std::span<const FeatureSample* const> samples, std::size_t chunk, Fn fn) {
  for (std::size_t at = 0; at < samples.size(); at += chunk) {
    const std::size_t end = std::min(samples.size(), at + chunk);
    ad::Graph g;
    model::BoundParameters b(g, net.params(), false);
    const model::ForwardResult r = net.forward(b, samples.subspan(at, end - at));
    fn(at, r, b);
  }
}

// Probability of the positive class per sample.
inline std::vector<double> predict_positive(const model::LtsGat& net, std::span<const FeatureSample* const> samples,
                                            std::size_t chunk = 64) {
  std::vector<double> out(samples.size());
  for_each_chunk(net, samples, chunk, [&](std::size_t at, const model::ForwardResult& r, const model::BoundParameters& b) {
    const ad::Matrix& p = net.classify(b, r.pooled).value();
    for (std::size_t i = 0; i < p.rows(); ++i) out[at + i] = p(i, 1);
  });
  return out;
}

inline std::vector<int> predict_labels(const model::LtsGat& net, std::span<const FeatureSample* const> samples,
                                       std::size_t chunk = 64) {
  std::vector<int> out;
  for (double p : predict_positive(net, samples, chunk)) out.push_back(p > 0.5 ? 1 : 0);
  return out;
}

// Pooled Z' rows, one per sample.
inline ad::Matrix pooled_features(const model::LtsGat& net, std::span<const FeatureSample* const> samples,
                                  std::size_t chunk = 64) {
  ad::Matrix out(samples.size(), net.config().gat_hidden);
  for_each_chunk(net, samples, chunk, [&](std::size_t at, const model::ForwardResult& r, const model::BoundParameters&) {
    const ad::Matrix& p = r.pooled.value();
    for (std::size_t i = 0; i < p.rows(); ++i)
      for (std::size_t j = 0; j < p.cols(); ++j) out(at + i, j) = p(i, j);
  });
  return out;
}

}  // namespace ltsgat::train
