#pragma once

// Finite-difference check of the whole network at reduced size: n=4 channels
// in 3 regions, k=3 segments, 2 bands, four GAT layers on the complete graph.
// The scalar is the classification loss of the forward pass. Entries whose
// true gradient is near zero sit at the finite-difference roundoff floor
// (about 1e-11 for a loss near 1 at step 1e-5), so their relative error can
// approach 1e-3 without any fault in the analytic gradient.

#include <random>
#include <vector>

#include "ltsgat/autodiff/gradcheck.hpp"
#include "ltsgat/model/lts_gat.hpp"

namespace ltsgat::model {

inline ModelConfig tiny_config() {
  ModelConfig c;
  c.n = 4;
  c.k = 3;
  c.d_b = 2;
  c.d_h = 2;
  c.gat_hidden = 3;
  c.heads = 2;
  c.gat_layers = 4;
  c.discriminator_hidden = 4;
  return c;
}

inline RegionMap tiny_region_map() { return RegionMap({{"a", {0}}, {"b", {2, 1}}, {"c", {3}}}); }

inline std::vector<signal::FeatureSample> random_samples(std::size_t count, const ModelConfig& c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<signal::FeatureSample> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    signal::FeatureSample& s = out[i];
    s.participant = i % 2 == 0 ? "src" : "tgt";
    s.trial = static_cast<int>(i);
    s.n = c.n;
    s.k = c.k;
    s.bands = c.d_b;
    s.values.resize(c.n * c.k * c.d_b);
    for (double& v : s.values) v = normal(rng);
    s.label_valence = s.label_arousal = static_cast<int>(i / 2 % 2);
  }
  return out;
}

inline ad::GradCheckReport end_to_end_grad_check(std::uint64_t seed, double tol = 1e-3) {
  ModelConfig config = tiny_config();
  config.domain_adaptation = false;
  LtsGat model(config, tiny_region_map(), GraphTopology::full(config.n));
  model.initialize(seed);
  // Non-zero biases so every path carries gradient.
  std::mt19937_64 rng(seed ^ 0x5bd1e995ULL);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (ad::Matrix& m : model.params().values())
    for (double& v : m.data()) v += u(rng);

  const std::vector<signal::FeatureSample> samples = random_samples(4, config, seed + 1);
  std::vector<const signal::FeatureSample*> batch;
  std::vector<int> labels;
  for (const auto& s : samples) {
    batch.push_back(&s);
    labels.push_back(s.label_valence);
  }

  ad::ExpressionBuilder build = [&](Graph& g, std::span<const Var> leaves) {
    BoundParameters b(g, std::vector<Var>(leaves.begin(), leaves.end()));
    return classification_loss(model.classify(b, model.forward(b, batch).pooled), labels);
  };
  return ad::grad_check("lts-gat end to end", build, model.params().values(), tol);
}

}  // namespace ltsgat::model
