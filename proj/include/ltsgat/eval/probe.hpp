#pragma once

// Domain probe: a freshly initialized discriminator trained on frozen pooled
// features to tell source rows from target rows. Domains are balanced by
// subsampling, split in half for fitting and scoring, and optionally
// standardized with the fitting half's statistics.

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "ltsgat/model/graph_attention.hpp"
#include "ltsgat/train/adam.hpp"

namespace ltsgat::eval {

struct ProbeOptions {
  std::size_t hidden = 64;
  std::size_t steps = 300;
  double learning_rate = 1e-2;
  double leaky_slope = 0.2;
  bool standardize = true;  // scale by the fitting half's statistics
  std::uint64_t seed = 0;
};

// Held-out domain accuracy.
inline double domain_probe(const ad::Matrix& source, const ad::Matrix& target, const ProbeOptions& opt = {}) {
  if (source.cols() != target.cols()) throw std::invalid_argument("domain_probe: feature widths differ");
  const std::size_t per_domain = std::min(source.rows(), target.rows());
  if (per_domain < 4) throw std::invalid_argument("domain_probe: need >= 4 rows per domain");
  const std::size_t F = source.cols();
  std::mt19937_64 rng(opt.seed);

  // rows[d] = chosen row indices of domain d, first half fits, second half scores.
  auto pick = [&](std::size_t available) {
    std::vector<std::size_t> idx(available);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(per_domain);
    return idx;
  };
  const std::vector<std::size_t> rows[2] = {pick(source.rows()), pick(target.rows())};
  const ad::Matrix* data[2] = {&source, &target};
  const std::size_t fit_n = per_domain / 2;

  auto gather = [&](bool fit) {
    std::vector<std::vector<double>> out;
    std::vector<int> labels;
    for (int d = 0; d < 2; ++d) {
      const std::size_t begin = fit ? 0 : fit_n, end = fit ? fit_n : per_domain;
      for (std::size_t i = begin; i < end; ++i) {
        std::vector<double> r(F);
        for (std::size_t j = 0; j < F; ++j) r[j] = (*data[d])(rows[d][i], j);
        out.push_back(std::move(r));
        labels.push_back(d);
      }
    }
    return std::pair{out, labels};
  };
  auto [fit_x, fit_y] = gather(true);
  auto [test_x, test_y] = gather(false);

  std::vector<double> mean(F, 0.0), sd(F, 0.0);
  for (const auto& r : fit_x)
    for (std::size_t j = 0; j < F; ++j) mean[j] += r[j] / static_cast<double>(fit_x.size());
  for (const auto& r : fit_x)
    for (std::size_t j = 0; j < F; ++j) sd[j] += (r[j] - mean[j]) * (r[j] - mean[j]) / static_cast<double>(fit_x.size());
  for (double& v : sd) v = std::sqrt(v);
  if (!opt.standardize) {
    std::fill(mean.begin(), mean.end(), 0.0);
    std::fill(sd.begin(), sd.end(), 1.0);
  }
  auto to_matrix = [&](const std::vector<std::vector<double>>& x) {
    ad::Matrix m(x.size(), F);
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = 0; j < F; ++j) m(i, j) = sd[j] > 0.0 ? (x[i][j] - mean[j]) / sd[j] : 0.0;
    return m;
  };
  const ad::Matrix fit_m = to_matrix(fit_x), test_m = to_matrix(test_x);

  model::ParameterSet params;
  const model::DiscriminatorParams dp = model::DiscriminatorParams::add_to(params, F, opt.hidden);
  params.initialize(opt.seed ^ 0x70726f6265ULL);
  train::AdamState adam = train::AdamState::fresh(params, opt.learning_rate);
  for (std::size_t step = 0; step < opt.steps; ++step) {
    ad::Graph g;
    model::BoundParameters b(g, params);
    const ad::Var probs =
        model::domain_discriminate(g.constant(fit_m), model::Discriminator::bind(b, dp), 0.0, opt.leaky_slope, false);
    const ad::Var loss = model::classification_loss(probs, fit_y);
    g.backward(loss);
    train::adam_step(params, b.gradients(), adam);
  }
  ad::Graph g;
  model::BoundParameters b(g, params, false);
  const ad::Matrix& p =
      model::domain_discriminate(g.constant(test_m), model::Discriminator::bind(b, dp), 0.0, opt.leaky_slope, false)
          .value();
  std::size_t hits = 0;
  for (std::size_t i = 0; i < test_y.size(); ++i) hits += (p(i, 1) > p(i, 0) ? 1 : 0) == test_y[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(test_y.size());
}

}  // namespace ltsgat::eval
