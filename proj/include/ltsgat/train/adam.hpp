#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ltsgat/model/params.hpp"

namespace ltsgat::train {

using ad::Matrix;

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t t = 0;
  std::vector<Matrix> m, v;

  static AdamState fresh(const model::ParameterSet& params, double lr) {
    AdamState s;
    s.lr = lr;
    for (const Matrix& p : params.values()) {
      s.m.emplace_back(p.rows(), p.cols());
      s.v.emplace_back(p.rows(), p.cols());
    }
    return s;
  }
};

// One bias-corrected descent step. Gradients are validated before anything
// is written, so a non-finite gradient leaves parameters and state untouched.
inline void adam_step(model::ParameterSet& params, const std::vector<Matrix>& grads, AdamState& s) {
  if (grads.size() != params.size() || s.m.size() != params.size()) {
    throw std::invalid_argument("adam_step: " + std::to_string(grads.size()) + " gradients for " +
                                std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].rows() != params.value(i).rows() || grads[i].cols() != params.value(i).cols()) {
      throw std::invalid_argument("adam_step: gradient shape " + grads[i].shape() + " for parameter '" +
                                  params.name(i) + "' of shape " + params.value(i).shape());
    }
    for (double g : grads[i].data()) {
      if (!std::isfinite(g)) throw NumericError("adam_step: non-finite gradient in parameter '" + params.name(i) + "'");
    }
  }
  ++s.t;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params.value(i).data();
    auto m = s.m[i].data();
    auto v = s.v[i].data();
    const auto g = grads[i].data();
    for (std::size_t e = 0; e < g.size(); ++e) {
      m[e] = s.beta1 * m[e] + (1.0 - s.beta1) * g[e];
      v[e] = s.beta2 * v[e] + (1.0 - s.beta2) * g[e] * g[e];
      theta[e] -= s.lr * (m[e] / c1) / (std::sqrt(v[e] / c2) + s.eps);
    }
  }
}

}  // namespace ltsgat::train
