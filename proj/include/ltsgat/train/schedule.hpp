#pragma once

// Adaptation factor schedule and training progress.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "ltsgat/log.hpp"

namespace ltsgat::train {

// lambda = 2 / (1 + exp(-10 p)) - 1; p outside [0, 1] is clamped with a warning.
inline double lambda_schedule(double p) {
  if (std::isnan(p)) throw std::invalid_argument("lambda_schedule: p is NaN");
  if (p < 0.0 || p > 1.0) {
    log::warn("train", "progress outside [0, 1] clamped", {{"p", p}});
    p = std::clamp(p, 0.0, 1.0);
  }
  return 2.0 / (1.0 + std::exp(-10.0 * p)) - 1.0;
}

// p = (l + i b) / (n b) for epoch i and batch l (both from 1), clamped to [0, 1].
inline double progress(std::size_t i, std::size_t l, std::size_t n, std::size_t b) {
  if (n == 0 || b == 0) throw std::invalid_argument("progress: epochs and batches must be > 0");
  const double p = (static_cast<double>(l) + static_cast<double>(i) * static_cast<double>(b)) /
                   (static_cast<double>(n) * static_cast<double>(b));
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace ltsgat::train
