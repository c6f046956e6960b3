#pragma once

#include <span>
#include <stdexcept>
#include <string>

namespace ltsgat::eval {

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total() const { return tp + fp + tn + fn; }
};

struct MetricsRecord {
  double accuracy = 0.0;
  double f1_pos = 0.0;
  double f1_macro = 0.0;
  Confusion confusion;
};

// F1 of one class; 1 when the class is neither predicted nor present, since
// every prediction about it was then correct.
inline double f1(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 1.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

inline MetricsRecord metrics_from(const Confusion& c) {
  if (c.total() == 0) throw std::invalid_argument("metrics: empty confusion table");
  MetricsRecord m;
  m.confusion = c;
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  m.f1_pos = f1(c.tp, c.fp, c.fn);
  const double f1_neg = f1(c.tn, c.fn, c.fp);
  m.f1_macro = 0.5 * (m.f1_pos + f1_neg);
  return m;
}

inline MetricsRecord metrics_from(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) {
    throw std::invalid_argument("metrics: " + std::to_string(predicted.size()) + " predictions for " +
                                std::to_string(truth.size()) + " labels");
  }
  if (predicted.empty()) throw std::invalid_argument("metrics: empty test set");
  Confusion c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == 1) (predicted[i] == 1 ? c.tp : c.fn)++;
    else (predicted[i] == 1 ? c.fp : c.tn)++;
  }
  return metrics_from(c);
}

}  // namespace ltsgat::eval
