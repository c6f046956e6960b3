#pragma once

// Mini-batch training with the classification loss and, when the model has a
// discriminator, the adversarial domain loss through gradient reversal.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <vector>

#include "ltsgat/log.hpp"
#include "ltsgat/model/lts_gat.hpp"
#include "ltsgat/random.hpp"
#include "ltsgat/train/adam.hpp"
#include "ltsgat/train/config.hpp"
#include "ltsgat/train/inference.hpp"
#include "ltsgat/train/schedule.hpp"

namespace ltsgat::train {

struct EpochRecord {
  std::size_t epoch = 0;
  double loss_c = 0.0;
  double loss_d = 0.0;
  double lambda = 0.0;  // at the last batch of the epoch
  double acc_src = 0.0;
  double acc_tgt = 0.0;
};

struct TrainHistory {
  bool domain_adaptation = false;
  std::vector<EpochRecord> epochs;

  // Domain loss, lambda and target accuracy columns exist only under adaptation.
  std::string csv() const {
    std::ostringstream out;
    out.precision(17);
    out << (domain_adaptation ? "epoch,L_c,L_d,lambda,acc_src,acc_tgt\n" : "epoch,L_c,acc_src\n");
    for (const EpochRecord& r : epochs) {
      out << r.epoch << ',' << r.loss_c;
      if (domain_adaptation) out << ',' << r.loss_d << ',' << r.lambda;
      out << ',' << r.acc_src;
      if (domain_adaptation) out << ',' << r.acc_tgt;
      out << '\n';
    }
    return out.str();
  }

  void write_csv(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << csv();
  }
};

// Thrown when the loss or a gradient stops being finite. `last_good` holds the
// parameters before the failing step, in registry order.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, std::vector<double> last_good, std::size_t epoch, std::size_t batch)
      : std::runtime_error(what), last_good(std::move(last_good)), epoch(epoch), batch(batch) {}
  std::vector<double> last_good;
  std::size_t epoch, batch;
};

struct TrainOptions {
  std::optional<double> fixed_lambda;                         // overrides the schedule
  std::function<void(std::size_t, std::size_t)> after_step;   // (epoch, batch)
  std::function<bool(const EpochRecord&)> after_epoch;        // false stops training
};

namespace detail {
inline int argmax_row(const ad::Matrix& probs, std::size_t row) { return probs(row, 1) > probs(row, 0) ? 1 : 0; }
}  // namespace detail

// Initializes `net` from cfg.seed and trains it. The target set is unlabeled
// input to the discriminator; its labels only feed the acc_tgt column.
inline TrainHistory train(model::LtsGat& net, std::span<const FeatureSample> source,
                          std::span<const FeatureSample> target, const TrainConfig& cfg,
                          const TrainOptions& opt = {}) {
  if (source.empty()) throw std::invalid_argument("train: empty source set");
  const bool da = net.has_discriminator();
  if (da && target.empty()) throw std::invalid_argument("train: domain adaptation needs a target set");
  if (!da && !target.empty()) throw std::invalid_argument("train: target set given without domain adaptation");
  cfg.validate();

  net.initialize(cfg.seed);
  AdamState adam = AdamState::fresh(net.params(), cfg.learning_rate);
  std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, {1})), target_rng(derive_seed(cfg.seed, {2}));
  std::vector<std::size_t> order(source.size()), target_order(target.size());
  std::iota(order.begin(), order.end(), 0);
  std::iota(target_order.begin(), target_order.end(), 0);
  std::shuffle(target_order.begin(), target_order.end(), target_rng);
  std::size_t target_at = 0;

  const std::size_t batches = (source.size() + cfg.batch_size - 1) / cfg.batch_size;
  TrainHistory history;
  history.domain_adaptation = da;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochRecord rec;
    rec.epoch = epoch;
    std::size_t correct_src = 0, correct_tgt = 0, seen_tgt = 0;

    for (std::size_t l = 1; l <= batches; ++l) {
      const double lambda = opt.fixed_lambda.value_or(lambda_schedule(progress(epoch, l, cfg.epochs, batches)));
      const std::size_t begin = (l - 1) * cfg.batch_size, end = std::min(source.size(), l * cfg.batch_size);
      const std::size_t bs = end - begin;
      std::vector<const FeatureSample*> batch;
      std::vector<int> labels;
      for (std::size_t i = begin; i < end; ++i) {
        batch.push_back(&source[order[i]]);
        labels.push_back(source[order[i]].label(cfg.dimension));
      }
      if (da) {
        for (std::size_t i = 0; i < bs; ++i) {
          if (target_at == target_order.size()) {
            std::shuffle(target_order.begin(), target_order.end(), target_rng);
            target_at = 0;
          }
          batch.push_back(&target[target_order[target_at++]]);
        }
      }

      ad::Graph g;
      model::BoundParameters b(g, net.params());
      std::vector<std::size_t> src_rows(bs);
      std::iota(src_rows.begin(), src_rows.end(), 0);
      ad::Var probs, loss_c, total, tgt_probs;
      double loss_d = 0.0;
      try {
        const model::ForwardResult r = net.forward(b, batch);
        const ad::Var pooled_src = da ? ad::gather_rows(r.pooled, src_rows) : r.pooled;
        probs = net.classify(b, pooled_src);
        loss_c = model::classification_loss(probs, labels);
        total = loss_c;
        if (da) {
          std::vector<int> domains(2 * bs, 1);
          std::fill_n(domains.begin(), bs, 0);
          const ad::Var ld = model::classification_loss(net.discriminate(b, r.pooled, lambda), domains);
          loss_d = ld.value()[0];
          total = ad::add(loss_c, ld);
          std::vector<std::size_t> tgt_rows(bs);
          std::iota(tgt_rows.begin(), tgt_rows.end(), bs);
          tgt_probs = net.classify(b, ad::gather_rows(r.pooled, tgt_rows));
        }
      } catch (const std::domain_error& e) {
        // A non-finite activation reached the loss.
        throw TrainingDiverged(std::string("train: ") + e.what() + " at epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(l),
                               net.params().flatten(), epoch, l);
      }
      if (!std::isfinite(total.value()[0])) {
        throw TrainingDiverged("train: loss became non-finite at epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(l),
                               net.params().flatten(), epoch, l);
      }
      g.backward(total);
      try {
        adam_step(net.params(), b.gradients(), adam);
      } catch (const NumericError& e) {
        throw TrainingDiverged(e.what(), net.params().flatten(), epoch, l);
      }

      rec.loss_c += loss_c.value()[0] * static_cast<double>(bs);
      rec.loss_d += loss_d * static_cast<double>(bs);
      rec.lambda = lambda;
      for (std::size_t i = 0; i < bs; ++i) correct_src += detail::argmax_row(probs.value(), i) == labels[i] ? 1 : 0;
      if (tgt_probs.valid()) {
        for (std::size_t i = 0; i < bs; ++i)
          correct_tgt += detail::argmax_row(tgt_probs.value(), i) == batch[bs + i]->label(cfg.dimension) ? 1 : 0;
        seen_tgt += bs;
      }
      if (opt.after_step) opt.after_step(epoch, l);
    }
    const double count = static_cast<double>(source.size());
    rec.loss_c /= count;
    rec.loss_d /= count;
    rec.acc_src = static_cast<double>(correct_src) / count;
    if (seen_tgt > 0) rec.acc_tgt = static_cast<double>(correct_tgt) / static_cast<double>(seen_tgt);
    history.epochs.push_back(rec);
    const bool keep_going = !opt.after_epoch || opt.after_epoch(rec);
    log::debug("train", "epoch done",
               {{"epoch", epoch}, {"L_c", rec.loss_c}, {"L_d", rec.loss_d}, {"lambda", rec.lambda},
                {"acc_src", rec.acc_src}});
    if (!keep_going) break;
  }
  return history;
}

}  // namespace ltsgat::train
