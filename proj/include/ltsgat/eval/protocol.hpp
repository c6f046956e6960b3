#pragma once

// Cross-validation driver: builds the fold plan, standardizes with training
// statistics only, trains one model per fold and dimension on a worker pool,
// and writes the per-fold and averaged summary.

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <vector>

#include "ltsgat/eval/folds.hpp"
#include "ltsgat/eval/metrics.hpp"
#include "ltsgat/log.hpp"
#include "ltsgat/random.hpp"
#include "ltsgat/train/trainer.hpp"

namespace ltsgat::eval {

enum class Paradigm { Dependent, Independent };

inline std::string to_string(Paradigm p) { return p == Paradigm::Dependent ? "dependent" : "independent"; }

// Worker count: explicit value, else LTSGAT_THREADS, else hardware concurrency.
inline std::size_t worker_count(std::size_t requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("LTSGAT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    log::warn("eval", "ignoring malformed LTSGAT_THREADS", {{"value", env}});
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

// Runs fn(0..count-1) on up to `workers` threads.
inline void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

inline MetricsRecord evaluate(const model::LtsGat& net, std::span<const FeatureSample> test,
                              const std::string& dimension) {
  if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
  const std::vector<int> predicted = train::predict_labels(net, train::pointers(test));
  std::vector<int> truth;
  for (const FeatureSample& s : test) truth.push_back(s.label(dimension));
  return metrics_from(predicted, truth);
}

// What a fold was standardized with, kept for the leakage audit.
struct StandardizationTrace {
  std::set<TrialKey> fitted_on;
  bool matches_train_only = false;  // statistics recomputed from the training side are identical
};

struct FoldResult {
  std::size_t job = 0;
  std::string dimension;
  std::string participant;
  std::size_t fold = 0;
  bool ok = false;
  std::string error;
  MetricsRecord metrics;
  StandardizationTrace trace;
};

struct ProtocolResult {
  Paradigm paradigm = Paradigm::Dependent;
  FoldPlan plan;
  std::vector<FoldResult> folds;  // ordered by job

  bool any_failed() const {
    return std::any_of(folds.begin(), folds.end(), [](const FoldResult& f) { return !f.ok; });
  }

  // Mean accuracy over successful folds of one dimension, averaged per
  // participant first under the dependent paradigm.
  MetricsRecord average(const std::string& dimension) const {
    std::map<std::string, std::vector<const MetricsRecord*>> per;
    for (const FoldResult& f : folds)
      if (f.ok && f.dimension == dimension) per[f.participant].push_back(&f.metrics);
    MetricsRecord out;
    if (per.empty()) return out;
    for (const auto& [p, list] : per) {
      MetricsRecord m;
      for (const MetricsRecord* r : list) {
        m.accuracy += r->accuracy / static_cast<double>(list.size());
        m.f1_pos += r->f1_pos / static_cast<double>(list.size());
        m.f1_macro += r->f1_macro / static_cast<double>(list.size());
      }
      out.accuracy += m.accuracy / static_cast<double>(per.size());
      out.f1_pos += m.f1_pos / static_cast<double>(per.size());
      out.f1_macro += m.f1_macro / static_cast<double>(per.size());
    }
    return out;
  }

  std::string summary_csv() const {
    std::ostringstream out;
    out << "paradigm,dimension,fold,participant,accuracy,f1_pos,f1_macro\n";
    const std::string paradigm = to_string(this->paradigm);
    auto row = [&](const std::string& dim, const std::string& fold, const std::string& who, const MetricsRecord* m) {
      out << paradigm << ',' << dim << ',' << fold << ',' << who << ',';
      if (m) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f", m->accuracy, m->f1_pos, m->f1_macro);
        out << buf << '\n';
      } else {
        out << "NA,NA,NA\n";
      }
    };
    std::vector<std::string> dims;
    for (const FoldResult& f : folds)
      if (std::find(dims.begin(), dims.end(), f.dimension) == dims.end()) dims.push_back(f.dimension);
    for (const std::string& dim : dims) {
      std::vector<std::string> people;
      for (const FoldResult& f : folds) {
        if (f.dimension != dim) continue;
        row(dim, std::to_string(f.fold), f.participant, f.ok ? &f.metrics : nullptr);
        if (std::find(people.begin(), people.end(), f.participant) == people.end()) people.push_back(f.participant);
      }
      if (paradigm == "dependent") {
        for (const std::string& p : people) {
          std::vector<const MetricsRecord*> list;
          for (const FoldResult& f : folds)
            if (f.ok && f.dimension == dim && f.participant == p) list.push_back(&f.metrics);
          if (list.empty()) {
            row(dim, "mean", p, nullptr);
            continue;
          }
          MetricsRecord m;
          for (const MetricsRecord* r : list) {
            m.accuracy += r->accuracy / static_cast<double>(list.size());
            m.f1_pos += r->f1_pos / static_cast<double>(list.size());
            m.f1_macro += r->f1_macro / static_cast<double>(list.size());
          }
          row(dim, "mean", p, &m);
        }
      }
      const bool any = std::any_of(folds.begin(), folds.end(), [&](const FoldResult& f) { return f.ok && f.dimension == dim; });
      const MetricsRecord avg = average(dim);
      row(dim, "mean", "all", any ? &avg : nullptr);
    }
    return out.str();
  }
};

// Called after each fold trains, with the standardized sides. Runs on worker
// threads.
using FoldHook = std::function<void(const Fold&, const std::string& dimension, const model::LtsGat&,
                                    std::span<const FeatureSample> train, std::span<const FeatureSample> test)>;

struct ProtocolOptions {
  std::vector<std::string> dimensions;  // empty: the config's dimension
  std::size_t threads = 0;
  FoldHook on_fold;
};

inline FoldPlan make_plan(std::span<const FeatureSample> samples, Paradigm paradigm, const train::TrainConfig& cfg) {
  const auto [people, trials] = index_trials(samples);
  FoldPlan plan;
  if (paradigm == Paradigm::Independent) {
    plan = lopo_split(people, trials);
    check_participant_separation(plan);
  } else {
    for (std::size_t p = 0; p < people.size(); ++p) {
      FoldPlan part = kfold_video_split(people[p], trials.at(people[p]), cfg.folds, derive_seed(cfg.seed, {p}));
      // Each participant's plan is checked against that participant's trials.
      std::set<TrialKey> own;
      for (int t : trials.at(people[p])) own.insert({people[p], t});
      check_plan(part, own);
      for (Fold& f : part) plan.push_back(std::move(f));
    }
    return plan;
  }
  std::set<TrialKey> universe;
  for (const FeatureSample& s : samples) universe.insert(key_of(s));
  check_plan(plan, universe);
  return plan;
}

// Fits the standardizer on the training side and audits that choice.
inline signal::Standardizer fit_train_only(std::span<const FeatureSample> all, const Fold& fold,
                                           const std::vector<FeatureSample>& train_side, StandardizationTrace& trace) {
  signal::Standardizer st = signal::Standardizer::fit(train_side);
  for (const FeatureSample& s : train_side) trace.fitted_on.insert(key_of(s));
  for (const TrialKey& k : fold.test) {
    if (trace.fitted_on.contains(k)) throw LeakageError("fold " + std::to_string(fold.id) + ": test trial in statistics");
  }
  // Independent recomputation from the plan's training keys.
  const signal::Standardizer again = signal::Standardizer::fit(select(all, fold.train));
  trace.matches_train_only = again.mean == st.mean && again.sd == st.sd;
  if (!trace.matches_train_only) throw LeakageError("fold " + std::to_string(fold.id) + ": statistics mismatch");
  return st;
}

inline ProtocolResult run_protocol(std::span<const FeatureSample> samples, Paradigm paradigm,
                                   const train::TrainConfig& cfg, const model::LtsGat& prototype,
                                   const ProtocolOptions& opt = {}) {
  if (samples.empty()) throw std::invalid_argument("run_protocol: empty dataset");
  ProtocolResult result;
  result.paradigm = paradigm;
  result.plan = make_plan(samples, paradigm, cfg);
  const std::vector<std::string> dims = opt.dimensions.empty() ? std::vector<std::string>{cfg.dimension} : opt.dimensions;

  struct Job {
    const Fold* fold;
    std::string dimension;
  };
  std::vector<Job> jobs;
  for (const std::string& d : dims)
    for (const Fold& f : result.plan) jobs.push_back({&f, d});
  result.folds.resize(jobs.size());

  const bool da = prototype.has_discriminator();
  parallel_for(jobs.size(), worker_count(opt.threads), [&](std::size_t j) {
    const Fold& fold = *jobs[j].fold;
    FoldResult& r = result.folds[j];
    r.job = j;
    r.dimension = jobs[j].dimension;
    r.participant = fold.participant;
    r.fold = fold.id;
    try {
      std::vector<FeatureSample> train_side = select(samples, fold.train), test_side = select(samples, fold.test);
      if (train_side.empty() || test_side.empty()) throw std::runtime_error("empty fold side");
      const signal::Standardizer st = fit_train_only(samples, fold, train_side, r.trace);
      for (FeatureSample& s : train_side) st.apply(s);
      for (FeatureSample& s : test_side) st.apply(s);

      train::TrainConfig fold_cfg = cfg;
      fold_cfg.dimension = r.dimension;
      fold_cfg.seed = derive_seed(cfg.seed, {0x666f6c64ULL, j});
      model::LtsGat net = prototype;
      if (da) train::train(net, train_side, test_side, fold_cfg);
      else train::train(net, train_side, {}, fold_cfg);
      r.metrics = evaluate(net, test_side, r.dimension);
      r.ok = true;
      if (opt.on_fold) opt.on_fold(fold, r.dimension, net, train_side, test_side);
      log::info("eval", "fold done",
                {{"paradigm", to_string(paradigm)}, {"dimension", r.dimension}, {"participant", r.participant},
                 {"fold", r.fold}, {"accuracy", r.metrics.accuracy}});
    } catch (const std::exception& e) {
      r.ok = false;
      r.error = e.what();
      log::error("eval", "fold failed",
                 {{"participant", r.participant}, {"fold", r.fold}, {"dimension", r.dimension}, {"error", r.error}});
    }
  });
  return result;
}

}  // namespace ltsgat::eval
