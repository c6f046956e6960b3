#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <set>

#include "ltsgat/eval/attention.hpp"
#include "ltsgat/eval/probe.hpp"
#include "ltsgat/eval/protocol.hpp"
#include "ltsgat/model/gradcheck_model.hpp"

using namespace ltsgat;
using eval::Fold;
using eval::FoldPlan;
using eval::TrialKey;
using signal::FeatureSample;

namespace {

eval::ProtocolOptions options(std::size_t threads, std::vector<std::string> dimensions = {}) {
  eval::ProtocolOptions o;
  o.threads = threads;
  o.dimensions = std::move(dimensions);
  return o;
}

std::vector<int> iota_trials(int count) {
  std::vector<int> t(static_cast<std::size_t>(count));
  std::iota(t.begin(), t.end(), 0);
  return t;
}

std::set<TrialKey> universe_of(const std::string& p, int count) {
  std::set<TrialKey> u;
  for (int t = 0; t < count; ++t) u.insert({p, t});
  return u;
}

// Tiny-shape samples: three per trial, the label shifts every coordinate.
std::vector<FeatureSample> tiny_dataset(std::size_t participants, int trials, std::uint64_t seed) {
  const model::ModelConfig c = model::tiny_config();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<FeatureSample> out;
  for (std::size_t p = 0; p < participants; ++p) {
    for (int t = 0; t < trials; ++t) {
      const int label = t % 2;
      for (int i = 0; i < 3; ++i) {
        FeatureSample s;
        s.participant = "p" + std::to_string(p + 1);
        s.trial = t;
        s.index = i;
        s.n = c.n;
        s.k = c.k;
        s.bands = c.d_b;
        s.values.resize(c.n * c.k * c.d_b);
        for (double& v : s.values) v = noise(rng) + 1.5 * label + 0.3 * static_cast<double>(p);
        s.label_valence = label;
        s.label_arousal = 1 - label;
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

train::TrainConfig tiny_cfg(bool da, std::size_t folds = 5) {
  train::TrainConfig c;
  c.model = model::tiny_config();
  c.model.domain_adaptation = da;
  c.regions = 3;
  c.learning_rate = 1e-2;
  c.batch_size = 8;
  c.epochs = 2;
  c.seed = 5;
  c.folds = folds;
  return c;
}

model::LtsGat tiny_net(const train::TrainConfig& c) {
  return model::LtsGat(c.model, model::tiny_region_map(), model::GraphTopology::full(c.model.n));
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Folds, TwentyTrialsGiveTwoTrialsPerFold) {
  const FoldPlan plan = eval::kfold_video_split("p01", iota_trials(20), 10, 1);
  ASSERT_EQ(plan.size(), 10u);
  for (const Fold& f : plan) {
    EXPECT_EQ(f.test.size(), 2u);
    EXPECT_EQ(f.train.size(), 18u);
  }
  EXPECT_NO_THROW(eval::check_plan(plan, universe_of("p01", 20)));
  // All three samples of each trial travel together.
  std::vector<FeatureSample> samples;
  for (int t = 0; t < 20; ++t)
    for (int i = 0; i < 3; ++i) {
      FeatureSample s;
      s.participant = "p01";
      s.trial = t;
      s.index = i;
      samples.push_back(s);
    }
  EXPECT_EQ(eval::select(samples, plan[0].test).size(), 6u);
}

TEST(Folds, FortyTrialsGiveFourTrialsPerFold) {
  for (const Fold& f : eval::kfold_video_split("p", iota_trials(40), 10, 2)) EXPECT_EQ(f.test.size(), 4u);
}

TEST(Folds, UnevenCountsDifferByAtMostOne) {
  const FoldPlan plan = eval::kfold_video_split("p", iota_trials(23), 10, 3);
  std::size_t lo = 99, hi = 0;
  for (const Fold& f : plan) {
    lo = std::min(lo, f.test.size());
    hi = std::max(hi, f.test.size());
  }
  EXPECT_EQ(hi - lo, 1u);
  EXPECT_NO_THROW(eval::check_plan(plan, universe_of("p", 23)));
}

TEST(Folds, SplitIsSeededAndValidated) {
  const auto a = eval::kfold_video_split("p", iota_trials(20), 10, 7), b = eval::kfold_video_split("p", iota_trials(20), 10, 7);
  const auto c = eval::kfold_video_split("p", iota_trials(20), 10, 8);
  bool same = true, differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    same = same && a[i].test == b[i].test;
    differs = differs || a[i].test != c[i].test;
  }
  EXPECT_TRUE(same);
  EXPECT_TRUE(differs);
  EXPECT_THROW(eval::kfold_video_split("p", iota_trials(9), 10, 1), std::invalid_argument);
  EXPECT_THROW(eval::kfold_video_split("p", {1, 1, 2}, 2, 1), std::invalid_argument);
}

TEST(Folds, LeaveOneParticipantOut) {
  std::vector<std::string> people;
  std::map<std::string, std::vector<int>> trials;
  std::set<TrialKey> universe;
  for (int p = 0; p < 24; ++p) {
    people.push_back("p" + std::to_string(p));
    trials[people.back()] = iota_trials(20);
    for (int t = 0; t < 20; ++t) universe.insert({people.back(), t});
  }
  const FoldPlan plan = eval::lopo_split(people, trials);
  ASSERT_EQ(plan.size(), 24u);
  EXPECT_NO_THROW(eval::check_plan(plan, universe));
  EXPECT_NO_THROW(eval::check_participant_separation(plan));
  for (std::size_t f = 0; f < plan.size(); ++f) {
    EXPECT_EQ(plan[f].participant, people[f]);
    EXPECT_EQ(plan[f].test.size(), 20u);
    EXPECT_EQ(plan[f].train.size(), 23u * 20u);
  }
  EXPECT_THROW(eval::lopo_split({"solo"}, {{"solo", {0}}}), std::invalid_argument);
}

TEST(Folds, IntegrityChecksCatchLeaks) {
  FoldPlan plan = eval::kfold_video_split("p", iota_trials(4), 2, 1);
  plan[0].train.push_back(plan[0].test.front());
  EXPECT_THROW(eval::check_plan(plan, universe_of("p", 4)), eval::LeakageError);

  FoldPlan twice = eval::kfold_video_split("p", iota_trials(4), 2, 1);
  twice[1].test.push_back(twice[0].test.front());
  EXPECT_THROW(eval::check_plan(twice, universe_of("p", 4)), eval::LeakageError);

  FoldPlan missing = eval::kfold_video_split("p", iota_trials(4), 2, 1);
  EXPECT_THROW(eval::check_plan(missing, universe_of("p", 5)), eval::LeakageError);

  FoldPlan lopo = eval::lopo_split({"a", "b"}, {{"a", {0}}, {"b", {0}}});
  lopo[0].train.push_back({"a", 1});
  EXPECT_THROW(eval::check_participant_separation(lopo), eval::LeakageError);
}

TEST(Metrics, ClosedFormCases) {
  const std::vector<int> truth = {1, 0, 1, 0};
  const eval::MetricsRecord perfect = eval::metrics_from(truth, truth);
  EXPECT_EQ(perfect.accuracy, 1.0);
  EXPECT_EQ(perfect.f1_pos, 1.0);
  EXPECT_EQ(perfect.f1_macro, 1.0);

  const std::vector<int> always = {1, 1, 1, 1};
  const eval::MetricsRecord constant = eval::metrics_from(always, truth);
  EXPECT_EQ(constant.accuracy, 0.5);
  EXPECT_DOUBLE_EQ(constant.f1_pos, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(constant.f1_macro, 1.0 / 3.0);

  const eval::MetricsRecord scripted = eval::metrics_from(eval::Confusion{3, 1, 4, 2});
  EXPECT_DOUBLE_EQ(scripted.accuracy, 0.7);
  EXPECT_DOUBLE_EQ(scripted.f1_pos, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(scripted.f1_macro, 0.5 * (2.0 / 3.0 + 8.0 / 11.0));
}

TEST(Metrics, AllCorrectWithoutPositivesScoresOne) {
  const std::vector<int> zeros = {0, 0, 0};
  const eval::MetricsRecord m = eval::metrics_from(zeros, zeros);
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(m.f1_pos, 1.0);
  EXPECT_EQ(m.confusion.tn, 3u);
}

TEST(Metrics, RecomputedFromRawPredictions) {
  std::mt19937_64 rng(4);
  std::bernoulli_distribution coin(0.5);
  std::vector<int> pred(101), truth(101);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pred[i] = coin(rng);
    truth[i] = coin(rng);
  }
  const eval::MetricsRecord m = eval::metrics_from(pred, truth);
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    tp += pred[i] && truth[i];
    fp += pred[i] && !truth[i];
    tn += !pred[i] && !truth[i];
    fn += !pred[i] && truth[i];
  }
  EXPECT_EQ(m.confusion.total(), pred.size());
  EXPECT_EQ(m.accuracy, static_cast<double>(tp + tn) / 101.0);
  EXPECT_EQ(m.f1_pos, 2.0 * tp / static_cast<double>(2 * tp + fp + fn));
  EXPECT_EQ(m.f1_macro, 0.5 * (m.f1_pos + 2.0 * tn / static_cast<double>(2 * tn + fn + fp)));
  EXPECT_THROW(eval::metrics_from(std::vector<int>{}, std::vector<int>{}), std::invalid_argument);
  EXPECT_THROW(eval::metrics_from(std::vector<int>{1}, std::vector<int>{1, 0}), std::invalid_argument);
}

TEST(Protocol, IndependentWithThreeParticipantsHasThreeFolds) {
  const auto data = tiny_dataset(3, 6, 1);
  const train::TrainConfig cfg = tiny_cfg(true);
  const eval::ProtocolResult r = eval::run_protocol(data, eval::Paradigm::Independent, cfg, tiny_net(cfg), options(1));
  ASSERT_EQ(r.plan.size(), 3u);
  ASSERT_EQ(r.folds.size(), 3u);
  EXPECT_FALSE(r.any_failed());
  for (const auto& f : r.folds) {
    EXPECT_TRUE(f.trace.matches_train_only);
    for (const auto& k : f.trace.fitted_on) EXPECT_NE(k.first, f.participant);
  }
}

TEST(Protocol, DependentStandardizesWithTrainingFoldsOnly) {
  const auto data = tiny_dataset(2, 10, 2);
  const train::TrainConfig cfg = tiny_cfg(false);
  const eval::ProtocolResult r = eval::run_protocol(data, eval::Paradigm::Dependent, cfg, tiny_net(cfg), options(1));
  ASSERT_EQ(r.folds.size(), 10u);
  for (std::size_t j = 0; j < r.folds.size(); ++j) {
    const auto& f = r.folds[j];
    const Fold& fold = r.plan[j];
    EXPECT_TRUE(f.ok) << f.error;
    EXPECT_EQ(f.trace.fitted_on, std::set<TrialKey>(fold.train.begin(), fold.train.end()));
    for (const TrialKey& k : fold.test) EXPECT_FALSE(f.trace.fitted_on.contains(k));
    for (const TrialKey& k : fold.train) EXPECT_EQ(k.first, fold.participant);
  }
}

TEST(Protocol, StandardizationAuditRejectsLeakyFold) {
  const auto data = tiny_dataset(1, 4, 3);
  Fold fold{0, "p1", {{"p1", 0}, {"p1", 1}, {"p1", 2}}, {{"p1", 3}}};
  std::vector<FeatureSample> train_side = eval::select(data, fold.train);
  for (const FeatureSample& s : eval::select(data, fold.test)) train_side.push_back(s);
  eval::StandardizationTrace trace;
  EXPECT_THROW(eval::fit_train_only(data, fold, train_side, trace), eval::LeakageError);
}

TEST(Protocol, SummaryIsDeterministicAcrossRunsAndThreadCounts) {
  const auto data = tiny_dataset(2, 10, 4);
  const train::TrainConfig cfg = tiny_cfg(false);
  const model::LtsGat net = tiny_net(cfg);
  const auto a = eval::run_protocol(data, eval::Paradigm::Dependent, cfg, net, options(1, {"valence", "arousal"}));
  const auto b = eval::run_protocol(data, eval::Paradigm::Dependent, cfg, net, options(3, {"valence", "arousal"}));
  EXPECT_EQ(a.summary_csv(), b.summary_csv());
  const std::string csv = a.summary_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "paradigm,dimension,fold,participant,accuracy,f1_pos,f1_macro");
  // 20 fold rows, 2 participant means and one overall mean per dimension, plus the header.
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * (10 + 2 + 1));
  EXPECT_NE(csv.find("dependent,arousal,mean,all,"), std::string::npos);
}

TEST(Protocol, FoldFailureIsRecordedAndRunContinues) {
  auto data = tiny_dataset(2, 10, 5);
  for (FeatureSample& s : data)
    if (s.participant == "p2" && s.trial == 3) s.values[0] = std::numeric_limits<double>::quiet_NaN();
  const train::TrainConfig cfg = tiny_cfg(false);
  const auto r = eval::run_protocol(data, eval::Paradigm::Dependent, cfg, tiny_net(cfg), options(1));
  EXPECT_TRUE(r.any_failed());
  std::size_t ok = 0;
  for (const auto& f : r.folds) {
    if (f.participant == "p1") {
      EXPECT_TRUE(f.ok);
    }
    ok += f.ok;
  }
  EXPECT_GE(ok, 5u);
  EXPECT_NE(r.summary_csv().find("NA,NA,NA"), std::string::npos);
}

TEST(Protocol, EvaluateRejectsEmptyTestSet) {
  const train::TrainConfig cfg = tiny_cfg(false);
  EXPECT_THROW(eval::evaluate(tiny_net(cfg), {}, "valence"), std::invalid_argument);
}

TEST(Protocol, WorkerCountFromEnvironment) {
  EXPECT_EQ(eval::worker_count(3), 3u);
  setenv("LTSGAT_THREADS", "2", 1);
  EXPECT_EQ(eval::worker_count(), 2u);
  setenv("LTSGAT_THREADS", "zero", 1);
  EXPECT_GE(eval::worker_count(), 1u);
  unsetenv("LTSGAT_THREADS");
}

TEST(Attention, ImportancesSumToSegmentAndRegionCounts) {
  const train::TrainConfig cfg = tiny_cfg(false);
  model::LtsGat net = tiny_net(cfg);
  net.initialize(9);
  const auto data = tiny_dataset(1, 4, 6);
  const auto rep = eval::attention_report(net, train::pointers(data));
  ASSERT_EQ(rep.temporal.size(), data.size());
  for (std::size_t s = 0; s < data.size(); ++s) {
    for (const auto& band : rep.temporal[s]) EXPECT_NEAR(std::accumulate(band.begin(), band.end(), 0.0), 3.0, 1e-5);
    const auto mean = rep.temporal_mean(s);
    EXPECT_NEAR(std::accumulate(mean.begin(), mean.end(), 0.0), 3.0, 1e-5);
    EXPECT_NEAR(std::accumulate(rep.region[s].begin(), rep.region[s].end(), 0.0), 3.0, 1e-5);
  }
}

TEST(Attention, SymmetricModelGivesUniformImportances) {
  const train::TrainConfig cfg = tiny_cfg(false);
  model::LtsGat net = tiny_net(cfg);
  for (auto& m : net.params().values()) m.fill(0.0);
  auto data = tiny_dataset(1, 2, 7);
  for (auto& s : data) std::fill(s.values.begin(), s.values.end(), 0.5);
  const auto rep = eval::attention_report(net, train::pointers(data));
  for (double w : rep.temporal_average(rep.bands.size())) EXPECT_NEAR(w, 1.0, 0.1);
  for (double w : rep.region_average()) EXPECT_NEAR(w, 1.0, 0.1);
}

TEST(Attention, ExportWritesDeterministicCsvFiles) {
  const train::TrainConfig cfg = tiny_cfg(false);
  model::LtsGat net = tiny_net(cfg);
  net.initialize(10);
  const auto data = tiny_dataset(1, 2, 8);
  const auto dir = std::filesystem::temp_directory_path() / "ltsgat_attention";
  std::filesystem::remove_all(dir);
  const auto rep = eval::attention_report(net, train::pointers(data), {"theta", "alpha"});
  eval::export_attention(rep, dir / "a");
  eval::export_attention(eval::attention_report(net, train::pointers(data), {"theta", "alpha"}), dir / "b");
  for (const char* name : {"temporal.csv", "temporal_summary.csv", "regions.csv", "regions_summary.csv"}) {
    const std::string a = read_file(dir / "a" / name);
    EXPECT_FALSE(a.empty()) << name;
    EXPECT_EQ(a, read_file(dir / "b" / name)) << name;
  }
  const std::string temporal = read_file(dir / "a" / "temporal.csv");
  EXPECT_EQ(temporal.substr(0, temporal.find('\n')), "participant,trial,index,band,s1,s2,s3");
  // Two bands plus their mean per sample.
  EXPECT_EQ(std::count(temporal.begin(), temporal.end(), '\n'), 1 + 3 * 6);
  const std::string regions = read_file(dir / "a" / "regions_summary.csv");
  EXPECT_EQ(regions, "region,importance\n" + [&] {
    std::string body;
    const auto avg = rep.region_average();
    for (std::size_t i = 0; i < avg.size(); ++i) body += rep.regions[i] + "," + eval::detail::fmt(avg[i]) + "\n";
    return body;
  }());
}

TEST(Probe, SeparatesShiftedDomainsAndNotIdenticalOnes) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  ad::Matrix a(80, 5), b(80, 5), c(80, 5);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = n(rng);
    b[i] = n(rng) + 2.0;
    c[i] = n(rng);
  }
  EXPECT_GE(eval::domain_probe(a, b, {.seed = 1}), 0.9);
  EXPECT_LE(eval::domain_probe(a, c, {.seed = 1}), 0.7);
}
