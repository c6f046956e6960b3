#pragma once

// Fold plans for video-level k-fold and leave-one-participant-out validation,
// and the integrity checks run on every plan.

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ltsgat/signal/features.hpp"

namespace ltsgat::eval {

using signal::FeatureSample;

// (participant, trial)
using TrialKey = std::pair<std::string, int>;

inline TrialKey key_of(const FeatureSample& s) { return {s.participant, s.trial}; }

struct Fold {
  std::size_t id = 0;       // index within the participant's folds (dependent) or the LOPO plan
  std::string participant;  // dependent: the participant; independent: the held-out one
  std::vector<TrialKey> train, test;
};

using FoldPlan = std::vector<Fold>;

class LeakageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Shuffled trials dealt round-robin into `folds` groups, sizes differing by at most one.
inline FoldPlan kfold_video_split(const std::string& participant, std::vector<int> trials, std::size_t folds,
                                  std::uint64_t seed) {
  std::sort(trials.begin(), trials.end());
  if (std::adjacent_find(trials.begin(), trials.end()) != trials.end()) {
    throw std::invalid_argument("kfold_video_split: duplicate trial id for " + participant);
  }
  if (folds < 2) throw std::invalid_argument("kfold_video_split: need >= 2 folds");
  if (trials.size() < folds) {
    throw std::invalid_argument("kfold_video_split: " + participant + " has " + std::to_string(trials.size()) +
                                " trials for " + std::to_string(folds) + " folds");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(trials.begin(), trials.end(), rng);
  std::vector<std::vector<int>> groups(folds);
  for (std::size_t i = 0; i < trials.size(); ++i) groups[i % folds].push_back(trials[i]);
  FoldPlan plan;
  for (std::size_t f = 0; f < folds; ++f) {
    Fold fold{f, participant, {}, {}};
    for (std::size_t g = 0; g < folds; ++g)
      for (int t : groups[g]) (g == f ? fold.test : fold.train).push_back({participant, t});
    std::sort(fold.train.begin(), fold.train.end());
    std::sort(fold.test.begin(), fold.test.end());
    plan.push_back(std::move(fold));
  }
  return plan;
}

// One fold per participant, in the given order.
inline FoldPlan lopo_split(const std::vector<std::string>& participants,
                           const std::map<std::string, std::vector<int>>& trials) {
  if (participants.size() < 2) throw std::invalid_argument("lopo_split: need >= 2 participants");
  FoldPlan plan;
  for (std::size_t f = 0; f < participants.size(); ++f) {
    Fold fold{f, participants[f], {}, {}};
    for (const std::string& p : participants) {
      auto it = trials.find(p);
      if (it == trials.end()) throw std::invalid_argument("lopo_split: no trials for " + p);
      for (int t : it->second) (p == participants[f] ? fold.test : fold.train).push_back({p, t});
    }
    plan.push_back(std::move(fold));
  }
  return plan;
}

// Trial ids per participant, in first-seen participant order.
inline std::pair<std::vector<std::string>, std::map<std::string, std::vector<int>>> index_trials(
    std::span<const FeatureSample> samples) {
  std::vector<std::string> order;
  std::map<std::string, std::set<int>> seen;
  for (const FeatureSample& s : samples) {
    if (!seen.contains(s.participant)) order.push_back(s.participant);
    seen[s.participant].insert(s.trial);
  }
  std::map<std::string, std::vector<int>> out;
  for (const auto& [p, t] : seen) out[p] = {t.begin(), t.end()};
  return {order, out};
}

// Each fold has disjoint sides, and every trial of `universe` is tested
// exactly once across the plan.
inline void check_plan(const FoldPlan& plan, const std::set<TrialKey>& universe) {
  std::map<TrialKey, int> tested;
  for (const Fold& f : plan) {
    std::set<TrialKey> train(f.train.begin(), f.train.end());
    for (const TrialKey& k : f.test) {
      if (train.contains(k)) {
        throw LeakageError("fold " + std::to_string(f.id) + ": trial " + k.first + "/" + std::to_string(k.second) +
                           " on both sides");
      }
      if (!universe.contains(k)) throw LeakageError("fold " + std::to_string(f.id) + ": unknown trial in test side");
      ++tested[k];
    }
    for (const TrialKey& k : f.train)
      if (!universe.contains(k)) throw LeakageError("fold " + std::to_string(f.id) + ": unknown trial in train side");
  }
  for (const TrialKey& k : universe) {
    const int n = tested.contains(k) ? tested.at(k) : 0;
    if (n != 1) {
      throw LeakageError("trial " + k.first + "/" + std::to_string(k.second) + " tested " + std::to_string(n) +
                         " times");
    }
  }
}

// Leave-one-participant-out folds must also keep the held-out participant
// entirely off the training side.
inline void check_participant_separation(const FoldPlan& plan) {
  for (const Fold& f : plan) {
    for (const TrialKey& k : f.train) {
      if (k.first == f.participant) {
        throw LeakageError("fold " + std::to_string(f.id) + ": held-out participant " + f.participant +
                           " appears in training");
      }
    }
    for (const TrialKey& k : f.test) {
      if (k.first != f.participant) {
        throw LeakageError("fold " + std::to_string(f.id) + ": test side holds " + k.first);
      }
    }
  }
}

// Samples whose trial is listed, in input order. Every sample of a trial
// travels with it.
inline std::vector<FeatureSample> select(std::span<const FeatureSample> samples, const std::vector<TrialKey>& keys) {
  const std::set<TrialKey> want(keys.begin(), keys.end());
  std::vector<FeatureSample> out;
  for (const FeatureSample& s : samples)
    if (want.contains(key_of(s))) out.push_back(s);
  return out;
}

}  // namespace ltsgat::eval
