// Copyright 2026 The preqeval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "preqeval/data.hpp"
#include "preqeval/digest.hpp"

namespace preqeval {

enum class LearnerKind : std::uint8_t {
  kUniform = 0,
  kPrior = 1,
  kNaiveBayes = 2,
  kLogisticRegression = 3,
  kMlp = 4,
};

std::string to_string(LearnerKind k);
// Accepts the snake_case names used in configs ("naive_bayes", ...).
LearnerKind parse_learner_kind(const std::string& name);

enum class Regime : std::uint8_t { kWarmStart = 0, kFromScratch = 1 };

std::string to_string(Regime r);
Regime parse_regime(const std::string& name);

// Seed value that asks init_learner for a non-reproducible seed. Accepted by
// the learners, rejected by the coder.
inline constexpr std::int64_t kEntropySeed = -1;

struct HyperParams {
  double learning_rate = 0.5;
  double l2 = 0.0;
  std::uint64_t iterations = 200;
  std::uint64_t batch_size = 16;
  double smoothing_alpha = 1.0;  // prior / naive_bayes
  std::uint64_t hidden_width = 16;  // mlp
  std::int64_t init_seed = 0;

  bool operator==(const HyperParams&) const = default;
};

// Throws std::invalid_argument describing the first violated constraint.
void validate(const HyperParams& hyper, LearnerKind kind);

// Every predicted probability is at least this after flooring.
inline constexpr double kProbabilityFloor = 0x1.0p-20;

struct PredictiveDistribution {
  std::vector<double> probs;
};

// Lowest index wins ties.
int argmax(const PredictiveDistribution& dist);

inline const std::string kDefaultHead = "default";

// Output-layer parameters (or per-task statistics) for one task.
struct Head {
  int num_classes = 2;
  std::vector<double> params;

  bool operator==(const Head&) const = default;
};

// An immutable value: every operation below returns a new state.
//
// Parameter layouts (row-major):
//   prior          head: class counts [K]
//   naive_bayes    head: class counts [K], token totals [K], token counts [K x V]
//   logistic       head: W [K x D], b [K]
//   mlp            body: W1 [H x D], b1 [H]; head: W2 [K x H], b2 [K]
struct LearnerState {
  LearnerKind kind = LearnerKind::kUniform;
  LabelSpace label_space;
  FeatureSpec feature_spec;
  HyperParams hyper;
  std::uint64_t trained_on_count = 0;
  std::vector<double> body;
  std::map<std::string, Head> heads;

  bool operator==(const LearnerState&) const = default;
};

LearnerState init_learner(LearnerKind kind, LabelSpace label_space, FeatureSpec feature_spec,
                          const HyperParams& hyper);

// Adds a task-specific head. Logistic heads start at zero; mlp heads are drawn
// from (init_seed, task_id). The body is untouched.
LearnerState add_head(const LearnerState& state, const std::string& task_id,
                      LabelSpace label_space);
bool has_head(const LearnerState& state, const std::string& task_id);

// Trains on `data` with the head `task_id`. SGD learners run
// hyper.iterations mini-batch steps; visitation order is derived from
// (data.ordering_seed, epoch). Count learners add the data's counts once.
LearnerState fit(const LearnerState& state, const Dataset& data, const std::string& task_id,
                 Regime regime);
LearnerState fit(const LearnerState& state, std::span<const Example> examples,
                 std::uint64_t ordering_seed, const std::string& task_id, Regime regime);

// One mini-batch update in place. Used by the curriculum driver, which owns
// its state.
void update_on_batch(LearnerState& state, std::span<const Example* const> batch,
                     const std::string& task_id);

PredictiveDistribution predict(const LearnerState& state, const FeatureVector& features,
                               const std::string& task_id);

// -log2 of the floored probability of the example's label.
double nll_bits(const LearnerState& state, const Example& example, const std::string& task_id);

double accuracy(const LearnerState& state, std::span<const Example> examples,
                const std::string& task_id);

// Same parameters, different hyperparameters (used for candidate sweeps
// that start from a shared base).
LearnerState with_hyper(const LearnerState& state, const HyperParams& hyper);

// Worst relative discrepancy between the analytic loss gradient and central
// differences, over every body and head parameter. Components are compared
// as |a - n| / max(|a|, |n|, 1e-6).
double gradient_check(const LearnerState& state, const Example& example,
                      const std::string& task_id, double epsilon);

// Canonical "PQLS" encoding, little-endian.
std::vector<std::uint8_t> serialize(const LearnerState& state);
LearnerState deserialize(std::span<const std::uint8_t> bytes);
Digest state_digest(const LearnerState& state);

// Deterministic endless stream of example indices: the concatenation of
// per-epoch permutations of [0, n), epoch e shuffled with (seed, e).
class BatchCursor {
 public:
  BatchCursor(std::size_t n, std::uint64_t seed);

  std::vector<std::size_t> next(std::size_t batch_size);

 private:
  void refill();

  std::size_t n_;
  std::uint64_t seed_;
  std::uint64_t epoch_ = 0;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

}  // namespace preqeval
