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

// Transfer and continual-learning experiments: sequential phases, uniformly
// random task sampling per batch, pretrain-then-finetune codelength
// comparisons and cross-variant generalization matrices.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "preqeval/data.hpp"
#include "preqeval/learner.hpp"
#include "preqeval/prequential.hpp"

namespace preqeval {

// Tasks sharing a head id share output parameters; distinct ids get
// separate heads over the shared body.
struct CurriculumTask {
  std::string task_id;
  std::string head;
  Dataset train;
  Dataset eval;
};

enum class ScheduleKind : std::uint8_t { kSequential = 0, kRandomUniform = 1 };

struct Phase {
  std::string task_id;
  std::uint64_t iterations = 0;
};

struct CurriculumSchedule {
  ScheduleKind kind = ScheduleKind::kSequential;
  std::vector<Phase> phases;              // sequential
  std::vector<std::string> task_set;      // random_uniform
  std::uint64_t total_iterations = 0;     // random_uniform
  std::uint64_t sampling_seed = 0;        // random_uniform
  std::uint64_t eval_interval = 50;
};

struct ForgettingStats {
  double peak = 0.0;
  double final = 0.0;
  double drop = 0.0;
};

struct TransferReport {
  // Accuracy on every eval task, x = iteration.
  MetricSeries series;
  std::map<std::string, double> zero_shot;
  std::map<std::string, ForgettingStats> forgetting;
  std::map<std::string, double> final;
  std::map<std::string, std::uint64_t> batches_per_task;
  // Iteration at which each sequential phase ended.
  std::vector<std::uint64_t> phase_ends;
  struct CodelengthComparison {
    CodelengthReport cold;
    CodelengthReport pretrained;
  };
  std::optional<CodelengthComparison> codelength_comparison;
};

struct CurriculumRun {
  TransferReport report;
  LearnerState state;
};

// Trains according to the schedule, one batch per iteration, evaluating
// every eval task at iteration 0, every eval_interval iterations and at the
// end. Zero-shot scores are taken just before a task's first batch (or, for
// tasks that are never trained, at the end). `eval_tasks` empty means every
// task. `seed` only labels the series.
CurriculumRun run_curriculum(LearnerKind kind, const HyperParams& hyper,
                             const CurriculumSchedule& schedule,
                             std::span<const CurriculumTask> tasks,
                             std::span<const std::string> eval_tasks = {}, std::int64_t seed = 0);

TransferReport run_sequential(LearnerKind kind, const HyperParams& hyper,
                              const CurriculumSchedule& schedule,
                              std::span<const CurriculumTask> tasks,
                              std::span<const std::string> eval_tasks = {}, std::int64_t seed = 0);

TransferReport run_random_uniform(LearnerKind kind, const HyperParams& hyper,
                                  const CurriculumSchedule& schedule,
                                  std::span<const CurriculumTask> tasks,
                                  std::span<const std::string> eval_tasks = {},
                                  std::int64_t seed = 0);

// Random-uniform pretraining over `pretrain` for pretrain_iterations, then
// blockwise codelength on target.train from the pretrained state. Block 1 is
// coded by the pretrained model only if the target's head received training
// during pretraining. The cold-start codelength is computed alongside.
TransferReport pretrain_then_finetune(LearnerKind kind, const HyperParams& hyper,
                                      std::span<const CurriculumTask> pretrain,
                                      std::uint64_t pretrain_iterations,
                                      std::uint64_t sampling_seed, const CurriculumTask& target,
                                      const EvaluationProtocol& protocol, const BlockPlan& plan,
                                      std::int64_t seed = 0);

// Accuracy with no target training; throws if the head is missing or its
// label space differs from the eval set's.
double zero_shot_eval(const LearnerState& state, const Dataset& eval, const std::string& head);

struct TrainedModel {
  LearnerState state;
  std::string head = kDefaultHead;
};

// score[i][j]: model i on eval set j.
std::vector<std::vector<double>> cross_variant_matrix(std::span<const TrainedModel> models,
                                                      std::span<const Dataset> evals);

// Peak, last value and their difference over the task's points.
ForgettingStats forgetting_metric(const MetricSeries& series, const std::string& task);

}  // namespace preqeval
