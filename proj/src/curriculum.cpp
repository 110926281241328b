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

#include "preqeval/curriculum.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "preqeval/rng.hpp"

namespace preqeval {

namespace {

const CurriculumTask& find_task(std::span<const CurriculumTask> tasks, const std::string& id) {
  for (const auto& t : tasks) {
    if (t.task_id == id) return t;
  }
  throw std::invalid_argument("unknown task '" + id + "' in schedule");
}

void check_schedule(const CurriculumSchedule& s, std::span<const CurriculumTask> tasks) {
  if (s.eval_interval == 0) throw std::invalid_argument("eval_interval must be positive");
  if (s.kind == ScheduleKind::kSequential) {
    if (s.phases.empty()) throw std::invalid_argument("sequential schedule has no phases");
    for (const auto& p : s.phases) {
      if (p.iterations == 0) throw std::invalid_argument("phase iterations must be positive");
      find_task(tasks, p.task_id);
    }
  } else {
    if (s.task_set.empty()) throw std::invalid_argument("random_uniform schedule has no tasks");
    for (const auto& id : s.task_set) find_task(tasks, id);
  }
}

// Shared learner over every task: one feature spec, heads created on first
// sight with the task's label space.
LearnerState prepare_state(LearnerKind kind, const HyperParams& hyper,
                           std::span<const CurriculumTask> tasks) {
  if (tasks.empty()) throw std::invalid_argument("no tasks");
  const auto& first = tasks.front();
  LearnerState state = init_learner(kind, first.train.label_space, first.train.feature_spec, hyper);
  for (const auto& t : tasks) {
    if (t.train.feature_spec != first.train.feature_spec ||
        t.eval.feature_spec != first.train.feature_spec) {
      throw std::invalid_argument("task '" + t.task_id + "' has a different feature spec");
    }
    if (t.eval.label_space != t.train.label_space) {
      throw std::invalid_argument("task '" + t.task_id + "' train/eval label spaces differ");
    }
    if (has_head(state, t.head)) {
      if (state.heads.at(t.head).num_classes != t.train.label_space.num_classes) {
        throw std::invalid_argument("head '" + t.head + "' is shared by tasks with different K");
      }
    } else {
      state = add_head(state, t.head, t.train.label_space);
    }
  }
  return state;
}

}  // namespace

CurriculumRun run_curriculum(LearnerKind kind, const HyperParams& hyper,
                             const CurriculumSchedule& schedule,
                             std::span<const CurriculumTask> tasks,
                             std::span<const std::string> eval_tasks, std::int64_t seed) {
  check_schedule(schedule, tasks);
  CurriculumRun run{{}, prepare_state(kind, hyper, tasks)};
  LearnerState& state = run.state;
  TransferReport& report = run.report;

  std::vector<const CurriculumTask*> evals;
  if (eval_tasks.empty()) {
    for (const auto& t : tasks) evals.push_back(&t);
  } else {
    for (const auto& id : eval_tasks) evals.push_back(&find_task(tasks, id));
  }

  std::map<std::string, BatchCursor> cursors;
  for (const auto& t : tasks) {
    if (!t.train.empty()) {
      cursors.emplace(t.task_id, BatchCursor(t.train.size(), mix_seed(t.train.ordering_seed,
                                                                      fnv1a64(t.task_id))));
    }
  }

  auto evaluate = [&](std::uint64_t iteration) {
    for (const auto* t : evals) {
      report.series.points.push_back(
          {iteration, "accuracy", accuracy(state, t->eval.examples, t->head), t->task_id, seed});
    }
  };

  std::uint64_t total = 0;
  if (schedule.kind == ScheduleKind::kSequential) {
    for (const auto& p : schedule.phases) total += p.iterations;
  } else {
    total = schedule.total_iterations;
  }

  Rng sampler(schedule.sampling_seed);
  std::size_t phase = 0;
  std::uint64_t phase_left = schedule.kind == ScheduleKind::kSequential ? schedule.phases[0].iterations : 0;
  std::set<std::string> started;
  std::vector<const Example*> batch;

  evaluate(0);
  for (std::uint64_t it = 0; it < total; ++it) {
    const std::string* task_id;
    if (schedule.kind == ScheduleKind::kSequential) {
      while (phase_left == 0) {
        report.phase_ends.push_back(it);
        phase_left = schedule.phases[++phase].iterations;
      }
      task_id = &schedule.phases[phase].task_id;
      --phase_left;
    } else {
      task_id = &schedule.task_set[sampler.below(schedule.task_set.size())];
    }
    const CurriculumTask& task = find_task(tasks, *task_id);
    if (started.insert(task.task_id).second) {
      report.zero_shot[task.task_id] = accuracy(state, task.eval.examples, task.head);
    }
    ++report.batches_per_task[task.task_id];
    if (!task.train.empty()) {
      const std::size_t bs = std::min<std::size_t>(hyper.batch_size, task.train.size());
      batch.clear();
      for (std::size_t i : cursors.at(task.task_id).next(bs)) batch.push_back(&task.train.examples[i]);
      update_on_batch(state, batch, task.head);
    }
    if ((it + 1) % schedule.eval_interval == 0 || it + 1 == total) evaluate(it + 1);
  }
  if (schedule.kind == ScheduleKind::kSequential) report.phase_ends.push_back(total);

  for (const auto* t : evals) {
    const auto f = forgetting_metric(report.series, t->task_id);
    report.forgetting[t->task_id] = f;
    report.final[t->task_id] = f.final;
    if (!report.zero_shot.contains(t->task_id)) report.zero_shot[t->task_id] = f.final;
  }
  return run;
}

TransferReport run_sequential(LearnerKind kind, const HyperParams& hyper,
                              const CurriculumSchedule& schedule,
                              std::span<const CurriculumTask> tasks,
                              std::span<const std::string> eval_tasks, std::int64_t seed) {
  if (schedule.kind != ScheduleKind::kSequential) {
    throw std::invalid_argument("run_sequential needs a sequential schedule");
  }
  return run_curriculum(kind, hyper, schedule, tasks, eval_tasks, seed).report;
}

TransferReport run_random_uniform(LearnerKind kind, const HyperParams& hyper,
                                  const CurriculumSchedule& schedule,
                                  std::span<const CurriculumTask> tasks,
                                  std::span<const std::string> eval_tasks, std::int64_t seed) {
  if (schedule.kind != ScheduleKind::kRandomUniform) {
    throw std::invalid_argument("run_random_uniform needs a random_uniform schedule");
  }
  return run_curriculum(kind, hyper, schedule, tasks, eval_tasks, seed).report;
}

TransferReport pretrain_then_finetune(LearnerKind kind, const HyperParams& hyper,
                                      std::span<const CurriculumTask> pretrain,
                                      std::uint64_t pretrain_iterations,
                                      std::uint64_t sampling_seed, const CurriculumTask& target,
                                      const EvaluationProtocol& protocol, const BlockPlan& plan,
                                      std::int64_t seed) {
  validate(protocol, kind);
  if (pretrain.empty()) throw std::invalid_argument("no pretraining tasks");
  for (const auto& t : pretrain) {
    if (t.task_id == target.task_id) {
      throw std::invalid_argument("target '" + target.task_id + "' is in the pretraining set");
    }
  }
  // The target takes part only as an eval task; it never receives batches.
  std::vector<CurriculumTask> all(pretrain.begin(), pretrain.end());
  all.push_back(target);
  CurriculumSchedule schedule;
  schedule.kind = ScheduleKind::kRandomUniform;
  for (const auto& t : pretrain) schedule.task_set.push_back(t.task_id);
  schedule.total_iterations = pretrain_iterations;
  schedule.sampling_seed = sampling_seed;
  schedule.eval_interval = std::max<std::uint64_t>(1, pretrain_iterations / 10);
  CurriculumRun run = run_curriculum(kind, hyper, schedule, all, {}, seed);
  TransferReport report = std::move(run.report);

  bool head_trained = false;
  for (const auto& t : pretrain) {
    if (t.head == target.head && report.batches_per_task[t.task_id] > 0 && !t.train.empty()) {
      head_trained = true;
    }
  }

  // The cold start mirrors the pretraining initialization exactly.
  LearnerState cold = init_learner(kind, pretrain.front().train.label_space,
                                   pretrain.front().train.feature_spec, hyper);
  if (!has_head(cold, target.head)) cold = add_head(cold, target.head, target.train.label_space);

  std::vector<LearnerState> cold_bases, pre_bases;
  for (const auto& h : protocol.candidate_hypers) {
    cold_bases.push_back(with_hyper(cold, h));
    pre_bases.push_back(with_hyper(run.state, h));
  }
  EvaluationProtocol cold_protocol = protocol;
  cold_protocol.first_block = FirstBlockCode::kUniform;
  EvaluationProtocol pre_protocol = protocol;
  pre_protocol.first_block = head_trained ? FirstBlockCode::kPretrained : FirstBlockCode::kUniform;

  TransferReport::CodelengthComparison cmp{
      blockwise_codelength(std::move(cold_bases), cold_protocol, target.train, plan, target.head),
      blockwise_codelength(std::move(pre_bases), pre_protocol, target.train, plan, target.head)};

  const std::string& tid = target.task_id;
  report.zero_shot[tid] = zero_shot_eval(run.state, target.eval, target.head);
  const LearnerState pre_final =
      fit(with_hyper(run.state, protocol.default_hyper), target.train, target.head, Regime::kWarmStart);
  const LearnerState cold_final =
      fit(with_hyper(cold, protocol.default_hyper), target.train, target.head, Regime::kWarmStart);
  report.final[tid] = accuracy(pre_final, target.eval.examples, target.head);
  report.final[tid + "/cold"] = accuracy(cold_final, target.eval.examples, target.head);
  for (const auto& [name, r] : {std::pair{"block_bits_cold", &cmp.cold},
                                std::pair{"block_bits_pretrained", &cmp.pretrained}}) {
    for (const auto& b : r->blocks) {
      report.series.points.push_back({b.end, name, b.bits, tid, seed});
    }
  }
  report.codelength_comparison = std::move(cmp);
  return report;
}

double zero_shot_eval(const LearnerState& state, const Dataset& eval, const std::string& head) {
  if (!has_head(state, head)) throw std::invalid_argument("no head '" + head + "' for zero-shot evaluation");
  if (state.heads.at(head).num_classes != eval.label_space.num_classes) {
    throw std::invalid_argument("head '" + head + "' has an incompatible label space");
  }
  return accuracy(state, eval.examples, head);
}

std::vector<std::vector<double>> cross_variant_matrix(std::span<const TrainedModel> models,
                                                      std::span<const Dataset> evals) {
  if (models.size() != evals.size()) {
    throw std::invalid_argument("need one eval set per trained variant");
  }
  for (const auto& e : evals) {
    if (e.label_space != evals.front().label_space) {
      throw std::invalid_argument("variants must share the label space");
    }
  }
  std::vector<std::vector<double>> m(models.size(), std::vector<double>(evals.size()));
  for (std::size_t i = 0; i < models.size(); ++i) {
    for (std::size_t j = 0; j < evals.size(); ++j) {
      m[i][j] = zero_shot_eval(models[i].state, evals[j], models[i].head);
    }
  }
  return m;
}

ForgettingStats forgetting_metric(const MetricSeries& series, const std::string& task) {
  ForgettingStats f;
  bool any = false;
  for (const auto& p : series.points) {
    if (p.task != task || p.metric != "accuracy") continue;
    f.peak = any ? std::max(f.peak, p.value) : p.value;
    f.final = p.value;
    any = true;
  }
  if (!any) throw std::invalid_argument("no points for task '" + task + "'");
  f.drop = f.peak - f.final;
  return f;
}

}  // namespace preqeval
