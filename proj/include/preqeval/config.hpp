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

// Experiment configuration: a JSON document validated strictly (unknown keys
// are errors, every problem is reported at once) and normalized so that its
// canonical form, plus the content of any referenced dataset file, fully
// determines every output.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "preqeval/coder.hpp"
#include "preqeval/curriculum.hpp"
#include "preqeval/digest.hpp"
#include "preqeval/learner.hpp"
#include "preqeval/prequential.hpp"
#include "preqeval/tasks.hpp"

namespace preqeval {

enum class ExperimentKind : std::uint8_t {
  kCodelength,
  kCompress,
  kDecompress,
  kCurve,
  kContinual,
  kMultitask,
  kCrossMatrix,
  kPretrainFinetune,
};

// Config spelling uses underscores ("cross_matrix"); the CLI also accepts
// hyphens ("cross-matrix").
std::string to_string(ExperimentKind k);
std::optional<ExperimentKind> parse_experiment_kind(const std::string& name);

// A task is either generated from a spec (then shifted) or loaded from a
// JSONL file.
struct TaskConfig {
  TaskSpec spec;
  std::vector<Shift> shifts;
  std::string dataset_path;   // non-empty: load instead of generating
  std::string dataset_sha256; // content digest of the file, filled at parse time
  std::string head;           // empty: the experiment's default head choice
};

struct LearnerConfig {
  LearnerKind kind = LearnerKind::kLogisticRegression;
  HyperParams hyper;
  std::vector<HyperParams> candidates;  // empty: just `hyper`
};

struct PlanConfig {
  enum class Type : std::uint8_t { kGeometric, kFixed, kPerExample, kSingle, kExplicit };
  Type type = Type::kGeometric;
  std::size_t first = 16;
  double ratio = 2.0;
  std::size_t block_size = 100;
  std::vector<std::size_t> boundaries;

  BlockPlan build(std::size_t n) const;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kCodelength;
  std::vector<LearnerConfig> learners;  // >1 only for codelength (model switching)
  std::vector<TaskConfig> tasks;
  double eval_fraction = 0.2;
  PlanConfig plan;
  EvalMode mode = EvalMode::kBlockwise;
  Regime regime = Regime::kFromScratch;
  bool identity_cost = true;
  CurriculumSchedule schedule;
  std::string target;                   // pretrain_finetune: target task id
  std::vector<std::int64_t> seeds{0};
  int precision = kDefaultPrecision;
  std::string output_dir;               // not part of the digest
  // decompress: the compress experiment whose streams are decoded.
  std::string compress_config_path;
  std::shared_ptr<const ExperimentConfig> compress_config;

  // Canonical JSON (sorted keys, defaults filled, output_dir omitted).
  std::string canonical;
  Digest digest{};
  std::string digest_hex() const { return to_hex(digest); }
};

// Throws ConfigError listing every violation; std::runtime_error when the
// file cannot be read.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& base_dir = ".");

// Materializes task i for a run seed: generated tasks get spec.seed + seed.
Dataset build_task(const TaskConfig& task, std::int64_t seed);

// Protocol for learner i with init seeds offset by the run seed.
EvaluationProtocol build_protocol(const ExperimentConfig& config, std::size_t learner,
                                  std::int64_t seed);

}  // namespace preqeval
