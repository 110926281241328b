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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "preqeval/data.hpp"
#include "preqeval/learner.hpp"

namespace preqeval {

// Prefix boundaries b_1 < ... < b_M = N. Block i (0-based) covers
// examples [b_{i-1}, b_i) with b_{-1} = 0.
struct BlockPlan {
  std::vector<std::size_t> boundaries;

  std::size_t num_blocks() const { return boundaries.size(); }
  std::size_t begin(std::size_t block) const { return block == 0 ? 0 : boundaries[block - 1]; }
  std::size_t end(std::size_t block) const { return boundaries[block]; }
  std::size_t size(std::size_t block) const { return end(block) - begin(block); }

  static BlockPlan per_example(std::size_t n);
  static BlockPlan single(std::size_t n);
  static BlockPlan fixed_size(std::size_t n, std::size_t block_size);
  // first, first*ratio, first*ratio^2, ... capped at n (n always included).
  static BlockPlan geometric(std::size_t n, std::size_t first, double ratio);

  bool operator==(const BlockPlan&) const = default;
};

// Throws std::invalid_argument unless the plan partitions [0, n).
void validate(const BlockPlan& plan, std::size_t n);

enum class EvalMode : std::uint8_t { kPerExample = 0, kBlockwise = 1 };
// kPretrained codes block 1 with the starting state's own predictions; only
// legal when that state's head was actually trained beforehand.
enum class FirstBlockCode : std::uint8_t { kUniform = 0, kPretrained = 1 };

std::string to_string(EvalMode m);
std::string to_string(FirstBlockCode c);

struct EvaluationProtocol {
  EvalMode mode = EvalMode::kBlockwise;
  Regime regime = Regime::kFromScratch;
  HyperParams default_hyper;
  std::vector<HyperParams> candidate_hypers{HyperParams{}};
  FirstBlockCode first_block = FirstBlockCode::kUniform;

  std::size_t default_index() const;
  bool operator==(const EvaluationProtocol&) const = default;
};

void validate(const EvaluationProtocol& protocol, LearnerKind kind);

// Convenience: single-candidate protocol.
EvaluationProtocol single_hyper_protocol(const HyperParams& hyper, Regime regime,
                                         EvalMode mode = EvalMode::kBlockwise);

struct BlockResult {
  std::size_t index = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  double bits = 0.0;
  double accuracy = 0.0;
  // Candidate that coded the block; empty for the uniform-coded block.
  std::optional<std::size_t> hyper_index;
  // Every candidate's bits on this block (blocks >= 2 only).
  std::vector<double> candidate_bits;
  // Switching reports: which model coded the block, and its identity bits.
  std::optional<std::size_t> model_index;
  double identity_bits = 0.0;
};

struct CodelengthReport {
  double total_bits = 0.0;
  std::vector<BlockResult> blocks;
  std::string learner_kind;
  std::string dataset_id;
  std::string head = kDefaultHead;
  std::size_t num_classes = 2;
  FeatureSpec feature_spec;
  EvaluationProtocol protocol;
  BlockPlan plan;
};

// log2 K + sum_{i>=2} nll of example i under the state trained on the first
// i-1 examples. warm_start trains one state online, one example at a time;
// from_scratch retrains on every prefix.
CodelengthReport exact_online_codelength(LearnerKind kind, const HyperParams& hyper,
                                         const Dataset& data,
                                         Regime regime = Regime::kWarmStart);

// Picks the candidate for the next block from the bits each candidate spent
// on previously completed model-coded blocks (oldest first). With no history
// the default wins; otherwise the minimum on the latest block, first listed
// on ties.
std::size_t hyperparameter_carryover(const EvaluationProtocol& protocol,
                                     std::span<const std::vector<double>> history);

// Drives the block-by-block protocol shared by the codelength computation,
// the encoder and the decoder. Only revealed labels are ever used for
// training or selection.
class OnlineSession {
 public:
  // One starting state per candidate hyper (same order as the protocol).
  OnlineSession(std::vector<LearnerState> bases, EvaluationProtocol protocol, BlockPlan plan,
                std::string head, std::uint64_t ordering_seed);

  // State that codes `block`, or nullptr when the block is uniform-coded.
  // Blocks must be visited in order.
  const LearnerState* coding_state(std::size_t block) const;
  std::optional<std::size_t> chosen_candidate(std::size_t block) const;

  // Hands over the true examples of `block` (the next unrevealed one) and
  // prepares the state for the block after it.
  void reveal(std::size_t block, std::span<const Example> examples);

  // Candidate bits of every completed model-coded block >= 2.
  const std::vector<std::vector<double>>& history() const { return history_; }
  std::size_t next_block() const { return next_block_; }

 private:
  void prepare_next();

  std::vector<LearnerState> bases_;
  std::vector<LearnerState> states_;
  EvaluationProtocol protocol_;
  BlockPlan plan_;
  std::string head_;
  std::uint64_t ordering_seed_;
  std::vector<Example> revealed_;
  std::vector<std::vector<double>> history_;
  std::size_t next_block_ = 0;
  std::optional<std::size_t> chosen_;
};

// Fresh initial states, one per candidate.
std::vector<LearnerState> initial_states(LearnerKind kind, const EvaluationProtocol& protocol,
                                         LabelSpace labels, FeatureSpec features);

CodelengthReport blockwise_codelength(LearnerKind kind, const EvaluationProtocol& protocol,
                                      const Dataset& data, const BlockPlan& plan);
// Same, starting from caller-supplied states (e.g. pretrained ones).
CodelengthReport blockwise_codelength(std::vector<LearnerState> bases,
                                      const EvaluationProtocol& protocol, const Dataset& data,
                                      const BlockPlan& plan, const std::string& head);

// Per block, the cheapest model codes it; with identity_cost each block
// after the first also pays log2(num_models) bits to name the model.
CodelengthReport switching_codelength(std::span<const CodelengthReport> reports,
                                      bool identity_cost = true);

struct MetricPoint {
  std::uint64_t x = 0;  // examples seen, or iteration for curriculum series
  std::string metric;
  double value = 0.0;
  std::string task;
  std::int64_t seed = 0;

  bool operator==(const MetricPoint&) const = default;
};

struct MetricSeries {
  std::vector<MetricPoint> points;
  std::vector<std::string> warnings;
};

// Accuracy on `eval` after training on each plan prefix, plus the untrained
// point at examples_seen = 0.
MetricSeries learning_curve(LearnerKind kind, const HyperParams& hyper, const Dataset& train,
                            const Dataset& eval, const BlockPlan& plan,
                            Regime regime = Regime::kFromScratch, std::int64_t seed = 0);

// CSV with header "<x_name>,metric,value,task,seed".
std::string to_csv(const MetricSeries& series, const std::string& x_name = "examples_seen");

}  // namespace preqeval
