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

#include "preqeval/prequential.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

namespace preqeval {

BlockPlan BlockPlan::per_example(std::size_t n) {
  BlockPlan p;
  for (std::size_t i = 1; i <= n; ++i) p.boundaries.push_back(i);
  return p;
}

BlockPlan BlockPlan::single(std::size_t n) { return BlockPlan{{n}}; }

BlockPlan BlockPlan::fixed_size(std::size_t n, std::size_t block_size) {
  if (block_size == 0) throw std::invalid_argument("block size must be positive");
  BlockPlan p;
  for (std::size_t b = block_size; b < n; b += block_size) p.boundaries.push_back(b);
  if (n > 0) p.boundaries.push_back(n);
  return p;
}

BlockPlan BlockPlan::geometric(std::size_t n, std::size_t first, double ratio) {
  if (first == 0 || !(ratio > 1.0)) {
    throw std::invalid_argument("geometric plan needs first >= 1 and ratio > 1");
  }
  BlockPlan p;
  double b = static_cast<double>(first);
  while (static_cast<std::size_t>(b) < n) {
    const auto v = static_cast<std::size_t>(b);
    if (p.boundaries.empty() || v > p.boundaries.back()) p.boundaries.push_back(v);
    b *= ratio;
  }
  if (n > 0) p.boundaries.push_back(n);
  return p;
}

void validate(const BlockPlan& plan, std::size_t n) {
  if (n == 0) {
    if (!plan.boundaries.empty()) throw std::invalid_argument("plan for an empty dataset must be empty");
    return;
  }
  if (plan.boundaries.empty()) throw std::invalid_argument("block plan is empty");
  std::size_t prev = 0;
  for (std::size_t b : plan.boundaries) {
    if (b <= prev) throw std::invalid_argument("block boundaries must be strictly increasing and positive");
    prev = b;
  }
  if (prev != n) {
    throw std::invalid_argument("last block boundary " + std::to_string(prev) +
                                " != dataset size " + std::to_string(n));
  }
}

std::string to_string(EvalMode m) { return m == EvalMode::kPerExample ? "per_example" : "blockwise"; }
std::string to_string(FirstBlockCode c) {
  return c == FirstBlockCode::kUniform ? "uniform" : "pretrained";
}

std::size_t EvaluationProtocol::default_index() const {
  auto it = std::find(candidate_hypers.begin(), candidate_hypers.end(), default_hyper);
  if (it == candidate_hypers.end()) {
    throw std::invalid_argument("default hyperparameters must be one of the candidates");
  }
  return static_cast<std::size_t>(it - candidate_hypers.begin());
}

void validate(const EvaluationProtocol& protocol, LearnerKind kind) {
  if (protocol.candidate_hypers.empty()) throw std::invalid_argument("empty candidate list");
  protocol.default_index();
  for (const auto& h : protocol.candidate_hypers) validate(h, kind);
}

EvaluationProtocol single_hyper_protocol(const HyperParams& hyper, Regime regime, EvalMode mode) {
  EvaluationProtocol p;
  p.mode = mode;
  p.regime = regime;
  p.default_hyper = hyper;
  p.candidate_hypers = {hyper};
  return p;
}

namespace {

double uniform_bits(std::size_t count, int k) {
  return static_cast<double>(count) * std::log2(static_cast<double>(k));
}

double label0_rate(std::span<const Example> examples) {
  if (examples.empty()) return 0.0;
  const auto zeros = std::count_if(examples.begin(), examples.end(),
                                   [](const Example& e) { return e.label == 0; });
  return static_cast<double>(zeros) / static_cast<double>(examples.size());
}

double block_bits(const LearnerState& state, std::span<const Example> examples,
                  const std::string& head) {
  double bits = 0.0;
  for (const auto& e : examples) bits += nll_bits(state, e, head);
  return bits;
}

}  // namespace

CodelengthReport exact_online_codelength(LearnerKind kind, const HyperParams& hyper,
                                         const Dataset& data, Regime regime) {
  if (data.empty()) throw std::invalid_argument("exact codelength of an empty dataset");
  check_dataset(data);
  const int K = data.label_space.num_classes;
  const LearnerState init = init_learner(kind, data.label_space, data.feature_spec, hyper);

  CodelengthReport report;
  report.learner_kind = to_string(kind);
  report.dataset_id = data.task_id;
  report.num_classes = static_cast<std::size_t>(K);
  report.feature_spec = data.feature_spec;
  report.protocol = single_hyper_protocol(hyper, regime, EvalMode::kPerExample);
  report.plan = BlockPlan::per_example(data.size());

  const std::span<const Example> all(data.examples);
  BlockResult first;
  first.index = 0;
  first.begin = 0;
  first.end = 1;
  first.bits = std::log2(static_cast<double>(K));
  first.accuracy = data.examples[0].label == 0 ? 1.0 : 0.0;
  report.blocks.push_back(first);
  report.total_bits = first.bits;

  LearnerState state = init;
  for (std::size_t i = 1; i < data.size(); ++i) {
    if (regime == Regime::kFromScratch) {
      state = fit(init, all.first(i), data.ordering_seed, kDefaultHead, Regime::kFromScratch);
    } else {
      state = fit(state, all.subspan(i - 1, 1), data.ordering_seed, kDefaultHead,
                  Regime::kWarmStart);
    }
    const Example& e = data.examples[i];
    BlockResult r;
    r.index = i;
    r.begin = i;
    r.end = i + 1;
    r.bits = nll_bits(state, e, kDefaultHead);
    r.accuracy = argmax(predict(state, e.features, kDefaultHead)) == e.label ? 1.0 : 0.0;
    r.hyper_index = 0;
    r.candidate_bits = {r.bits};
    report.total_bits += r.bits;
    report.blocks.push_back(std::move(r));
  }
  return report;
}

std::size_t hyperparameter_carryover(const EvaluationProtocol& protocol,
                                     std::span<const std::vector<double>> history) {
  if (protocol.candidate_hypers.empty()) throw std::invalid_argument("empty candidate list");
  if (history.empty()) return protocol.default_index();
  const auto& last = history.back();
  if (last.size() != protocol.candidate_hypers.size()) {
    throw std::invalid_argument("history row does not cover every candidate");
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < last.size(); ++c) {
    if (last[c] < last[best]) best = c;
  }
  return best;
}

OnlineSession::OnlineSession(std::vector<LearnerState> bases, EvaluationProtocol protocol,
                             BlockPlan plan, std::string head, std::uint64_t ordering_seed)
    : bases_(std::move(bases)),
      protocol_(std::move(protocol)),
      plan_(std::move(plan)),
      head_(std::move(head)),
      ordering_seed_(ordering_seed) {
  if (bases_.size() != protocol_.candidate_hypers.size()) {
    throw std::invalid_argument("need one starting state per candidate");
  }
  for (const auto& b : bases_) {
    if (!has_head(b, head_)) throw std::invalid_argument("starting state lacks head '" + head_ + "'");
  }
  states_ = bases_;
  if (protocol_.first_block == FirstBlockCode::kPretrained) chosen_ = protocol_.default_index();
}

const LearnerState* OnlineSession::coding_state(std::size_t block) const {
  if (block != next_block_) throw std::logic_error("blocks must be coded in order");
  return chosen_ ? &states_[*chosen_] : nullptr;
}

std::optional<std::size_t> OnlineSession::chosen_candidate(std::size_t block) const {
  if (block != next_block_) throw std::logic_error("blocks must be coded in order");
  return chosen_;
}

void OnlineSession::reveal(std::size_t block, std::span<const Example> examples) {
  if (block != next_block_ || block >= plan_.num_blocks()) {
    throw std::logic_error("blocks must be revealed in order");
  }
  if (examples.size() != plan_.size(block)) throw std::invalid_argument("block size mismatch");
  if (block >= 1) {
    std::vector<double> row;
    row.reserve(states_.size());
    for (const auto& s : states_) row.push_back(block_bits(s, examples, head_));
    history_.push_back(std::move(row));
  }
  revealed_.insert(revealed_.end(), examples.begin(), examples.end());
  ++next_block_;
  if (next_block_ < plan_.num_blocks()) prepare_next();
}

void OnlineSession::prepare_next() {
  const std::span<const Example> revealed(revealed_);
  for (std::size_t c = 0; c < states_.size(); ++c) {
    if (protocol_.regime == Regime::kFromScratch) {
      states_[c] = fit(bases_[c], revealed, ordering_seed_, head_, Regime::kWarmStart);
    } else {
      const std::size_t last = next_block_ - 1;
      states_[c] = fit(states_[c], revealed.subspan(plan_.begin(last), plan_.size(last)),
                       ordering_seed_, head_, Regime::kWarmStart);
    }
  }
  chosen_ = hyperparameter_carryover(protocol_, history_);
}

std::vector<LearnerState> initial_states(LearnerKind kind, const EvaluationProtocol& protocol,
                                         LabelSpace labels, FeatureSpec features) {
  std::vector<LearnerState> out;
  out.reserve(protocol.candidate_hypers.size());
  for (const auto& h : protocol.candidate_hypers) out.push_back(init_learner(kind, labels, features, h));
  return out;
}

CodelengthReport blockwise_codelength(LearnerKind kind, const EvaluationProtocol& protocol,
                                      const Dataset& data, const BlockPlan& plan) {
  validate(protocol, kind);
  if (protocol.first_block != FirstBlockCode::kUniform) {
    throw std::invalid_argument("a freshly initialized learner must code block 1 uniformly");
  }
  return blockwise_codelength(initial_states(kind, protocol, data.label_space, data.feature_spec),
                              protocol, data, plan, kDefaultHead);
}

CodelengthReport blockwise_codelength(std::vector<LearnerState> bases,
                                      const EvaluationProtocol& protocol, const Dataset& data,
                                      const BlockPlan& plan, const std::string& head) {
  check_dataset(data);
  validate(plan, data.size());
  if (bases.empty()) throw std::invalid_argument("no starting states");
  validate(protocol, bases.front().kind);

  CodelengthReport report;
  report.learner_kind = to_string(bases.front().kind);
  report.dataset_id = data.task_id;
  report.head = head;
  report.num_classes = static_cast<std::size_t>(data.label_space.num_classes);
  report.feature_spec = data.feature_spec;
  report.protocol = protocol;
  report.plan = plan;

  OnlineSession session(std::move(bases), protocol, plan, head, data.ordering_seed);
  const std::span<const Example> all(data.examples);
  for (std::size_t b = 0; b < plan.num_blocks(); ++b) {
    const auto examples = all.subspan(plan.begin(b), plan.size(b));
    BlockResult r;
    r.index = b;
    r.begin = plan.begin(b);
    r.end = plan.end(b);
    r.hyper_index = session.chosen_candidate(b);
    if (const LearnerState* st = session.coding_state(b)) {
      r.bits = block_bits(*st, examples, head);
      r.accuracy = accuracy(*st, examples, head);
    } else {
      r.bits = uniform_bits(examples.size(), data.label_space.num_classes);
      r.accuracy = label0_rate(examples);
    }
    session.reveal(b, examples);
    if (b >= 1) r.candidate_bits = session.history().back();
    report.total_bits += r.bits;
    report.blocks.push_back(std::move(r));
  }
  return report;
}

CodelengthReport switching_codelength(std::span<const CodelengthReport> reports,
                                      bool identity_cost) {
  if (reports.empty()) throw std::invalid_argument("switching needs at least one report");
  const auto& ref = reports.front();
  for (const auto& r : reports) {
    if (r.plan != ref.plan || r.dataset_id != ref.dataset_id ||
        r.blocks.size() != ref.blocks.size()) {
      throw std::invalid_argument("switching reports must share dataset and block plan");
    }
  }
  const double id_bits = std::log2(static_cast<double>(reports.size()));
  CodelengthReport out;
  out.dataset_id = ref.dataset_id;
  out.head = ref.head;
  out.num_classes = ref.num_classes;
  out.feature_spec = ref.feature_spec;
  out.protocol = ref.protocol;
  out.plan = ref.plan;
  out.learner_kind = "switching(";
  for (std::size_t m = 0; m < reports.size(); ++m) {
    out.learner_kind += (m ? "," : "") + reports[m].learner_kind;
  }
  out.learner_kind += ")";
  for (std::size_t b = 0; b < ref.blocks.size(); ++b) {
    std::size_t best = 0;
    for (std::size_t m = 1; m < reports.size(); ++m) {
      if (reports[m].blocks[b].bits < reports[best].blocks[b].bits) best = m;
    }
    BlockResult r = reports[best].blocks[b];
    r.model_index = best;
    r.identity_bits = (identity_cost && b > 0) ? id_bits : 0.0;
    r.bits += r.identity_bits;
    out.total_bits += r.bits;
    out.blocks.push_back(std::move(r));
  }
  return out;
}

MetricSeries learning_curve(LearnerKind kind, const HyperParams& hyper, const Dataset& train,
                            const Dataset& eval, const BlockPlan& plan, Regime regime,
                            std::int64_t seed) {
  check_dataset(train);
  check_dataset(eval);
  validate(plan, train.size());
  MetricSeries series;

  std::set<Digest> train_hashes;
  for (const auto& e : train.examples) train_hashes.insert(example_digest(e));
  std::size_t overlap = 0;
  for (const auto& e : eval.examples) overlap += train_hashes.contains(example_digest(e));
  if (overlap > 0) {
    series.warnings.push_back(std::to_string(overlap) +
                              " eval examples also appear in the training data");
  }

  const LearnerState init = init_learner(kind, train.label_space, train.feature_spec, hyper);
  const std::span<const Example> all(train.examples);
  auto record = [&](std::uint64_t x, const LearnerState& s) {
    series.points.push_back({x, "accuracy", accuracy(s, eval.examples, kDefaultHead), eval.task_id, seed});
  };
  record(0, init);
  LearnerState state = init;
  for (std::size_t b = 0; b < plan.num_blocks(); ++b) {
    if (regime == Regime::kFromScratch) {
      state = fit(init, all.first(plan.end(b)), train.ordering_seed, kDefaultHead,
                  Regime::kWarmStart);
    } else {
      state = fit(state, all.subspan(plan.begin(b), plan.size(b)), train.ordering_seed,
                  kDefaultHead, Regime::kWarmStart);
    }
    record(plan.end(b), state);
  }
  return series;
}

std::string to_csv(const MetricSeries& series, const std::string& x_name) {
  std::string out = x_name + ",metric,value,task,seed\n";
  char buf[64];
  for (const auto& p : series.points) {
    std::snprintf(buf, sizeof buf, "%.17g", p.value);
    out += std::to_string(p.x) + "," + p.metric + "," + buf + "," + p.task + "," +
           std::to_string(p.seed) + "\n";
  }
  return out;
}

}  // namespace preqeval
