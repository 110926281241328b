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

#include "preqeval/report.hpp"

namespace preqeval {

namespace {

template <typename T>
ordered_json optional_json(const std::optional<T>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

}  // namespace

ordered_json to_json(const HyperParams& h) {
  ordered_json j;
  j["learning_rate"] = h.learning_rate;
  j["l2"] = h.l2;
  j["iterations"] = h.iterations;
  j["batch_size"] = h.batch_size;
  j["smoothing_alpha"] = h.smoothing_alpha;
  j["hidden_width"] = h.hidden_width;
  j["init_seed"] = h.init_seed;
  return j;
}

ordered_json to_json(const EvaluationProtocol& p) {
  ordered_json j;
  j["mode"] = to_string(p.mode);
  j["regime"] = to_string(p.regime);
  j["first_block"] = to_string(p.first_block);
  j["default_hyper"] = to_json(p.default_hyper);
  j["candidates"] = ordered_json::array();
  for (const auto& h : p.candidate_hypers) j["candidates"].push_back(to_json(h));
  return j;
}

ordered_json to_json(const CodelengthReport& r) {
  ordered_json j;
  j["total_bits"] = r.total_bits;
  j["learner_kind"] = r.learner_kind;
  j["dataset_id"] = r.dataset_id;
  j["head"] = r.head;
  j["num_classes"] = r.num_classes;
  j["features"] = {{"kind", to_string(r.feature_spec.kind)}, {"dim", r.feature_spec.dim}};
  j["protocol"] = to_json(r.protocol);
  j["plan"] = r.plan.boundaries;
  j["blocks"] = ordered_json::array();
  for (const auto& b : r.blocks) {
    ordered_json bj;
    bj["index"] = b.index;
    bj["begin"] = b.begin;
    bj["end"] = b.end;
    bj["bits"] = b.bits;
    bj["accuracy"] = b.accuracy;
    bj["hyper_index"] = optional_json(b.hyper_index);
    bj["candidate_bits"] = b.candidate_bits;
    bj["model_index"] = optional_json(b.model_index);
    bj["identity_bits"] = b.identity_bits;
    j["blocks"].push_back(std::move(bj));
  }
  return j;
}

ordered_json to_json(const TransferReport& r) {
  ordered_json j;
  j["zero_shot"] = ordered_json::object();
  for (const auto& [k, v] : r.zero_shot) j["zero_shot"][k] = v;
  j["final"] = ordered_json::object();
  for (const auto& [k, v] : r.final) j["final"][k] = v;
  j["forgetting"] = ordered_json::object();
  for (const auto& [k, f] : r.forgetting) {
    j["forgetting"][k] = {{"peak", f.peak}, {"final", f.final}, {"drop", f.drop}};
  }
  j["batches_per_task"] = ordered_json::object();
  for (const auto& [k, v] : r.batches_per_task) j["batches_per_task"][k] = v;
  j["phase_ends"] = r.phase_ends;
  if (r.codelength_comparison) {
    j["codelength"] = {{"cold", to_json(r.codelength_comparison->cold)},
                       {"pretrained", to_json(r.codelength_comparison->pretrained)}};
  }
  j["warnings"] = r.series.warnings;
  return j;
}

ordered_json to_json(const BitstreamHeader& h) {
  ordered_json j;
  j["version"] = h.version;
  j["num_classes"] = h.num_classes;
  j["num_examples"] = h.num_examples;
  j["precision"] = h.precision;
  j["learner_digest"] = to_hex(h.learner_digest);
  j["protocol_digest"] = to_hex(h.protocol_digest);
  j["ordering_seed"] = h.ordering_seed;
  j["payload_bits"] = h.payload_bits;
  return j;
}

ordered_json to_json(const CodeComparison& c) {
  ordered_json j;
  j["measured_bits"] = c.measured_bits;
  j["quantized_ideal_bits"] = c.quantized_ideal_bits;
  j["theoretical_bits"] = c.theoretical_bits;
  j["gap"] = c.gap;
  return j;
}

MetricSeries filter_series(const MetricSeries& series, bool (*keep)(const std::string& metric)) {
  MetricSeries out;
  out.warnings = series.warnings;
  for (const auto& p : series.points) {
    if (keep(p.metric)) out.points.push_back(p);
  }
  return out;
}

}  // namespace preqeval
