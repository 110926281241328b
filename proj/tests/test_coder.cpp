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

#include <stdexcept>
#include <cmath>

#include "doctest.h"
#include "preqeval/coder.hpp"
#include "preqeval/errors.hpp"
#include "test_util.hpp"

using namespace preqeval;
using namespace preqeval::testing;

namespace {

std::uint64_t weight_sum(const QuantizedDistribution& q) {
  std::uint64_t s = 0;
  for (auto w : q.weights) s += w;
  return s;
}

PredictiveDistribution random_distribution(Rng& rng, std::size_t k) {
  PredictiveDistribution d;
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    // Mix of ordinary and near-zero probabilities.
    const double v = rng.uniform() < 0.2 ? rng.uniform() * 1e-7 : rng.uniform();
    d.probs.push_back(v);
    sum += v;
  }
  for (auto& p : d.probs) p /= sum;
  return d;
}

EvaluationProtocol protocol_for(LearnerKind, std::int64_t seed) {
  HyperParams h;
  h.iterations = 8;
  h.init_seed = seed;
  return single_hyper_protocol(h, Regime::kFromScratch);
}

}  // namespace

TEST_CASE("quantize: dyadic, floored, exact total") {
  const auto q = quantize({{0.5, 0.5}}, 16);
  CHECK(q.weights == std::vector<std::uint32_t>{32768, 32768});
  const double f = kProbabilityFloor;
  const auto skew = quantize({{1.0 - 3 * f, f, f, f}}, 16);
  for (auto w : skew.weights) CHECK(w >= 1);
  CHECK(weight_sum(skew) == 65536);
  Rng rng(1);
  for (int trial = 0; trial < 2000; ++trial) {
    const int b = 8 + static_cast<int>(rng.below(23));
    const auto k = 2 + rng.below(std::min<std::uint64_t>(30, (std::uint64_t{1} << b) / 2 - 1));
    const auto d = random_distribution(rng, k);
    const auto qd = quantize(d, b);
    CHECK(weight_sum(qd) == (std::uint64_t{1} << b));
    for (auto w : qd.weights) CHECK(w >= 1);
    // Representable distributions are fixed points.
    CHECK(quantize(dequantize(qd), b) == qd);
  }
  CHECK_THROWS_AS(quantize({{0.5, 0.5}}, 7), std::invalid_argument);
  CHECK_THROWS_AS(quantize({{0.5, 0.5}}, 31), std::invalid_argument);
}

TEST_CASE("uniform K=2, N=8 codes in 8 payload bits plus at most 2 termination bits") {
  const auto d = labels_only({0, 1, 1, 0, 1, 0, 0, 1}, 2);
  const auto enc = encode_labels(LearnerKind::kUniform, EvaluationProtocol{}, d,
                                 BlockPlan::fixed_size(8, 2));
  CHECK(enc.ideal_quantized_bits == 8.0);
  CHECK(enc.stream.header.payload_bits >= 8);
  CHECK(enc.stream.header.payload_bits <= 10);
  CHECK(decode_labels(LearnerKind::kUniform, EvaluationProtocol{}, d.features_only(),
                      BlockPlan::fixed_size(8, 2), enc.stream) == labels_of(d));
}

TEST_CASE("empty dataset gives a header-only stream") {
  const auto d = labels_only({}, 3);
  const auto enc = encode_labels(LearnerKind::kPrior, EvaluationProtocol{}, d, BlockPlan{});
  CHECK(enc.stream.header.payload_bits == 0);
  CHECK(enc.stream.payload.empty());
  const auto bytes = to_bytes(enc.stream);
  CHECK(bytes.size() == 4 + 2 + 4 + 8 + 1 + 32 + 32 + 8 + 8 + 4);
  CHECK(decode_labels(LearnerKind::kPrior, EvaluationProtocol{}, d, BlockPlan{},
                      parse_bitstream(bytes))
            .empty());
}

TEST_CASE("prior learner on [0,1,0,0] codes within 0.01 bits/symbol of 4.32193") {
  const auto d = labels_only({0, 1, 0, 0}, 2);
  const auto protocol = single_hyper_protocol({}, Regime::kWarmStart);
  const auto enc = encode_labels(LearnerKind::kPrior, protocol, d, BlockPlan::per_example(4), 16);
  CHECK(std::abs(enc.ideal_quantized_bits - 4.32193) <= 0.01 * 4);
  CHECK(static_cast<double>(enc.stream.header.payload_bits) <= 4.32193 + 0.04 + 2.0);
}

TEST_CASE("uniform K=4, N=100: measured payload in [200, 232]") {
  std::vector<int> labels(100);
  for (std::size_t i = 0; i < 100; ++i) labels[i] = static_cast<int>((i * 7) % 4);
  const auto d = labels_only(labels, 4);
  const auto plan = BlockPlan::fixed_size(100, 25);
  const auto enc = encode_labels(LearnerKind::kUniform, EvaluationProtocol{}, d, plan);
  const auto report = blockwise_codelength(LearnerKind::kUniform, EvaluationProtocol{}, d, plan);
  const auto cmp = measured_vs_theoretical(enc, report);
  CHECK(cmp.measured_bits >= 200);
  CHECK(cmp.measured_bits <= 232);
  CHECK(cmp.theoretical_bits == doctest::Approx(200.0));
}

TEST_CASE("round trips, payload bounds and encoder/decoder sync over random cases") {
  Rng rng(77);
  const LearnerKind kinds[] = {LearnerKind::kUniform, LearnerKind::kPrior, LearnerKind::kNaiveBayes,
                               LearnerKind::kLogisticRegression, LearnerKind::kMlp};
  for (int trial = 0; trial < 100; ++trial) {
    const LearnerKind kind = kinds[trial % 5];
    const int k = 2 + static_cast<int>(rng.below(4));
    const std::size_t n = 1 + rng.below(60);
    const Dataset d = kind == LearnerKind::kNaiveBayes ? random_sparse(rng, n, k, 20)
                                                       : random_dense(rng, n, k, 3);
    const BlockPlan plan = BlockPlan::geometric(n, 1 + rng.below(8), 1.5 + rng.uniform());
    const int b = 12 + static_cast<int>(rng.below(12));
    const auto protocol = protocol_for(kind, trial);
    const auto enc = encode_labels(kind, protocol, d, plan, b);
    std::vector<Digest> decoder_digests;
    const auto bytes = to_bytes(enc.stream);
    const auto decoded =
        decode_labels(kind, protocol, d.features_only(), plan, parse_bitstream(bytes), &decoder_digests);
    CHECK(decoded == labels_of(d));
    CHECK(decoder_digests == enc.block_state_digests);
    const double measured = static_cast<double>(enc.stream.header.payload_bits);
    CHECK(measured <= enc.ideal_quantized_bits + 32);
    CHECK(measured >= enc.ideal_quantized_bits - 1);
    const auto cmp = measured_vs_theoretical(enc, blockwise_codelength(kind, protocol, d, plan));
    CHECK(cmp.gap >= -1.0);
    CHECK(cmp.gap <= 32.0);
    // Re-encoding is bit-identical.
    CHECK(to_bytes(encode_labels(kind, protocol, d, plan, b).stream) == bytes);
  }
}

TEST_CASE("quantization loss stays under N 2^(1-b) / ln 2 for ordinary predictions") {
  Rng rng(88);
  for (int trial = 0; trial < 20; ++trial) {
    const Dataset d = random_dense(rng, 80, 3, 2);
    const auto plan = BlockPlan::fixed_size(80, 10);
    const auto protocol = protocol_for(LearnerKind::kLogisticRegression, trial);
    const int b = 16;
    const auto enc = encode_labels(LearnerKind::kLogisticRegression, protocol, d, plan, b);
    const auto report = blockwise_codelength(LearnerKind::kLogisticRegression, protocol, d, plan);
    const double bound = 80.0 * std::pow(2.0, 1 - b) / std::log(2.0);
    CHECK(std::abs(enc.ideal_quantized_bits - report.total_bits) <= bound);
  }
}

TEST_CASE("corruption and mismatches are detected") {
  Rng rng(99);
  const Dataset d = random_dense(rng, 80, 3, 2);
  const auto plan = BlockPlan::fixed_size(80, 16);
  const auto protocol = protocol_for(LearnerKind::kLogisticRegression, 1);
  const auto enc = encode_labels(LearnerKind::kLogisticRegression, protocol, d, plan);
  const auto bytes = to_bytes(enc.stream);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "PQAC");

  int detected = 0;
  const std::size_t header = 4 + 2 + 4 + 8 + 1 + 32 + 32 + 8 + 8;
  for (std::size_t i = 0; i < enc.stream.payload.size(); ++i) {
    auto bad = bytes;
    bad[header + i] ^= 0x5a;
    try {
      const auto labels = decode_labels(LearnerKind::kLogisticRegression, protocol, d.features_only(),
                                        plan, parse_bitstream(bad));
      // Any decode that returns must have passed the label checksum.
      CHECK(labels == labels_of(d));
    } catch (const DecodeError&) {
      ++detected;
    }
  }
  CHECK(detected > 0);

  Dataset wrong_k = d.features_only();
  wrong_k.label_space.num_classes = 4;
  CHECK_THROWS_AS(decode_labels(LearnerKind::kLogisticRegression, protocol, wrong_k, plan, enc.stream),
                  DecodeError);
  auto other = protocol;
  other.default_hyper.learning_rate = 0.25;
  other.candidate_hypers = {other.default_hyper};
  CHECK_THROWS_AS(decode_labels(LearnerKind::kLogisticRegression, other, d.features_only(), plan,
                                enc.stream),
                  DecodeError);
  CHECK_THROWS_AS(decode_labels(LearnerKind::kLogisticRegression, protocol, d.features_only(),
                                BlockPlan::fixed_size(80, 20), enc.stream),
                  DecodeError);
  CHECK_THROWS_AS(parse_bitstream(std::span(bytes).first(bytes.size() - 1)), DecodeError);
  auto magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(parse_bitstream(magic), DecodeError);
}

TEST_CASE("non-reproducible seeds cannot be coded") {
  Rng rng(5);
  const Dataset d = random_dense(rng, 10, 2, 2);
  HyperParams h;
  h.init_seed = kEntropySeed;
  CHECK_THROWS_AS(encode_labels(LearnerKind::kLogisticRegression,
                                single_hyper_protocol(h, Regime::kFromScratch), d,
                                BlockPlan::single(10)),
                  std::invalid_argument);
}
