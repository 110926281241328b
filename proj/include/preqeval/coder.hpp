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

// Label transmission with a real code. The sender trains the agreed learner
// block by block and arithmetic-codes each label under the learner's
// quantized prediction; the receiver, holding only the features, repeats the
// same training and recovers the labels.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "preqeval/data.hpp"
#include "preqeval/digest.hpp"
#include "preqeval/learner.hpp"
#include "preqeval/prequential.hpp"

namespace preqeval {

inline constexpr int kDefaultPrecision = 16;
inline constexpr int kMinPrecision = 8;
inline constexpr int kMaxPrecision = 30;

// Integer weights summing to exactly 2^precision, each at least 1.
struct QuantizedDistribution {
  std::vector<std::uint32_t> weights;
  int precision = kDefaultPrecision;

  std::uint32_t total() const { return std::uint32_t{1} << precision; }
  // -log2(w_y / 2^precision)
  double ideal_bits(int label) const;

  bool operator==(const QuantizedDistribution&) const = default;
};

// Largest-remainder rounding of p * 2^b; any surplus or deficit left after
// enforcing w >= 1 is taken from / given to the largest weight (lowest index
// on ties).
QuantizedDistribution quantize(const PredictiveDistribution& dist, int precision);
PredictiveDistribution dequantize(const QuantizedDistribution& q);

// Bit-level arithmetic coder over 32-bit code values held in 64-bit
// registers. Termination costs at most two bits plus any pending bits.
class ArithmeticEncoder {
 public:
  void encode(const QuantizedDistribution& q, int symbol);
  // Flushes and returns the packed payload (MSB first) and its bit length.
  std::vector<std::uint8_t> finish(std::uint64_t& bit_length);

 private:
  void emit(bool bit);

  std::uint64_t low_ = 0;
  std::uint64_t high_ = 0xFFFFFFFFULL;
  std::uint64_t pending_ = 0;
  std::vector<std::uint8_t> bytes_;
  std::uint64_t bits_ = 0;
};

class ArithmeticDecoder {
 public:
  ArithmeticDecoder(std::span<const std::uint8_t> payload, std::uint64_t bit_length);

  // Throws DecodeError when the code value falls outside the distribution.
  int decode(const QuantizedDistribution& q);

 private:
  bool next_bit();

  std::span<const std::uint8_t> payload_;
  std::uint64_t bit_length_;
  std::uint64_t read_ = 0;
  std::uint64_t low_ = 0;
  std::uint64_t high_ = 0xFFFFFFFFULL;
  std::uint64_t value_ = 0;
};

struct BitstreamHeader {
  std::uint16_t version = 1;
  std::uint32_t num_classes = 2;
  std::uint64_t num_examples = 0;
  std::uint8_t precision = kDefaultPrecision;
  Digest learner_digest{};
  Digest protocol_digest{};
  std::uint64_t ordering_seed = 0;
  std::uint64_t payload_bits = 0;

  bool operator==(const BitstreamHeader&) const = default;
};

// Wire format (little-endian): "PQAC", version u16, K u32, N u64,
// precision u8, learner digest [32], protocol digest [32], ordering_seed u64,
// payload bit length u64, payload padded to whole bytes, CRC-32 of the label
// sequence u32.
struct Bitstream {
  BitstreamHeader header;
  std::vector<std::uint8_t> payload;
  std::uint32_t checksum = 0;

  bool operator==(const Bitstream&) const = default;
};

std::vector<std::uint8_t> to_bytes(const Bitstream& stream);
Bitstream parse_bitstream(std::span<const std::uint8_t> bytes);

// What sender and receiver agree on out of band, reduced to digests.
Digest learner_spec_digest(LearnerKind kind, LabelSpace labels, FeatureSpec features,
                           const EvaluationProtocol& protocol);
Digest protocol_digest(const EvaluationProtocol& protocol, const BlockPlan& plan,
                       const std::string& head);

// CRC-32 over the labels as little-endian u32s.
std::uint32_t label_checksum(std::span<const int> labels);

struct EncodeResult {
  Bitstream stream;
  // Sum of -log2(w_y / 2^b) over all coded labels.
  double ideal_quantized_bits = 0.0;
  // Digest of the coding state after each block is revealed.
  std::vector<Digest> block_state_digests;
};

EncodeResult encode_labels(LearnerKind kind, const EvaluationProtocol& protocol,
                           const Dataset& data, const BlockPlan& plan,
                           int precision = kDefaultPrecision);

// `features` carries the receiver's view (labels are ignored). Optionally
// records the same per-block state digests as the encoder.
std::vector<int> decode_labels(LearnerKind kind, const EvaluationProtocol& protocol,
                               const Dataset& features, const BlockPlan& plan,
                               const Bitstream& stream,
                               std::vector<Digest>* block_state_digests = nullptr);

struct CodeComparison {
  double measured_bits = 0.0;           // payload length
  double quantized_ideal_bits = 0.0;    // sum of -log2(w_y / 2^b)
  double theoretical_bits = 0.0;        // report total, unquantized
  double gap = 0.0;                     // measured - quantized ideal
};

// Throws std::invalid_argument when the report and stream disagree on
// learner, protocol or plan.
CodeComparison measured_vs_theoretical(const EncodeResult& encoded,
                                       const CodelengthReport& report);

}  // namespace preqeval
