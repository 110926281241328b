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

#include "preqeval/coder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "preqeval/errors.hpp"

namespace preqeval {

namespace {

constexpr std::uint64_t kTop = 0xFFFFFFFFULL;
constexpr std::uint64_t kHalf = 0x80000000ULL;
constexpr std::uint64_t kQuarter = 0x40000000ULL;
constexpr std::uint64_t kThreeQuarters = 0xC0000000ULL;

constexpr char kStreamMagic[4] = {'P', 'Q', 'A', 'C'};
constexpr std::uint16_t kStreamVersion = 1;

void check_precision(int precision) {
  if (precision < kMinPrecision || precision > kMaxPrecision) {
    throw std::invalid_argument("precision must be in [8, 30], got " + std::to_string(precision));
  }
}

std::size_t largest(const std::vector<std::int64_t>& w) {
  return static_cast<std::size_t>(std::max_element(w.begin(), w.end()) - w.begin());
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string hyper_text(const HyperParams& h) {
  return "lr=" + fmt_double(h.learning_rate) + ",l2=" + fmt_double(h.l2) +
         ",iterations=" + std::to_string(h.iterations) + ",batch=" + std::to_string(h.batch_size) +
         ",alpha=" + fmt_double(h.smoothing_alpha) + ",hidden=" + std::to_string(h.hidden_width) +
         ",seed=" + std::to_string(h.init_seed);
}

QuantizedDistribution uniform_quantized(int k, int precision) {
  PredictiveDistribution u{std::vector<double>(static_cast<std::size_t>(k), 1.0 / k)};
  return quantize(u, precision);
}

void check_deterministic(const EvaluationProtocol& protocol) {
  for (const auto& h : protocol.candidate_hypers) {
    if (h.init_seed == kEntropySeed) {
      throw std::invalid_argument(
          "the coder needs a reproducible learner: init_seed -1 draws a fresh seed");
    }
  }
  if (protocol.first_block != FirstBlockCode::kUniform) {
    throw std::invalid_argument("the coder always codes block 1 uniformly");
  }
}

}  // namespace

double QuantizedDistribution::ideal_bits(int label) const {
  return static_cast<double>(precision) -
         std::log2(static_cast<double>(weights[static_cast<std::size_t>(label)]));
}

QuantizedDistribution quantize(const PredictiveDistribution& dist, int precision) {
  check_precision(precision);
  const std::size_t K = dist.probs.size();
  const std::int64_t total = std::int64_t{1} << precision;
  if (K < 2 || static_cast<std::int64_t>(K) > total / 2) {
    throw std::invalid_argument("cannot quantize " + std::to_string(K) + " symbols at precision " +
                                std::to_string(precision));
  }
  const double scale = static_cast<double>(total);
  std::vector<std::int64_t> w(K);
  std::vector<double> rem(K);
  std::int64_t sum = 0;
  for (std::size_t i = 0; i < K; ++i) {
    const double x = std::clamp(dist.probs[i], 0.0, 1.0) * scale;
    w[i] = static_cast<std::int64_t>(std::floor(x));
    rem[i] = x - static_cast<double>(w[i]);
    sum += w[i];
  }
  std::int64_t deficit = total - sum;
  if (deficit > 0) {
    std::vector<std::size_t> order(K);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
    for (std::size_t i = 0; i < K && deficit > 0; ++i, --deficit) ++w[order[i]];
    w[largest(w)] += deficit;
  } else if (deficit < 0) {
    w[largest(w)] += deficit;
  }
  std::int64_t surplus = 0;
  for (auto& v : w) {
    if (v < 1) {
      surplus += 1 - v;
      v = 1;
    }
  }
  w[largest(w)] -= surplus;

  QuantizedDistribution q;
  q.precision = precision;
  q.weights.reserve(K);
  for (auto v : w) q.weights.push_back(static_cast<std::uint32_t>(v));
  return q;
}

PredictiveDistribution dequantize(const QuantizedDistribution& q) {
  PredictiveDistribution d;
  const double scale = static_cast<double>(q.total());
  for (auto w : q.weights) d.probs.push_back(static_cast<double>(w) / scale);
  return d;
}

// --- arithmetic coder --------------------------------------------------------

void ArithmeticEncoder::emit(bool bit) {
  auto put = [this](bool b) {
    if (bits_ % 8 == 0) bytes_.push_back(0);
    if (b) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (bits_ % 8));
    ++bits_;
  };
  put(bit);
  for (; pending_ > 0; --pending_) put(!bit);
}

void ArithmeticEncoder::encode(const QuantizedDistribution& q, int symbol) {
  const std::uint64_t total = q.total();
  std::uint64_t cum_lo = 0;
  for (int i = 0; i < symbol; ++i) cum_lo += q.weights[static_cast<std::size_t>(i)];
  const std::uint64_t cum_hi = cum_lo + q.weights[static_cast<std::size_t>(symbol)];
  const std::uint64_t range = high_ - low_ + 1;
  high_ = low_ + range * cum_hi / total - 1;
  low_ = low_ + range * cum_lo / total;
  for (;;) {
    if (high_ < kHalf) {
      emit(false);
    } else if (low_ >= kHalf) {
      emit(true);
      low_ -= kHalf;
      high_ -= kHalf;
    } else if (low_ >= kQuarter && high_ < kThreeQuarters) {
      ++pending_;
      low_ -= kQuarter;
      high_ -= kQuarter;
    } else {
      break;
    }
    low_ <<= 1;
    high_ = (high_ << 1) | 1;
  }
}

std::vector<std::uint8_t> ArithmeticEncoder::finish(std::uint64_t& bit_length) {
  ++pending_;
  emit(low_ >= kQuarter);
  bit_length = bits_;
  return std::move(bytes_);
}

ArithmeticDecoder::ArithmeticDecoder(std::span<const std::uint8_t> payload,
                                     std::uint64_t bit_length)
    : payload_(payload), bit_length_(bit_length) {
  if ((bit_length + 7) / 8 != payload.size()) {
    throw DecodeError("payload size does not match its declared bit length");
  }
  for (int i = 0; i < 32; ++i) value_ = (value_ << 1) | (next_bit() ? 1 : 0);
}

bool ArithmeticDecoder::next_bit() {
  // Past the end the code value is padded with zeros.
  if (read_ >= bit_length_) {
    ++read_;
    return false;
  }
  const bool b = (payload_[read_ / 8] >> (7 - read_ % 8)) & 1;
  ++read_;
  return b;
}

int ArithmeticDecoder::decode(const QuantizedDistribution& q) {
  const std::uint64_t total = q.total();
  const std::uint64_t range = high_ - low_ + 1;
  if (value_ < low_ || value_ > high_) throw DecodeError("code value left the coding interval");
  const std::uint64_t count = ((value_ - low_ + 1) * total - 1) / range;
  if (count >= total) throw DecodeError("corrupt payload");
  int symbol = 0;
  std::uint64_t cum_lo = 0;
  while (cum_lo + q.weights[static_cast<std::size_t>(symbol)] <= count) {
    cum_lo += q.weights[static_cast<std::size_t>(symbol)];
    ++symbol;
  }
  const std::uint64_t cum_hi = cum_lo + q.weights[static_cast<std::size_t>(symbol)];
  high_ = low_ + range * cum_hi / total - 1;
  low_ = low_ + range * cum_lo / total;
  for (;;) {
    if (high_ < kHalf) {
      // nothing
    } else if (low_ >= kHalf) {
      low_ -= kHalf;
      high_ -= kHalf;
      value_ -= kHalf;
    } else if (low_ >= kQuarter && high_ < kThreeQuarters) {
      low_ -= kQuarter;
      high_ -= kQuarter;
      value_ -= kQuarter;
    } else {
      break;
    }
    low_ <<= 1;
    high_ = (high_ << 1) | 1;
    value_ = ((value_ << 1) | (next_bit() ? 1 : 0)) & kTop;
  }
  return symbol;
}

// --- bitstream ---------------------------------------------------------------

std::vector<std::uint8_t> to_bytes(const Bitstream& s) {
  ByteWriter w;
  for (char c : kStreamMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u16(s.header.version);
  w.u32(s.header.num_classes);
  w.u64(s.header.num_examples);
  w.u8(s.header.precision);
  w.raw(s.header.learner_digest);
  w.raw(s.header.protocol_digest);
  w.u64(s.header.ordering_seed);
  w.u64(s.header.payload_bits);
  w.raw(s.payload);
  w.u32(s.checksum);
  return w.take();
}

Bitstream parse_bitstream(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  for (char c : kStreamMagic) {
    if (r.u8() != static_cast<std::uint8_t>(c)) throw DecodeError("not a PQAC bitstream");
  }
  Bitstream s;
  s.header.version = r.u16();
  if (s.header.version != kStreamVersion) {
    throw DecodeError("unsupported bitstream version " + std::to_string(s.header.version));
  }
  s.header.num_classes = r.u32();
  s.header.num_examples = r.u64();
  s.header.precision = r.u8();
  auto ld = r.raw(32);
  std::copy(ld.begin(), ld.end(), s.header.learner_digest.begin());
  auto pd = r.raw(32);
  std::copy(pd.begin(), pd.end(), s.header.protocol_digest.begin());
  s.header.ordering_seed = r.u64();
  s.header.payload_bits = r.u64();
  if (s.header.payload_bits / 8 > r.remaining()) throw DecodeError("truncated payload");
  auto payload = r.raw((s.header.payload_bits + 7) / 8);
  s.payload.assign(payload.begin(), payload.end());
  s.checksum = r.u32();
  if (r.remaining() != 0) throw DecodeError("trailing bytes after bitstream");
  return s;
}

Digest learner_spec_digest(LearnerKind kind, LabelSpace labels, FeatureSpec features,
                           const EvaluationProtocol& protocol) {
  std::string text = "learner=" + to_string(kind) + ";K=" + std::to_string(labels.num_classes) +
                     ";features=" + to_string(features.kind) + ":" + std::to_string(features.dim) +
                     ";candidates=";
  for (const auto& h : protocol.candidate_hypers) text += "[" + hyper_text(h) + "]";
  return sha256(text);
}

Digest protocol_digest(const EvaluationProtocol& protocol, const BlockPlan& plan,
                       const std::string& head) {
  std::string text = "mode=" + to_string(protocol.mode) + ";regime=" + to_string(protocol.regime) +
                     ";default=" + hyper_text(protocol.default_hyper) +
                     ";first_block=" + to_string(protocol.first_block) + ";head=" + head +
                     ";plan=";
  for (auto b : plan.boundaries) text += std::to_string(b) + ",";
  return sha256(text);
}

std::uint32_t label_checksum(std::span<const int> labels) {
  ByteWriter w;
  for (int y : labels) w.u32(static_cast<std::uint32_t>(y));
  return crc32(w.bytes());
}

EncodeResult encode_labels(LearnerKind kind, const EvaluationProtocol& protocol,
                           const Dataset& data, const BlockPlan& plan, int precision) {
  check_precision(precision);
  validate(protocol, kind);
  check_deterministic(protocol);
  check_dataset(data);
  validate(plan, data.size());
  const int K = data.label_space.num_classes;

  EncodeResult result;
  auto& h = result.stream.header;
  h.num_classes = static_cast<std::uint32_t>(K);
  h.num_examples = data.size();
  h.precision = static_cast<std::uint8_t>(precision);
  h.learner_digest = learner_spec_digest(kind, data.label_space, data.feature_spec, protocol);
  h.protocol_digest = protocol_digest(protocol, plan, kDefaultHead);
  h.ordering_seed = data.ordering_seed;

  ArithmeticEncoder enc;
  const QuantizedDistribution uniform = uniform_quantized(K, precision);
  OnlineSession session(initial_states(kind, protocol, data.label_space, data.feature_spec),
                        protocol, plan, kDefaultHead, data.ordering_seed);
  const std::span<const Example> all(data.examples);
  for (std::size_t b = 0; b < plan.num_blocks(); ++b) {
    const auto block = all.subspan(plan.begin(b), plan.size(b));
    const LearnerState* state = session.coding_state(b);
    for (const auto& e : block) {
      const QuantizedDistribution q =
          state ? quantize(predict(*state, e.features, kDefaultHead), precision) : uniform;
      enc.encode(q, e.label);
      result.ideal_quantized_bits += q.ideal_bits(e.label);
    }
    session.reveal(b, block);
    if (const LearnerState* next = b + 1 < plan.num_blocks() ? session.coding_state(b + 1) : nullptr) {
      result.block_state_digests.push_back(state_digest(*next));
    } else {
      result.block_state_digests.push_back(Digest{});
    }
  }
  result.stream.payload = enc.finish(h.payload_bits);
  if (data.empty()) {
    // Nothing to transmit: header-only stream.
    result.stream.payload.clear();
    h.payload_bits = 0;
  }
  std::vector<int> labels;
  labels.reserve(data.size());
  for (const auto& e : data.examples) labels.push_back(e.label);
  result.stream.checksum = label_checksum(labels);
  return result;
}

std::vector<int> decode_labels(LearnerKind kind, const EvaluationProtocol& protocol,
                               const Dataset& features, const BlockPlan& plan,
                               const Bitstream& stream,
                               std::vector<Digest>* block_state_digests) {
  const auto& h = stream.header;
  if (h.num_classes != static_cast<std::uint32_t>(features.label_space.num_classes)) {
    throw DecodeError("bitstream K=" + std::to_string(h.num_classes) + " but receiver expects K=" +
                      std::to_string(features.label_space.num_classes));
  }
  if (h.num_examples != features.size()) {
    throw DecodeError("bitstream carries " + std::to_string(h.num_examples) +
                      " labels but receiver holds " + std::to_string(features.size()) +
                      " feature vectors");
  }
  check_precision(h.precision);
  if (h.learner_digest !=
      learner_spec_digest(kind, features.label_space, features.feature_spec, protocol)) {
    throw DecodeError("learner spec digest mismatch");
  }
  if (h.protocol_digest != protocol_digest(protocol, plan, kDefaultHead)) {
    throw DecodeError("protocol digest mismatch");
  }
  if (h.ordering_seed != features.ordering_seed) throw DecodeError("ordering seed mismatch");
  validate(protocol, kind);
  check_deterministic(protocol);
  validate(plan, features.size());

  const int K = features.label_space.num_classes;
  const int precision = h.precision;
  std::vector<int> labels;
  labels.reserve(features.size());
  if (features.empty()) {
    if (stream.checksum != label_checksum(labels)) throw DecodeError("label checksum mismatch");
    return labels;
  }

  ArithmeticDecoder dec(stream.payload, h.payload_bits);
  const QuantizedDistribution uniform = uniform_quantized(K, precision);
  OnlineSession session(initial_states(kind, protocol, features.label_space, features.feature_spec),
                        protocol, plan, kDefaultHead, features.ordering_seed);
  std::vector<Example> block;
  for (std::size_t b = 0; b < plan.num_blocks(); ++b) {
    const LearnerState* state = session.coding_state(b);
    block.assign(features.examples.begin() + static_cast<std::ptrdiff_t>(plan.begin(b)),
                 features.examples.begin() + static_cast<std::ptrdiff_t>(plan.end(b)));
    for (auto& e : block) {
      const QuantizedDistribution q =
          state ? quantize(predict(*state, e.features, kDefaultHead), precision) : uniform;
      e.label = dec.decode(q);
      labels.push_back(e.label);
    }
    session.reveal(b, block);
    if (block_state_digests) {
      const LearnerState* next = b + 1 < plan.num_blocks() ? session.coding_state(b + 1) : nullptr;
      block_state_digests->push_back(next ? state_digest(*next) : Digest{});
    }
  }
  if (stream.checksum != label_checksum(labels)) throw DecodeError("label checksum mismatch");
  return labels;
}

CodeComparison measured_vs_theoretical(const EncodeResult& encoded,
                                       const CodelengthReport& report) {
  const auto& h = encoded.stream.header;
  const LearnerKind kind = parse_learner_kind(report.learner_kind);
  const std::uint64_t n = report.plan.boundaries.empty() ? 0 : report.plan.boundaries.back();
  if (h.num_classes != report.num_classes || h.num_examples != n) {
    throw std::invalid_argument("report and stream describe different datasets");
  }
  if (h.learner_digest != learner_spec_digest(kind, LabelSpace{static_cast<int>(report.num_classes)},
                                              report.feature_spec, report.protocol) ||
      h.protocol_digest != protocol_digest(report.protocol, report.plan, report.head)) {
    throw std::invalid_argument("report and stream have different provenance");
  }
  CodeComparison c;
  c.measured_bits = static_cast<double>(h.payload_bits);
  c.quantized_ideal_bits = encoded.ideal_quantized_bits;
  c.theoretical_bits = report.total_bits;
  c.gap = c.measured_bits - c.quantized_ideal_bits;
  return c;
}

}  // namespace preqeval
