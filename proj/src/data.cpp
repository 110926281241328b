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

#include "preqeval/data.hpp"

#include <cmath>
#include <stdexcept>

namespace preqeval {

Dataset Dataset::prefix(std::size_t n) const {
  Dataset out{task_id, label_space, feature_spec, ordering_seed, {}};
  n = std::min(n, examples.size());
  out.examples.assign(examples.begin(), examples.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

Dataset Dataset::features_only() const {
  Dataset out = *this;
  for (auto& e : out.examples) e.label = 0;
  return out;
}

void check_features(const FeatureVector& x, const FeatureSpec& spec) {
  if (spec.kind == FeatureKind::kDense) {
    const auto* dense = std::get_if<DenseFeatures>(&x);
    if (dense == nullptr) throw std::invalid_argument("expected dense features, got sparse");
    if (dense->size() != spec.dim) {
      throw std::invalid_argument("dense dimension " + std::to_string(dense->size()) +
                                  " != declared " + std::to_string(spec.dim));
    }
    for (double v : *dense) {
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite dense feature");
    }
    return;
  }
  const auto* sparse = std::get_if<SparseFeatures>(&x);
  if (sparse == nullptr) throw std::invalid_argument("expected sparse features, got dense");
  std::int64_t last = -1;
  for (const auto& [idx, count] : *sparse) {
    if (idx >= spec.dim) {
      throw std::invalid_argument("token index " + std::to_string(idx) + " >= vocabulary " +
                                  std::to_string(spec.dim));
    }
    if (static_cast<std::int64_t>(idx) <= last) {
      throw std::invalid_argument("sparse indices must be strictly increasing");
    }
    if (!(count >= 0.0) || !std::isfinite(count)) {
      throw std::invalid_argument("sparse counts must be non-negative");
    }
    last = idx;
  }
}

void check_dataset(const Dataset& d) {
  if (d.label_space.num_classes < 2) throw std::invalid_argument("label space needs K >= 2");
  for (std::size_t i = 0; i < d.examples.size(); ++i) {
    const auto& e = d.examples[i];
    if (e.label < 0 || e.label >= d.label_space.num_classes) {
      throw std::invalid_argument("example " + std::to_string(i) + ": label " +
                                  std::to_string(e.label) + " outside [0, " +
                                  std::to_string(d.label_space.num_classes) + ")");
    }
    check_features(e.features, d.feature_spec);
  }
}

namespace {

void write_example(ByteWriter& w, const Example& e) {
  w.u32(static_cast<std::uint32_t>(e.label));
  if (const auto* dense = std::get_if<DenseFeatures>(&e.features)) {
    w.u8(0);
    w.u64(dense->size());
    for (double v : *dense) w.f64(v);
  } else {
    const auto& sparse = std::get<SparseFeatures>(e.features);
    w.u8(1);
    w.u64(sparse.size());
    for (const auto& [idx, count] : sparse) {
      w.u32(idx);
      w.f64(count);
    }
  }
}

}  // namespace

std::vector<std::uint8_t> dataset_bytes(const Dataset& d) {
  ByteWriter w;
  w.str(d.task_id);
  w.u32(static_cast<std::uint32_t>(d.label_space.num_classes));
  w.u8(static_cast<std::uint8_t>(d.feature_spec.kind));
  w.u64(d.feature_spec.dim);
  w.u64(d.ordering_seed);
  w.u64(d.examples.size());
  for (const auto& e : d.examples) write_example(w, e);
  return w.take();
}

Digest example_digest(const Example& e) {
  ByteWriter w;
  write_example(w, e);
  return sha256(w.bytes());
}

std::string to_string(FeatureKind k) { return k == FeatureKind::kDense ? "dense" : "sparse"; }

}  // namespace preqeval
