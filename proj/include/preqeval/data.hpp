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
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "preqeval/digest.hpp"

namespace preqeval {

struct LabelSpace {
  int num_classes = 2;

  bool operator==(const LabelSpace&) const = default;
};

enum class FeatureKind : std::uint8_t { kDense = 0, kSparse = 1 };

// dim is d for dense features and the vocabulary size V for sparse ones.
struct FeatureSpec {
  FeatureKind kind = FeatureKind::kDense;
  std::size_t dim = 1;

  bool operator==(const FeatureSpec&) const = default;
};

using DenseFeatures = std::vector<double>;
// (token index, count) pairs, strictly increasing in index.
using SparseFeatures = std::vector<std::pair<std::uint32_t, double>>;
using FeatureVector = std::variant<DenseFeatures, SparseFeatures>;

struct Example {
  FeatureVector features;
  int label = 0;

  bool operator==(const Example&) const = default;
};

struct Dataset {
  std::string task_id;
  LabelSpace label_space;
  FeatureSpec feature_spec;
  std::uint64_t ordering_seed = 0;
  std::vector<Example> examples;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }

  // First n examples, same metadata.
  Dataset prefix(std::size_t n) const;
  // Copy with every label set to 0; what a decoder receives.
  Dataset features_only() const;

  bool operator==(const Dataset&) const = default;
};

// Throws std::invalid_argument if the vector does not conform to the feature spec.
void check_features(const FeatureVector& x, const FeatureSpec& spec);
// Checks labels and features of every example.
void check_dataset(const Dataset& d);

// Canonical bytes of a dataset (used for digests and byte-identity checks).
std::vector<std::uint8_t> dataset_bytes(const Dataset& d);
Digest example_digest(const Example& e);

std::string to_string(FeatureKind k);

}  // namespace preqeval
