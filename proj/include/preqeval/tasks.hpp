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
#include <string>
#include <utility>
#include <vector>

#include "preqeval/data.hpp"

namespace preqeval {

enum class GeneratorKind : std::uint8_t { kGaussianBlobs = 0, kBowTopics = 1 };

std::string to_string(GeneratorKind g);
GeneratorKind parse_generator(const std::string& name);

struct BlobParams {
  std::size_t dim = 2;
  // Explicit class means [K][dim]; when empty, means are spread over
  // [-radius, radius] (dim 1) or around a circle of that radius in the
  // first two coordinates.
  std::vector<std::vector<double>> means;
  double radius = 2.0;
  double sigma = 1.0;
  double rotation = 0.0;            // radians, in the (x0, x1) plane
  std::vector<double> mean_shift;   // added to every point; empty = none

  bool operator==(const BlobParams&) const = default;
};

struct BowParams {
  std::size_t vocab = 200;
  double concentration = 0.1;       // symmetric Dirichlet for topic-word weights
  std::size_t doc_len_min = 20;
  std::size_t doc_len_max = 40;
  std::uint64_t topic_seed = 1;     // fixes the topics, i.e. the task itself
  std::vector<std::uint64_t> vocab_remaps;  // token permutations, applied in order

  bool operator==(const BowParams&) const = default;
};

struct TaskSpec {
  std::string task_id = "task";
  GeneratorKind generator = GeneratorKind::kGaussianBlobs;
  int num_classes = 2;
  BlobParams blobs;
  BowParams bow;
  std::vector<double> class_weights;     // empty = balanced
  std::vector<int> label_permutation;    // generated label y is emitted as perm[y]
  std::size_t n = 1000;
  std::uint64_t seed = 0;

  bool operator==(const TaskSpec&) const = default;
};

struct Shift {
  enum class Kind : std::uint8_t { kRotate, kShiftMeans, kRemapVocabulary, kPermuteLabels };

  Kind kind = Kind::kRotate;
  double angle = 0.0;
  std::vector<double> delta;   // size dim, or size 1 meaning along x0
  std::uint64_t remap_seed = 0;
  std::vector<int> permutation;

  static Shift rotate(double radians) { return {Kind::kRotate, radians, {}, 0, {}}; }
  static Shift shift_means(std::vector<double> delta) {
    return {Kind::kShiftMeans, 0.0, std::move(delta), 0, {}};
  }
  static Shift remap_vocabulary(std::uint64_t seed) { return {Kind::kRemapVocabulary, 0.0, {}, seed, {}}; }
  static Shift permute_labels(std::vector<int> perm) {
    return {Kind::kPermuteLabels, 0.0, {}, 0, std::move(perm)};
  }
};

// A base task plus shifted variants that keep its label semantics (unless
// the variant is an explicit label permutation).
struct TaskFamily {
  TaskSpec base;
  std::vector<Shift> variants;

  // Variant i gets task_id "<base id>/v<i>".
  TaskSpec variant(std::size_t i) const;
};

// Throws std::invalid_argument listing the violated constraint.
void validate(const TaskSpec& spec);

// Deterministic: the same spec always yields byte-identical datasets. Labels
// are stratified (each class within one example of n * weight), shuffled
// into transmission order with the TaskSpec seed.
Dataset generate(const TaskSpec& spec);

TaskSpec apply_shift(const TaskSpec& spec, const Shift& shift);

// Line 1: {"task_id", "num_classes", "features": "dense"|"sparse", "dim",
// "ordering_seed"}; then one {"label", "dense": [...]} or
// {"label", "sparse": {"idx": count}} per example.
Dataset load_jsonl(const std::string& path);
void save_jsonl(const Dataset& dataset, const std::string& path);
Dataset parse_jsonl(const std::string& text);
std::string to_jsonl(const Dataset& dataset);

// Stratified split; both halves keep the original relative order.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double eval_fraction,
                                  std::uint64_t seed);

}  // namespace preqeval
