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

// Small fixtures shared by the unit tests.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "preqeval/data.hpp"
#include "preqeval/rng.hpp"

namespace preqeval::testing {

inline Dataset labels_only(const std::vector<int>& labels, int k, std::uint64_t ordering_seed = 0) {
  Dataset d{"labels", {k}, {FeatureKind::kDense, 1}, ordering_seed, {}};
  for (int y : labels) d.examples.push_back({DenseFeatures{0.0}, y});
  return d;
}

// Dense data whose label depends (noisily) on the features.
inline Dataset random_dense(Rng& rng, std::size_t n, int k, std::size_t dim) {
  Dataset d{"dense", {k}, {FeatureKind::kDense, dim}, rng.next_u64(), {}};
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
    DenseFeatures x(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      x[j] = rng.normal() + (j % static_cast<std::size_t>(k) == static_cast<std::size_t>(y) ? 1.5 : 0.0);
    }
    d.examples.push_back({x, y});
  }
  return d;
}

inline Dataset random_sparse(Rng& rng, std::size_t n, int k, std::size_t vocab) {
  Dataset d{"sparse", {k}, {FeatureKind::kSparse, vocab}, rng.next_u64(), {}};
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
    std::vector<double> counts(vocab, 0.0);
    for (int t = 0; t < 8; ++t) {
      std::size_t tok = rng.below(vocab);
      if (rng.uniform() < 0.5) tok = (tok / static_cast<std::size_t>(k)) * static_cast<std::size_t>(k) + static_cast<std::size_t>(y);
      counts[std::min(tok, vocab - 1)] += 1.0;
    }
    SparseFeatures x;
    for (std::size_t j = 0; j < vocab; ++j) {
      if (counts[j] > 0) x.emplace_back(static_cast<std::uint32_t>(j), counts[j]);
    }
    d.examples.push_back({x, y});
  }
  return d;
}

inline std::vector<int> labels_of(const Dataset& d) {
  std::vector<int> out;
  for (const auto& e : d.examples) out.push_back(e.label);
  return out;
}

}  // namespace preqeval::testing
