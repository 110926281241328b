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

#include "preqeval/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "preqeval/errors.hpp"
#include "preqeval/rng.hpp"

namespace preqeval {

using nlohmann::json;

std::string to_string(GeneratorKind g) {
  return g == GeneratorKind::kGaussianBlobs ? "gaussian_blobs" : "bow_topics";
}

GeneratorKind parse_generator(const std::string& name) {
  if (name == "gaussian_blobs") return GeneratorKind::kGaussianBlobs;
  if (name == "bow_topics") return GeneratorKind::kBowTopics;
  throw std::invalid_argument("unknown generator '" + name + "'");
}

TaskSpec TaskFamily::variant(std::size_t i) const {
  TaskSpec s = apply_shift(base, variants.at(i));
  s.task_id = base.task_id + "/v" + std::to_string(i);
  return s;
}

namespace {

void check_permutation(const std::vector<int>& perm, int k) {
  if (perm.size() != static_cast<std::size_t>(k)) {
    throw std::invalid_argument("label permutation must have K entries");
  }
  std::vector<bool> seen(perm.size(), false);
  for (int p : perm) {
    if (p < 0 || p >= k || seen[static_cast<std::size_t>(p)]) {
      throw std::invalid_argument("label permutation is not a permutation of [0, K)");
    }
    seen[static_cast<std::size_t>(p)] = true;
  }
}

std::vector<std::vector<double>> class_means(const TaskSpec& spec) {
  const auto& b = spec.blobs;
  if (!b.means.empty()) return b.means;
  const auto K = static_cast<std::size_t>(spec.num_classes);
  std::vector<std::vector<double>> means(K, std::vector<double>(b.dim, 0.0));
  for (std::size_t c = 0; c < K; ++c) {
    if (b.dim == 1) {
      means[c][0] = -b.radius + 2.0 * b.radius * static_cast<double>(c) / static_cast<double>(K - 1);
    } else {
      const double t = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(K);
      means[c][0] = b.radius * std::cos(t);
      means[c][1] = b.radius * std::sin(t);
    }
  }
  return means;
}

std::vector<std::size_t> class_counts(const TaskSpec& spec) {
  const auto K = static_cast<std::size_t>(spec.num_classes);
  std::vector<double> w = spec.class_weights.empty() ? std::vector<double>(K, 1.0) : spec.class_weights;
  double total = 0.0;
  for (double v : w) total += v;
  std::vector<std::size_t> counts(K);
  std::vector<double> rem(K);
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < K; ++c) {
    const double exact = static_cast<double>(spec.n) * w[c] / total;
    counts[c] = static_cast<std::size_t>(std::floor(exact));
    rem[c] = exact - static_cast<double>(counts[c]);
    assigned += counts[c];
  }
  std::vector<std::size_t> order(K);
  for (std::size_t c = 0; c < K; ++c) order[c] = c;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return rem[a] > rem[b]; });
  for (std::size_t i = 0; assigned < spec.n; ++i, ++assigned) ++counts[order[i % K]];
  return counts;
}

std::vector<std::uint32_t> vocab_permutation(std::size_t vocab, std::uint64_t seed) {
  std::vector<std::uint32_t> perm(vocab);
  for (std::size_t i = 0; i < vocab; ++i) perm[i] = static_cast<std::uint32_t>(i);
  Rng rng(mix_seed(seed, fnv1a64("vocab_remap")));
  rng.shuffle(perm);
  return perm;
}

// Cumulative topic-word distributions, one per class.
std::vector<std::vector<double>> topic_cdfs(const TaskSpec& spec) {
  const auto& b = spec.bow;
  Rng rng(mix_seed(b.topic_seed, fnv1a64("topics")));
  std::vector<std::vector<double>> cdfs(static_cast<std::size_t>(spec.num_classes));
  for (auto& cdf : cdfs) {
    cdf.resize(b.vocab);
    double acc = 0.0;
    for (std::size_t j = 0; j < b.vocab; ++j) {
      acc += rng.gamma(b.concentration);
      cdf[j] = acc;
    }
    for (double& v : cdf) v /= acc;
  }
  return cdfs;
}

DenseFeatures sample_blob(const TaskSpec& spec, const std::vector<double>& mean, Rng& rng) {
  const auto& b = spec.blobs;
  DenseFeatures x(b.dim);
  for (std::size_t j = 0; j < b.dim; ++j) x[j] = mean[j] + b.sigma * rng.normal();
  if (b.rotation != 0.0) {
    const double c = std::cos(b.rotation), s = std::sin(b.rotation);
    const double x0 = x[0], x1 = x[1];
    x[0] = c * x0 - s * x1;
    x[1] = s * x0 + c * x1;
  }
  for (std::size_t j = 0; j < b.mean_shift.size(); ++j) x[j] += b.mean_shift[j];
  return x;
}

SparseFeatures sample_doc(const TaskSpec& spec, const std::vector<double>& cdf,
                          const std::vector<std::vector<std::uint32_t>>& remaps, Rng& rng) {
  const auto& b = spec.bow;
  const std::size_t len = b.doc_len_min + rng.below(b.doc_len_max - b.doc_len_min + 1);
  std::map<std::uint32_t, double> counts;
  for (std::size_t t = 0; t < len; ++t) {
    const double u = rng.uniform();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    auto token = static_cast<std::uint32_t>(std::min<std::ptrdiff_t>(
        it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
    for (const auto& perm : remaps) token = perm[token];
    counts[token] += 1.0;
  }
  return SparseFeatures(counts.begin(), counts.end());
}

}  // namespace

void validate(const TaskSpec& spec) {
  if (spec.num_classes < 2) throw std::invalid_argument("task needs K >= 2");
  if (spec.n < 1) throw std::invalid_argument("task needs n >= 1");
  const auto K = static_cast<std::size_t>(spec.num_classes);
  if (!spec.class_weights.empty()) {
    if (spec.class_weights.size() != K) throw std::invalid_argument("class_weights needs K entries");
    for (double w : spec.class_weights) {
      if (!(w > 0.0)) throw std::invalid_argument("class_weights must be positive");
    }
  }
  if (!spec.label_permutation.empty()) check_permutation(spec.label_permutation, spec.num_classes);
  if (spec.generator == GeneratorKind::kGaussianBlobs) {
    const auto& b = spec.blobs;
    if (b.dim < 1) throw std::invalid_argument("blob dim must be >= 1");
    if (!(b.sigma > 0.0)) throw std::invalid_argument("blob sigma must be positive");
    if (!b.means.empty()) {
      if (b.means.size() != K) throw std::invalid_argument("blob means need K rows");
      for (const auto& m : b.means) {
        if (m.size() != b.dim) throw std::invalid_argument("blob mean has wrong dimension");
      }
    }
    if (b.rotation != 0.0 && b.dim < 2) throw std::invalid_argument("rotation needs dim >= 2");
    if (!b.mean_shift.empty() && b.mean_shift.size() != b.dim) {
      throw std::invalid_argument("mean shift has wrong dimension");
    }
  } else {
    const auto& b = spec.bow;
    if (b.vocab < K) throw std::invalid_argument("bow vocabulary must be >= K");
    if (!(b.concentration > 0.0)) throw std::invalid_argument("bow concentration must be positive");
    if (b.doc_len_min < 1 || b.doc_len_max < b.doc_len_min) {
      throw std::invalid_argument("bow document length range is invalid");
    }
  }
}

Dataset generate(const TaskSpec& spec) {
  validate(spec);
  const auto K = static_cast<std::size_t>(spec.num_classes);
  Dataset d;
  d.task_id = spec.task_id;
  d.label_space = LabelSpace{spec.num_classes};
  d.ordering_seed = spec.seed;

  const auto counts = class_counts(spec);
  std::vector<int> labels;
  labels.reserve(spec.n);
  for (std::size_t c = 0; c < K; ++c) labels.insert(labels.end(), counts[c], static_cast<int>(c));
  Rng order_rng(mix_seed(spec.seed, fnv1a64("order")));
  order_rng.shuffle(labels);

  Rng rng(mix_seed(spec.seed, fnv1a64("features")));
  d.examples.reserve(spec.n);
  if (spec.generator == GeneratorKind::kGaussianBlobs) {
    d.feature_spec = FeatureSpec{FeatureKind::kDense, spec.blobs.dim};
    const auto means = class_means(spec);
    for (int y : labels) {
      d.examples.push_back({sample_blob(spec, means[static_cast<std::size_t>(y)], rng), y});
    }
  } else {
    d.feature_spec = FeatureSpec{FeatureKind::kSparse, spec.bow.vocab};
    const auto cdfs = topic_cdfs(spec);
    std::vector<std::vector<std::uint32_t>> remaps;
    for (auto s : spec.bow.vocab_remaps) remaps.push_back(vocab_permutation(spec.bow.vocab, s));
    for (int y : labels) {
      d.examples.push_back({sample_doc(spec, cdfs[static_cast<std::size_t>(y)], remaps, rng), y});
    }
  }
  if (!spec.label_permutation.empty()) {
    for (auto& e : d.examples) e.label = spec.label_permutation[static_cast<std::size_t>(e.label)];
  }
  return d;
}

TaskSpec apply_shift(const TaskSpec& spec, const Shift& shift) {
  TaskSpec out = spec;
  const bool blobs = spec.generator == GeneratorKind::kGaussianBlobs;
  switch (shift.kind) {
    case Shift::Kind::kRotate:
      if (!blobs) throw std::invalid_argument("rotate applies to gaussian_blobs only");
      if (spec.blobs.dim < 2) throw std::invalid_argument("rotate needs dim >= 2");
      out.blobs.rotation += shift.angle;
      break;
    case Shift::Kind::kShiftMeans: {
      if (!blobs) throw std::invalid_argument("shift_means applies to gaussian_blobs only");
      std::vector<double> delta = shift.delta;
      if (delta.size() == 1) delta.resize(spec.blobs.dim, 0.0);
      if (delta.size() != spec.blobs.dim) throw std::invalid_argument("shift has wrong dimension");
      if (out.blobs.mean_shift.empty()) out.blobs.mean_shift.assign(spec.blobs.dim, 0.0);
      for (std::size_t j = 0; j < delta.size(); ++j) out.blobs.mean_shift[j] += delta[j];
      break;
    }
    case Shift::Kind::kRemapVocabulary:
      if (blobs) throw std::invalid_argument("remap_vocabulary applies to bow_topics only");
      out.bow.vocab_remaps.push_back(shift.remap_seed);
      break;
    case Shift::Kind::kPermuteLabels: {
      check_permutation(shift.permutation, spec.num_classes);
      std::vector<int> composed(static_cast<std::size_t>(spec.num_classes));
      for (std::size_t y = 0; y < composed.size(); ++y) {
        const int inner = spec.label_permutation.empty() ? static_cast<int>(y)
                                                         : spec.label_permutation[y];
        composed[y] = shift.permutation[static_cast<std::size_t>(inner)];
      }
      out.label_permutation = std::move(composed);
      break;
    }
  }
  return out;
}

// --- JSONL -------------------------------------------------------------------

std::string to_jsonl(const Dataset& d) {
  std::string out;
  json meta = {{"task_id", d.task_id},
               {"num_classes", d.label_space.num_classes},
               {"features", to_string(d.feature_spec.kind)},
               {"dim", d.feature_spec.dim},
               {"ordering_seed", d.ordering_seed}};
  out += meta.dump() + "\n";
  for (const auto& e : d.examples) {
    json line = {{"label", e.label}};
    if (const auto* dense = std::get_if<DenseFeatures>(&e.features)) {
      line["dense"] = *dense;
    } else {
      json sparse = json::object();
      for (const auto& [idx, count] : std::get<SparseFeatures>(e.features)) {
        sparse[std::to_string(idx)] = count;
      }
      line["sparse"] = std::move(sparse);
    }
    out += line.dump() + "\n";
  }
  return out;
}

Dataset parse_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  Dataset d;
  bool have_meta = false;
  auto fail = [&](const std::string& msg) -> void {
    throw DecodeError("line " + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) fail("expected a JSON object");
    if (!have_meta) {
      if (j.contains("label") || !j.contains("num_classes")) {
        fail("missing metadata line (task_id, num_classes, features, dim)");
      }
      try {
        d.task_id = j.value("task_id", std::string("task"));
        d.label_space.num_classes = j.at("num_classes").get<int>();
        const auto kind = j.at("features").get<std::string>();
        if (kind != "dense" && kind != "sparse") fail("features must be dense or sparse");
        d.feature_spec.kind = kind == "dense" ? FeatureKind::kDense : FeatureKind::kSparse;
        d.feature_spec.dim = j.at("dim").get<std::size_t>();
        d.ordering_seed = j.value("ordering_seed", std::uint64_t{0});
      } catch (const json::exception& e) {
        fail(std::string("bad metadata: ") + e.what());
      }
      if (d.label_space.num_classes < 2) fail("num_classes must be >= 2");
      if (d.feature_spec.dim == 0) fail("dim must be positive");
      have_meta = true;
      continue;
    }
    Example e;
    try {
      if (!j.contains("label")) fail("missing label");
      e.label = j.at("label").get<int>();
      if (j.contains("dense")) {
        e.features = j.at("dense").get<DenseFeatures>();
      } else if (j.contains("sparse")) {
        SparseFeatures sparse;
        for (const auto& [key, value] : j.at("sparse").items()) {
          std::size_t used = 0;
          const unsigned long idx = std::stoul(key, &used);
          if (used != key.size()) fail("sparse key '" + key + "' is not an index");
          sparse.emplace_back(static_cast<std::uint32_t>(idx), value.get<double>());
        }
        std::sort(sparse.begin(), sparse.end());
        e.features = std::move(sparse);
      } else {
        fail("example needs 'dense' or 'sparse' features");
      }
    } catch (const json::exception& ex) {
      fail(std::string("bad example: ") + ex.what());
    } catch (const std::logic_error& ex) {
      fail(std::string("bad example: ") + ex.what());
    }
    if (e.label < 0 || e.label >= d.label_space.num_classes) {
      fail("label " + std::to_string(e.label) + " outside [0, " +
           std::to_string(d.label_space.num_classes) + ")");
    }
    try {
      check_features(e.features, d.feature_spec);
    } catch (const std::invalid_argument& ex) {
      fail(ex.what());
    }
    d.examples.push_back(std::move(e));
  }
  if (!have_meta) throw DecodeError("missing metadata line");
  return d;
}

Dataset load_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_jsonl(ss.str());
}

void save_jsonl(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset '" + path + "'");
  out << to_jsonl(dataset);
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double eval_fraction,
                                  std::uint64_t seed) {
  if (!(eval_fraction > 0.0 && eval_fraction < 1.0)) {
    throw std::invalid_argument("eval_fraction must be in (0, 1)");
  }
  const auto K = static_cast<std::size_t>(dataset.label_space.num_classes);
  std::vector<std::vector<std::size_t>> by_class(K);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    by_class[static_cast<std::size_t>(dataset.examples[i].label)].push_back(i);
  }
  std::vector<bool> to_eval(dataset.size(), false);
  for (std::size_t c = 0; c < K; ++c) {
    auto& idx = by_class[c];
    if (idx.empty()) continue;
    if (idx.size() < 2) {
      throw std::invalid_argument("class " + std::to_string(c) + " has fewer than 2 examples");
    }
    Rng rng(mix_seed(seed, c));
    rng.shuffle(idx);
    auto n_eval = static_cast<std::size_t>(std::llround(static_cast<double>(idx.size()) * eval_fraction));
    n_eval = std::clamp<std::size_t>(n_eval, 1, idx.size() - 1);
    for (std::size_t i = 0; i < n_eval; ++i) to_eval[idx[i]] = true;
  }
  Dataset train{dataset.task_id, dataset.label_space, dataset.feature_spec, dataset.ordering_seed, {}};
  Dataset eval = train;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    (to_eval[i] ? eval : train).examples.push_back(dataset.examples[i]);
  }
  return {std::move(train), std::move(eval)};
}

}  // namespace preqeval
