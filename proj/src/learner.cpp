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

#include "preqeval/learner.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "preqeval/errors.hpp"
#include "preqeval/rng.hpp"

namespace preqeval {

namespace {

constexpr char kStateMagic[4] = {'P', 'Q', 'L', 'S'};
constexpr std::uint16_t kStateVersion = 1;

bool is_sgd(LearnerKind k) {
  return k == LearnerKind::kLogisticRegression || k == LearnerKind::kMlp;
}

std::size_t input_dim(const LearnerState& s) { return s.feature_spec.dim; }
std::size_t hidden(const LearnerState& s) { return static_cast<std::size_t>(s.hyper.hidden_width); }

std::size_t body_size(const LearnerState& s) {
  return s.kind == LearnerKind::kMlp ? hidden(s) * input_dim(s) + hidden(s) : 0;
}

std::size_t head_size(const LearnerState& s, int k) {
  const auto K = static_cast<std::size_t>(k);
  switch (s.kind) {
    case LearnerKind::kUniform: return 0;
    case LearnerKind::kPrior: return K;
    case LearnerKind::kNaiveBayes: return 2 * K + K * input_dim(s);
    case LearnerKind::kLogisticRegression: return K * input_dim(s) + K;
    case LearnerKind::kMlp: return K * hidden(s) + K;
  }
  return 0;
}

template <typename F>
void for_each_feature(const FeatureVector& x, F&& f) {
  if (const auto* dense = std::get_if<DenseFeatures>(&x)) {
    for (std::size_t j = 0; j < dense->size(); ++j) {
      if ((*dense)[j] != 0.0) f(j, (*dense)[j]);
    }
  } else {
    for (const auto& [idx, count] : std::get<SparseFeatures>(x)) f(static_cast<std::size_t>(idx), count);
  }
}

void softmax_in_place(std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

// Clamped entries sit exactly at the floor; the rest share the remaining mass
// in proportion to their original values.
void apply_floor(std::vector<double>& p) {
  std::vector<bool> clamped(p.size(), false);
  bool any = false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= kProbabilityFloor)) {
      clamped[i] = true;
      any = true;
    }
  }
  if (!any) return;
  const std::vector<double> original = p;
  for (;;) {
    std::size_t n_clamped = 0;
    double free_mass_src = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (clamped[i]) {
        ++n_clamped;
      } else {
        free_mass_src += original[i];
      }
    }
    const double free_mass = 1.0 - static_cast<double>(n_clamped) * kProbabilityFloor;
    bool changed = false;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (clamped[i]) {
        p[i] = kProbabilityFloor;
      } else {
        p[i] = original[i] * free_mass / free_mass_src;
        if (p[i] < kProbabilityFloor) {
          clamped[i] = true;
          changed = true;
        }
      }
    }
    if (!changed) return;
  }
}

const Head& head_of(const LearnerState& s, const std::string& task_id) {
  auto it = s.heads.find(task_id);
  if (it == s.heads.end()) throw std::invalid_argument("unknown task head '" + task_id + "'");
  return it->second;
}

Head& head_of(LearnerState& s, const std::string& task_id) {
  auto it = s.heads.find(task_id);
  if (it == s.heads.end()) throw std::invalid_argument("unknown task head '" + task_id + "'");
  return it->second;
}

// Xavier/Glorot uniform.
void glorot_fill(std::span<double> w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : w) v = (2.0 * rng.uniform() - 1.0) * a;
}

std::uint64_t resolved_seed(const LearnerState& s) {
  if (s.hyper.init_seed == kEntropySeed) {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  return static_cast<std::uint64_t>(s.hyper.init_seed);
}

Head make_head(const LearnerState& s, const std::string& task_id, int k, std::uint64_t seed) {
  Head h{k, std::vector<double>(head_size(s, k), 0.0)};
  if (s.kind == LearnerKind::kMlp) {
    Rng rng(mix_seed(seed, fnv1a64(task_id)));
    const auto K = static_cast<std::size_t>(k);
    glorot_fill(std::span<double>(h.params).first(K * hidden(s)), hidden(s), K, rng);
  }
  return h;
}

// --- differentiable learners ----------------------------------------------

struct Forward {
  std::vector<double> hidden;  // mlp only
  std::vector<double> probs;
};

Forward forward(const LearnerState& s, std::span<const double> body, std::span<const double> head,
                int k, const FeatureVector& x) {
  const auto K = static_cast<std::size_t>(k);
  Forward f;
  if (s.kind == LearnerKind::kLogisticRegression) {
    const std::size_t D = input_dim(s);
    f.probs.assign(head.begin() + static_cast<std::ptrdiff_t>(K * D), head.end());
    for_each_feature(x, [&](std::size_t j, double v) {
      for (std::size_t c = 0; c < K; ++c) f.probs[c] += head[c * D + j] * v;
    });
  } else {
    const std::size_t D = input_dim(s), H = hidden(s);
    f.hidden.assign(body.begin() + static_cast<std::ptrdiff_t>(H * D), body.end());
    for_each_feature(x, [&](std::size_t j, double v) {
      for (std::size_t h = 0; h < H; ++h) f.hidden[h] += body[h * D + j] * v;
    });
    for (double& v : f.hidden) v = std::tanh(v);
    f.probs.assign(head.begin() + static_cast<std::ptrdiff_t>(K * H), head.end());
    for (std::size_t c = 0; c < K; ++c) {
      for (std::size_t h = 0; h < H; ++h) f.probs[c] += head[c * H + h] * f.hidden[h];
    }
  }
  softmax_in_place(f.probs);
  return f;
}

// Mean cross-entropy (nats) over the batch plus (l2/2)*||weights||^2, biases
// excluded. Gradients are accumulated into gbody/ghead when non-null.
double loss_and_grad(const LearnerState& s, std::span<const double> body,
                     std::span<const double> head, int k, std::span<const Example* const> batch,
                     std::vector<double>* gbody, std::vector<double>* ghead) {
  const auto K = static_cast<std::size_t>(k);
  const std::size_t D = input_dim(s), H = hidden(s);
  const double scale = 1.0 / static_cast<double>(batch.size());
  if (gbody) gbody->assign(body.size(), 0.0);
  if (ghead) ghead->assign(head.size(), 0.0);
  double loss = 0.0;
  std::vector<double> dh;
  for (const Example* e : batch) {
    const Forward f = forward(s, body, head, k, e->features);
    loss -= std::log(f.probs[static_cast<std::size_t>(e->label)]) * scale;
    if (!ghead) continue;
    std::vector<double> dz = f.probs;
    dz[static_cast<std::size_t>(e->label)] -= 1.0;
    for (double& v : dz) v *= scale;
    if (s.kind == LearnerKind::kLogisticRegression) {
      for_each_feature(e->features, [&](std::size_t j, double v) {
        for (std::size_t c = 0; c < K; ++c) (*ghead)[c * D + j] += dz[c] * v;
      });
      for (std::size_t c = 0; c < K; ++c) (*ghead)[K * D + c] += dz[c];
      continue;
    }
    dh.assign(H, 0.0);
    for (std::size_t c = 0; c < K; ++c) {
      for (std::size_t h = 0; h < H; ++h) {
        (*ghead)[c * H + h] += dz[c] * f.hidden[h];
        dh[h] += head[c * H + h] * dz[c];
      }
      (*ghead)[K * H + c] += dz[c];
    }
    for (std::size_t h = 0; h < H; ++h) dh[h] *= 1.0 - f.hidden[h] * f.hidden[h];
    if (gbody) {
      for_each_feature(e->features, [&](std::size_t j, double v) {
        for (std::size_t h = 0; h < H; ++h) (*gbody)[h * D + j] += dh[h] * v;
      });
      for (std::size_t h = 0; h < H; ++h) (*gbody)[H * D + h] += dh[h];
    }
  }
  const double l2 = s.hyper.l2;
  if (l2 > 0.0) {
    const std::size_t head_weights = s.kind == LearnerKind::kLogisticRegression ? K * D : K * H;
    for (std::size_t i = 0; i < head_weights; ++i) {
      loss += 0.5 * l2 * head[i] * head[i];
      if (ghead) (*ghead)[i] += l2 * head[i];
    }
    if (s.kind == LearnerKind::kMlp) {
      for (std::size_t i = 0; i < H * D; ++i) {
        loss += 0.5 * l2 * body[i] * body[i];
        if (gbody) (*gbody)[i] += l2 * body[i];
      }
    }
  }
  return loss;
}

void sgd_step(LearnerState& s, Head& head, std::span<const Example* const> batch) {
  std::vector<double> gbody, ghead;
  loss_and_grad(s, s.body, head.params, head.num_classes, batch,
                s.kind == LearnerKind::kMlp ? &gbody : nullptr, &ghead);
  const double lr = s.hyper.learning_rate;
  for (std::size_t i = 0; i < head.params.size(); ++i) head.params[i] -= lr * ghead[i];
  for (std::size_t i = 0; i < gbody.size(); ++i) s.body[i] -= lr * gbody[i];
}

void add_counts(LearnerState& s, Head& head, const Example& e) {
  const auto K = static_cast<std::size_t>(head.num_classes);
  const auto y = static_cast<std::size_t>(e.label);
  head.params[y] += 1.0;
  if (s.kind == LearnerKind::kNaiveBayes) {
    const std::size_t V = input_dim(s);
    for_each_feature(e.features, [&](std::size_t j, double v) {
      head.params[K + y] += v;
      head.params[2 * K + y * V + j] += v;
    });
  }
}

void check_examples(const LearnerState& s, const Head& head, std::span<const Example> examples) {
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& e = examples[i];
    if (e.label < 0 || e.label >= head.num_classes) {
      throw std::invalid_argument("example " + std::to_string(i) + ": label " +
                                  std::to_string(e.label) + " outside head label space");
    }
    check_features(e.features, s.feature_spec);
  }
}

LearnerState reinitialized(const LearnerState& s) {
  LearnerState fresh = init_learner(s.kind, s.label_space, s.feature_spec, s.hyper);
  const std::uint64_t seed = resolved_seed(fresh);
  for (const auto& [id, head] : s.heads) {
    fresh.heads[id] = make_head(fresh, id, head.num_classes, seed);
  }
  return fresh;
}

}  // namespace

std::string to_string(LearnerKind k) {
  switch (k) {
    case LearnerKind::kUniform: return "uniform";
    case LearnerKind::kPrior: return "prior";
    case LearnerKind::kNaiveBayes: return "naive_bayes";
    case LearnerKind::kLogisticRegression: return "logistic_regression";
    case LearnerKind::kMlp: return "mlp";
  }
  return "?";
}

LearnerKind parse_learner_kind(const std::string& name) {
  for (auto k : {LearnerKind::kUniform, LearnerKind::kPrior, LearnerKind::kNaiveBayes,
                 LearnerKind::kLogisticRegression, LearnerKind::kMlp}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown learner kind '" + name + "'");
}

std::string to_string(Regime r) { return r == Regime::kWarmStart ? "warm_start" : "from_scratch"; }

Regime parse_regime(const std::string& name) {
  if (name == "warm_start") return Regime::kWarmStart;
  if (name == "from_scratch") return Regime::kFromScratch;
  throw std::invalid_argument("unknown regime '" + name + "'");
}

void validate(const HyperParams& h, LearnerKind kind) {
  if (!(h.learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (!(h.l2 >= 0.0)) throw std::invalid_argument("l2 must be non-negative");
  if (h.iterations == 0) throw std::invalid_argument("iterations must be positive");
  if (h.batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (!(h.smoothing_alpha > 0.0)) throw std::invalid_argument("smoothing_alpha must be positive");
  if (kind == LearnerKind::kMlp && h.hidden_width == 0) {
    throw std::invalid_argument("hidden_width must be positive for mlp");
  }
  if (h.init_seed < kEntropySeed) throw std::invalid_argument("init_seed must be >= -1");
}

int argmax(const PredictiveDistribution& dist) {
  int best = 0;
  for (std::size_t i = 1; i < dist.probs.size(); ++i) {
    if (dist.probs[i] > dist.probs[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

LearnerState init_learner(LearnerKind kind, LabelSpace label_space, FeatureSpec feature_spec,
                          const HyperParams& hyper) {
  if (label_space.num_classes < 2) throw std::invalid_argument("label space needs K >= 2");
  if (feature_spec.dim == 0) throw std::invalid_argument("feature dimension must be positive");
  validate(hyper, kind);
  if (kind == LearnerKind::kNaiveBayes && feature_spec.kind != FeatureKind::kSparse) {
    throw std::invalid_argument("naive_bayes requires sparse count features");
  }
  LearnerState s;
  s.kind = kind;
  s.label_space = label_space;
  s.feature_spec = feature_spec;
  s.hyper = hyper;
  const std::uint64_t seed = resolved_seed(s);
  s.body.assign(body_size(s), 0.0);
  if (kind == LearnerKind::kMlp) {
    Rng rng(mix_seed(seed, fnv1a64("body")));
    glorot_fill(std::span<double>(s.body).first(hidden(s) * input_dim(s)), input_dim(s), hidden(s),
                rng);
  }
  s.heads[kDefaultHead] = make_head(s, kDefaultHead, label_space.num_classes, seed);
  return s;
}

LearnerState add_head(const LearnerState& state, const std::string& task_id,
                      LabelSpace label_space) {
  if (state.heads.contains(task_id)) {
    throw std::invalid_argument("head '" + task_id + "' already exists");
  }
  if (label_space.num_classes < 2) throw std::invalid_argument("label space needs K >= 2");
  LearnerState out = state;
  out.heads[task_id] = make_head(out, task_id, label_space.num_classes, resolved_seed(out));
  return out;
}

bool has_head(const LearnerState& state, const std::string& task_id) {
  return state.heads.contains(task_id);
}

LearnerState fit(const LearnerState& state, const Dataset& data, const std::string& task_id,
                 Regime regime) {
  if (data.feature_spec != state.feature_spec) {
    throw std::invalid_argument("dataset feature spec does not match the learner");
  }
  return fit(state, data.examples, data.ordering_seed, task_id, regime);
}

LearnerState fit(const LearnerState& state, std::span<const Example> examples,
                 std::uint64_t ordering_seed, const std::string& task_id, Regime regime) {
  LearnerState out = regime == Regime::kFromScratch ? reinitialized(state) : state;
  Head& head = head_of(out, task_id);
  check_examples(out, head, examples);
  if (examples.empty() || out.kind == LearnerKind::kUniform) return out;

  if (is_sgd(out.kind)) {
    BatchCursor cursor(examples.size(), ordering_seed);
    const std::size_t bs = std::min<std::size_t>(out.hyper.batch_size, examples.size());
    std::vector<const Example*> batch;
    for (std::uint64_t it = 0; it < out.hyper.iterations; ++it) {
      batch.clear();
      for (std::size_t i : cursor.next(bs)) batch.push_back(&examples[i]);
      sgd_step(out, head, batch);
    }
  } else {
    for (const auto& e : examples) add_counts(out, head, e);
  }
  out.trained_on_count += examples.size();
  return out;
}

void update_on_batch(LearnerState& state, std::span<const Example* const> batch,
                     const std::string& task_id) {
  Head& head = head_of(state, task_id);
  for (const Example* e : batch) {
    check_examples(state, head, std::span<const Example>(e, 1));
  }
  if (batch.empty() || state.kind == LearnerKind::kUniform) return;
  if (is_sgd(state.kind)) {
    sgd_step(state, head, batch);
  } else {
    for (const Example* e : batch) add_counts(state, head, *e);
  }
  state.trained_on_count += batch.size();
}

PredictiveDistribution predict(const LearnerState& state, const FeatureVector& features,
                               const std::string& task_id) {
  const Head& head = head_of(state, task_id);
  check_features(features, state.feature_spec);
  const auto K = static_cast<std::size_t>(head.num_classes);
  PredictiveDistribution out;
  switch (state.kind) {
    case LearnerKind::kUniform:
      out.probs.assign(K, 1.0 / static_cast<double>(K));
      break;
    case LearnerKind::kPrior: {
      const double alpha = state.hyper.smoothing_alpha;
      double n = 0.0;
      for (std::size_t c = 0; c < K; ++c) n += head.params[c];
      out.probs.resize(K);
      for (std::size_t c = 0; c < K; ++c) {
        out.probs[c] = (head.params[c] + alpha) / (n + alpha * static_cast<double>(K));
      }
      break;
    }
    case LearnerKind::kNaiveBayes: {
      const double alpha = state.hyper.smoothing_alpha;
      const std::size_t V = input_dim(state);
      double n = 0.0;
      for (std::size_t c = 0; c < K; ++c) n += head.params[c];
      out.probs.resize(K);
      for (std::size_t c = 0; c < K; ++c) {
        double score =
            std::log((head.params[c] + alpha) / (n + alpha * static_cast<double>(K)));
        const double denom = head.params[K + c] + alpha * static_cast<double>(V);
        for_each_feature(features, [&](std::size_t j, double v) {
          score += v * std::log((head.params[2 * K + c * V + j] + alpha) / denom);
        });
        out.probs[c] = score;
      }
      softmax_in_place(out.probs);
      break;
    }
    case LearnerKind::kLogisticRegression:
    case LearnerKind::kMlp:
      out.probs = forward(state, state.body, head.params, head.num_classes, features).probs;
      break;
  }
  apply_floor(out.probs);
  return out;
}

double nll_bits(const LearnerState& state, const Example& example, const std::string& task_id) {
  const auto dist = predict(state, example.features, task_id);
  if (example.label < 0 || static_cast<std::size_t>(example.label) >= dist.probs.size()) {
    throw std::invalid_argument("label outside head label space");
  }
  return -std::log2(dist.probs[static_cast<std::size_t>(example.label)]);
}

double accuracy(const LearnerState& state, std::span<const Example> examples,
                const std::string& task_id) {
  if (examples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& e : examples) {
    if (argmax(predict(state, e.features, task_id)) == e.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

LearnerState with_hyper(const LearnerState& state, const HyperParams& hyper) {
  validate(hyper, state.kind);
  if (state.kind == LearnerKind::kMlp && hyper.hidden_width != state.hyper.hidden_width) {
    throw std::invalid_argument("hidden_width cannot change on an existing mlp state");
  }
  LearnerState out = state;
  out.hyper = hyper;
  return out;
}

double gradient_check(const LearnerState& state, const Example& example,
                      const std::string& task_id, double epsilon) {
  if (!is_sgd(state.kind)) {
    throw std::invalid_argument("gradient_check needs a differentiable learner, got " +
                                to_string(state.kind));
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  const Head& head = head_of(state, task_id);
  check_examples(state, head, std::span<const Example>(&example, 1));
  const Example* batch[] = {&example};

  std::vector<double> body = state.body, params = head.params;
  std::vector<double> gbody, ghead;
  loss_and_grad(state, body, params, head.num_classes, batch, &gbody, &ghead);

  double worst = 0.0;
  auto probe = [&](std::vector<double>& v, const std::vector<double>& analytic) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double saved = v[i];
      v[i] = saved + epsilon;
      const double up = loss_and_grad(state, body, params, head.num_classes, batch, nullptr, nullptr);
      v[i] = saved - epsilon;
      const double down =
          loss_and_grad(state, body, params, head.num_classes, batch, nullptr, nullptr);
      v[i] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
      worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
  };
  probe(params, ghead);
  if (state.kind == LearnerKind::kMlp) probe(body, gbody);
  return worst;
}

std::vector<std::uint8_t> serialize(const LearnerState& s) {
  ByteWriter w;
  for (char c : kStateMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u16(kStateVersion);
  w.u8(static_cast<std::uint8_t>(s.kind));
  w.u32(static_cast<std::uint32_t>(s.label_space.num_classes));
  w.u8(static_cast<std::uint8_t>(s.feature_spec.kind));
  w.u64(s.feature_spec.dim);
  w.f64(s.hyper.learning_rate);
  w.f64(s.hyper.l2);
  w.u64(s.hyper.iterations);
  w.u64(s.hyper.batch_size);
  w.f64(s.hyper.smoothing_alpha);
  w.u64(s.hyper.hidden_width);
  w.i64(s.hyper.init_seed);
  w.u64(s.trained_on_count);
  w.u64(s.body.size());
  for (double v : s.body) w.f64(v);
  w.u32(static_cast<std::uint32_t>(s.heads.size()));
  for (const auto& [id, head] : s.heads) {
    w.str(id);
    w.u32(static_cast<std::uint32_t>(head.num_classes));
    w.u64(head.params.size());
    for (double v : head.params) w.f64(v);
  }
  return w.take();
}

LearnerState deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  for (char c : kStateMagic) {
    if (r.u8() != static_cast<std::uint8_t>(c)) throw DecodeError("bad learner-state magic");
  }
  if (const auto v = r.u16(); v != kStateVersion) {
    throw DecodeError("unsupported learner-state version " + std::to_string(v));
  }
  LearnerState s;
  const auto kind = r.u8();
  if (kind > static_cast<std::uint8_t>(LearnerKind::kMlp)) throw DecodeError("bad learner kind");
  s.kind = static_cast<LearnerKind>(kind);
  s.label_space.num_classes = static_cast<int>(r.u32());
  const auto fkind = r.u8();
  if (fkind > 1) throw DecodeError("bad feature kind");
  s.feature_spec.kind = static_cast<FeatureKind>(fkind);
  s.feature_spec.dim = r.u64();
  s.hyper.learning_rate = r.f64();
  s.hyper.l2 = r.f64();
  s.hyper.iterations = r.u64();
  s.hyper.batch_size = r.u64();
  s.hyper.smoothing_alpha = r.f64();
  s.hyper.hidden_width = r.u64();
  s.hyper.init_seed = r.i64();
  s.trained_on_count = r.u64();
  if (s.label_space.num_classes < 2) throw DecodeError("bad label space");
  try {
    validate(s.hyper, s.kind);
  } catch (const std::invalid_argument& e) {
    throw DecodeError(std::string("bad hyperparameters: ") + e.what());
  }
  const auto nbody = r.u64();
  if (nbody != body_size(s)) throw DecodeError("body size does not match learner shape");
  s.body.resize(nbody);
  for (double& v : s.body) v = r.f64();
  const auto nheads = r.u32();
  for (std::uint32_t i = 0; i < nheads; ++i) {
    std::string id = r.str();
    Head h;
    h.num_classes = static_cast<int>(r.u32());
    if (h.num_classes < 2) throw DecodeError("bad head label space");
    const auto n = r.u64();
    if (n != head_size(s, h.num_classes)) throw DecodeError("head size does not match learner shape");
    h.params.resize(n);
    for (double& v : h.params) v = r.f64();
    if (!s.heads.emplace(std::move(id), std::move(h)).second) throw DecodeError("duplicate head");
  }
  if (r.remaining() != 0) throw DecodeError("trailing bytes after learner state");
  return s;
}

Digest state_digest(const LearnerState& state) { return sha256(serialize(state)); }

BatchCursor::BatchCursor(std::size_t n, std::uint64_t seed) : n_(n), seed_(seed) {
  if (n == 0) throw std::invalid_argument("BatchCursor over an empty dataset");
  refill();
}

void BatchCursor::refill() {
  order_.resize(n_);
  for (std::size_t i = 0; i < n_; ++i) order_[i] = i;
  Rng rng(mix_seed(seed_, epoch_));
  rng.shuffle(order_);
  ++epoch_;
  pos_ = 0;
}

std::vector<std::size_t> BatchCursor::next(std::size_t batch_size) {
  std::vector<std::size_t> out;
  out.reserve(batch_size);
  while (out.size() < batch_size) {
    if (pos_ == order_.size()) refill();
    out.push_back(order_[pos_++]);
  }
  return out;
}

}  // namespace preqeval
