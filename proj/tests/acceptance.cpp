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

// Acceptance checks for the library and the CLI. Prints one PASS/FAIL line
// per criterion and exits non-zero when any criterion fails.
//
//   preqeval_acceptance --preqeval-bin <path> --work-dir <dir> [--only N]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "preqeval/coder.hpp"
#include "preqeval/curriculum.hpp"
#include "preqeval/learner.hpp"
#include "preqeval/prequential.hpp"
#include "preqeval/rng.hpp"
#include "preqeval/stats.hpp"
#include "preqeval/tasks.hpp"
#include "test_util.hpp"

using namespace preqeval;
using namespace preqeval::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<Outcome()> check;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

BlockPlan random_plan(Rng& rng, std::size_t n) {
  switch (rng.below(4)) {
    case 0:
      return BlockPlan::per_example(n);
    case 1:
      return BlockPlan::single(n);
    case 2:
      return BlockPlan::fixed_size(n, 1 + rng.below(n));
    default:
      return BlockPlan::geometric(n, 1 + rng.below(16), 1.2 + 2.0 * rng.uniform());
  }
}

// -log2 of the sequential Laplace probabilities, computed from counts.
double laplace_bits(const std::vector<int>& labels, int k, double alpha, std::vector<double>* per) {
  std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    const double b = i == 0 ? std::log2(static_cast<double>(k))
                            : -std::log2((counts[y] + alpha) / (static_cast<double>(i) + k * alpha));
    if (per) per->push_back(b);
    total += b;
    counts[y] += 1.0;
  }
  return total;
}

TaskSpec blob_task(const std::string& id, std::uint64_t seed, int k, std::size_t n) {
  TaskSpec s;
  s.task_id = id;
  s.num_classes = k;
  s.blobs.dim = 2;
  s.blobs.radius = 2.5;
  s.n = n;
  s.seed = seed;
  return s;
}

CurriculumTask curriculum_task(const TaskSpec& spec, const std::string& head) {
  auto [train, eval] = split(generate(spec), 0.3, spec.seed);
  return {spec.task_id, head, std::move(train), std::move(eval)};
}

HyperParams sgd(std::int64_t seed, std::uint64_t iterations = 200) {
  HyperParams h;
  h.learning_rate = 0.5;
  h.iterations = iterations;
  h.batch_size = 16;
  h.hidden_width = 16;
  h.init_seed = seed;
  return h;
}

double accuracy(const LearnerState& s, const Dataset& d, const std::string& head) {
  return zero_shot_eval(s, d, head);
}

// 1. Uniform learner costs N log2 K under exact and blockwise coding.
Outcome uniform_oracle() {
  Rng rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(15));
    const std::size_t n = 1 + rng.below(500);
    std::vector<int> labels(n);
    for (int& y : labels) y = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
    const Dataset d = labels_only(labels, k, rng.next_u64());
    const double oracle = static_cast<double>(n) * std::log2(static_cast<double>(k));
    const Regime regime = trial % 2 ? Regime::kWarmStart : Regime::kFromScratch;
    const double exact = exact_online_codelength(LearnerKind::kUniform, {}, d, regime).total_bits;
    const double block = blockwise_codelength(LearnerKind::kUniform, single_hyper_protocol({}, regime),
                                              d, random_plan(rng, n))
                             .total_bits;
    worst = std::max({worst, std::abs(exact - oracle), std::abs(block - oracle)});
  }
  return {worst <= 1e-9, fmt("max |L - N log2 K| = %.3g bits over 50 cases", worst)};
}

// 2. Laplace estimator against its closed form.
Outcome laplace_oracle() {
  const double fixed =
      exact_online_codelength(LearnerKind::kPrior, {}, labels_only({0, 1, 0, 0}, 2)).total_bits;
  bool ok = std::abs(fixed - 4.32193) <= 1e-3;
  Rng rng(202);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(6));
    HyperParams h;
    h.smoothing_alpha = trial % 3 == 0 ? 1.0 : 0.25 + 2.0 * rng.uniform();
    std::vector<int> labels(1 + rng.below(80));
    for (int& y : labels) y = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
    std::vector<double> per;
    laplace_bits(labels, k, h.smoothing_alpha, &per);
    const auto r = exact_online_codelength(LearnerKind::kPrior, h, labels_only(labels, k));
    for (std::size_t i = 0; i < per.size(); ++i) worst = std::max(worst, std::abs(r.blocks[i].bits - per[i]));
  }
  ok = ok && worst <= 1e-6;
  return {ok, fmt("[0,1,0,0] -> %.5f bits; max per-example error %.3g over 100 sequences", fixed, worst)};
}

// 3. Unit blocks reproduce the exact online codelength.
Outcome unit_block_equivalence() {
  Rng rng(303);
  double worst = 0.0;
  const LearnerKind kinds[] = {LearnerKind::kUniform, LearnerKind::kPrior, LearnerKind::kNaiveBayes,
                               LearnerKind::kLogisticRegression, LearnerKind::kMlp};
  for (int trial = 0; trial < 20; ++trial) {
    const LearnerKind kind = kinds[trial % 5];
    const int k = 2 + static_cast<int>(rng.below(3));
    const std::size_t n = 10 + rng.below(30);
    const Dataset d = kind == LearnerKind::kNaiveBayes ? random_sparse(rng, n, k, 20)
                                                       : random_dense(rng, n, k, 3);
    HyperParams h = sgd(trial, 10);
    h.hidden_width = 4;
    const Regime regime = trial % 2 ? Regime::kWarmStart : Regime::kFromScratch;
    const double exact = exact_online_codelength(kind, h, d, regime).total_bits;
    const double block =
        blockwise_codelength(kind, single_hyper_protocol(h, regime), d, BlockPlan::per_example(n))
            .total_bits;
    worst = std::max(worst, std::abs(exact - block));
  }
  return {worst <= 1e-6, fmt("max |exact - unit blocks| = %.3g bits over 20 datasets", worst)};
}

// 4. Arithmetic coder round trips, payload bounds and byte determinism.
Outcome coder_soundness() {
  Rng rng(404);
  const LearnerKind kinds[] = {LearnerKind::kUniform, LearnerKind::kPrior, LearnerKind::kNaiveBayes,
                               LearnerKind::kLogisticRegression, LearnerKind::kMlp};
  int failures = 0;
  double worst_low = 0.0, worst_high = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const LearnerKind kind = kinds[trial % 5];
    const int k = 2 + static_cast<int>(rng.below(6));
    const std::size_t n = rng.below(80);
    const Dataset d = kind == LearnerKind::kNaiveBayes ? random_sparse(rng, n, k, 25)
                                                       : random_dense(rng, n, k, 3);
    const BlockPlan plan = n == 0 ? BlockPlan{} : random_plan(rng, n);
    const int precision = kMinPrecision + static_cast<int>(rng.below(kMaxPrecision - kMinPrecision + 1));
    HyperParams h = sgd(trial, 6);
    h.hidden_width = 4;
    const auto protocol = single_hyper_protocol(h, trial % 2 ? Regime::kWarmStart : Regime::kFromScratch);
    const auto first = encode_labels(kind, protocol, d, plan, precision);
    const auto second = encode_labels(kind, protocol, d, plan, precision);
    const auto bytes = to_bytes(first.stream);
    const auto decoded = decode_labels(kind, protocol, d.features_only(), plan, parse_bitstream(bytes));
    const double measured = static_cast<double>(first.stream.header.payload_bits);
    worst_low = std::min(worst_low, measured - first.ideal_quantized_bits);
    worst_high = std::max(worst_high, measured - first.ideal_quantized_bits);
    const bool ok = decoded == labels_of(d) && to_bytes(second.stream) == bytes &&
                    measured >= first.ideal_quantized_bits - 1 && measured <= first.ideal_quantized_bits + 32;
    failures += !ok;
  }
  return {failures == 0, fmt("%d/1000 failed; payload - ideal in [%.2f, %.2f] bits", failures,
                             worst_low, worst_high)};
}

// 5. Analytic gradients against central differences.
Outcome gradient_checks() {
  Rng rng(505);
  double worst_lr = 0.0, worst_mlp = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(4));
    const std::size_t dim = 1 + rng.below(6);
    const Dataset d = random_dense(rng, 25, k, dim);
    HyperParams h = sgd(trial, 5);
    h.l2 = trial % 2 ? 0.01 : 0.0;
    h.hidden_width = 2 + rng.below(8);
    const auto lr = fit(init_learner(LearnerKind::kLogisticRegression, d.label_space, d.feature_spec, h),
                        d, kDefaultHead, Regime::kWarmStart);
    const auto mlp = fit(init_learner(LearnerKind::kMlp, d.label_space, d.feature_spec, h), d,
                         kDefaultHead, Regime::kWarmStart);
    const Example& e = d.examples[rng.below(d.size())];
    worst_lr = std::max(worst_lr, gradient_check(lr, e, kDefaultHead, 1e-5));
    worst_mlp = std::max(worst_mlp, gradient_check(mlp, e, kDefaultHead, 1e-5));
  }
  return {worst_lr <= 1e-4 && worst_mlp <= 1e-4,
          fmt("max relative discrepancy: logistic %.3g, mlp %.3g", worst_lr, worst_mlp)};
}

// 6. Shorter codelengths go with higher accuracy across learners.
Outcome codelength_accuracy_correlation() {
  std::vector<double> bits, accs;
  const LearnerKind kinds[] = {LearnerKind::kUniform, LearnerKind::kPrior, LearnerKind::kNaiveBayes,
                               LearnerKind::kLogisticRegression};
  double mean_bits[4] = {}, mean_acc[4] = {};
  for (std::int64_t seed = 0; seed < 10; ++seed) {
    TaskSpec spec;
    spec.task_id = "bow";
    spec.generator = GeneratorKind::kBowTopics;
    spec.num_classes = 4;
    spec.n = 1000;
    spec.bow.vocab = 200;
    spec.bow.concentration = 1.0;
    spec.bow.doc_len_min = 4;
    spec.bow.doc_len_max = 10;
    spec.bow.topic_seed = 7;  // the task stays fixed; samples vary with the seed
    spec.seed = 1000 + static_cast<std::uint64_t>(seed);
    const auto [train, eval] = split(generate(spec), 0.2, spec.seed);
    for (int i = 0; i < 4; ++i) {
      HyperParams h = sgd(seed, 100);
      h.learning_rate = 0.1;
      const auto protocol = single_hyper_protocol(h, Regime::kFromScratch);
      const auto report =
          blockwise_codelength(kinds[i], protocol, train, BlockPlan::geometric(train.size(), 25, 2.0));
      const auto model = fit(init_learner(kinds[i], train.label_space, train.feature_spec, h), train,
                             kDefaultHead, Regime::kWarmStart);
      bits.push_back(report.total_bits);
      accs.push_back(accuracy(model, eval, kDefaultHead));
      mean_bits[i] += report.total_bits / 10.0;
      mean_acc[i] += accs.back() / 10.0;
    }
  }
  const double rho = spearman(bits, accs);
  std::string per;
  for (int i = 0; i < 4; ++i) per += fmt(" %s=%.0fb/%.3f", to_string(kinds[i]).c_str(), mean_bits[i], mean_acc[i]);
  return {rho <= -0.7, fmt("spearman = %.3f over 40 runs;", rho) + per};
}

// 7. Pretraining on a same-family variant shortens the target codelength.
Outcome transfer_benefit() {
  int shorter = 0, above_chance = 0;
  double mean_cold = 0.0, mean_pre = 0.0;
  const int k = 3;
  for (std::int64_t seed = 0; seed < 10; ++seed) {
    const auto base = static_cast<std::uint64_t>(100 + 10 * seed);
    const TaskSpec source = blob_task("source", base, k, 800);
    TaskSpec target = apply_shift(source, Shift::rotate(15.0 * std::numbers::pi / 180.0));
    target.task_id = "target";
    target.seed = base + 1;
    target.n = 400;
    const std::vector<CurriculumTask> pretrain{curriculum_task(source, "family")};
    const CurriculumTask tgt = curriculum_task(target, "family");
    const HyperParams h = sgd(seed, 100);
    const auto r = pretrain_then_finetune(LearnerKind::kLogisticRegression, h, pretrain, 400,
                                          static_cast<std::uint64_t>(seed), tgt,
                                          single_hyper_protocol(h, Regime::kFromScratch),
                                          BlockPlan::geometric(tgt.train.size(), 8, 2.0), seed);
    const auto& cmp = *r.codelength_comparison;
    shorter += cmp.pretrained.total_bits < cmp.cold.total_bits;
    above_chance += r.zero_shot.at("target") > 1.0 / k;
    mean_cold += cmp.cold.total_bits / 10.0;
    mean_pre += cmp.pretrained.total_bits / 10.0;
  }
  return {shorter >= 9 && above_chance >= 9,
          fmt("shorter in %d/10 seeds (mean %.1f -> %.1f bits); zero-shot > 1/K in %d/10", shorter,
              mean_cold, mean_pre, above_chance)};
}

// 8. Models do best on the variant they were trained on.
Outcome generalization_gap() {
  int good = 0;
  double min_gap = 1.0;
  for (std::int64_t seed = 0; seed < 10; ++seed) {
    const TaskSpec base = blob_task("base", static_cast<std::uint64_t>(200 + seed), 3, 600);
    std::vector<TrainedModel> models;
    std::vector<Dataset> evals;
    for (int v = 0; v < 3; ++v) {
      TaskSpec s = apply_shift(base, Shift::rotate(v * std::numbers::pi / 3.0));
      s.seed = base.seed + static_cast<std::uint64_t>(v) * 1000;
      auto [train, test] = split(generate(s), 0.3, s.seed);
      models.push_back({fit(init_learner(LearnerKind::kLogisticRegression, train.label_space,
                                         train.feature_spec, sgd(seed)),
                            train, kDefaultHead, Regime::kWarmStart),
                        kDefaultHead});
      evals.push_back(std::move(test));
    }
    const auto m = cross_variant_matrix(models, evals);
    double gap = 1.0;
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        if (i != j) gap = std::min(gap, m[i][i] - m[i][j]);
      }
    }
    good += gap >= 0.05;
    min_gap = std::min(min_gap, gap);
  }
  return {good >= 9, fmt("diagonal dominates by >= 0.05 in %d/10 seeds (smallest margin %.3f)", good, min_gap)};
}

// 9. Sequential training on conflicting tasks forgets; uniform multitask
// with separate heads does not.
Outcome forgetting_vs_curriculum() {
  int forgets = 0, keeps = 0;
  double min_drop = 1.0, max_dev = 0.0;
  for (std::int64_t seed = 0; seed < 10; ++seed) {
    const TaskSpec a = blob_task("A", static_cast<std::uint64_t>(300 + seed), 2, 600);
    TaskSpec b = apply_shift(a, Shift::permute_labels({1, 0}));
    b.task_id = "B";
    b.seed = a.seed + 1000;
    const HyperParams h = sgd(seed);

    CurriculumSchedule seq;
    seq.kind = ScheduleKind::kSequential;
    seq.phases = {{"A", 200}, {"B", 200}};
    seq.eval_interval = 20;
    const std::vector<CurriculumTask> shared{curriculum_task(a, "shared"), curriculum_task(b, "shared")};
    const std::vector<std::string> eval_a{"A"};
    const auto sr = run_sequential(LearnerKind::kMlp, h, seq, shared, eval_a, seed);
    const double drop = sr.forgetting.at("A").drop;
    forgets += drop >= 0.3;
    min_drop = std::min(min_drop, drop);

    CurriculumSchedule uni;
    uni.kind = ScheduleKind::kRandomUniform;
    uni.task_set = {"A", "B"};
    uni.total_iterations = 400;
    uni.sampling_seed = static_cast<std::uint64_t>(seed);
    uni.eval_interval = 50;
    const std::vector<CurriculumTask> separate{curriculum_task(a, "A"), curriculum_task(b, "B")};
    const auto ur = run_random_uniform(LearnerKind::kMlp, h, uni, separate, {}, seed);
    bool within = true;
    for (const auto& t : separate) {
      CurriculumSchedule alone;
      alone.kind = ScheduleKind::kSequential;
      alone.phases = {{t.task_id, ur.batches_per_task.at(t.task_id)}};
      alone.eval_interval = 50;
      const std::vector<CurriculumTask> one{t};
      const auto br = run_sequential(LearnerKind::kMlp, h, alone, one, {}, seed);
      const double dev = std::abs(ur.final.at(t.task_id) - br.final.at(t.task_id));
      max_dev = std::max(max_dev, dev);
      within = within && dev <= 0.05;
    }
    keeps += within;
  }
  return {forgets >= 9 && keeps >= 9,
          fmt("sequential drop >= 0.3 in %d/10 (min %.3f); multitask within 0.05 in %d/10 (max dev %.3f)",
              forgets, min_drop, keeps, max_dev)};
}

// 10. Switching never costs more than the best single model plus naming.
Outcome switching_bound() {
  Rng rng(1010);
  int violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t models = 1 + rng.below(5);
    const std::size_t blocks = 1 + rng.below(12);
    std::vector<CodelengthReport> reports(models);
    for (auto& r : reports) {
      std::size_t end = 0;
      for (std::size_t i = 0; i < blocks; ++i) {
        BlockResult b;
        b.index = i;
        b.begin = end;
        end += 1 + rng.below(50);
        b.end = end;
        b.bits = 100.0 * rng.uniform();
        r.blocks.push_back(b);
        r.plan.boundaries.push_back(end);
        r.total_bits += b.bits;
      }
    }
    // Every report codes the same plan.
    for (auto& r : reports) {
      for (std::size_t i = 0; i < blocks; ++i) {
        r.blocks[i].begin = reports[0].blocks[i].begin;
        r.blocks[i].end = reports[0].blocks[i].end;
      }
      r.plan = reports[0].plan;
    }
    double best = reports[0].total_bits;
    for (const auto& r : reports) best = std::min(best, r.total_bits);
    const double bound = best + static_cast<double>(blocks - 1) * std::log2(static_cast<double>(models));
    const double sw = switching_codelength(reports, true).total_bits;
    violations += sw > bound + 1e-9;
  }
  return {violations == 0, fmt("%d/100 report sets exceed the bound", violations)};
}

// 11. verify passes for one config of every experiment kind, via the CLI.
struct CliCase {
  std::string command;
  std::string file;
  std::string json;
};

Outcome end_to_end(const std::string& bin, const fs::path& work) {
  fs::remove_all(work);
  fs::create_directories(work);
  const std::string learner =
      R"("learner": {"kind": "mlp", "hyper": {"learning_rate": 0.5, "iterations": 60, "hidden_width": 8}})";
  const std::vector<CliCase> cases = {
      {"codelength", "codelength.json",
       R"({"kind": "codelength", "seeds": [0, 1],
           "learners": [{"kind": "uniform"}, {"kind": "prior"},
                        {"kind": "logistic_regression", "candidates": [{"learning_rate": 0.1}, {"learning_rate": 1.0}]}],
           "tasks": [{"task_id": "blobs", "num_classes": 3, "n": 300}]})"},
      {"compress", "compress.json",
       R"({"kind": "compress", "seeds": [0, 1], "learner": {"kind": "naive_bayes"},
           "tasks": [{"task_id": "bow", "generator": "bow_topics", "num_classes": 3, "n": 300}]})"},
      {"decompress", "decompress.json",
       R"({"kind": "decompress", "seeds": [0, 1], "compress_config": "compress.json"})"},
      {"curve", "curve.json",
       R"({"kind": "curve", "seeds": [0, 1], )" + learner +
           R"(, "tasks": [{"task_id": "blobs", "n": 300}], "plan": {"type": "fixed", "block_size": 60}})"},
      {"continual", "continual.json",
       R"({"kind": "continual", "seeds": [0, 1], )" + learner + R"(,
           "tasks": [{"task_id": "a", "head": "shared", "n": 200},
                     {"task_id": "b", "head": "shared", "n": 200, "shifts": [{"type": "permute_labels", "permutation": [1, 0]}]}],
           "schedule": {"phases": [{"task": "a", "iterations": 50}, {"task": "b", "iterations": 50}], "eval_interval": 10}})"},
      {"multitask", "multitask.json",
       R"({"kind": "multitask", "seeds": [0, 1], )" + learner + R"(,
           "tasks": [{"task_id": "a", "n": 200}, {"task_id": "b", "n": 200, "shifts": [{"type": "rotate", "degrees": 20}]}],
           "schedule": {"total_iterations": 100, "eval_interval": 25}})"},
      {"cross-matrix", "cross_matrix.json",
       R"({"kind": "cross_matrix", "seeds": [0, 1], )" + learner + R"(,
           "tasks": [{"task_id": "v0", "num_classes": 3, "n": 300},
                     {"task_id": "v60", "num_classes": 3, "n": 300, "shifts": [{"type": "rotate", "degrees": 60}]}]})"},
      {"pretrain-finetune", "pretrain.json",
       R"({"kind": "pretrain_finetune", "seeds": [0, 1], )" + learner + R"(,
           "tasks": [{"task_id": "source", "head": "family", "n": 300},
                     {"task_id": "target", "head": "family", "n": 200, "seed": 5, "shifts": [{"type": "rotate", "degrees": 15}]}],
           "target": "target", "schedule": {"total_iterations": 100, "eval_interval": 20}})"},
  };
  const fs::path out = work / "out";
  std::string detail;
  bool all = true;
  for (const auto& c : cases) {
    std::ofstream(work / c.file) << c.json;
    const std::string common =
        " --config \"" + (work / c.file).string() + "\" --out \"" + out.string() + "\" > \"" +
        (work / (c.file + ".log")).string() + "\" 2>&1";
    const int ran = std::system(("\"" + bin + "\" " + c.command + common).c_str());
    const int verified = ran == 0 ? std::system(("\"" + bin + "\" verify" + common).c_str()) : -1;
    const bool ok = ran == 0 && verified == 0;
    all = all && ok;
    detail += " " + c.command + (ok ? "=ok" : "=FAIL");
  }
  return {all, "verify:" + detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"preqeval acceptance checks"};
  std::string bin;
  std::string work = "acceptance_work";
  int only = 0;
  app.add_option("--preqeval-bin", bin, "path to the preqeval executable")->required();
  app.add_option("--work-dir", work, "scratch directory for the end-to-end check");
  app.add_option("--only", only, "run a single criterion");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria = {
      {1, "uniform-code oracle", 1.0, uniform_oracle},
      {2, "Laplace oracle", 1.0, laplace_oracle},
      {3, "per-example / blockwise equivalence", 60.0, unit_block_equivalence},
      {4, "coder soundness", 300.0, coder_soundness},
      {5, "gradient checks", 30.0, gradient_checks},
      {6, "codelength-accuracy correlation", 300.0, codelength_accuracy_correlation},
      {7, "transfer benefit", 600.0, transfer_benefit},
      {8, "generalization gap", 600.0, generalization_gap},
      {9, "forgetting vs curriculum", 600.0, forgetting_vs_curriculum},
      {10, "switching bound", 1.0, switching_bound},
      {11, "end-to-end determinism", 900.0, [&] { return end_to_end(bin, fs::path(work)); }},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.budget_seconds;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s  [%2d] %s: %s (%.2fs%s)\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                o.detail.c_str(), secs,
                in_time ? "" : fmt(", over the %.0fs budget", c.budget_seconds).c_str());
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
