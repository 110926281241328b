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

#include "preqeval/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "preqeval/errors.hpp"

namespace preqeval {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr std::pair<ExperimentKind, const char*> kKindNames[] = {
    {ExperimentKind::kCodelength, "codelength"},
    {ExperimentKind::kCompress, "compress"},
    {ExperimentKind::kDecompress, "decompress"},
    {ExperimentKind::kCurve, "curve"},
    {ExperimentKind::kContinual, "continual"},
    {ExperimentKind::kMultitask, "multitask"},
    {ExperimentKind::kCrossMatrix, "cross_matrix"},
    {ExperimentKind::kPretrainFinetune, "pretrain_finetune"},
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Reads the members of one JSON object, recording every problem instead of
// stopping at the first, and flags keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path, std::vector<std::string>& errors)
      : j_(j), path_(std::move(path)), errors_(errors) {
    if (!j_.is_object()) error(path_, "expected an object");
  }

  ~ObjectReader() { finish(); }

  // Reports keys that were never asked for; runs once.
  void finish() {
    if (finished_ || !j_.is_object()) return;
    finished_ = true;
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) error(where(key), "unknown key '" + key + "'");
    }
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.is_object() && j_.contains(key);
  }

  const json* raw(const std::string& key) { return has(key) ? &j_.at(key) : nullptr; }

  std::string where(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void error(const std::string& where, const std::string& message) {
    errors_.push_back(where + ": " + message);
  }

  void number(const std::string& key, double& out) {
    if (const json* v = raw(key)) {
      if (v->is_number()) {
        out = v->get<double>();
      } else {
        error(where(key), "expected a number");
      }
    }
  }

  template <typename Int>
  void integer(const std::string& key, Int& out) {
    if (const json* v = raw(key)) read_integer(*v, where(key), out);
  }

  template <typename Int>
  void read_integer(const json& v, const std::string& at, Int& out) {
    if (v.is_number_unsigned()) {
      const auto u = v.get<std::uint64_t>();
      if (u > static_cast<std::uint64_t>(std::numeric_limits<Int>::max())) {
        error(at, "integer out of range");
      } else {
        out = static_cast<Int>(u);
      }
    } else if (v.is_number_integer()) {
      const auto s = v.get<std::int64_t>();
      if (std::is_unsigned_v<Int> && s < 0) {
        error(at, "must be non-negative");
      } else {
        out = static_cast<Int>(s);
      }
    } else {
      error(at, "expected an integer");
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = raw(key)) {
      if (v->is_string()) {
        out = v->get<std::string>();
      } else {
        error(where(key), "expected a string");
      }
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = raw(key)) {
      if (v->is_boolean()) {
        out = v->get<bool>();
      } else {
        error(where(key), "expected true or false");
      }
    }
  }

  void numbers(const std::string& key, std::vector<double>& out) {
    if (const json* v = raw(key)) read_numbers(*v, where(key), out);
  }

  void read_numbers(const json& v, const std::string& at, std::vector<double>& out) {
    out.clear();
    if (!v.is_array()) {
      error(at, "expected an array of numbers");
      return;
    }
    for (const auto& e : v) {
      if (!e.is_number()) {
        error(at, "expected an array of numbers");
        return;
      }
      out.push_back(e.get<double>());
    }
  }

  template <typename Int>
  void integers(const std::string& key, std::vector<Int>& out) {
    if (const json* v = raw(key)) {
      out.clear();
      if (!v->is_array()) {
        error(where(key), "expected an array of integers");
        return;
      }
      for (std::size_t i = 0; i < v->size(); ++i) {
        Int x{};
        read_integer((*v)[i], where(key) + "[" + std::to_string(i) + "]", x);
        out.push_back(x);
      }
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
  bool finished_ = false;
};

template <typename F>
void check(std::vector<std::string>& errors, const std::string& at, F&& f) {
  try {
    f();
  } catch (const std::invalid_argument& ex) {
    errors.push_back(at + ": " + ex.what());
  }
}

HyperParams parse_hyper(const json& j, const std::string& path, HyperParams base,
                        std::vector<std::string>& errors) {
  ObjectReader r(j, path, errors);
  r.number("learning_rate", base.learning_rate);
  r.number("l2", base.l2);
  r.integer("iterations", base.iterations);
  r.integer("batch_size", base.batch_size);
  r.number("smoothing_alpha", base.smoothing_alpha);
  r.integer("hidden_width", base.hidden_width);
  r.integer("init_seed", base.init_seed);
  return base;
}

json hyper_json(const HyperParams& h) {
  return {{"learning_rate", h.learning_rate}, {"l2", h.l2},
          {"iterations", h.iterations},       {"batch_size", h.batch_size},
          {"smoothing_alpha", h.smoothing_alpha}, {"hidden_width", h.hidden_width},
          {"init_seed", h.init_seed}};
}

LearnerConfig parse_learner(const json& j, const std::string& path,
                            std::vector<std::string>& errors) {
  LearnerConfig lc;
  ObjectReader r(j, path, errors);
  std::string kind = to_string(lc.kind);
  r.string("kind", kind);
  check(errors, r.where("kind"), [&] { lc.kind = parse_learner_kind(kind); });
  if (const json* h = r.raw("hyper")) lc.hyper = parse_hyper(*h, r.where("hyper"), {}, errors);
  if (const json* c = r.raw("candidates")) {
    if (!c->is_array() || c->empty()) {
      r.error(r.where("candidates"), "expected a non-empty array of hyperparameter objects");
    } else {
      for (std::size_t i = 0; i < c->size(); ++i) {
        lc.candidates.push_back(parse_hyper((*c)[i], r.where("candidates") + "[" +
                                                         std::to_string(i) + "]",
                                            lc.hyper, errors));
      }
    }
  }
  std::size_t default_candidate = 0;
  r.integer("default_candidate", default_candidate);
  if (!lc.candidates.empty()) {
    if (default_candidate >= lc.candidates.size()) {
      r.error(r.where("default_candidate"), "index outside the candidate list");
    } else {
      lc.hyper = lc.candidates[default_candidate];
    }
  }
  const auto& all = lc.candidates.empty() ? std::vector<HyperParams>{lc.hyper} : lc.candidates;
  for (std::size_t i = 0; i < all.size(); ++i) {
    check(errors, r.where(lc.candidates.empty() ? "hyper" : "candidates[" + std::to_string(i) + "]"),
          [&] { validate(all[i], lc.kind); });
  }
  return lc;
}

json learner_json(const LearnerConfig& lc) {
  json c = json::array();
  for (const auto& h : lc.candidates) c.push_back(hyper_json(h));
  return {{"kind", to_string(lc.kind)}, {"hyper", hyper_json(lc.hyper)}, {"candidates", c}};
}

Shift parse_shift(const json& j, const std::string& path, std::vector<std::string>& errors) {
  ObjectReader r(j, path, errors);
  std::string type;
  r.string("type", type);
  if (type == "rotate") {
    double degrees = 0.0;
    r.number("degrees", degrees);
    return Shift::rotate(degrees * std::numbers::pi / 180.0);
  }
  if (type == "shift_means") {
    std::vector<double> delta;
    r.numbers("delta", delta);
    if (delta.empty()) r.error(r.where("delta"), "needs at least one entry");
    return Shift::shift_means(delta);
  }
  if (type == "remap_vocabulary") {
    std::uint64_t seed = 0;
    r.integer("seed", seed);
    return Shift::remap_vocabulary(seed);
  }
  if (type == "permute_labels") {
    std::vector<int> perm;
    r.integers("permutation", perm);
    return Shift::permute_labels(perm);
  }
  r.error(r.where("type"),
          "expected rotate, shift_means, remap_vocabulary or permute_labels, got '" + type + "'");
  return {};
}

json shift_json(const Shift& s) {
  switch (s.kind) {
    case Shift::Kind::kRotate:
      return {{"type", "rotate"}, {"degrees", s.angle * 180.0 / std::numbers::pi}};
    case Shift::Kind::kShiftMeans:
      return {{"type", "shift_means"}, {"delta", s.delta}};
    case Shift::Kind::kRemapVocabulary:
      return {{"type", "remap_vocabulary"}, {"seed", s.remap_seed}};
    case Shift::Kind::kPermuteLabels:
      return {{"type", "permute_labels"}, {"permutation", s.permutation}};
  }
  return {};
}

TaskConfig parse_task(const json& j, const std::string& path, const std::string& base_dir,
                      std::vector<std::string>& errors) {
  TaskConfig t;
  ObjectReader r(j, path, errors);
  TaskSpec& s = t.spec;
  r.string("task_id", s.task_id);
  r.string("head", t.head);
  r.string("dataset", t.dataset_path);
  if (!t.dataset_path.empty()) {
    fs::path p(t.dataset_path);
    if (p.is_relative()) p = fs::path(base_dir) / p;
    t.dataset_path = p.lexically_normal().string();
    try {
      const std::string text = read_file(t.dataset_path);
      t.dataset_sha256 = to_hex(sha256(text));
      if (!r.has("task_id")) s.task_id = parse_jsonl(text).task_id;
    } catch (const std::exception& ex) {
      r.error(r.where("dataset"), ex.what());
    }
    for (const char* key : {"generator", "num_classes", "n", "seed", "class_weights",
                            "label_permutation", "blobs", "bow", "shifts"}) {
      if (r.has(key)) r.error(r.where(key), "not allowed together with 'dataset'");
    }
    return t;
  }
  std::string generator = to_string(s.generator);
  r.string("generator", generator);
  check(errors, r.where("generator"), [&] { s.generator = parse_generator(generator); });
  r.integer("num_classes", s.num_classes);
  r.integer("n", s.n);
  r.integer("seed", s.seed);
  r.numbers("class_weights", s.class_weights);
  r.integers("label_permutation", s.label_permutation);
  if (const json* b = r.raw("blobs")) {
    ObjectReader br(*b, r.where("blobs"), errors);
    br.integer("dim", s.blobs.dim);
    if (const json* m = br.raw("means")) {
      if (!m->is_array()) {
        br.error(br.where("means"), "expected an array of rows");
      } else {
        for (std::size_t i = 0; i < m->size(); ++i) {
          std::vector<double> row;
          br.read_numbers((*m)[i], br.where("means") + "[" + std::to_string(i) + "]", row);
          s.blobs.means.push_back(row);
        }
      }
    }
    br.number("radius", s.blobs.radius);
    br.number("sigma", s.blobs.sigma);
    double degrees = 0.0;
    br.number("rotation_degrees", degrees);
    s.blobs.rotation = degrees * std::numbers::pi / 180.0;
    br.numbers("mean_shift", s.blobs.mean_shift);
  }
  if (const json* b = r.raw("bow")) {
    ObjectReader br(*b, r.where("bow"), errors);
    br.integer("vocab", s.bow.vocab);
    br.number("concentration", s.bow.concentration);
    br.integer("doc_len_min", s.bow.doc_len_min);
    br.integer("doc_len_max", s.bow.doc_len_max);
    br.integer("topic_seed", s.bow.topic_seed);
    br.integers("vocab_remaps", s.bow.vocab_remaps);
  }
  if (const json* sh = r.raw("shifts")) {
    if (!sh->is_array()) {
      r.error(r.where("shifts"), "expected an array");
    } else {
      for (std::size_t i = 0; i < sh->size(); ++i) {
        t.shifts.push_back(
            parse_shift((*sh)[i], r.where("shifts") + "[" + std::to_string(i) + "]", errors));
      }
    }
  }
  check(errors, path, [&] {
    TaskSpec shifted = s;
    for (const auto& shift : t.shifts) shifted = apply_shift(shifted, shift);
    validate(shifted);
  });
  return t;
}

json task_json(const TaskConfig& t) {
  json j = {{"task_id", t.spec.task_id}, {"head", t.head}};
  if (!t.dataset_path.empty()) {
    j["dataset_sha256"] = t.dataset_sha256;
    return j;
  }
  const TaskSpec& s = t.spec;
  j["generator"] = to_string(s.generator);
  j["num_classes"] = s.num_classes;
  j["n"] = s.n;
  j["seed"] = s.seed;
  j["class_weights"] = s.class_weights;
  j["label_permutation"] = s.label_permutation;
  if (s.generator == GeneratorKind::kGaussianBlobs) {
    j["blobs"] = {{"dim", s.blobs.dim},
                  {"means", s.blobs.means},
                  {"radius", s.blobs.radius},
                  {"sigma", s.blobs.sigma},
                  {"rotation_degrees", s.blobs.rotation * 180.0 / std::numbers::pi},
                  {"mean_shift", s.blobs.mean_shift}};
  } else {
    j["bow"] = {{"vocab", s.bow.vocab},
                {"concentration", s.bow.concentration},
                {"doc_len_min", s.bow.doc_len_min},
                {"doc_len_max", s.bow.doc_len_max},
                {"topic_seed", s.bow.topic_seed},
                {"vocab_remaps", s.bow.vocab_remaps}};
  }
  json shifts = json::array();
  for (const auto& sh : t.shifts) shifts.push_back(shift_json(sh));
  j["shifts"] = shifts;
  return j;
}

PlanConfig parse_plan(const json& j, const std::string& path, std::vector<std::string>& errors) {
  PlanConfig p;
  ObjectReader r(j, path, errors);
  std::string type = "geometric";
  r.string("type", type);
  if (type == "geometric") {
    p.type = PlanConfig::Type::kGeometric;
    r.integer("first", p.first);
    r.number("ratio", p.ratio);
    if (p.first == 0) r.error(r.where("first"), "must be positive");
    if (!(p.ratio > 1.0)) r.error(r.where("ratio"), "must be greater than 1");
  } else if (type == "fixed") {
    p.type = PlanConfig::Type::kFixed;
    r.integer("block_size", p.block_size);
    if (p.block_size == 0) r.error(r.where("block_size"), "must be positive");
  } else if (type == "per_example") {
    p.type = PlanConfig::Type::kPerExample;
  } else if (type == "single") {
    p.type = PlanConfig::Type::kSingle;
  } else if (type == "explicit") {
    p.type = PlanConfig::Type::kExplicit;
    r.integers("boundaries", p.boundaries);
    if (p.boundaries.empty()) r.error(r.where("boundaries"), "needs at least one boundary");
    for (std::size_t i = 0; i < p.boundaries.size(); ++i) {
      if (p.boundaries[i] == 0 || (i > 0 && p.boundaries[i] <= p.boundaries[i - 1])) {
        r.error(r.where("boundaries"), "must be positive and strictly increasing");
        break;
      }
    }
  } else {
    r.error(r.where("type"),
            "expected geometric, fixed, per_example, single or explicit, got '" + type + "'");
  }
  return p;
}

json plan_json(const PlanConfig& p) {
  switch (p.type) {
    case PlanConfig::Type::kGeometric:
      return {{"type", "geometric"}, {"first", p.first}, {"ratio", p.ratio}};
    case PlanConfig::Type::kFixed:
      return {{"type", "fixed"}, {"block_size", p.block_size}};
    case PlanConfig::Type::kPerExample:
      return {{"type", "per_example"}};
    case PlanConfig::Type::kSingle:
      return {{"type", "single"}};
    case PlanConfig::Type::kExplicit:
      return {{"type", "explicit"}, {"boundaries", p.boundaries}};
  }
  return {};
}

CurriculumSchedule parse_schedule(const json& j, const std::string& path, ScheduleKind natural,
                                  std::vector<std::string>& errors) {
  CurriculumSchedule s;
  s.kind = natural;
  ObjectReader r(j, path, errors);
  std::string kind = natural == ScheduleKind::kSequential ? "sequential" : "random_uniform";
  r.string("kind", kind);
  if (kind == "sequential") {
    s.kind = ScheduleKind::kSequential;
  } else if (kind == "random_uniform") {
    s.kind = ScheduleKind::kRandomUniform;
  } else {
    r.error(r.where("kind"), "expected sequential or random_uniform, got '" + kind + "'");
  }
  if (const json* phases = r.raw("phases")) {
    if (!phases->is_array()) {
      r.error(r.where("phases"), "expected an array");
    } else {
      for (std::size_t i = 0; i < phases->size(); ++i) {
        ObjectReader pr((*phases)[i], r.where("phases") + "[" + std::to_string(i) + "]", errors);
        Phase p;
        pr.string("task", p.task_id);
        pr.integer("iterations", p.iterations);
        if (p.iterations == 0) pr.error(pr.where("iterations"), "must be positive");
        s.phases.push_back(p);
      }
    }
  }
  if (const json* tasks = r.raw("tasks")) {
    if (!tasks->is_array()) {
      r.error(r.where("tasks"), "expected an array of task ids");
    } else {
      for (const auto& t : *tasks) {
        if (t.is_string()) {
          s.task_set.push_back(t.get<std::string>());
        } else {
          r.error(r.where("tasks"), "expected an array of task ids");
        }
      }
    }
  }
  r.integer("total_iterations", s.total_iterations);
  r.integer("sampling_seed", s.sampling_seed);
  r.integer("eval_interval", s.eval_interval);
  if (s.eval_interval == 0) r.error(r.where("eval_interval"), "must be positive");
  return s;
}

json schedule_json(const CurriculumSchedule& s) {
  json phases = json::array();
  for (const auto& p : s.phases) phases.push_back({{"task", p.task_id}, {"iterations", p.iterations}});
  return {{"kind", s.kind == ScheduleKind::kSequential ? "sequential" : "random_uniform"},
          {"phases", phases},
          {"tasks", s.task_set},
          {"total_iterations", s.total_iterations},
          {"sampling_seed", s.sampling_seed},
          {"eval_interval", s.eval_interval}};
}

const TaskConfig* find_task(const ExperimentConfig& c, const std::string& id) {
  for (const auto& t : c.tasks) {
    if (t.spec.task_id == id) return &t;
  }
  return nullptr;
}

void check_kind_requirements(ExperimentConfig& c, std::vector<std::string>& errors) {
  const auto need_tasks = [&](std::size_t lo, std::size_t hi) {
    if (c.tasks.size() < lo || c.tasks.size() > hi) {
      errors.push_back(hi == lo ? "tasks: " + to_string(c.kind) + " needs exactly " +
                                      std::to_string(lo) + " task"
                                : "tasks: " + to_string(c.kind) + " needs at least " +
                                      std::to_string(lo) + " tasks");
    }
  };
  const std::size_t many = std::numeric_limits<std::size_t>::max();
  if (c.learners.size() > 1 && c.kind != ExperimentKind::kCodelength) {
    errors.push_back("learners: only codelength experiments accept several learners");
  }
  switch (c.kind) {
    case ExperimentKind::kCodelength:
    case ExperimentKind::kCompress:
    case ExperimentKind::kCurve:
      need_tasks(1, 1);
      break;
    case ExperimentKind::kCrossMatrix:
      need_tasks(2, many);
      break;
    case ExperimentKind::kContinual:
    case ExperimentKind::kMultitask:
    case ExperimentKind::kPretrainFinetune:
      need_tasks(c.kind == ExperimentKind::kPretrainFinetune ? 2 : 1, many);
      break;
    case ExperimentKind::kDecompress:
      break;
  }
  if (c.mode == EvalMode::kPerExample) {
    for (const auto& l : c.learners) {
      if (l.candidates.size() > 1) {
        errors.push_back("protocol.mode: per_example coding takes a single hyperparameter set");
      }
    }
  }
  if (c.kind == ExperimentKind::kCompress) {
    for (const auto& l : c.learners) {
      if (l.hyper.init_seed == kEntropySeed) {
        errors.push_back("learner.hyper.init_seed: compression needs a reproducible seed, not -1");
      }
    }
  }
  std::set<std::string> ids;
  for (const auto& t : c.tasks) {
    if (!ids.insert(t.spec.task_id).second) {
      errors.push_back("tasks: duplicate task_id '" + t.spec.task_id + "'");
    }
  }
  const bool curriculum = c.kind == ExperimentKind::kContinual ||
                          c.kind == ExperimentKind::kMultitask ||
                          c.kind == ExperimentKind::kPretrainFinetune;
  if (curriculum) {
    const ScheduleKind want = c.kind == ExperimentKind::kContinual ? ScheduleKind::kSequential
                                                                   : ScheduleKind::kRandomUniform;
    if (c.schedule.kind != want) {
      errors.push_back(std::string("schedule.kind: ") + to_string(c.kind) + " needs " +
                       (want == ScheduleKind::kSequential ? "sequential" : "random_uniform"));
    }
    for (const auto& p : c.schedule.phases) {
      if (!ids.contains(p.task_id)) errors.push_back("schedule.phases: unknown task '" + p.task_id + "'");
    }
    for (const auto& id : c.schedule.task_set) {
      if (!ids.contains(id)) errors.push_back("schedule.tasks: unknown task '" + id + "'");
    }
    if (want == ScheduleKind::kSequential && c.schedule.phases.empty()) {
      errors.push_back("schedule.phases: a sequential schedule needs at least one phase");
    }
    if (want == ScheduleKind::kRandomUniform && c.kind == ExperimentKind::kMultitask &&
        c.schedule.total_iterations == 0) {
      errors.push_back("schedule.total_iterations: must be positive");
    }
  }
  if (c.kind == ExperimentKind::kPretrainFinetune) {
    if (c.target.empty() || !find_task(c, c.target)) {
      errors.push_back("target: must name one of the tasks");
    } else {
      auto& set = c.schedule.task_set;
      if (std::find(set.begin(), set.end(), c.target) != set.end()) {
        errors.push_back("schedule.tasks: the target cannot be a pretraining task");
      }
      if (set.empty()) {
        for (const auto& t : c.tasks) {
          if (t.spec.task_id != c.target) set.push_back(t.spec.task_id);
        }
      }
    }
  } else if (c.kind == ExperimentKind::kMultitask && c.schedule.task_set.empty()) {
    for (const auto& t : c.tasks) c.schedule.task_set.push_back(t.spec.task_id);
  }
}

json canonical_json(const ExperimentConfig& c) {
  json j;
  j["kind"] = to_string(c.kind);
  j["seeds"] = c.seeds;
  if (c.kind == ExperimentKind::kDecompress) {
    j["compress_config"] = json::parse(c.compress_config->canonical);
    return j;
  }
  json learners = json::array();
  for (const auto& l : c.learners) learners.push_back(learner_json(l));
  j["learners"] = learners;
  json tasks = json::array();
  for (const auto& t : c.tasks) tasks.push_back(task_json(t));
  j["tasks"] = tasks;
  j["eval_fraction"] = c.eval_fraction;
  j["plan"] = plan_json(c.plan);
  j["protocol"] = {{"mode", to_string(c.mode)},
                   {"regime", to_string(c.regime)},
                   {"identity_cost", c.identity_cost}};
  j["schedule"] = schedule_json(c.schedule);
  j["target"] = c.target;
  j["precision"] = c.precision;
  return j;
}

ExperimentConfig parse_json(const json& root, const std::string& base_dir, int depth) {
  std::vector<std::string> errors;
  ExperimentConfig c;
  {
    ObjectReader r(root, "", errors);
    std::string kind;
    r.string("kind", kind);
    if (auto k = parse_experiment_kind(kind)) {
      c.kind = *k;
    } else {
      r.error("kind", "unknown experiment kind '" + kind + "'");
    }
    r.integers("seeds", c.seeds);
    if (c.seeds.empty()) r.error("seeds", "needs at least one seed");
    {
      std::set<std::int64_t> unique(c.seeds.begin(), c.seeds.end());
      if (unique.size() != c.seeds.size()) r.error("seeds", "seeds must be distinct");
    }
    r.string("output_dir", c.output_dir);
    if (!c.output_dir.empty() && fs::path(c.output_dir).is_relative()) {
      c.output_dir = (fs::path(base_dir) / c.output_dir).lexically_normal().string();
    }

    if (c.kind == ExperimentKind::kDecompress) {
      r.string("compress_config", c.compress_config_path);
      if (c.compress_config_path.empty()) {
        r.error("compress_config", "decompress needs the path of a compress config");
      } else if (depth > 0) {
        r.error("compress_config", "nested decompress configs are not supported");
      } else {
        fs::path p(c.compress_config_path);
        if (p.is_relative()) p = fs::path(base_dir) / p;
        try {
          const std::string text = read_file(p.string());
          auto inner = std::make_shared<ExperimentConfig>(
              parse_json(json::parse(text), p.parent_path().string(), depth + 1));
          if (inner->kind != ExperimentKind::kCompress) {
            r.error("compress_config", "referenced config is not a compress experiment");
          }
          c.compress_config = std::move(inner);
        } catch (const ConfigError& ex) {
          for (const auto& e : ex.problems()) errors.push_back("compress_config: " + e);
        } catch (const std::exception& ex) {
          r.error("compress_config", ex.what());
        }
      }
      r.finish();
      if (!errors.empty()) throw ConfigError(errors);
      c.canonical = canonical_json(c).dump();
      c.digest = sha256(c.canonical);
      return c;
    }

    if (const json* l = r.raw("learner")) c.learners.push_back(parse_learner(*l, "learner", errors));
    if (const json* ls = r.raw("learners")) {
      if (!c.learners.empty()) r.error("learners", "give either 'learner' or 'learners'");
      if (!ls->is_array() || ls->empty()) {
        r.error("learners", "expected a non-empty array");
      } else {
        for (std::size_t i = 0; i < ls->size(); ++i) {
          c.learners.push_back(parse_learner((*ls)[i], "learners[" + std::to_string(i) + "]", errors));
        }
      }
    }
    if (c.learners.empty()) r.error("learner", "required");
    if (const json* t = r.raw("tasks")) {
      if (!t->is_array()) {
        r.error("tasks", "expected an array");
      } else {
        for (std::size_t i = 0; i < t->size(); ++i) {
          c.tasks.push_back(parse_task((*t)[i], "tasks[" + std::to_string(i) + "]", base_dir, errors));
        }
      }
    } else {
      r.error("tasks", "required");
    }
    r.number("eval_fraction", c.eval_fraction);
    if (!(c.eval_fraction > 0.0 && c.eval_fraction < 1.0)) {
      r.error("eval_fraction", "must lie strictly between 0 and 1");
    }
    if (const json* p = r.raw("plan")) c.plan = parse_plan(*p, "plan", errors);
    if (const json* p = r.raw("protocol")) {
      ObjectReader pr(*p, "protocol", errors);
      std::string mode = to_string(c.mode), regime;
      pr.string("mode", mode);
      pr.string("regime", regime);
      // Retraining from scratch on every prefix is the blockwise default;
      // per-example coding would retrain N times, so it warm-starts.
      if (regime.empty()) regime = to_string(mode == "per_example" ? Regime::kWarmStart : c.regime);
      pr.boolean("identity_cost", c.identity_cost);
      if (mode == "per_example") {
        c.mode = EvalMode::kPerExample;
      } else if (mode == "blockwise") {
        c.mode = EvalMode::kBlockwise;
      } else {
        pr.error("protocol.mode", "expected blockwise or per_example, got '" + mode + "'");
      }
      check(errors, "protocol.regime", [&] { c.regime = parse_regime(regime); });
    }
    const ScheduleKind natural =
        c.kind == ExperimentKind::kContinual ? ScheduleKind::kSequential : ScheduleKind::kRandomUniform;
    c.schedule.kind = natural;
    if (const json* s = r.raw("schedule")) c.schedule = parse_schedule(*s, "schedule", natural, errors);
    r.string("target", c.target);
    r.integer("precision", c.precision);
    if (c.precision < kMinPrecision || c.precision > kMaxPrecision) {
      r.error("precision", "must lie in [" + std::to_string(kMinPrecision) + ", " +
                               std::to_string(kMaxPrecision) + "]");
    }
  }
  check_kind_requirements(c, errors);
  if (!errors.empty()) throw ConfigError(errors);
  c.canonical = canonical_json(c).dump();
  c.digest = sha256(c.canonical);
  return c;
}

}  // namespace

std::string to_string(ExperimentKind k) {
  for (const auto& [kind, name] : kKindNames) {
    if (kind == k) return name;
  }
  return "unknown";
}

std::optional<ExperimentKind> parse_experiment_kind(const std::string& name) {
  std::string n = name;
  std::replace(n.begin(), n.end(), '-', '_');
  for (const auto& [kind, kname] : kKindNames) {
    if (n == kname) return kind;
  }
  return std::nullopt;
}

BlockPlan PlanConfig::build(std::size_t n) const {
  switch (type) {
    case Type::kGeometric:
      return BlockPlan::geometric(n, first, ratio);
    case Type::kFixed:
      return BlockPlan::fixed_size(n, block_size);
    case Type::kPerExample:
      return BlockPlan::per_example(n);
    case Type::kSingle:
      return BlockPlan::single(n);
    case Type::kExplicit: {
      BlockPlan p{boundaries};
      validate(p, n);
      return p;
    }
  }
  return {};
}

ExperimentConfig parse_config(const std::string& path) {
  const std::string text = read_file(path);
  return parse_config_text(text, fs::path(path).parent_path().string());
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& ex) {
    throw ConfigError({std::string("not valid JSON: ") + ex.what()});
  }
  return parse_json(root, base_dir.empty() ? "." : base_dir, 0);
}

Dataset build_task(const TaskConfig& task, std::int64_t seed) {
  if (!task.dataset_path.empty()) {
    Dataset d = load_jsonl(task.dataset_path);
    d.task_id = task.spec.task_id;
    return d;
  }
  TaskSpec spec = task.spec;
  for (const auto& shift : task.shifts) spec = apply_shift(spec, shift);
  spec.seed = task.spec.seed + static_cast<std::uint64_t>(seed);
  return generate(spec);
}

EvaluationProtocol build_protocol(const ExperimentConfig& config, std::size_t learner,
                                  std::int64_t seed) {
  const LearnerConfig& lc = config.learners.at(learner);
  const auto offset = [seed](HyperParams h) {
    if (h.init_seed != kEntropySeed) h.init_seed += seed;
    return h;
  };
  EvaluationProtocol p;
  p.mode = config.mode;
  p.regime = config.regime;
  p.default_hyper = offset(lc.hyper);
  p.candidate_hypers.clear();
  if (lc.candidates.empty()) {
    p.candidate_hypers.push_back(p.default_hyper);
  } else {
    for (const auto& h : lc.candidates) p.candidate_hypers.push_back(offset(h));
  }
  return p;
}

}  // namespace preqeval
