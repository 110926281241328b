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

#include "preqeval/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "preqeval/report.hpp"

namespace preqeval {

namespace {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Write-temp-then-rename, so readers never observe a partial file.
void write_atomic(const fs::path& path, std::string_view bytes) {
  fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

std::string seed_dir_name(std::int64_t seed) { return std::to_string(seed); }

BlockPlan plan_for(const ExperimentConfig& c, std::size_t n) {
  return c.mode == EvalMode::kPerExample ? BlockPlan::per_example(n) : c.plan.build(n);
}

std::string head_for(const TaskConfig& t) { return t.head.empty() ? t.spec.task_id : t.head; }

void add_block_points(MetricSeries& series, const CodelengthReport& r, const std::string& metric,
                      std::int64_t seed) {
  double cumulative = 0.0;
  for (const auto& b : r.blocks) {
    cumulative += b.bits;
    series.points.push_back({b.end, metric, cumulative, r.dataset_id, seed});
  }
}

CurriculumTask curriculum_task(const TaskConfig& t, const ExperimentConfig& c, std::int64_t seed) {
  Dataset d = build_task(t, seed);
  auto [train, eval] = split(d, c.eval_fraction, d.ordering_seed);
  return {t.spec.task_id, head_for(t), std::move(train), std::move(eval)};
}

Artifacts run_codelength(const ExperimentConfig& c, std::int64_t seed) {
  const Dataset data = build_task(c.tasks[0], seed);
  const BlockPlan plan = plan_for(c, data.size());
  std::vector<CodelengthReport> reports;
  MetricSeries series;
  ordered_json j;
  j["dataset_id"] = data.task_id;
  j["num_examples"] = data.size();
  j["reports"] = ordered_json::array();
  for (std::size_t i = 0; i < c.learners.size(); ++i) {
    const EvaluationProtocol protocol = build_protocol(c, i, seed);
    CodelengthReport r =
        c.mode == EvalMode::kPerExample
            ? exact_online_codelength(c.learners[i].kind, protocol.default_hyper, data, c.regime)
            : blockwise_codelength(c.learners[i].kind, protocol, data, plan);
    add_block_points(series, r, "cumulative_bits/" + std::to_string(i) + ":" + r.learner_kind, seed);
    j["reports"].push_back(to_json(r));
    reports.push_back(std::move(r));
  }
  if (reports.size() > 1) {
    const CodelengthReport sw = switching_codelength(reports, c.identity_cost);
    add_block_points(series, sw, "cumulative_bits/switching", seed);
    j["switching"] = to_json(sw);
  }
  return {{"report.json", dump(j)}, {"curve.csv", to_csv(series)}};
}

Artifacts run_compress(const ExperimentConfig& c, std::int64_t seed) {
  const Dataset data = build_task(c.tasks[0], seed);
  const BlockPlan plan = plan_for(c, data.size());
  const EvaluationProtocol protocol = build_protocol(c, 0, seed);
  const LearnerKind kind = c.learners[0].kind;
  const EncodeResult enc = encode_labels(kind, protocol, data, plan, c.precision);
  const CodelengthReport report = blockwise_codelength(kind, protocol, data, plan);
  const CodeComparison cmp = measured_vs_theoretical(enc, report);
  const auto bytes = to_bytes(enc.stream);
  ordered_json j;
  j["dataset_id"] = data.task_id;
  j["header"] = to_json(enc.stream.header);
  j["stream_bytes"] = bytes.size();
  j["stream_sha256"] = to_hex(sha256(bytes));
  j["comparison"] = to_json(cmp);
  j["codelength"] = to_json(report);
  MetricSeries series;
  add_block_points(series, report, "cumulative_bits", seed);
  return {{"report.json", dump(j)},
          {"curve.csv", to_csv(series)},
          {"stream.pqac", std::string(bytes.begin(), bytes.end())}};
}

Artifacts run_decompress(const ExperimentConfig& c, std::int64_t seed, const std::string& root) {
  const ExperimentConfig& cc = *c.compress_config;
  const fs::path stream_path =
      fs::path(run_directory(cc, root)) / seed_dir_name(seed) / "stream.pqac";
  if (!fs::exists(stream_path)) {
    throw std::runtime_error("no compressed stream for seed " + std::to_string(seed) + " at '" +
                             stream_path.string() + "'; run the compress config first");
  }
  const std::string raw = read_file(stream_path);
  const Bitstream stream = parse_bitstream(
      std::span(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
  const Dataset data = build_task(cc.tasks[0], seed);
  const BlockPlan plan = plan_for(cc, data.size());
  const EvaluationProtocol protocol = build_protocol(cc, 0, seed);
  const std::vector<int> labels =
      decode_labels(cc.learners[0].kind, protocol, data.features_only(), plan, stream);
  std::vector<int> original;
  for (const auto& e : data.examples) original.push_back(e.label);
  if (labels != original) {
    throw std::runtime_error("decoded labels differ from the originals");
  }
  ordered_json j;
  j["dataset_id"] = data.task_id;
  j["stream_sha256"] = to_hex(sha256(raw));
  j["num_labels"] = labels.size();
  j["labels_match"] = true;
  j["label_checksum"] = label_checksum(labels);
  j["labels"] = labels;
  return {{"report.json", dump(j)}};
}

Artifacts run_curve(const ExperimentConfig& c, std::int64_t seed) {
  const Dataset data = build_task(c.tasks[0], seed);
  auto [train, eval] = split(data, c.eval_fraction, data.ordering_seed);
  const BlockPlan plan = c.plan.build(train.size());
  const EvaluationProtocol protocol = build_protocol(c, 0, seed);
  const MetricSeries series = learning_curve(c.learners[0].kind, protocol.default_hyper, train,
                                             eval, plan, c.regime, seed);
  ordered_json j;
  j["dataset_id"] = data.task_id;
  j["train_size"] = train.size();
  j["eval_size"] = eval.size();
  j["plan"] = plan.boundaries;
  j["warnings"] = series.warnings;
  return {{"report.json", dump(j)}, {"curve.csv", to_csv(series)}};
}

Artifacts run_schedule(const ExperimentConfig& c, std::int64_t seed) {
  std::vector<CurriculumTask> tasks;
  for (const auto& t : c.tasks) tasks.push_back(curriculum_task(t, c, seed));
  CurriculumSchedule schedule = c.schedule;
  schedule.sampling_seed += static_cast<std::uint64_t>(seed);
  const EvaluationProtocol protocol = build_protocol(c, 0, seed);
  if (protocol.candidate_hypers.size() == 1) {
    const CurriculumRun run =
        run_curriculum(c.learners[0].kind, protocol.default_hyper, schedule, tasks, {}, seed);
    return {{"report.json", dump(to_json(run.report))},
            {"curve.csv", to_csv(run.report.series, "iteration")}};
  }
  // A hyperparameter grid: every candidate is run and recorded; its series
  // carry the metric suffix "/c<index>".
  ordered_json j;
  j["default_candidate"] = protocol.default_index();
  j["candidates"] = ordered_json::array();
  MetricSeries all;
  for (std::size_t i = 0; i < protocol.candidate_hypers.size(); ++i) {
    const HyperParams& h = protocol.candidate_hypers[i];
    const CurriculumRun run = run_curriculum(c.learners[0].kind, h, schedule, tasks, {}, seed);
    j["candidates"].push_back({{"hyper", to_json(h)}, {"report", to_json(run.report)}});
    for (MetricPoint p : run.report.series.points) {
      p.metric += "/c" + std::to_string(i);
      all.points.push_back(std::move(p));
    }
    all.warnings.insert(all.warnings.end(), run.report.series.warnings.begin(),
                        run.report.series.warnings.end());
  }
  return {{"report.json", dump(j)}, {"curve.csv", to_csv(all, "iteration")}};
}

Artifacts run_cross_matrix(const ExperimentConfig& c, std::int64_t seed) {
  const EvaluationProtocol protocol = build_protocol(c, 0, seed);
  std::vector<TrainedModel> models;
  std::vector<Dataset> evals;
  ordered_json j;
  j["tasks"] = ordered_json::array();
  for (const auto& t : c.tasks) {
    Dataset d = build_task(t, seed);
    auto [train, eval] = split(d, c.eval_fraction, d.ordering_seed);
    LearnerState s = init_learner(c.learners[0].kind, train.label_space, train.feature_spec,
                                  protocol.default_hyper);
    models.push_back({fit(s, train, kDefaultHead, c.regime), kDefaultHead});
    evals.push_back(std::move(eval));
    j["tasks"].push_back(t.spec.task_id);
  }
  const auto m = cross_variant_matrix(models, evals);
  j["matrix"] = m;
  MetricSeries series;
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t k = 0; k < m[i].size(); ++k) {
      series.points.push_back({i, "accuracy", m[i][k], c.tasks[k].spec.task_id, seed});
    }
  }
  return {{"report.json", dump(j)}, {"matrix.csv", to_csv(series, "trained_on")}};
}

bool is_block_metric(const std::string& m) { return m.starts_with("block_bits"); }
bool is_accuracy_metric(const std::string& m) { return !is_block_metric(m); }

Artifacts run_pretrain_finetune(const ExperimentConfig& c, std::int64_t seed) {
  std::vector<CurriculumTask> pretrain;
  std::optional<CurriculumTask> target;
  for (const auto& t : c.tasks) {
    if (t.spec.task_id == c.target) {
      target = curriculum_task(t, c, seed);
    } else if (std::find(c.schedule.task_set.begin(), c.schedule.task_set.end(), t.spec.task_id) !=
               c.schedule.task_set.end()) {
      pretrain.push_back(curriculum_task(t, c, seed));
    }
  }
  const EvaluationProtocol protocol = build_protocol(c, 0, seed);
  const BlockPlan plan = c.plan.build(target->train.size());
  const TransferReport report = pretrain_then_finetune(
      c.learners[0].kind, protocol.default_hyper, pretrain, c.schedule.total_iterations,
      c.schedule.sampling_seed + static_cast<std::uint64_t>(seed), *target, protocol, plan, seed);
  return {{"report.json", dump(to_json(report))},
          {"curve.csv", to_csv(filter_series(report.series, is_accuracy_metric), "iteration")},
          {"blocks.csv", to_csv(filter_series(report.series, is_block_metric))}};
}

ordered_json record_json(const RunRecord& r) {
  ordered_json j;
  j["config_digest"] = r.config_digest;
  j["kind"] = r.kind;
  j["started"] = r.started;
  j["finished"] = r.finished;
  j["status"] = r.ok() ? "complete" : "failed";
  j["seeds"] = ordered_json::array();
  for (const auto& s : r.seeds) {
    ordered_json sj;
    sj["seed"] = s.seed;
    sj["status"] = s.ok ? "ok" : "failed";
    if (!s.ok) sj["error"] = s.error;
    sj["artifacts"] = ordered_json::object();
    for (const auto& [name, digest] : s.artifacts) {
      sj["artifacts"][seed_dir_name(s.seed) + "/" + name] = digest;
    }
    j["seeds"].push_back(std::move(sj));
  }
  return j;
}

// The stored record, if it describes a complete run of exactly these seeds.
std::optional<RunRecord> completed_record(const ExperimentConfig& config, const fs::path& dir) {
  const fs::path path = dir / "record.json";
  if (!fs::exists(path)) return std::nullopt;
  const auto j = nlohmann::json::parse(read_file(path), nullptr, false);
  if (j.is_discarded() || j.value("status", "") != "complete" ||
      j.value("config_digest", "") != config.digest_hex()) {
    return std::nullopt;
  }
  RunRecord r;
  r.config_digest = j["config_digest"];
  r.kind = j.value("kind", "");
  r.started = j.value("started", "");
  r.finished = j.value("finished", "");
  r.directory = dir.string();
  std::vector<std::int64_t> seeds;
  for (const auto& sj : j["seeds"]) {
    SeedStatus s;
    s.seed = sj["seed"];
    s.ok = sj["status"] == "ok";
    const std::string prefix = seed_dir_name(s.seed) + "/";
    for (const auto& [name, digest] : sj["artifacts"].items()) {
      s.artifacts[name.substr(prefix.size())] = digest;
    }
    seeds.push_back(s.seed);
    r.seeds.push_back(std::move(s));
  }
  if (seeds != config.seeds) return std::nullopt;
  return r;
}

std::string first_difference(const std::string& a, const std::string& b) {
  const std::size_t n = std::min(a.size(), b.size());
  std::size_t i = 0;
  while (i < n && a[i] == b[i]) ++i;
  std::size_t line = 1 + static_cast<std::size_t>(std::count(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(i), '\n'));
  return "first difference at byte " + std::to_string(i) + " (line " + std::to_string(line) +
         "); stored " + std::to_string(a.size()) + " bytes, fresh " + std::to_string(b.size()) +
         " bytes";
}

}  // namespace

bool RunRecord::ok() const {
  return !seeds.empty() &&
         std::all_of(seeds.begin(), seeds.end(), [](const SeedStatus& s) { return s.ok; });
}

std::string resolve_output_root(const ExperimentConfig& config, const std::string& out_override) {
  if (!out_override.empty()) return out_override;
  if (!config.output_dir.empty()) return config.output_dir;
  if (const char* env = std::getenv("PREQEVAL_OUT"); env && *env) return env;
  return "preqeval_out";
}

std::string run_directory(const ExperimentConfig& config, const std::string& root) {
  return (fs::path(root) / config.digest_hex().substr(0, 16)).string();
}

Artifacts execute_seed(const ExperimentConfig& config, std::int64_t seed, const std::string& root) {
  switch (config.kind) {
    case ExperimentKind::kCodelength:
      return run_codelength(config, seed);
    case ExperimentKind::kCompress:
      return run_compress(config, seed);
    case ExperimentKind::kDecompress:
      return run_decompress(config, seed, root);
    case ExperimentKind::kCurve:
      return run_curve(config, seed);
    case ExperimentKind::kContinual:
    case ExperimentKind::kMultitask:
      return run_schedule(config, seed);
    case ExperimentKind::kCrossMatrix:
      return run_cross_matrix(config, seed);
    case ExperimentKind::kPretrainFinetune:
      return run_pretrain_finetune(config, seed);
  }
  throw std::logic_error("unhandled experiment kind");
}

RunRecord run(const ExperimentConfig& config, const RunOptions& options) {
  const std::string root = resolve_output_root(config, options.out);
  const fs::path dir = run_directory(config, root);
  if (!options.force) {
    if (auto done = completed_record(config, dir)) {
      done->cached = true;
      return *done;
    }
  }

  RunRecord record;
  record.config_digest = config.digest_hex();
  record.kind = to_string(config.kind);
  record.directory = dir.string();
  record.started = utc_now();
  record.seeds.resize(config.seeds.size());
  fs::create_directories(dir);
  write_atomic(dir / "config.json", config.canonical + "\n");

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < config.seeds.size(); i = next++) {
      SeedStatus& status = record.seeds[i];
      status.seed = config.seeds[i];
      try {
        const Artifacts artifacts = execute_seed(config, status.seed, root);
        const fs::path seed_dir = dir / seed_dir_name(status.seed);
        for (const auto& [name, bytes] : artifacts) {
          write_atomic(seed_dir / name, bytes);
          status.artifacts[name] = to_hex(sha256(bytes));
        }
        status.ok = true;
      } catch (const std::exception& ex) {
        status.ok = false;
        status.error = ex.what();
      }
    }
  };
  const unsigned n_workers =
      std::clamp<unsigned>(options.workers, 1, static_cast<unsigned>(config.seeds.size()));
  std::vector<std::thread> threads;
  for (unsigned w = 1; w < n_workers; ++w) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  if (record.ok()) emit_curves(dir.string());
  record.finished = utc_now();
  // Records are appended from this thread only, after every seed finished.
  const std::string line = record_json(record).dump();
  {
    std::ofstream log(dir / "records.jsonl", std::ios::app | std::ios::binary);
    log << line << "\n";
  }
  write_atomic(dir / "record.json", dump(record_json(record)));
  return record;
}

std::string aggregate_csv(const std::vector<std::string>& csvs) {
  std::string x_name = "examples_seen";
  // (metric, task, x) -> values
  std::map<std::tuple<std::string, std::string, std::uint64_t>, std::vector<double>> groups;
  for (const auto& text : csvs) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) continue;
    x_name = line.substr(0, line.find(','));
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      // x,metric,value,<task may contain commas>,seed
      const auto c1 = line.find(',');
      const auto c2 = line.find(',', c1 + 1);
      const auto c3 = line.find(',', c2 + 1);
      const auto c4 = line.rfind(',');
      if (c1 == std::string::npos || c2 == std::string::npos || c3 == std::string::npos ||
          c4 <= c3) {
        throw std::runtime_error("malformed CSV row: " + line);
      }
      const std::uint64_t x = std::stoull(line.substr(0, c1));
      const std::string metric = line.substr(c1 + 1, c2 - c1 - 1);
      const double value = std::stod(line.substr(c2 + 1, c3 - c2 - 1));
      const std::string task = line.substr(c3 + 1, c4 - c3 - 1);
      groups[{metric, task, x}].push_back(value);
    }
  }
  std::string out = x_name + ",metric,task,mean,min,max,count\n";
  char buf[128];
  for (const auto& [key, values] : groups) {
    double sum = 0.0;
    for (double v : values) sum += v;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g,%zu\n", sum / static_cast<double>(values.size()),
                  *lo, *hi, values.size());
    out += std::to_string(std::get<2>(key)) + "," + std::get<0>(key) + "," + std::get<1>(key) + buf;
  }
  return out;
}

std::vector<std::string> emit_curves(const std::string& run_dir) {
  const fs::path dir(run_dir);
  if (!fs::exists(dir / "config.json")) throw std::runtime_error("no run found in '" + run_dir + "'");
  std::map<std::string, std::vector<std::string>> by_name;
  std::vector<fs::path> seed_dirs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory()) seed_dirs.push_back(entry.path());
  }
  std::sort(seed_dirs.begin(), seed_dirs.end());
  for (const auto& sd : seed_dirs) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(sd)) {
      if (entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) by_name[f.filename().string()].push_back(read_file(f));
  }
  std::vector<std::string> written;
  for (const auto& [name, csvs] : by_name) {
    const std::string out = "aggregate_" + name;
    write_atomic(dir / out, aggregate_csv(csvs));
    written.push_back(out);
  }
  return written;
}

VerifyReport verify(const ExperimentConfig& config, const RunOptions& options) {
  const std::string root = resolve_output_root(config, options.out);
  const fs::path dir = run_directory(config, root);
  const auto record = completed_record(config, dir);
  if (!record) {
    throw std::runtime_error("no run found for config " + config.digest_hex().substr(0, 16) +
                             " under '" + root + "'");
  }
  VerifyReport report;
  report.seed = config.seeds.front();
  const fs::path seed_dir = dir / seed_dir_name(report.seed);
  const Artifacts fresh = execute_seed(config, report.seed, root);
  std::set<std::string> names;
  for (const auto& [name, bytes] : fresh) names.insert(name);
  for (const auto& entry : fs::directory_iterator(seed_dir)) {
    names.insert(entry.path().filename().string());
  }
  for (const auto& name : names) {
    report.compared.push_back(name);
    const fs::path stored_path = seed_dir / name;
    const auto it = fresh.find(name);
    if (it == fresh.end()) {
      report.mismatches.push_back(name + ": stored artifact is not produced by a re-run");
    } else if (!fs::exists(stored_path)) {
      report.mismatches.push_back(name + ": missing from the stored run");
    } else {
      const std::string stored = read_file(stored_path);
      if (stored != it->second) {
        report.mismatches.push_back(name + ": " + first_difference(stored, it->second));
      }
    }
  }
  report.ok = report.mismatches.empty();
  return report;
}

}  // namespace preqeval
