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

#include <stdexcept>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "preqeval/config.hpp"
#include "preqeval/errors.hpp"
#include "preqeval/runner.hpp"

using namespace preqeval;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("preqeval_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::vector<std::string> problems_of(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& ex) {
    return ex.problems();
  }
  return {};
}

bool mentions(const std::vector<std::string>& problems, const std::string& needle) {
  return std::any_of(problems.begin(), problems.end(),
                     [&](const std::string& p) { return p.find(needle) != std::string::npos; });
}

const char* kMultitask = R"({
  "kind": "multitask", "seeds": [0, 1, 2],
  "learner": {"kind": "logistic_regression", "hyper": {"learning_rate": 0.5, "batch_size": 16}},
  "tasks": [{"task_id": "a", "n": 200, "seed": 1},
            {"task_id": "b", "n": 200, "seed": 2, "shifts": [{"type": "rotate", "degrees": 30}]}],
  "schedule": {"total_iterations": 60, "eval_interval": 20, "sampling_seed": 3}
})";

}  // namespace

TEST_CASE("a minimal config gets its defaults filled") {
  const auto c = parse_config_text(R"({"kind": "codelength", "learner": {"kind": "prior"},
                                       "tasks": [{"task_id": "t"}]})");
  CHECK(c.kind == ExperimentKind::kCodelength);
  CHECK(c.seeds == std::vector<std::int64_t>{0});
  CHECK(c.eval_fraction == 0.2);
  CHECK(c.regime == Regime::kFromScratch);
  CHECK(c.identity_cost);
  CHECK(c.plan.type == PlanConfig::Type::kGeometric);
  const auto canonical = nlohmann::json::parse(c.canonical);
  CHECK(canonical.contains("plan"));
  CHECK(canonical["learners"][0]["hyper"].contains("learning_rate"));
  CHECK(!canonical.contains("output_dir"));
}

TEST_CASE("config errors are collected and name the offending key") {
  const auto problems = problems_of(R"({"kind": "codelength", "lerning_rate": 1,
      "learner": {"kind": "logistic_regression", "hyper": {"learning_rate": -1}},
      "tasks": [{"n": 0}]})");
  CHECK(problems.size() >= 3);
  CHECK(mentions(problems, "lerning_rate"));
  CHECK(mentions(problems, "learning_rate must be positive"));
  CHECK(mentions(problems_of(R"({"kind": "nope"})"), "nope"));
  CHECK(mentions(problems_of("{not json"), "JSON"));
  CHECK(!problems_of(R"({"kind": "codelength", "learner": {"kind": "prior"},
      "tasks": [{"task_id": "a"}, {"task_id": "a"}]})").empty());
}

TEST_CASE("the digest ignores output_dir and tracks everything else") {
  const auto a = parse_config_text(R"({"kind": "curve", "learner": {"kind": "prior"}, "tasks": [{}]})");
  const auto b = parse_config_text(
      R"({"kind": "curve", "output_dir": "elsewhere", "learner": {"kind": "prior"}, "tasks": [{}]})");
  const auto c = parse_config_text(
      R"({"kind": "curve", "learner": {"kind": "prior"}, "tasks": [{"seed": 9}]})");
  CHECK(a.digest == b.digest);
  CHECK(a.digest != c.digest);
  CHECK(b.output_dir == "elsewhere");
}

TEST_CASE("output root precedence") {
  auto c = parse_config_text(R"({"kind": "curve", "learner": {"kind": "prior"}, "tasks": [{}]})");
  CHECK(resolve_output_root(c, "/x") == "/x");
  c.output_dir = "/from_config";
  CHECK(resolve_output_root(c, "") == "/from_config");
}

TEST_CASE("runs are cached and multi-seed runs aggregate") {
  const fs::path root = scratch("multitask");
  const auto c = parse_config_text(kMultitask);
  RunOptions opts;
  opts.out = root.string();
  opts.workers = 2;
  const RunRecord first = run(c, opts);
  REQUIRE(first.ok());
  CHECK(!first.cached);
  CHECK(first.seeds.size() == 3);
  const fs::path dir = first.directory;
  for (int s = 0; s < 3; ++s) {
    CHECK(fs::exists(dir / std::to_string(s) / "report.json"));
    CHECK(fs::exists(dir / std::to_string(s) / "curve.csv"));
  }
  CHECK(fs::exists(dir / "record.json"));
  CHECK(fs::exists(dir / "config.json"));
  CHECK(fs::exists(dir / "aggregate_curve.csv"));

  const RunRecord second = run(c, opts);
  CHECK(second.cached);
  opts.force = true;
  CHECK(!run(c, opts).cached);
  std::size_t lines = 0;
  std::istringstream records(slurp(dir / "records.jsonl"));
  for (std::string line; std::getline(records, line);) lines += !line.empty();
  CHECK(lines == 2);

  // Workers do not change bytes.
  const fs::path root1 = scratch("multitask_serial");
  RunOptions serial;
  serial.out = root1.string();
  const RunRecord again = run(c, serial);
  for (int s = 0; s < 3; ++s) {
    CHECK(slurp(dir / std::to_string(s) / "report.json") ==
          slurp(fs::path(again.directory) / std::to_string(s) / "report.json"));
  }
}

TEST_CASE("aggregate CSV is the arithmetic mean over seeds") {
  const std::string h = "iteration,metric,value,task,seed\n";
  const std::string a = h + "0,accuracy,0.5,t,0\n10,accuracy,0.75,t,0\n";
  const std::string b = h + "0,accuracy,0.25,t,1\n10,accuracy,1,t,1\n";
  const std::string agg = aggregate_csv({a, b});
  std::istringstream in(agg);
  std::string line;
  std::getline(in, line);
  CHECK(line == "iteration,metric,task,mean,min,max,count");
  std::getline(in, line);
  CHECK(line.rfind("0,accuracy,t,0.375,0.25,0.5,2", 0) == 0);
  std::getline(in, line);
  CHECK(line.rfind("10,accuracy,t,0.875,0.75,1,2", 0) == 0);
  CHECK(aggregate_csv({h}) == "iteration,metric,task,mean,min,max,count\n");
}

TEST_CASE("compress then decompress recovers the labels") {
  const fs::path root = scratch("codec");
  const std::string compress = R"({"kind": "compress", "seeds": [0, 1],
      "learner": {"kind": "logistic_regression", "hyper": {"learning_rate": 0.5, "init_seed": 4}},
      "tasks": [{"task_id": "t", "n": 150, "num_classes": 3, "seed": 2}],
      "plan": {"type": "fixed", "block_size": 50}})";
  write_file(root / "compress.json", compress);
  write_file(root / "decompress.json",
             R"({"kind": "decompress", "seeds": [0, 1], "compress_config": "compress.json"})");
  RunOptions opts;
  opts.out = (root / "out").string();
  const auto cc = parse_config((root / "compress.json").string());
  REQUIRE(run(cc, opts).ok());
  const auto dc = parse_config((root / "decompress.json").string());
  const RunRecord rec = run(dc, opts);
  REQUIRE(rec.ok());
  const auto report = nlohmann::json::parse(slurp(fs::path(rec.directory) / "1" / "report.json"));
  CHECK(report["labels_match"] == true);
  CHECK(report["labels"].size() == 150);
}

TEST_CASE("decompress without its compress run fails the seed") {
  const fs::path root = scratch("codec_missing");
  write_file(root / "compress.json", R"({"kind": "compress", "learner": {"kind": "prior"},
      "tasks": [{"n": 20}]})");
  write_file(root / "decompress.json",
             R"({"kind": "decompress", "compress_config": "compress.json"})");
  RunOptions opts;
  opts.out = (root / "out").string();
  const RunRecord rec = run(parse_config((root / "decompress.json").string()), opts);
  CHECK(!rec.ok());
}

TEST_CASE("verify re-executes the first seed byte for byte") {
  const fs::path root = scratch("verify");
  const auto c = parse_config_text(R"({"kind": "codelength", "seeds": [3, 4],
      "learners": [{"kind": "prior"}, {"kind": "mlp", "hyper": {"hidden_width": 4, "iterations": 50}}],
      "tasks": [{"n": 120}], "plan": {"type": "fixed", "block_size": 40}})");
  RunOptions opts;
  opts.out = root.string();
  CHECK_THROWS_WITH_AS(verify(c, opts), doctest::Contains("no run found"), std::runtime_error);
  const RunRecord rec = run(c, opts);
  REQUIRE(rec.ok());
  const VerifyReport ok = verify(c, opts);
  CHECK(ok.ok);
  CHECK(ok.seed == 3);
  CHECK(ok.compared.size() >= 2);

  const fs::path report = fs::path(rec.directory) / "3" / "report.json";
  std::string text = slurp(report);
  text[text.size() / 2] = text[text.size() / 2] == '1' ? '2' : '1';
  write_file(report, text);
  const VerifyReport bad = verify(c, opts);
  CHECK(!bad.ok);
  REQUIRE(bad.mismatches.size() == 1);
  CHECK(bad.mismatches[0].find("report.json") != std::string::npos);
}

TEST_CASE("per-example coding warm-starts unless told otherwise") {
  const auto per = parse_config_text(R"({"kind": "codelength", "learner": {"kind": "prior"},
      "tasks": [{}], "protocol": {"mode": "per_example"}})");
  CHECK(per.regime == Regime::kWarmStart);
  const auto block = parse_config_text(R"({"kind": "codelength", "learner": {"kind": "prior"},
      "tasks": [{}], "protocol": {"mode": "blockwise"}})");
  CHECK(block.regime == Regime::kFromScratch);
  const auto forced = parse_config_text(R"({"kind": "codelength", "learner": {"kind": "prior"},
      "tasks": [{}], "protocol": {"mode": "per_example", "regime": "from_scratch"}})");
  CHECK(forced.regime == Regime::kFromScratch);
}

TEST_CASE("a curriculum learning-rate grid records every candidate") {
  const auto c = parse_config_text(R"({"kind": "multitask",
      "learner": {"kind": "logistic_regression",
                  "candidates": [{"learning_rate": 0.05}, {"learning_rate": 0.5}], "default_candidate": 1},
      "tasks": [{"task_id": "a", "n": 100}, {"task_id": "b", "n": 100, "seed": 3}],
      "schedule": {"total_iterations": 40, "eval_interval": 20}})");
  const Artifacts a = execute_seed(c, 0, ".");
  const auto report = nlohmann::json::parse(a.at("report.json"));
  REQUIRE(report["candidates"].size() == 2);
  CHECK(report["default_candidate"] == 1);
  CHECK(report["candidates"][0]["hyper"]["learning_rate"] == 0.05);
  CHECK(a.at("curve.csv").find("accuracy/c1") != std::string::npos);
}
