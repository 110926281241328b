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

// Runs a validated config once per seed and persists the results under
//
//   <root>/<first 16 hex digits of the config digest>/
//       config.json      canonical config
//       record.json      latest run record
//       records.jsonl    every run record, appended
//       aggregate*.csv   per-x mean/min/max over seeds
//       <seed>/          report.json, *.csv, stream.pqac
//
// Every seed's artifacts are a pure function of (config, seed), which is
// what verify() checks.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "preqeval/config.hpp"

namespace preqeval {

struct RunOptions {
  bool force = false;
  unsigned workers = 1;
  std::string out;  // overrides everything else when non-empty
};

// --out, then the config's output_dir, then $PREQEVAL_OUT, then
// ./preqeval_out.
std::string resolve_output_root(const ExperimentConfig& config, const std::string& out_override);

// Directory holding every run of this config.
std::string run_directory(const ExperimentConfig& config, const std::string& root);

struct SeedStatus {
  std::int64_t seed = 0;
  bool ok = false;
  std::string error;
  // artifact file name -> SHA-256 of its bytes
  std::map<std::string, std::string> artifacts;
};

struct RunRecord {
  std::string config_digest;
  std::string kind;
  std::string started;
  std::string finished;
  std::string directory;
  std::vector<SeedStatus> seeds;
  bool cached = false;

  bool ok() const;
};

// Named artifact bytes for one seed.
using Artifacts = std::map<std::string, std::string>;

// Runs one seed in memory. `root` is only read (decompress looks up the
// streams written by its compress config there).
Artifacts execute_seed(const ExperimentConfig& config, std::int64_t seed, const std::string& root);

// Idempotent: returns the stored record with cached = true when a complete
// run exists, unless options.force.
RunRecord run(const ExperimentConfig& config, const RunOptions& options);

// Reads every per-seed CSV of a completed run and writes the aggregate
// files; returns their names.
std::vector<std::string> emit_curves(const std::string& run_dir);

// Seed-aggregated view of several CSVs in the shared schema.
std::string aggregate_csv(const std::vector<std::string>& csvs);

struct VerifyReport {
  bool ok = true;
  std::int64_t seed = 0;
  std::vector<std::string> compared;
  std::vector<std::string> mismatches;  // one line per differing artifact
};

// Re-executes the first seed and compares against the stored artifacts.
// Throws std::runtime_error("no run found ...") when no complete run exists.
VerifyReport verify(const ExperimentConfig& config, const RunOptions& options);

}  // namespace preqeval
