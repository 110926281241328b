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

// preqeval <kind>|verify --config <path> [--force] [--workers N] [--out DIR]
//
// Exit codes: 0 success, 1 config error, 2 runtime failure, 3 verification
// failure.

#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "preqeval/config.hpp"
#include "preqeval/errors.hpp"
#include "preqeval/runner.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeFailure = 2;
constexpr int kVerificationFailure = 3;

constexpr const char* kCommands[] = {"codelength", "compress",     "decompress",
                                     "curve",      "continual",    "multitask",
                                     "cross-matrix", "pretrain-finetune", "verify"};

int run_command(const std::string& command, const std::string& config_path,
                const preqeval::RunOptions& options) {
  using namespace preqeval;
  ExperimentConfig config;
  try {
    config = parse_config(config_path);
  } catch (const ConfigError& ex) {
    std::fprintf(stderr, "config error in %s:\n", config_path.c_str());
    for (const auto& p : ex.problems()) std::fprintf(stderr, "  %s\n", p.c_str());
    return kConfigError;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "config error: %s\n", ex.what());
    return kConfigError;
  }

  if (command == "verify") {
    try {
      const VerifyReport report = verify(config, options);
      if (!report.ok) {
        std::fprintf(stderr, "verify FAILED for %s seed %lld:\n", config.digest_hex().substr(0, 16).c_str(),
                     static_cast<long long>(report.seed));
        for (const auto& m : report.mismatches) std::fprintf(stderr, "  %s\n", m.c_str());
        return kVerificationFailure;
      }
      std::printf("verify ok: %s seed %lld, %zu artifacts byte-identical\n",
                  config.digest_hex().substr(0, 16).c_str(), static_cast<long long>(report.seed),
                  report.compared.size());
      return kOk;
    } catch (const std::exception& ex) {
      std::fprintf(stderr, "verify: %s\n", ex.what());
      return kRuntimeFailure;
    }
  }

  if (parse_experiment_kind(command) != config.kind) {
    std::fprintf(stderr, "config error: %s is a '%s' config, not '%s'\n", config_path.c_str(),
                 to_string(config.kind).c_str(), command.c_str());
    return kConfigError;
  }
  try {
    const RunRecord record = run(config, options);
    if (record.cached) {
      std::printf("cached: %s (%zu seeds)\n", record.directory.c_str(), record.seeds.size());
      return kOk;
    }
    for (const auto& s : record.seeds) {
      if (s.ok) {
        std::printf("seed %lld: ok\n", static_cast<long long>(s.seed));
      } else {
        std::fprintf(stderr, "seed %lld: FAILED: %s\n", static_cast<long long>(s.seed), s.error.c_str());
      }
    }
    std::printf("%s: %s\n", record.ok() ? "complete" : "failed", record.directory.c_str());
    return record.ok() ? kOk : kRuntimeFailure;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "run failed: %s\n", ex.what());
    return kRuntimeFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prequential codelength evaluation of learners"};
  app.require_subcommand(1, 1);
  std::string config_path;
  preqeval::RunOptions options;
  for (const char* name : kCommands) {
    CLI::App* sub = app.add_subcommand(name, std::string(name) == std::string("verify")
                                                 ? "re-run the first seed and compare artifacts"
                                                 : std::string("run a ") + name + " experiment");
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_flag("--force", options.force, "re-run even if a complete run exists");
    sub->add_option("--workers", options.workers, "seeds run in parallel")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", options.out, "output root directory");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex);
    return code == 0 ? kOk : kConfigError;
  }
  return run_command(app.get_subcommands().front()->get_name(), config_path, options);
}
