/* Copyright 2026 The trajsched Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "trajsched/allocator.h"
#include "trajsched/migration.h"
#include "trajsched/model.h"
#include "trajsched/oracle_suite.h"
#include "trajsched/placement.h"
#include "trajsched/predictor.h"
#include "trajsched/scheduler.h"
#include "trajsched/sim.h"
#include "trajsched/workload.h"

namespace trajsched::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;
inline constexpr int kExitOracle = 4;

// One configurable setting: config-file key "section.name" and its flag.
struct OptionSpec {
  std::string key;
  std::string flag;
  std::string default_value;
  std::string help;
};

// Every setting reachable from a config file or the command line.
const std::vector<OptionSpec>& config_schema();

// Raw key -> value map, keyed by OptionSpec::key.
using RawConfig = std::map<std::string, std::string>;

// INI file: [section] headers and name = value lines. Unknown keys throw
// ConfigError.
RawConfig load_config_file(const std::string& path);

struct ExperimentConfig {
  // Empty trace_path: generate from `workload`.
  std::string trace_path;
  WorkloadSpec workload;
  // Empty profile_path: synthesize from `profile_params`.
  std::string profile_path;
  SyntheticProfileParams profile_params;

  std::uint32_t gpus = 8;
  std::uint32_t max_active = 32;
  // "anneal" or "fix:<degree>".
  std::string allocation = "fix:1";

  SimPolicies policies;
  NoisyOracleConfig predictor;
  LinkModel link;
  SAConfig allocator;
  double prefill_speedup = 8.0;
  bool recompute_on_evict = false;
  std::size_t aggregate_target = 1024;
  std::size_t aggregate_bucket = 8;

  std::vector<std::uint64_t> seeds{0};
  unsigned jobs = 1;
  std::string out;
  std::string dump_events;
  std::string cdf_out;

  std::vector<std::string> cells;
  std::string baseline;

  OracleSuiteConfig oracle;
};

// Defaults overlaid with `raw`, parsed and cross-validated. Throws
// ConfigError naming the offending flag.
ExperimentConfig build_config(const RawConfig& raw);

// Applies a compare cell such as "heddle" or "rr+least_load+nomig" on top
// of `base`. Tokens: scheduler names, placement names, mig/nomig,
// anneal/fix:<d>. Throws ConfigError.
ExperimentConfig apply_cell(const ExperimentConfig& base,
                            const std::string& cell);

// Everything one simulation needs for a given seed.
struct PreparedRun {
  std::vector<Trajectory> workload;
  SimConfig sim;
  std::vector<std::uint32_t> degrees;
};

ProfileTable load_profile(const ExperimentConfig& config);
std::vector<Trajectory> load_workload(const ExperimentConfig& config,
                                      std::uint64_t seed);
// Resolves the allocation (annealing when requested) for this workload.
PreparedRun prepare_run(const ExperimentConfig& config,
                        std::vector<Trajectory> workload,
                        const ProfileTable& profile, std::uint64_t seed);

// Entry point; returns the process exit code.
int main(int argc, const char* const* argv, std::ostream& out,
         std::ostream& err);

}  // namespace trajsched::cli
