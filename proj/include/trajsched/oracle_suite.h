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
#include <string>
#include <vector>

#include "trajsched/placement.h"

namespace trajsched {

struct OracleSuiteConfig {
  std::size_t instances = 500;
  // Largest instance size drawn; above kOracleMaxItems the suite refuses.
  std::size_t max_n = 10;
  std::size_t max_m = 3;
  // Draw non-increasing F tables instead of non-decreasing ones.
  bool decreasing_factor = false;
  std::size_t sa_seeds = 10;
  std::uint64_t seed = 0;
};

struct PropertyReport {
  std::string property;
  std::size_t instances = 0;
  std::size_t violations = 0;
  bool passed = true;
  // JSON of the first failing instance; empty when passed.
  std::string counterexample;
  // Set when the property could not run (e.g. OracleTooLarge).
  std::string error;

  std::string to_json() const;
};

// Random homogeneous or heterogeneous worker cost models.
std::vector<WorkerCostModel> random_workers(std::size_t m, std::size_t n,
                                            bool homogeneous, bool decreasing,
                                            std::uint64_t seed);

// Properties: dp_matches_contiguous_bruteforce, contiguous_partition_optimal
// (unrestricted assignment vs contiguous), anneal_near_exhaustive.
std::vector<PropertyReport> run_oracle_suite(const OracleSuiteConfig& config);

}  // namespace trajsched
