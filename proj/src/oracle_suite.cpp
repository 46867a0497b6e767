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

#include "trajsched/oracle_suite.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "json.hpp"

#include "trajsched/allocator.h"
#include "trajsched/errors.h"
#include "trajsched/rng.h"

namespace trajsched {
namespace {

using nlohmann::json;

std::vector<double> random_lengths(std::size_t n, Rng& rng) {
  // Narrow range so ties show up.
  std::uniform_int_distribution<int> len(1, 100);
  std::vector<double> out(n);
  for (auto& l : out) l = len(rng);
  std::sort(out.rbegin(), out.rend());
  return out;
}

json instance_json(const std::vector<double>& lengths,
                   const std::vector<WorkerCostModel>& workers) {
  json ws = json::array();
  for (const auto& w : workers) {
    ws.push_back({{"per_token_time", w.per_token_time}, {"factors", w.factors}});
  }
  return {{"lengths", lengths}, {"workers", ws}};
}

bool exceeds(double candidate, double reference) {
  return candidate > reference * (1.0 + 1e-12);
}

PropertyReport dp_vs_bruteforce(const OracleSuiteConfig& cfg) {
  if (cfg.max_n > kOracleMaxItems) {
    throw OracleTooLarge("max_n " + std::to_string(cfg.max_n) +
                         " exceeds the exhaustive-search cap of " +
                         std::to_string(kOracleMaxItems));
  }
  PropertyReport rep;
  rep.property = "dp_matches_contiguous_bruteforce";
  Rng rng(derive_seed(cfg.seed, {1}));
  for (std::size_t i = 0; i < cfg.instances; ++i) {
    const auto n = std::uniform_int_distribution<std::size_t>(1, cfg.max_n)(rng);
    const auto m = std::uniform_int_distribution<std::size_t>(
        1, std::min(n, cfg.max_m))(rng);
    PlacementProblem pb;
    pb.lengths = random_lengths(n, rng);
    pb.workers = random_workers(m, n, false, cfg.decreasing_factor, rng());
    const double dp = presorted_dp(pb).predicted_makespan;
    const double bf =
        brute_force_partition(pb.lengths, pb.workers, true).predicted_makespan;
    ++rep.instances;
    if (dp != bf) {
      if (rep.violations++ == 0) {
        auto j = instance_json(pb.lengths, pb.workers);
        j["dp_makespan"] = dp;
        j["oracle_makespan"] = bf;
        rep.counterexample = j.dump();
      }
    }
  }
  rep.passed = rep.violations == 0;
  return rep;
}

PropertyReport contiguity(const OracleSuiteConfig& cfg) {
  if (cfg.max_n > kOracleMaxItems) {
    throw OracleTooLarge("max_n " + std::to_string(cfg.max_n) +
                         " exceeds the exhaustive-search cap of " +
                         std::to_string(kOracleMaxItems));
  }
  PropertyReport rep;
  rep.property = "contiguous_partition_optimal";
  Rng rng(derive_seed(cfg.seed, {2}));
  for (std::size_t i = 0; i < cfg.instances; ++i) {
    const auto n = std::uniform_int_distribution<std::size_t>(1, cfg.max_n)(rng);
    const auto m = std::uniform_int_distribution<std::size_t>(
        1, std::min(n, cfg.max_m))(rng);
    const auto lengths = random_lengths(n, rng);
    const auto workers =
        random_workers(m, n, true, cfg.decreasing_factor, rng());
    const double contiguous =
        brute_force_partition(lengths, workers, true).predicted_makespan;
    const auto free_plan = brute_force_partition(lengths, workers, false);
    ++rep.instances;
    if (exceeds(contiguous, free_plan.predicted_makespan)) {
      if (rep.violations++ == 0) {
        auto j = instance_json(lengths, workers);
        j["contiguous_makespan"] = contiguous;
        j["unrestricted_makespan"] = free_plan.predicted_makespan;
        j["unrestricted_assignment"] = free_plan.assignment;
        rep.counterexample = j.dump();
      }
    }
  }
  rep.passed = rep.violations == 0;
  return rep;
}

PropertyReport anneal_vs_enumeration(const OracleSuiteConfig& cfg) {
  PropertyReport rep;
  rep.property = "anneal_near_exhaustive";
  const auto profile = synthesize_profile();
  std::size_t within = 0;
  json worst;
  double worst_ratio = 0.0;
  for (std::size_t s = 0; s < cfg.sa_seeds; ++s) {
    Rng rng(derive_seed(cfg.seed, {3, s}));
    std::lognormal_distribution<double> len(6.9, 1.0);
    AllocationProblem ap;
    ap.profile = profile;
    ap.max_active = 4;
    ap.lengths.resize(64);
    for (auto& l : ap.lengths) l = std::ceil(len(rng));
    std::sort(ap.lengths.rbegin(), ap.lengths.rend());
    const auto budget =
        std::uniform_int_distribution<std::uint32_t>(8, 16)(rng);
    SAConfig sc;
    sc.seed = derive_seed(cfg.seed, {4, s});
    const auto sa = anneal(ap, budget, sc);
    DegreeBounds bounds{sc.allowed_degrees, sc.m_min, sc.m_max};
    const auto opt = exhaustive_best(ap, budget, bounds);
    const double ratio = sa.best.makespan / opt.makespan;
    ++rep.instances;
    if (ratio <= 1.05) {
      ++within;
    } else {
      ++rep.violations;
    }
    if (ratio > worst_ratio) {
      worst_ratio = ratio;
      worst = {{"seed", s},
               {"budget", budget},
               {"anneal_degrees", sa.best.degrees},
               {"anneal_makespan", sa.best.makespan},
               {"optimal_degrees", opt.degrees},
               {"optimal_makespan", opt.makespan}};
    }
  }
  // Allowed to miss on at most one seed in ten.
  rep.passed = rep.instances > 0 && 10 * within >= 9 * rep.instances;
  if (!rep.passed) rep.counterexample = worst.dump();
  return rep;
}

template <typename Fn>
PropertyReport guarded(const char* name, Fn fn) {
  try {
    return fn();
  } catch (const OracleTooLarge& e) {
    PropertyReport rep;
    rep.property = name;
    rep.passed = false;
    rep.error = e.what();
    return rep;
  }
}

}  // namespace

std::string PropertyReport::to_json() const {
  json j{{"property", property},
         {"instances", instances},
         {"violations", violations},
         {"passed", passed}};
  if (!counterexample.empty()) j["counterexample"] = json::parse(counterexample);
  if (!error.empty()) j["error"] = error;
  return j.dump();
}

std::vector<WorkerCostModel> random_workers(std::size_t m, std::size_t n,
                                            bool homogeneous, bool decreasing,
                                            std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> tdist(0.5, 2.0);
  std::uniform_real_distribution<double> step(0.0, 0.5);
  auto draw = [&](std::uint32_t id) {
    WorkerCostModel w;
    w.worker_id = id;
    w.per_token_time = tdist(rng);
    w.factors.assign(std::max<std::size_t>(n, 1), 1.0);
    if (decreasing) w.factors[0] = 1.0 + 0.5 * static_cast<double>(n);
    for (std::size_t s = 1; s < w.factors.size(); ++s) {
      const double d = step(rng);
      w.factors[s] = decreasing ? std::max(1.0, w.factors[s - 1] - d - 0.25)
                                : w.factors[s - 1] + d;
    }
    return w;
  };
  std::vector<WorkerCostModel> out;
  if (homogeneous) {
    const auto w = draw(0);
    for (std::size_t j = 0; j < m; ++j) {
      out.push_back(w);
      out.back().worker_id = static_cast<std::uint32_t>(j);
    }
  } else {
    for (std::size_t j = 0; j < m; ++j) out.push_back(draw(static_cast<std::uint32_t>(j)));
  }
  return out;
}

std::vector<PropertyReport> run_oracle_suite(const OracleSuiteConfig& config) {
  if (config.instances == 0 || config.max_n == 0 || config.max_m == 0) {
    throw PreconditionViolation("oracle suite needs instances, max_n, max_m > 0");
  }
  std::vector<PropertyReport> out;
  out.push_back(guarded("dp_matches_contiguous_bruteforce",
                        [&] { return dp_vs_bruteforce(config); }));
  out.push_back(guarded("contiguous_partition_optimal",
                        [&] { return contiguity(config); }));
  out.push_back(guarded("anneal_near_exhaustive",
                        [&] { return anneal_vs_enumeration(config); }));
  return out;
}

}  // namespace trajsched
