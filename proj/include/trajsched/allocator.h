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
#include <functional>
#include <map>
#include <vector>

#include "trajsched/model.h"
#include "trajsched/placement.h"
#include "trajsched/rng.h"

namespace trajsched {

struct SAConfig {
  // Temperature multiplier per iteration.
  double cooling_rate = 0.95;
  // Stop once T <= epsilon_frac * T0.
  double epsilon_frac = 1e-3;
  std::vector<std::uint32_t> allowed_degrees{1, 2, 4, 8};
  std::size_t max_iterations = 2000;
  std::size_t restarts = 1;
  // Worker-count bounds; m_max == 0 means no upper bound beyond the budget.
  std::size_t m_min = 1;
  std::size_t m_max = 0;
  std::uint64_t seed = 0;

  // Throws InvalidSpec.
  void validate() const;
};

struct AllocationState {
  // Descending.
  std::vector<std::uint32_t> degrees;
  std::uint32_t budget = 0;
  double makespan = 0.0;
};

// Placement objective of a degree vector: the presorted DP over `lengths`
// with one worker per degree, largest degree taking the longest group.
struct AllocationProblem {
  // Predicted lengths, descending.
  std::vector<double> lengths;
  ProfileTable profile;
  // Batch capacity of every worker.
  std::uint32_t max_active = 32;
  // When > 0 and lengths exceed it, short trajectories are bucketed down to
  // this many items before the DP.
  std::size_t aggregate_target = 0;
  std::size_t bucket_size = 8;

  std::vector<WorkerConfig> workers_for(
      const std::vector<std::uint32_t>& degrees) const;
  PlacementProblem placement_problem(
      const std::vector<std::uint32_t>& degrees) const;
  PlacementPlan plan(const std::vector<std::uint32_t>& degrees) const;
};

enum class Move { kRedistribute, kSplit, kMerge };

struct DegreeBounds {
  std::vector<std::uint32_t> allowed;  // ascending
  std::size_t m_min = 1;
  std::size_t m_max = 0;  // 0: unbounded

  std::size_t upper() const {
    return m_max == 0 ? std::numeric_limits<std::size_t>::max() : m_max;
  }
};

// Every distinct descending degree vector reachable by one `move`. Results
// equal to `degrees` are dropped.
//   redistribute: a drops to the next lower allowed degree, b absorbs the
//                 difference and must land on an allowed degree.
//   split:        d -> (x, d - x), both allowed.
//   merge:        (a, b) -> a + b when allowed.
std::vector<std::vector<std::uint32_t>> neighbours(
    const std::vector<std::uint32_t>& degrees, Move move,
    const DegreeBounds& bounds);

// Applies `move` when it has a neighbour, otherwise a uniformly drawn
// applicable move. Throws NoFeasibleMove when no move applies.
std::vector<std::uint32_t> perturb(const std::vector<std::uint32_t>& degrees,
                                   Move move, const DegreeBounds& bounds,
                                   Rng& rng);

// All descending degree vectors over the allowed set summing to `budget`
// with worker count within bounds.
std::vector<std::vector<std::uint32_t>> enumerate_allocations(
    std::uint32_t budget, const DegreeBounds& bounds);

struct AnnealResult {
  AllocationState best;
  PlacementPlan plan;
  // Current state after every iteration of the winning chain.
  std::vector<std::vector<std::uint32_t>> accepted_trace;
  // Best-seen makespan after every iteration of the winning chain.
  std::vector<double> best_history;
  std::size_t iterations = 0;
};

// Sort-initialized simulated annealing over degree vectors.
// Throws InfeasibleBudget when no allowed composition of the budget exists
// within the worker-count bounds.
AnnealResult anneal(const AllocationProblem& problem, std::uint32_t budget,
                    const SAConfig& config);

// Exhaustive minimum over enumerate_allocations.
AllocationState exhaustive_best(const AllocationProblem& problem,
                                std::uint32_t budget,
                                const DegreeBounds& bounds);

}  // namespace trajsched
