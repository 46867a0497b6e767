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
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "trajsched/model.h"

namespace trajsched {

// Costing of one worker in the placement objective: per-token time T_j and
// group-size slowdown F_j(s).
struct WorkerCostModel {
  std::uint32_t worker_id = 0;
  std::uint32_t mp_degree = 1;
  double per_token_time = 1.0;
  // factors[s - 1] = F_j(s); sizes past the end clamp to the last entry.
  std::vector<double> factors{1.0};

  double factor_at(std::uint64_t size) const {
    const auto idx = size < factors.size() ? size : factors.size();
    return factors[idx - 1];
  }
  bool monotone() const;
};

// Builds F_j(s) for s = 1..max_group_size from the profile. Groups within
// the worker's batch capacity use the profiled interference factor. Larger
// groups drain through the batch in waves; a wave costs `queue_fill` times
// the group's first length on average, so
//   F_j(s) = F_j(cap) * max(1, queue_fill * s / cap)   for s > cap.
WorkerCostModel make_cost_model(const ProfileTable& profile,
                                const WorkerConfig& worker,
                                std::size_t max_group_size,
                                double queue_fill = 1.0);

[[noreturn]] void throw_group_size_zero();

// first_len * T_j * F_j(size). Throws PreconditionViolation for size 0.
inline double group_cost(double first_len, std::uint64_t size,
                         const WorkerCostModel& worker) {
  if (size == 0) throw_group_size_zero();
  return first_len * worker.per_token_time * worker.factor_at(size);
}

struct PlacementProblem {
  // Predicted lengths sorted descending (ties already ordered by id).
  std::vector<double> lengths;
  // Trajectories represented by each item; empty means all ones.
  std::vector<std::uint64_t> weights;
  // Group j is costed on workers[j].
  std::vector<WorkerCostModel> workers;

  std::size_t item_count() const { return lengths.size(); }
  std::uint64_t weight(std::size_t i) const {
    return weights.empty() ? 1 : weights[i];
  }
  // Throws InfeasiblePartition (n < m) or PreconditionViolation.
  void validate() const;
};

struct PlacementPlan {
  // m + 1 cut indices 0 = b_0 < b_1 <= ... <= b_m = n over sorted items.
  // Empty for non-contiguous plans.
  std::vector<std::size_t> boundaries;
  // Trajectories per group.
  std::vector<std::size_t> group_sizes;
  // Group index per sorted item.
  std::vector<std::uint32_t> assignment;
  double predicted_makespan = 0.0;

  std::string to_json() const;
};

// Contiguous-partition dynamic program over the presorted items:
//   dp[i][1] = L_1 T_1 F_1(W_i)
//   dp[i][j] = min_{k in [j-1, i-1]} max(dp[k][j-1], L_{k+1} T_j F_j(W_i - W_k))
// Every worker receives at least one item. O(n^2 m) worst case; the scan
// over k stops early once the tail-group cost alone reaches the incumbent,
// which is exact when every F_j is non-decreasing.
PlacementPlan presorted_dp(const PlacementProblem& problem);

// Same optimal makespan as presorted_dp, with ties among optimal partitions
// broken recursively: the bottleneck group is fixed and the items on each
// side of it are re-partitioned over the remaining workers, so groups off
// the critical path are balanced instead of arbitrary.
PlacementPlan presorted_dp_balanced(const PlacementProblem& problem);

inline constexpr std::size_t kOracleMaxItems = 12;

// Exhaustive search. contiguous_only: every split of the sorted list into m
// non-empty runs. Otherwise: every assignment of items to the m workers
// (workers may stay idle), i.e. the unrestricted search space.
// Throws OracleTooLarge when n > kOracleMaxItems.
PlacementPlan brute_force_partition(std::span<const double> lengths,
                                    std::span<const WorkerCostModel> workers,
                                    bool contiguous_only);

struct AggregatedProblem {
  PlacementProblem problem;
  // Reduced item r covers original sorted items [first, last).
  std::vector<std::pair<std::size_t, std::size_t>> expansion;

  // Maps a plan over reduced items back onto the original items.
  PlacementPlan expand(const PlacementPlan& reduced) const;
};

// Buckets consecutive items shorter than `threshold` into groups of at most
// `bucket_size`; a bucket becomes one item with the bucket's max length and
// weight equal to its trajectory count.
AggregatedProblem aggregate_short(const PlacementProblem& problem,
                                  double threshold, std::size_t bucket_size);

// Smallest threshold (over the item lengths) that brings the reduced item
// count to at most `target`; 0 when no aggregation is needed.
double threshold_for_target(const PlacementProblem& problem,
                            std::size_t bucket_size, std::size_t target);

// DP on the aggregated problem, expanded back. Falls back to the exact DP
// when aggregation would leave fewer items than workers.
PlacementPlan presorted_dp_aggregated(const PlacementProblem& problem,
                                      double threshold,
                                      std::size_t bucket_size,
                                      bool balanced = false);

// ---------------------------------------------------------------------------
// Per-step routing

enum class PlacementKind { kPlan, kLeastLoad, kCacheAware, kHybrid };

struct PlacementPolicy {
  PlacementKind kind = PlacementKind::kPlan;
  // hybrid: least-load when max load > skew_threshold * min load.
  double skew_threshold = 32.0;

  // "heddle" | "least_load" | "cache_aware" | "hybrid:<skew>"
  static PlacementPolicy parse(std::string_view text);
  std::string to_string() const;
};

// Routing state: plan bindings and the worker holding each trajectory's
// prefix cache.
class Router {
 public:
  Router(PlacementPolicy policy, std::size_t n_workers);

  void register_trajectory(TrajectoryId id);
  // Static binding from a placement plan (or a completed migration).
  void bind(TrajectoryId id, std::uint32_t worker);
  std::optional<std::uint32_t> binding(TrajectoryId id) const;
  std::optional<std::uint32_t> cache_location(TrajectoryId id) const;
  void move_cache(TrajectoryId id, std::uint32_t worker);

  // Picks the worker for the next step and moves the cache tag there.
  // `loads[w]` = active + pending requests on worker w.
  // Throws UnknownTrajectory.
  std::uint32_t route_step(TrajectoryId id, std::span<const std::size_t> loads);

  const PlacementPolicy& policy() const { return policy_; }

 private:
  struct Entry {
    std::optional<std::uint32_t> bound;
    std::optional<std::uint32_t> cache;
  };
  Entry& entry(TrajectoryId id);

  PlacementPolicy policy_;
  std::size_t n_workers_;
  std::unordered_map<TrajectoryId, Entry> entries_;
};

// argmin load, lowest index on ties.
std::uint32_t least_loaded(std::span<const std::size_t> loads);

}  // namespace trajsched
