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
#include <set>
#include <span>
#include <unordered_map>
#include <vector>

#include "trajsched/model.h"

namespace trajsched {

struct MigrationRequest {
  TrajectoryId trajectory_id = 0;
  std::uint32_t src_worker = 0;
  std::uint32_t dst_worker = 0;
  // Size of the prefix cache to ship.
  TokenCount cache_tokens = 0;
  // Predicted total tokens; longer trajectories ship first.
  double priority_len = 0.0;
  Seconds issued_at = 0.0;

  // Throws PreconditionViolation when src == dst.
  void validate() const;
  bool operator==(const MigrationRequest&) const = default;
};

// Point-to-point cache transfer cost, with cache bytes folded into tokens.
struct LinkModel {
  double bandwidth_tokens_per_s = 40000.0;
  Seconds per_transfer_setup = 0.05;

  // Throws InvalidSpec unless bandwidth > 0 and setup >= 0.
  void validate() const;
};

// setup + cache_tokens / bandwidth.
Seconds transfer_time(const MigrationRequest& req, const LinkModel& link);

// Greedy conflict-free batch: walk `pending` by priority_len descending
// (then issued_at, then trajectory id) and take a request only when neither
// endpoint is busy or already used by an earlier pick.
std::vector<MigrationRequest> schedule_transfers(
    std::span<const MigrationRequest> pending,
    const std::set<std::uint32_t>& busy_endpoints);

// ceil(s_i * n_active / n_total) per group.
std::vector<std::size_t> scaled_capacities(std::span<const std::size_t> sizes,
                                           std::size_t n_total,
                                           std::size_t n_active);

// Group whose cumulative scaled range covers `rank` (1-based). Ranks past
// the total land on the last group.
std::size_t group_for_rank(std::span<const std::size_t> scaled,
                           std::size_t rank);

// Tracks the latest predicted total of every unfinished trajectory and maps
// a trajectory's rank onto the rescaled placement groups.
class Retargeter {
 public:
  // `group_sizes` from the placement plan made over `n_total` trajectories.
  Retargeter(std::vector<std::size_t> group_sizes, std::size_t n_total);

  void update(TrajectoryId id, double predicted_total);
  void finish(TrajectoryId id);
  bool is_active(TrajectoryId id) const { return active_.count(id) != 0; }
  std::size_t active_count() const { return active_.size(); }

  // 1-based rank among active trajectories by predicted total descending,
  // id ascending on ties. Throws TrajectoryInactive.
  std::size_t rank_of(TrajectoryId id) const;

  // Records the new prediction and returns the target group.
  // Throws TrajectoryInactive for finished or unknown trajectories.
  std::size_t retarget(TrajectoryId id, double predicted_total);

 private:
  std::vector<std::size_t> group_sizes_;
  std::size_t n_total_;
  std::unordered_map<TrajectoryId, double> active_;
};

}  // namespace trajsched
