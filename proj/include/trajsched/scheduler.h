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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trajsched/model.h"

namespace trajsched {

enum class SchedulerPolicy {
  kPps,         // progressive priority scheduling with preemption
  kFcfs,        // first come first served by request arrival
  kRoundRobin,  // step-centric: every returning step joins the tail
  kSjf,         // shortest predicted total first
};

SchedulerPolicy parse_scheduler_policy(std::string_view name);
std::string to_string(SchedulerPolicy policy);
// True when the policy consumes length predictions.
bool uses_predictions(SchedulerPolicy policy);

enum class RequestState { kPending, kActive, kPreempted, kDone };

// One LLM generation request: a single step of a trajectory.
struct GenRequest {
  TrajectoryId trajectory_id = 0;
  std::size_t step_index = 0;
  // Predicted remaining tokens; higher is more urgent under PPS.
  double priority = 0.0;
  // Predicted total tokens; SJF ranks on this.
  double predicted_total = 0.0;
  Seconds enqueued_at = 0.0;
  // Insertion counter assigned by the queue.
  std::uint64_t sequence = 0;
  RequestState state = RequestState::kPending;
};

struct Preemption {
  GenRequest evicted;
  GenRequest promoted;
};

struct ScheduleOutcome {
  std::optional<Preemption> preemption;
  // Requests that moved pending -> active during the call (includes the
  // promoted request of a preemption).
  std::vector<GenRequest> activated;
};

// Per-worker queue discipline. Pending is kept sorted by the policy order;
// active holds at most max_active requests.
class WorkerQueue {
 public:
  WorkerQueue(SchedulerPolicy policy, std::uint32_t max_active);

  // Inserts a returning request. Free slots are filled immediately; under
  // PPS with a full active set, the lowest-priority active request is
  // evicted when the pending head outranks it (at most one eviction).
  // Throws DuplicateRequest if the trajectory is already queued here.
  ScheduleOutcome schedule(GenRequest returning);

  // Moves pending-head requests into active until full or pending empty.
  std::vector<GenRequest> admit();

  // Removes a finished request from active. Throws UnknownTrajectory.
  GenRequest complete(TrajectoryId id);

  const std::vector<GenRequest>& pending() const { return pending_; }
  const std::vector<GenRequest>& active() const { return active_; }
  std::size_t load() const { return pending_.size() + active_.size(); }
  bool contains(TrajectoryId id) const;
  std::uint32_t max_active() const { return max_active_; }
  SchedulerPolicy policy() const { return policy_; }

  // Strict weak order of the pending sequence: true if `a` runs before `b`.
  bool runs_before(const GenRequest& a, const GenRequest& b) const;

 private:
  void insert_pending(GenRequest r);

  SchedulerPolicy policy_;
  std::uint32_t max_active_;
  std::uint64_t next_sequence_ = 0;
  std::vector<GenRequest> pending_;
  std::vector<GenRequest> active_;
};

}  // namespace trajsched
