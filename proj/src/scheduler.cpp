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

#include "trajsched/scheduler.h"

#include <algorithm>
#include <string>

#include "trajsched/errors.h"

namespace trajsched {

SchedulerPolicy parse_scheduler_policy(std::string_view name) {
  if (name == "pps") return SchedulerPolicy::kPps;
  if (name == "fcfs") return SchedulerPolicy::kFcfs;
  if (name == "rr") return SchedulerPolicy::kRoundRobin;
  if (name == "sjf") return SchedulerPolicy::kSjf;
  throw ConfigError("--scheduler: unknown policy '" + std::string(name) +
                    "' (expected pps|fcfs|rr|sjf)");
}

std::string to_string(SchedulerPolicy policy) {
  switch (policy) {
    case SchedulerPolicy::kPps:
      return "pps";
    case SchedulerPolicy::kFcfs:
      return "fcfs";
    case SchedulerPolicy::kRoundRobin:
      return "rr";
    case SchedulerPolicy::kSjf:
      return "sjf";
  }
  return "?";
}

bool uses_predictions(SchedulerPolicy policy) {
  return policy == SchedulerPolicy::kPps || policy == SchedulerPolicy::kSjf;
}

WorkerQueue::WorkerQueue(SchedulerPolicy policy, std::uint32_t max_active)
    : policy_(policy), max_active_(max_active) {
  if (max_active_ < 1) throw InvalidSpec("max_active must be >= 1");
}

bool WorkerQueue::runs_before(const GenRequest& a, const GenRequest& b) const {
  const auto arrival = [](const GenRequest& x, const GenRequest& y) {
    if (x.enqueued_at != y.enqueued_at) return x.enqueued_at < y.enqueued_at;
    return x.trajectory_id < y.trajectory_id;
  };
  switch (policy_) {
    case SchedulerPolicy::kPps:
      if (a.priority != b.priority) return a.priority > b.priority;
      return arrival(a, b);
    case SchedulerPolicy::kFcfs:
      return arrival(a, b);
    case SchedulerPolicy::kRoundRobin:
      return a.sequence < b.sequence;
    case SchedulerPolicy::kSjf:
      if (a.predicted_total != b.predicted_total) {
        return a.predicted_total < b.predicted_total;
      }
      return arrival(a, b);
  }
  return false;
}

bool WorkerQueue::contains(TrajectoryId id) const {
  const auto match = [id](const GenRequest& r) { return r.trajectory_id == id; };
  return std::any_of(pending_.begin(), pending_.end(), match) ||
         std::any_of(active_.begin(), active_.end(), match);
}

void WorkerQueue::insert_pending(GenRequest r) {
  const auto pos = std::upper_bound(
      pending_.begin(), pending_.end(), r,
      [this](const GenRequest& x, const GenRequest& y) {
        return runs_before(x, y);
      });
  pending_.insert(pos, std::move(r));
}

ScheduleOutcome WorkerQueue::schedule(GenRequest returning) {
  if (contains(returning.trajectory_id)) {
    throw DuplicateRequest("trajectory " +
                           std::to_string(returning.trajectory_id) +
                           " already queued");
  }
  returning.state = RequestState::kPending;
  returning.sequence = next_sequence_++;
  insert_pending(std::move(returning));

  ScheduleOutcome out;
  if (active_.size() < max_active_) {
    out.activated = admit();
    return out;
  }
  if (policy_ != SchedulerPolicy::kPps || pending_.empty()) return out;

  // Lowest-priority active request; among equals the one that would queue
  // last.
  auto victim = active_.begin();
  for (auto it = active_.begin() + 1; it != active_.end(); ++it) {
    if (runs_before(*victim, *it)) victim = it;
  }
  if (!(pending_.front().priority > victim->priority)) return out;

  GenRequest evicted = *victim;
  active_.erase(victim);
  GenRequest promoted = pending_.front();
  pending_.erase(pending_.begin());
  promoted.state = RequestState::kActive;
  active_.push_back(promoted);
  evicted.state = RequestState::kPreempted;
  insert_pending(evicted);
  out.preemption = Preemption{evicted, promoted};
  out.activated.push_back(promoted);
  return out;
}

std::vector<GenRequest> WorkerQueue::admit() {
  std::vector<GenRequest> activated;
  while (active_.size() < max_active_ && !pending_.empty()) {
    GenRequest r = pending_.front();
    pending_.erase(pending_.begin());
    r.state = RequestState::kActive;
    active_.push_back(r);
    activated.push_back(r);
  }
  return activated;
}

GenRequest WorkerQueue::complete(TrajectoryId id) {
  const auto it =
      std::find_if(active_.begin(), active_.end(),
                   [id](const GenRequest& r) { return r.trajectory_id == id; });
  if (it == active_.end()) {
    throw UnknownTrajectory("trajectory " + std::to_string(id) +
                            " is not active on this worker");
  }
  GenRequest r = *it;
  active_.erase(it);
  r.state = RequestState::kDone;
  return r;
}

}  // namespace trajsched
