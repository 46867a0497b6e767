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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "trajsched/migration.h"
#include "trajsched/model.h"
#include "trajsched/placement.h"
#include "trajsched/predictor.h"
#include "trajsched/scheduler.h"

namespace trajsched {

// Tie order at equal timestamps follows the enumerator order.
enum class EventKind {
  kStepGenerationDone = 0,
  kMigrationDone = 1,
  kToolDone = 2,
  kPredictionReady = 3,
  kAdmitTick = 4,
};

const char* to_string(EventKind kind);

struct EventRecord {
  Seconds time = 0.0;
  EventKind kind = EventKind::kAdmitTick;
  TrajectoryId trajectory_id = 0;
  std::uint32_t worker = 0;
};

class EventLog {
 public:
  void append(const EventRecord& e) { events_.push_back(e); }
  const std::vector<EventRecord>& events() const { return events_; }
  // FNV-1a over the binary event stream.
  std::uint64_t hash() const;
  void write_jsonl(std::ostream& out) const;

 private:
  std::vector<EventRecord> events_;
};

struct SimPolicies {
  SchedulerPolicy scheduler = SchedulerPolicy::kPps;
  PlacementPolicy placement;
  bool migration = true;
};

struct SimConfig {
  std::vector<WorkerConfig> cluster;
  ProfileTable profile;
  SimPolicies policies;
  // Required when the scheduler or placement consumes predictions.
  std::shared_ptr<const Estimator> estimator;
  LinkModel link;
  // Prefill per-token time = decode per-token time / prefill_speedup.
  double prefill_speedup = 8.0;
  // A preempted step loses its cache and recomputes its full context.
  bool recompute_on_evict = false;
  // Bucket short trajectories when the plan covers more than this many.
  std::size_t aggregate_target = 1024;
  std::size_t aggregate_bucket = 8;
  bool record_events = true;
  std::uint64_t seed = 0;

  // Throws InvalidSpec.
  void validate() const;
};

struct TrajectoryResult {
  TrajectoryId id = 0;
  Seconds completion_time = 0.0;
  MakespanBreakdown breakdown;
  std::size_t steps = 0;
  TokenCount decode_tokens = 0;
};

struct RunMetrics {
  Seconds makespan = 0.0;
  double throughput = 0.0;  // decode tokens / makespan
  TokenCount total_decode_tokens = 0;
  std::vector<TrajectoryResult> trajectories;
  std::size_t preemptions = 0;
  std::size_t migrations = 0;
  std::size_t migrations_cancelled = 0;
  Seconds exposed_migration = 0.0;
  std::vector<double> worker_busy_fraction;
  std::vector<TokenCount> worker_generated_tokens;
  // Placement plan prediction, when a plan was made.
  double planned_makespan = 0.0;

  std::vector<double> completion_times() const;
  std::string to_json() const;
};

struct RunResult {
  RunMetrics metrics;
  EventLog log;
};

// 1 / (T(mp) * F(mp, batch)): per-request token rate on a worker.
double rebatch_rate(const ProfileTable& profile, std::uint32_t mp,
                    std::uint32_t batch);

// Discrete-event rollout simulation. Throws EmptyInput for an empty
// workload, InvalidSpec for a bad cluster, SimulatorStall on deadlock.
RunResult run(std::span<const Trajectory> workload, const SimConfig& config);

}  // namespace trajsched
