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
#include <span>
#include <vector>

namespace trajsched {

using TrajectoryId = std::uint64_t;
using PromptGroupId = std::uint64_t;
using TokenCount = std::uint64_t;
// Simulated seconds.
using Seconds = double;

// One LLM generation followed by (optionally) one tool call.
struct Step {
  // Context tokens appended at step start (prompt for step 0, tool output
  // afterwards). A cache hit only has to prefill these.
  TokenCount prefill_tokens = 0;
  TokenCount decode_tokens = 1;
  Seconds tool_latency = 0.0;

  bool operator==(const Step&) const = default;
};

class Trajectory {
 public:
  // Throws InvalidTrajectory unless: steps non-empty, every decode_tokens >= 1,
  // every tool_latency finite and >= 0, and the final tool_latency == 0.
  Trajectory(TrajectoryId id, PromptGroupId prompt_group,
             std::vector<Step> steps, Seconds created_at = 0.0);

  TrajectoryId id() const { return id_; }
  PromptGroupId prompt_group() const { return prompt_group_; }
  const std::vector<Step>& steps() const { return steps_; }
  std::size_t step_count() const { return steps_.size(); }
  Seconds created_at() const { return created_at_; }

  // Sum of decode tokens over all steps.
  TokenCount true_total_tokens() const { return total_tokens_; }
  // Decode tokens produced by steps [0, step).
  TokenCount decoded_before(std::size_t step) const;
  // Full context length when `step` starts (all prefill up to and including
  // `step` plus every earlier decode). This is what a cache miss recomputes.
  TokenCount context_tokens_at(std::size_t step) const;

  bool operator==(const Trajectory&) const = default;

 private:
  TrajectoryId id_;
  PromptGroupId prompt_group_;
  std::vector<Step> steps_;
  Seconds created_at_;
  TokenCount total_tokens_ = 0;
};

// Measured per-token time keyed by (mp_degree, batch_size).
class ProfileTable {
 public:
  using Key = std::pair<std::uint32_t, std::uint32_t>;  // (mp, batch)

  ProfileTable() = default;

  // Validates: times > 0 and finite, mp degrees are powers of two, batch 1
  // present for every mp, time non-decreasing in batch for fixed mp.
  // `monotone_mp` declares the latency-optimized regime (base time
  // non-increasing in mp) and is verified when set.
  static ProfileTable from_entries(std::map<Key, double> entries,
                                   bool monotone_mp = false);

  // Strict CSV: header `mp_degree,batch_size,per_token_time_s`.
  static ProfileTable load_csv(std::istream& in);
  void save_csv(std::ostream& out) const;

  // Lookup of an exact entry. Throws MissingProfileEntry.
  double per_token_time(std::uint32_t mp, std::uint32_t batch) const;

  // entries[(mp, 1)]: contention-free per-token time.
  double base_per_token_time(std::uint32_t mp) const;

  // entries[(mp, batch)] / entries[(mp, 1)]. Batches between profiled sizes
  // interpolate per-token time linearly; batches past the largest profiled
  // size clamp to it.
  double interference_factor(std::uint32_t mp, std::uint32_t batch) const;

  bool has_mp(std::uint32_t mp) const { return by_mp_.count(mp) != 0; }
  std::vector<std::uint32_t> mp_degrees() const;
  std::uint32_t max_batch(std::uint32_t mp) const;
  bool monotone_mp() const { return monotone_mp_; }
  const std::map<Key, double>& entries() const { return entries_; }

 private:
  std::map<Key, double> entries_;
  // mp -> ascending (batch, time)
  std::map<std::uint32_t, std::vector<std::pair<std::uint32_t, double>>>
      by_mp_;
  bool monotone_mp_ = false;
};

// Calibration model used when no measured profile is supplied:
//   per_token_time(mp, b) = c0 / mp^gamma * (1 + c1 * (b - 1))
struct SyntheticProfileParams {
  double c0 = 0.05;
  double gamma = 0.8;
  double c1 = 0.01;
  std::vector<std::uint32_t> mp_degrees{1, 2, 4, 8};
  std::uint32_t max_batch = 256;
};

ProfileTable synthesize_profile(const SyntheticProfileParams& params = {});

// Dense batch -> slowdown table for one mp degree. factor(1) == 1 and the
// table is non-decreasing; lookups past the end clamp.
class InterferenceFn {
 public:
  InterferenceFn() = default;
  // factors[0] is the factor at batch 1.
  InterferenceFn(std::uint32_t mp_degree, std::vector<double> factors);

  static InterferenceFn from_profile(const ProfileTable& profile,
                                     std::uint32_t mp);

  std::uint32_t mp_degree() const { return mp_; }
  double factor(std::uint64_t batch) const;
  std::size_t max_batch() const { return factors_.size(); }

 private:
  std::uint32_t mp_ = 1;
  std::vector<double> factors_{1.0};
};

struct WorkerConfig {
  std::uint32_t worker_id = 0;
  std::uint32_t mp_degree = 1;
  std::uint32_t max_active = 1;

  bool operator==(const WorkerConfig&) const = default;
};

// Throws InvalidSpec when a worker's mp is not profiled or max_active == 0.
void validate_cluster(std::span<const WorkerConfig> workers,
                      const ProfileTable& profile);

// Per-trajectory completion time split into the additive terms of the
// rollout makespan model. Exposed migration/prediction time is kept apart
// from tool time so the overlap accounting stays visible.
struct MakespanBreakdown {
  Seconds queueing = 0.0;
  Seconds base_compute = 0.0;           // N_tokens * T
  Seconds interference_overhead = 0.0;  // N_tokens * (alpha - 1) * T
  Seconds tool_time = 0.0;
  Seconds exposed_migration = 0.0;
  Seconds exposed_prediction = 0.0;
  Seconds total = 0.0;

  Seconds component_sum() const {
    return queueing + base_compute + interference_overhead + tool_time +
           exposed_migration + exposed_prediction;
  }
  // |total - sum| <= rel_tol * max(|total|, tiny)
  bool identity_holds(double rel_tol = 1e-9) const;
};

// Timing record of one executed step.
struct StepTiming {
  std::size_t step_index = 0;
  Seconds queueing = 0.0;
  Seconds base_compute = 0.0;
  Seconds interference_overhead = 0.0;
  Seconds tool = 0.0;
  Seconds exposed_migration = 0.0;
  Seconds exposed_prediction = 0.0;

  // Constant-rate step: `tokens` generated at per-token time T slowed by
  // `alpha`.
  static StepTiming at_constant_rate(std::size_t step_index, TokenCount tokens,
                                     double per_token_time, double alpha,
                                     Seconds queueing, Seconds tool);
};

// Sums per-step records into a breakdown. Every step of `traj` must appear
// exactly once, otherwise IncompleteTrace.
MakespanBreakdown trajectory_makespan(const Trajectory& traj,
                                      std::span<const StepTiming> log);

}  // namespace trajsched
