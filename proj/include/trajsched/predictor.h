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
#include <map>
#include <span>
#include <utility>

#include "trajsched/model.h"

namespace trajsched {

struct Prediction {
  TrajectoryId trajectory_id = 0;
  // Steps completed when the estimate was made (0 = prompt only).
  std::size_t step_index = 0;
  TokenCount predicted_remaining_tokens = 0;
  // Tokens already generated + predicted remaining.
  TokenCount predicted_total_tokens = 0;
  Seconds issued_at = 0.0;
};

// Trajectory length estimator, invoked after every completed step. The
// simulator overlaps latency() with the trajectory's tool call.
class Estimator {
 public:
  virtual ~Estimator() = default;

  // `steps_done` in [0, traj.step_count()]. Must be deterministic.
  virtual Prediction predict(const Trajectory& traj, std::size_t steps_done,
                             Seconds now) const = 0;
  virtual Seconds latency() const { return 0.0; }
};

struct NoisyOracleConfig {
  double sigma0 = 0.5;  // log-error std-dev of the prompt-only estimate
  double decay = 0.6;   // per-step multiplier on sigma
  Seconds latency = 0.1;
  std::uint64_t seed = 0;
  // Generation cap on total tokens; predicted totals never exceed it.
  // 0 disables the clamp.
  TokenCount max_total_tokens = 0;

  // Throws InvalidSpec.
  void validate() const;
};

// remaining_pred = true_remaining * exp(sigma_k * z), sigma_k = sigma0 *
// decay^k, with z a standard normal fixed by (seed, trajectory, k), then
// clamped so the predicted total stays within max_total_tokens.
class NoisyOracle final : public Estimator {
 public:
  explicit NoisyOracle(NoisyOracleConfig config);

  Prediction predict(const Trajectory& traj, std::size_t steps_done,
                     Seconds now) const override;
  Seconds latency() const override { return config_.latency; }

  double sigma_at(std::size_t steps_done) const;
  const NoisyOracleConfig& config() const { return config_; }

 private:
  NoisyOracleConfig config_;
};

// Returns recorded remaining-length estimates keyed by (trajectory, k).
// Unrecorded points fall back to the true remaining length.
class ReplayEstimator final : public Estimator {
 public:
  using Key = std::pair<TrajectoryId, std::size_t>;

  explicit ReplayEstimator(std::map<Key, TokenCount> recorded_remaining,
                           Seconds latency = 0.0);

  Prediction predict(const Trajectory& traj, std::size_t steps_done,
                     Seconds now) const override;
  Seconds latency() const override { return latency_; }

 private:
  std::map<Key, TokenCount> recorded_;
  Seconds latency_;
};

// Fraction of the true top `tail_fraction` trajectories (by truth, ties by
// id ascending) that also land in the predicted top set. The top set has
// ceil(tail_fraction * n) members. Throws EmptyInput / PreconditionViolation.
double recall_of_longtails(std::span<const double> predicted,
                           std::span<const double> truths,
                           std::span<const TrajectoryId> ids,
                           double tail_fraction);

// Sample Pearson correlation. Throws PreconditionViolation for n < 2 or
// mismatched lengths, DegenerateInput for zero variance.
double pearson(std::span<const double> predicted,
               std::span<const double> truths);

}  // namespace trajsched
