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

#include "trajsched/predictor.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "trajsched/errors.h"
#include "trajsched/rng.h"

namespace trajsched {

void NoisyOracleConfig::validate() const {
  if (!(sigma0 >= 0.0) || !std::isfinite(sigma0)) {
    throw InvalidSpec("predictor sigma0 must be >= 0");
  }
  if (!(decay > 0.0 && decay <= 1.0)) {
    throw InvalidSpec("predictor decay must be in (0, 1]");
  }
  if (!(latency >= 0.0) || !std::isfinite(latency)) {
    throw InvalidSpec("predictor latency must be >= 0");
  }
}

NoisyOracle::NoisyOracle(NoisyOracleConfig config) : config_(config) {
  config_.validate();
}

double NoisyOracle::sigma_at(std::size_t steps_done) const {
  return config_.sigma0 * std::pow(config_.decay, static_cast<double>(steps_done));
}

Prediction NoisyOracle::predict(const Trajectory& traj, std::size_t steps_done,
                                Seconds now) const {
  steps_done = std::min(steps_done, traj.step_count());
  const TokenCount done = traj.decoded_before(steps_done);
  const TokenCount true_remaining = traj.true_total_tokens() - done;

  TokenCount remaining = true_remaining;
  const double sigma = sigma_at(steps_done);
  if (true_remaining > 0 && sigma > 0.0) {
    Rng rng(derive_seed(config_.seed, {traj.id(), steps_done}));
    const double z = std::normal_distribution<double>(0.0, 1.0)(rng);
    const double noisy =
        static_cast<double>(true_remaining) * std::exp(sigma * z);
    remaining = static_cast<TokenCount>(std::llround(std::min(noisy, 1e15)));
  }
  if (config_.max_total_tokens > done) {
    remaining = std::min(remaining, config_.max_total_tokens - done);
  }
  return Prediction{traj.id(), steps_done, remaining, done + remaining, now};
}

ReplayEstimator::ReplayEstimator(std::map<Key, TokenCount> recorded_remaining,
                                 Seconds latency)
    : recorded_(std::move(recorded_remaining)), latency_(latency) {}

Prediction ReplayEstimator::predict(const Trajectory& traj,
                                    std::size_t steps_done, Seconds now) const {
  steps_done = std::min(steps_done, traj.step_count());
  const TokenCount done = traj.decoded_before(steps_done);
  TokenCount remaining = traj.true_total_tokens() - done;
  if (steps_done < traj.step_count()) {
    const auto it = recorded_.find(Key{traj.id(), steps_done});
    if (it != recorded_.end()) remaining = it->second;
  }
  return Prediction{traj.id(), steps_done, remaining, done + remaining, now};
}

namespace {

std::vector<std::size_t> top_indices(std::span<const double> values,
                                     std::span<const TrajectoryId> ids,
                                     std::size_t k) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) return values[a] > values[b];
    return ids[a] < ids[b];
  });
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

}  // namespace

double recall_of_longtails(std::span<const double> predicted,
                           std::span<const double> truths,
                           std::span<const TrajectoryId> ids,
                           double tail_fraction) {
  if (predicted.empty() || truths.empty()) throw EmptyInput("recall input");
  if (predicted.size() != truths.size() || ids.size() != truths.size()) {
    throw PreconditionViolation("recall inputs differ in length");
  }
  if (!(tail_fraction > 0.0 && tail_fraction < 1.0)) {
    throw PreconditionViolation("tail_fraction must be in (0, 1)");
  }
  const std::size_t n = truths.size();
  const auto k = std::clamp<std::size_t>(
      static_cast<std::size_t>(
          std::ceil(tail_fraction * static_cast<double>(n) - 1e-9)),
      1, n);
  const auto truth_top = top_indices(truths, ids, k);
  const auto pred_top = top_indices(predicted, ids, k);
  std::vector<std::size_t> both;
  std::set_intersection(truth_top.begin(), truth_top.end(), pred_top.begin(),
                        pred_top.end(), std::back_inserter(both));
  return static_cast<double>(both.size()) / static_cast<double>(k);
}

double pearson(std::span<const double> predicted,
               std::span<const double> truths) {
  if (predicted.size() != truths.size()) {
    throw PreconditionViolation("pearson inputs differ in length");
  }
  if (predicted.size() < 2) {
    throw PreconditionViolation("pearson needs at least two points");
  }
  const double n = static_cast<double>(predicted.size());
  const double mx = std::accumulate(predicted.begin(), predicted.end(), 0.0) / n;
  const double my = std::accumulate(truths.begin(), truths.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double dx = predicted[i] - mx;
    const double dy = truths[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DegenerateInput("zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace trajsched
