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

#include "trajsched/migration.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "trajsched/errors.h"

namespace trajsched {

void MigrationRequest::validate() const {
  if (src_worker == dst_worker) {
    throw PreconditionViolation("migration of trajectory " +
                                std::to_string(trajectory_id) +
                                " has identical endpoints");
  }
}

void LinkModel::validate() const {
  if (!(bandwidth_tokens_per_s > 0.0) || !std::isfinite(bandwidth_tokens_per_s)) {
    throw InvalidSpec("migration bandwidth must be > 0");
  }
  if (!(per_transfer_setup >= 0.0) || !std::isfinite(per_transfer_setup)) {
    throw InvalidSpec("migration setup time must be >= 0");
  }
}

Seconds transfer_time(const MigrationRequest& req, const LinkModel& link) {
  return link.per_transfer_setup +
         static_cast<double>(req.cache_tokens) / link.bandwidth_tokens_per_s;
}

std::vector<MigrationRequest> schedule_transfers(
    std::span<const MigrationRequest> pending,
    const std::set<std::uint32_t>& busy_endpoints) {
  std::vector<const MigrationRequest*> order;
  order.reserve(pending.size());
  for (const auto& r : pending) order.push_back(&r);
  std::sort(order.begin(), order.end(),
            [](const MigrationRequest* a, const MigrationRequest* b) {
              if (a->priority_len != b->priority_len) {
                return a->priority_len > b->priority_len;
              }
              if (a->issued_at != b->issued_at) return a->issued_at < b->issued_at;
              return a->trajectory_id < b->trajectory_id;
            });

  std::set<std::uint32_t> claimed = busy_endpoints;
  std::vector<MigrationRequest> batch;
  for (const auto* r : order) {
    if (r->src_worker == r->dst_worker) continue;
    if (claimed.count(r->src_worker) || claimed.count(r->dst_worker)) continue;
    claimed.insert(r->src_worker);
    claimed.insert(r->dst_worker);
    batch.push_back(*r);
  }
  return batch;
}

std::vector<std::size_t> scaled_capacities(std::span<const std::size_t> sizes,
                                           std::size_t n_total,
                                           std::size_t n_active) {
  if (n_total == 0) throw PreconditionViolation("n_total must be >= 1");
  if (n_active == 0) throw PreconditionViolation("n_active must be >= 1");
  std::vector<std::size_t> out;
  out.reserve(sizes.size());
  for (auto s : sizes) {
    // Integer ceil of s * n_active / n_total.
    out.push_back((s * n_active + n_total - 1) / n_total);
  }
  return out;
}

std::size_t group_for_rank(std::span<const std::size_t> scaled,
                           std::size_t rank) {
  if (scaled.empty()) throw PreconditionViolation("no groups");
  if (rank == 0) throw PreconditionViolation("rank is 1-based");
  std::size_t upper = 0;
  for (std::size_t g = 0; g < scaled.size(); ++g) {
    upper += scaled[g];
    if (rank <= upper) return g;
  }
  return scaled.size() - 1;
}

Retargeter::Retargeter(std::vector<std::size_t> group_sizes,
                       std::size_t n_total)
    : group_sizes_(std::move(group_sizes)), n_total_(n_total) {
  if (group_sizes_.empty()) throw PreconditionViolation("no groups");
  if (n_total_ == 0) throw PreconditionViolation("n_total must be >= 1");
}

void Retargeter::update(TrajectoryId id, double predicted_total) {
  active_[id] = predicted_total;
}

void Retargeter::finish(TrajectoryId id) { active_.erase(id); }

std::size_t Retargeter::rank_of(TrajectoryId id) const {
  const auto it = active_.find(id);
  if (it == active_.end()) {
    throw TrajectoryInactive("trajectory " + std::to_string(id));
  }
  const double mine = it->second;
  std::size_t ahead = 0;
  for (const auto& [other, pred] : active_) {
    if (pred > mine || (pred == mine && other < id)) ++ahead;
  }
  return ahead + 1;
}

std::size_t Retargeter::retarget(TrajectoryId id, double predicted_total) {
  if (!is_active(id)) {
    throw TrajectoryInactive("trajectory " + std::to_string(id));
  }
  active_[id] = predicted_total;
  const auto scaled =
      scaled_capacities(group_sizes_, n_total_, active_.size());
  return group_for_rank(scaled, rank_of(id));
}

}  // namespace trajsched
