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

#include <gtest/gtest.h>

#include <set>

#include "trajsched/errors.h"
#include "trajsched/migration.h"
#include "trajsched/rng.h"

namespace trajsched {
namespace {

MigrationRequest mr(TrajectoryId id, std::uint32_t src, std::uint32_t dst,
                    double len, Seconds at = 0.0, TokenCount cache = 0) {
  return {id, src, dst, cache, len, at};
}

std::vector<TrajectoryId> ids(const std::vector<MigrationRequest>& batch) {
  std::vector<TrajectoryId> out;
  for (const auto& r : batch) out.push_back(r.trajectory_id);
  return out;
}

TEST(TransferTime, Arithmetic) {
  LinkModel link;
  EXPECT_DOUBLE_EQ(transfer_time(mr(1, 0, 1, 0, 0, 0), link), 0.05);
  EXPECT_NEAR(transfer_time(mr(1, 0, 1, 0, 0, 8000), link), 0.25, 1e-15);
  LinkModel fast{80000.0, 0.05};
  const auto slow_var = transfer_time(mr(1, 0, 1, 0, 0, 8000), link) - 0.05;
  const auto fast_var = transfer_time(mr(1, 0, 1, 0, 0, 8000), fast) - 0.05;
  EXPECT_NEAR(fast_var, slow_var / 2, 1e-15);
  EXPECT_THROW((LinkModel{0.0, 0.1}.validate()), InvalidSpec);
  EXPECT_THROW((LinkModel{1.0, -0.1}.validate()), InvalidSpec);
}

TEST(Request, SameEndpointsRejected) {
  EXPECT_THROW(mr(1, 2, 2, 10).validate(), PreconditionViolation);
}

TEST(Transfers, GreedyExample) {
  const std::vector<MigrationRequest> pending{
      mr(1, 1, 2, 100), mr(2, 2, 3, 90), mr(3, 4, 5, 80)};
  EXPECT_EQ(ids(schedule_transfers(pending, {})), (std::vector<TrajectoryId>{1, 3}));
}

TEST(Transfers, SingleAndSharedSource) {
  const std::vector<MigrationRequest> one{mr(9, 0, 1, 5)};
  EXPECT_EQ(ids(schedule_transfers(one, {})), (std::vector<TrajectoryId>{9}));
  const std::vector<MigrationRequest> shared{mr(1, 1, 2, 10), mr(2, 1, 3, 30),
                                             mr(3, 1, 4, 20)};
  EXPECT_EQ(ids(schedule_transfers(shared, {})), (std::vector<TrajectoryId>{2}));
}

TEST(Transfers, BusyEndpointsAndTies) {
  const std::vector<MigrationRequest> pending{mr(1, 1, 2, 100), mr(2, 3, 4, 50, 2.0),
                                              mr(3, 3, 5, 50, 1.0)};
  EXPECT_EQ(ids(schedule_transfers(pending, {2})), (std::vector<TrajectoryId>{3}));
  EXPECT_TRUE(schedule_transfers({}, {}).empty());
}

// Exclusivity and priority respect over random pending sets.
TEST(Transfers, ExclusivityProperty) {
  Rng rng(17);
  std::uniform_int_distribution<std::uint32_t> w(0, 7);
  std::uniform_int_distribution<int> len(1, 20);
  for (int trial = 0; trial < 5000; ++trial) {
    std::vector<MigrationRequest> pending;
    const auto k = std::uniform_int_distribution<int>(0, 10)(rng);
    for (int i = 0; i < k; ++i) {
      auto a = w(rng), b = w(rng);
      if (a == b) b = (b + 1) % 8;
      pending.push_back(mr(static_cast<TrajectoryId>(i), a, b, len(rng), len(rng)));
    }
    std::set<std::uint32_t> busy;
    for (int i = 0; i < 2; ++i) busy.insert(w(rng));
    const auto batch = schedule_transfers(pending, busy);
    std::set<std::uint32_t> used;
    for (const auto& r : batch) {
      ASSERT_FALSE(busy.count(r.src_worker) || busy.count(r.dst_worker));
      ASSERT_TRUE(used.insert(r.src_worker).second);
      ASSERT_TRUE(used.insert(r.dst_worker).second);
    }
    // Maximality: every skipped request conflicts with busy or the batch.
    for (const auto& r : pending) {
      if (std::find(batch.begin(), batch.end(), r) != batch.end()) continue;
      const bool blocked = busy.count(r.src_worker) || busy.count(r.dst_worker) ||
                           used.count(r.src_worker) || used.count(r.dst_worker);
      ASSERT_TRUE(blocked);
    }
  }
}

TEST(Transfers, PriorityRespect) {
  // X and Y conflict on endpoint 2; the longer one wins regardless of order.
  const std::vector<MigrationRequest> a{mr(1, 1, 2, 10), mr(2, 2, 3, 11)};
  EXPECT_EQ(ids(schedule_transfers(a, {})), (std::vector<TrajectoryId>{2}));
  const std::vector<MigrationRequest> b{mr(2, 2, 3, 11), mr(1, 1, 2, 10)};
  EXPECT_EQ(ids(schedule_transfers(b, {})), (std::vector<TrajectoryId>{2}));
}

TEST(Scaling, CeilCapacities) {
  const std::vector<std::size_t> sizes{2, 6};
  const auto scaled = scaled_capacities(sizes, 8, 4);
  EXPECT_EQ(scaled, (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(group_for_rank(scaled, 1), 0u);
  for (std::size_t r = 2; r <= 4; ++r) EXPECT_EQ(group_for_rank(scaled, r), 1u);
  EXPECT_EQ(scaled_capacities(sizes, 8, 8), sizes);
  // 3 active of 8: ceil(0.75)=1, ceil(2.25)=3 -> ranks past 4 clamp.
  const auto small = scaled_capacities(std::vector<std::size_t>{1, 1, 6}, 8, 3);
  EXPECT_EQ(small, (std::vector<std::size_t>{1, 1, 3}));
  EXPECT_EQ(group_for_rank(small, 9), 2u);
}

TEST(Retargeter, IdentityWhenUnchanged) {
  Retargeter rt({2, 6}, 8);
  const double lengths[] = {800, 700, 600, 500, 400, 300, 200, 100};
  for (TrajectoryId id = 0; id < 8; ++id) rt.update(id, lengths[id]);
  for (TrajectoryId id = 0; id < 8; ++id) {
    EXPECT_EQ(rt.retarget(id, lengths[id]), id < 2 ? 0u : 1u);
  }
}

TEST(Retargeter, RankAmongActive) {
  Retargeter rt({2, 6}, 8);
  for (TrajectoryId id = 0; id < 8; ++id) rt.update(id, 100.0 * (8 - id));
  for (TrajectoryId id = 0; id < 4; ++id) rt.finish(id);
  EXPECT_EQ(rt.active_count(), 4u);
  // Scaled [1, 3]: the longest active goes to group 0.
  EXPECT_EQ(rt.rank_of(4), 1u);
  EXPECT_EQ(rt.retarget(4, 400), 0u);
  EXPECT_EQ(rt.retarget(5, 300), 1u);
  // A jump in prediction moves trajectory 7 to the front.
  EXPECT_EQ(rt.retarget(7, 5000), 0u);
  EXPECT_EQ(rt.rank_of(4), 2u);
  EXPECT_THROW(rt.retarget(0, 10), TrajectoryInactive);
  EXPECT_THROW(rt.rank_of(99), TrajectoryInactive);
}

TEST(Retargeter, TieBreakById) {
  Retargeter rt({1, 1}, 2);
  rt.update(5, 100);
  rt.update(3, 100);
  EXPECT_EQ(rt.rank_of(3), 1u);
  EXPECT_EQ(rt.rank_of(5), 2u);
}

}  // namespace
}  // namespace trajsched
