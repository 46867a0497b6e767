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

#include <algorithm>
#include <numeric>

#include "oracles.h"
#include "trajsched/errors.h"
#include "trajsched/placement.h"
#include "trajsched/rng.h"

namespace trajsched {
namespace {

WorkerCostModel linear_worker(std::uint32_t id, double t, double slope,
                              std::size_t n) {
  WorkerCostModel w;
  w.worker_id = id;
  w.per_token_time = t;
  w.factors.resize(std::max<std::size_t>(n, 1));
  for (std::size_t s = 0; s < w.factors.size(); ++s) {
    w.factors[s] = 1.0 + slope * static_cast<double>(s);
  }
  return w;
}

oracle::Worker to_oracle(const WorkerCostModel& w) { return {w.per_token_time, w.factors}; }

std::vector<oracle::Worker> to_oracle(const std::vector<WorkerCostModel>& ws) {
  std::vector<oracle::Worker> out;
  for (const auto& w : ws) out.push_back(to_oracle(w));
  return out;
}

struct Instance {
  std::vector<double> lengths;
  std::vector<WorkerCostModel> workers;
};

Instance random_instance(Rng& rng, std::size_t max_n, std::size_t max_m,
                         bool homogeneous) {
  Instance in;
  const auto n = std::uniform_int_distribution<std::size_t>(1, max_n)(rng);
  const auto m = std::uniform_int_distribution<std::size_t>(1, std::min(n, max_m))(rng);
  std::uniform_int_distribution<int> len(1, 60);
  for (std::size_t i = 0; i < n; ++i) in.lengths.push_back(len(rng));
  std::sort(in.lengths.rbegin(), in.lengths.rend());
  std::uniform_real_distribution<double> t(0.3, 3.0), inc(0.0, 0.6);
  WorkerCostModel shared;
  for (std::size_t j = 0; j < m; ++j) {
    WorkerCostModel w;
    w.worker_id = static_cast<std::uint32_t>(j);
    w.per_token_time = t(rng);
    w.factors = {1.0};
    for (std::size_t s = 1; s < n; ++s) w.factors.push_back(w.factors.back() + inc(rng));
    if (homogeneous && j > 0) {
      w.per_token_time = shared.per_token_time;
      w.factors = shared.factors;
    }
    if (j == 0) shared = w;
    in.workers.push_back(w);
  }
  return in;
}

TEST(GroupCost, Values) {
  WorkerCostModel w;
  w.per_token_time = 0.05;
  w.factors = {1.0, 1.1, 1.2, 1.3, 1.4, 1.5, 1.55, 1.6};
  EXPECT_DOUBLE_EQ(group_cost(1000, 1, w), 50.0);
  EXPECT_NEAR(group_cost(1000, 8, w), 80.0, 1e-12);
  EXPECT_THROW(group_cost(1000, 0, w), PreconditionViolation);
}

TEST(CostModel, FromProfile) {
  const auto profile = ProfileTable::from_entries(
      {{{1, 1}, 0.05}, {{1, 2}, 0.06}, {{1, 4}, 0.08}});
  const auto w = make_cost_model(profile, {3, 1, 4}, 10);
  EXPECT_EQ(w.worker_id, 3u);
  EXPECT_DOUBLE_EQ(w.per_token_time, 0.05);
  ASSERT_EQ(w.factors.size(), 10u);
  EXPECT_EQ(w.factors[0], 1.0);
  EXPECT_NEAR(w.factors[1], 1.2, 1e-12);
  EXPECT_NEAR(w.factors[3], 1.6, 1e-12);
  // Past the batch cap of 4 the group drains in waves: F(cap) * s / cap.
  EXPECT_NEAR(w.factors[7], 1.6 * 2.0, 1e-12);
  EXPECT_NEAR(w.factors[9], 1.6 * 2.5, 1e-12);
  EXPECT_TRUE(w.monotone());
  EXPECT_THROW(make_cost_model(profile, {0, 2, 4}, 4), MissingProfileEntry);
}

TEST(Dp, SingleGroup) {
  PlacementProblem pb;
  pb.lengths = {100};
  pb.workers = {linear_worker(0, 0.05, 0.0, 1)};
  const auto plan = presorted_dp(pb);
  EXPECT_DOUBLE_EQ(plan.predicted_makespan, 5.0);
  EXPECT_EQ(plan.boundaries, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(plan.group_sizes, (std::vector<std::size_t>{1}));
}

TEST(Dp, FourItemsTwoWorkers) {
  PlacementProblem pb;
  pb.lengths = {100, 90, 10, 10};
  pb.workers = {linear_worker(0, 1.0, 0.1, 4), linear_worker(1, 1.0, 0.1, 4)};
  std::vector<std::size_t> cuts;
  const double expected = oracle::contiguous_min(pb.lengths, to_oracle(pb.workers), &cuts);
  // Splits after 1, 2, 3 items: max(100, 90*1.2)=108, 110, 120.
  EXPECT_NEAR(expected, 108.0, 1e-12);
  const auto plan = presorted_dp(pb);
  EXPECT_EQ(plan.predicted_makespan, expected);
  EXPECT_EQ(plan.boundaries, (std::vector<std::size_t>{0, 1, 4}));
  EXPECT_EQ(plan.boundaries, cuts);
}

TEST(Dp, MatchesOracleProperty) {
  Rng rng(1234);
  for (int trial = 0; trial < 300; ++trial) {
    auto in = random_instance(rng, 10, 3, false);
    PlacementProblem pb{in.lengths, {}, in.workers};
    const double expected = oracle::contiguous_min(in.lengths, to_oracle(in.workers));
    const auto plan = presorted_dp(pb);
    ASSERT_EQ(plan.predicted_makespan, expected) << "trial " << trial;
    ASSERT_EQ(presorted_dp_balanced(pb).predicted_makespan, expected);
    ASSERT_EQ(brute_force_partition(in.lengths, in.workers, true).predicted_makespan,
              expected);
  }
}

TEST(Dp, NonMonotoneFactorsStillExact) {
  Rng rng(77);
  std::uniform_real_distribution<double> f(0.5, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    auto in = random_instance(rng, 9, 3, false);
    for (auto& w : in.workers) {
      for (auto& x : w.factors) x = f(rng);
    }
    PlacementProblem pb{in.lengths, {}, in.workers};
    ASSERT_EQ(presorted_dp(pb).predicted_makespan,
              oracle::contiguous_min(in.lengths, to_oracle(in.workers)));
  }
}

TEST(Dp, PlanStructureProperty) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    auto in = random_instance(rng, 40, 6, false);
    PlacementProblem pb{in.lengths, {}, in.workers};
    for (const auto& plan : {presorted_dp(pb), presorted_dp_balanced(pb)}) {
      const std::size_t m = in.workers.size();
      ASSERT_EQ(plan.boundaries.size(), m + 1);
      EXPECT_EQ(plan.boundaries.front(), 0u);
      EXPECT_EQ(plan.boundaries.back(), in.lengths.size());
      double worst = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        ASSERT_LT(plan.boundaries[j], plan.boundaries[j + 1]);
        EXPECT_EQ(plan.group_sizes[j], plan.boundaries[j + 1] - plan.boundaries[j]);
        for (auto i = plan.boundaries[j]; i < plan.boundaries[j + 1]; ++i) {
          EXPECT_EQ(plan.assignment[i], j);
        }
        worst = std::max(worst, group_cost(in.lengths[plan.boundaries[j]],
                                           plan.group_sizes[j], in.workers[j]));
      }
      EXPECT_EQ(plan.predicted_makespan, worst);
    }
  }
}

TEST(Dp, AddingWorkerNeverHurts) {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    auto in = random_instance(rng, 30, 5, true);
    if (in.lengths.size() <= in.workers.size()) continue;
    PlacementProblem pb{in.lengths, {}, in.workers};
    const double before = presorted_dp(pb).predicted_makespan;
    pb.workers.push_back(pb.workers.back());
    pb.workers.back().worker_id += 1;
    EXPECT_LE(presorted_dp(pb).predicted_makespan, before);
  }
}

TEST(Dp, Errors) {
  PlacementProblem pb;
  pb.lengths = {5};
  pb.workers = {linear_worker(0, 1, 0, 1), linear_worker(1, 1, 0, 1)};
  EXPECT_THROW(presorted_dp(pb), InfeasiblePartition);
  pb.lengths = {1, 5};
  pb.workers.pop_back();
  EXPECT_THROW(presorted_dp(pb), PreconditionViolation);
}

TEST(Dp, PlanJson) {
  PlacementProblem pb;
  pb.lengths = {100, 90, 10, 10};
  pb.workers = {linear_worker(0, 1.0, 0.1, 4), linear_worker(1, 1.0, 0.1, 4)};
  EXPECT_EQ(presorted_dp(pb).to_json(),
            R"({"boundaries":[0,1,4],"group_sizes":[1,3],"predicted_makespan_s":108.0})");
}

TEST(BruteForce, SmallCases) {
  const std::vector<double> one{42};
  const std::vector<WorkerCostModel> w1{linear_worker(0, 0.5, 0.2, 1)};
  const auto p = brute_force_partition(one, w1, false);
  EXPECT_DOUBLE_EQ(p.predicted_makespan, 21.0);
  EXPECT_EQ(p.group_sizes, (std::vector<std::size_t>{1}));

  const std::vector<double> four{40, 30, 20, 10};
  const std::vector<WorkerCostModel> w2{linear_worker(0, 1, 0.3, 4),
                                        linear_worker(1, 1, 0.3, 4)};
  EXPECT_EQ(brute_force_partition(four, w2, false).predicted_makespan,
            brute_force_partition(four, w2, true).predicted_makespan);

  const std::vector<double> thirteen(13, 1.0);
  EXPECT_THROW(brute_force_partition(thirteen, w1, true), OracleTooLarge);
}

TEST(BruteForce, UnrestrictedMatchesOracle) {
  Rng rng(4);
  for (int trial = 0; trial < 60; ++trial) {
    auto in = random_instance(rng, 8, 3, false);
    ASSERT_EQ(brute_force_partition(in.lengths, in.workers, false).predicted_makespan,
              oracle::unrestricted_min(in.lengths, to_oracle(in.workers)));
  }
}

// Contiguity: with homogeneous workers and monotone F the unrestricted
// optimum is attained by a contiguous split.
TEST(BruteForce, ContiguityProperty) {
  Rng rng(55);
  for (int trial = 0; trial < 150; ++trial) {
    auto in = random_instance(rng, 9, 3, true);
    ASSERT_EQ(oracle::unrestricted_min(in.lengths, to_oracle(in.workers)),
              oracle::contiguous_min(in.lengths, to_oracle(in.workers)));
  }
}

TEST(BruteForce, DecreasingFactorBreaksContiguity) {
  // Two items share a worker more cheaply than they run alone.
  WorkerCostModel w;
  w.factors = {1.0, 0.5};
  const std::vector<WorkerCostModel> ws{w, w};
  const std::vector<double> lengths{10, 9};
  EXPECT_DOUBLE_EQ(brute_force_partition(lengths, ws, false).predicted_makespan, 5.0);
  EXPECT_DOUBLE_EQ(brute_force_partition(lengths, ws, true).predicted_makespan, 10.0);
}

TEST(Aggregate, IdentityAtZeroThreshold) {
  PlacementProblem pb;
  pb.lengths = {9, 7, 3, 1};
  pb.workers = {linear_worker(0, 1, 0.1, 4)};
  const auto ag = aggregate_short(pb, 0.0, 4);
  EXPECT_EQ(ag.problem.lengths, pb.lengths);
  EXPECT_EQ(ag.expansion.size(), 4u);
}

TEST(Aggregate, BucketsShortItems) {
  PlacementProblem pb;
  pb.lengths = {100, 5, 5, 5, 5};
  pb.workers = {linear_worker(0, 1, 0.1, 5)};
  const auto ag = aggregate_short(pb, 10.0, 2);
  EXPECT_EQ(ag.problem.lengths, (std::vector<double>{100, 5, 5}));
  EXPECT_EQ(ag.problem.weights, (std::vector<std::uint64_t>{1, 2, 2}));
  using R = std::pair<std::size_t, std::size_t>;
  EXPECT_EQ(ag.expansion, (std::vector<R>{{0, 1}, {1, 3}, {3, 5}}));
}

TEST(Aggregate, AllShortSingleBucket) {
  PlacementProblem pb;
  pb.lengths = {4, 3, 2, 1};
  pb.workers = {linear_worker(0, 1, 0.1, 4)};
  const auto ag = aggregate_short(pb, 100.0, 4);
  EXPECT_EQ(ag.problem.lengths, (std::vector<double>{4}));
  EXPECT_EQ(ag.problem.weights, (std::vector<std::uint64_t>{4}));
}

TEST(Aggregate, WeightsFeedGroupSize) {
  PlacementProblem pb;
  pb.lengths = {100, 5, 5, 5, 5};
  pb.workers = {linear_worker(0, 1, 0.1, 5)};
  const auto plan = presorted_dp_aggregated(pb, 10.0, 2);
  EXPECT_NEAR(plan.predicted_makespan, 100 * 1.4, 1e-12);
  EXPECT_EQ(plan.group_sizes, (std::vector<std::size_t>{5}));
  EXPECT_EQ(plan.assignment.size(), 5u);
}

// Aggregated makespan is never below the exact optimum.
TEST(Aggregate, SoundnessProperty) {
  Rng rng(21);
  std::lognormal_distribution<double> len(6.5, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    PlacementProblem pb;
    pb.lengths.resize(600);
    for (auto& l : pb.lengths) l = std::ceil(len(rng));
    std::sort(pb.lengths.rbegin(), pb.lengths.rend());
    for (std::uint32_t j = 0; j < 6; ++j) pb.workers.push_back(linear_worker(j, 1.0 / (1 + j % 2), 0.02, 600));
    const double exact = presorted_dp(pb).predicted_makespan;
    const double thr = threshold_for_target(pb, 8, 128);
    const auto reduced = aggregate_short(pb, thr, 8);
    EXPECT_LE(reduced.problem.item_count(), 128u);
    const auto agg = presorted_dp_aggregated(pb, thr, 8);
    EXPECT_GE(agg.predicted_makespan, exact);
    EXPECT_EQ(std::accumulate(agg.group_sizes.begin(), agg.group_sizes.end(), std::size_t{0}),
              pb.lengths.size());
  }
}

TEST(Router, PlanBindingIsStatic) {
  Router r(PlacementPolicy::parse("heddle"), 5);
  r.register_trajectory(7);
  r.bind(7, 3);
  const std::vector<std::size_t> loads{0, 0, 0, 99, 0};
  for (int step = 0; step < 4; ++step) EXPECT_EQ(r.route_step(7, loads), 3u);
  EXPECT_EQ(r.cache_location(7), 3u);
}

TEST(Router, LeastLoad) {
  Router r(PlacementPolicy::parse("least_load"), 3);
  r.register_trajectory(1);
  const std::vector<std::size_t> loads{5, 2, 9};
  EXPECT_EQ(r.route_step(1, loads), 1u);
  const std::vector<std::size_t> tie{4, 2, 2};
  EXPECT_EQ(least_loaded(tie), 1u);
}

TEST(Router, CacheAwareFollowsTag) {
  Router r(PlacementPolicy::parse("cache_aware"), 3);
  r.register_trajectory(1);
  const std::vector<std::size_t> first{3, 3, 0};
  EXPECT_EQ(r.route_step(1, first), 2u);
  const std::vector<std::size_t> later{0, 0, 50};
  EXPECT_EQ(r.route_step(1, later), 2u);
  r.move_cache(1, 0);
  EXPECT_EQ(r.route_step(1, later), 0u);
}

TEST(Router, HybridThresholdBoundary) {
  Router r(PlacementPolicy::parse("hybrid:32"), 2);
  r.register_trajectory(1);
  r.move_cache(1, 0);
  const std::vector<std::size_t> at{32, 1};
  EXPECT_EQ(r.route_step(1, at), 0u);
  const std::vector<std::size_t> over{33, 1};
  EXPECT_EQ(r.route_step(1, over), 1u);
}

TEST(Router, Errors) {
  Router r(PlacementPolicy::parse("least_load"), 2);
  const std::vector<std::size_t> loads{0, 0};
  EXPECT_THROW(r.route_step(4, loads), UnknownTrajectory);
  EXPECT_THROW(PlacementPolicy::parse("random"), ConfigError);
  EXPECT_THROW(PlacementPolicy::parse("hybrid:x"), ConfigError);
  EXPECT_EQ(PlacementPolicy::parse("hybrid:8").to_string(), "hybrid:8");
  EXPECT_EQ(PlacementPolicy::parse("hybrid").skew_threshold, 32.0);
}

}  // namespace
}  // namespace trajsched
