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

#include <numeric>
#include <sstream>

#include "oracles.h"
#include "trajsched/errors.h"
#include "trajsched/reporting.h"
#include "trajsched/rng.h"

namespace trajsched {
namespace {

TEST(Percentile, Examples) {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  EXPECT_EQ(percentile(v, 50), 50.0);
  const std::vector<double> one{7.5};
  for (double p : {0.0, 13.0, 100.0}) EXPECT_EQ(percentile(one, p), 7.5);
  const std::vector<double> four{10, 20, 30, 40};
  EXPECT_EQ(percentile(four, 95), 40.0);
}

TEST(Percentile, Errors) {
  EXPECT_THROW(percentile({}, 50), EmptyInput);
  const std::vector<double> v{1};
  EXPECT_THROW(percentile(v, 101), PreconditionViolation);
  EXPECT_THROW(percentile(v, -1), PreconditionViolation);
}

TEST(Percentile, MatchesDefinitionProperty) {
  Rng rng(3);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + trial % 37);
    for (auto& x : v) x = u(rng);
    for (double p : {0.0, 1.0, 25.0, 50.0, 90.0, 99.9, 100.0}) {
      ASSERT_EQ(percentile(v, p), oracle::nearest_rank(v, p));
    }
    EXPECT_EQ(percentile(v, 0), *std::min_element(v.begin(), v.end()));
    EXPECT_EQ(percentile(v, 100), *std::max_element(v.begin(), v.end()));
  }
}

TEST(Cdf, EqualTimes) {
  const std::vector<double> v{3, 3, 3};
  const auto c = normalized_cdf(v);
  EXPECT_EQ(c.normalized, std::vector<double>{1.0});
  EXPECT_EQ(c.cum_fraction, std::vector<double>{1.0});
  EXPECT_EQ(c.max_over_median, 1.0);
}

TEST(Cdf, MaxOverMedian) {
  const std::vector<double> v{1, 1, 1, 5};
  const auto c = normalized_cdf(v);
  EXPECT_EQ(c.max_over_median, 5.0);
  EXPECT_EQ(c.normalized, (std::vector<double>{0.2, 1.0}));
  EXPECT_EQ(c.cum_fraction, (std::vector<double>{0.75, 1.0}));
}

TEST(Cdf, Errors) {
  EXPECT_THROW(normalized_cdf({}), EmptyInput);
  const std::vector<double> zero{1, 0};
  EXPECT_THROW(normalized_cdf(zero), InvalidMetric);
}

TEST(Cdf, InvariantsAndScaleProperty) {
  Rng rng(8);
  std::lognormal_distribution<double> d(2.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(1 + trial * 3);
    for (auto& x : v) x = d(rng);
    const auto c = normalized_cdf(v);
    ASSERT_FALSE(c.normalized.empty());
    EXPECT_EQ(c.normalized.back(), 1.0);
    EXPECT_EQ(c.cum_fraction.back(), 1.0);
    for (std::size_t i = 1; i < c.normalized.size(); ++i) {
      EXPECT_LT(c.normalized[i - 1], c.normalized[i]);
      EXPECT_LT(c.cum_fraction[i - 1], c.cum_fraction[i]);
    }
    // Scaling by a power of two is exact in floating point.
    std::vector<double> scaled(v);
    for (auto& x : scaled) x *= 4.0;
    const auto s = normalized_cdf(scaled);
    EXPECT_EQ(s.normalized, c.normalized);
    EXPECT_EQ(s.cum_fraction, c.cum_fraction);
    std::vector<double> scaled3(v);
    for (auto& x : scaled3) x *= 3.0;
    const auto s3 = normalized_cdf(scaled3);
    ASSERT_EQ(s3.normalized.size(), c.normalized.size());
    for (std::size_t i = 0; i < c.normalized.size(); ++i) {
      EXPECT_NEAR(s3.normalized[i], c.normalized[i], 1e-15);
    }
  }
}

TEST(Cdf, CsvFormat) {
  const std::vector<double> v{1, 1, 1, 5};
  std::ostringstream os;
  normalized_cdf(v).write_csv(os);
  EXPECT_EQ(os.str(), "normalized_time,cum_fraction\n0.2,0.75\n1,1\n");
}

TEST(Aggregates, SpeedupAndMeans) {
  EXPECT_EQ(speedup(12.0, 12.0), 1.0);
  EXPECT_EQ(speedup(12.0, 6.0), 2.0);
  const std::vector<double> v{1, 4, 16};
  EXPECT_NEAR(geometric_mean(v), 4.0, 1e-12);
  EXPECT_EQ(mean(v), 7.0);
  EXPECT_THROW(mean({}), EmptyInput);
}

}  // namespace
}  // namespace trajsched
