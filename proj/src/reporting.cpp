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

#include "trajsched/reporting.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "text_util.h"
#include "trajsched/errors.h"

namespace trajsched {

double percentile(std::span<const double> values, double p) {
  if (values.empty()) throw EmptyInput("percentile of an empty sample");
  if (!(p >= 0.0 && p <= 100.0)) {
    throw PreconditionViolation("percentile p must be in [0, 100]");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

CdfExport normalized_cdf(std::span<const double> times) {
  if (times.empty()) throw EmptyInput("completion-time CDF of no samples");
  for (double t : times) {
    if (!(t > 0.0) || !std::isfinite(t)) {
      throw InvalidMetric("completion time " + detail::format_double(t) +
                          " is not positive");
    }
  }
  std::vector<double> sorted(times.begin(), times.end());
  std::sort(sorted.begin(), sorted.end());
  const double max = sorted.back();
  const double n = static_cast<double>(sorted.size());

  CdfExport cdf;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    cdf.normalized.push_back(sorted[i] == max ? 1.0 : sorted[i] / max);
    cdf.cum_fraction.push_back(static_cast<double>(i + 1) / n);
  }
  cdf.max_over_median = max / percentile(sorted, 50.0);
  return cdf;
}

void CdfExport::write_csv(std::ostream& out) const {
  out << "normalized_time,cum_fraction\n";
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    out << detail::format_double(normalized[i]) << ','
        << detail::format_double(cum_fraction[i]) << '\n';
  }
}

double speedup(double baseline_makespan, double candidate_makespan) {
  if (!(baseline_makespan > 0.0) || !(candidate_makespan > 0.0)) {
    throw InvalidMetric("speedup needs positive makespans");
  }
  return baseline_makespan / candidate_makespan;
}

double geometric_mean(std::span<const double> values) {
  if (values.empty()) throw EmptyInput("geometric mean of no values");
  double log_sum = 0.0;
  for (double v : values) {
    if (!(v > 0.0)) throw InvalidMetric("geometric mean needs positive values");
    log_sum += std::log(v);
  }
  return std::exp(log_sum / static_cast<double>(values.size()));
}

double mean(std::span<const double> values) {
  if (values.empty()) throw EmptyInput("mean of no values");
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

}  // namespace trajsched
