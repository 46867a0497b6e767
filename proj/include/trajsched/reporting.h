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

#include <iosfwd>
#include <span>
#include <vector>

namespace trajsched {

// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value (at least
// the first). Throws EmptyInput, PreconditionViolation for p outside [0,100].
double percentile(std::span<const double> values, double p);

struct CdfExport {
  // Distinct completion times divided by the maximum, ascending; ends at 1.
  std::vector<double> normalized;
  // Fraction of samples <= normalized[i].
  std::vector<double> cum_fraction;
  // max / nearest-rank median.
  double max_over_median = 0.0;

  // `normalized_time,cum_fraction` rows under a header.
  void write_csv(std::ostream& out) const;
};

// Throws EmptyInput, InvalidMetric for a non-positive or non-finite time.
CdfExport normalized_cdf(std::span<const double> completion_times);

// baseline / candidate makespan.
double speedup(double baseline_makespan, double candidate_makespan);

double geometric_mean(std::span<const double> values);
double mean(std::span<const double> values);

}  // namespace trajsched
