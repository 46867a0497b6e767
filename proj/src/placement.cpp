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

#include "trajsched/placement.h"

#include <algorithm>
#include <cmath>
#include <functional>

#include "json.hpp"
#include "text_util.h"
#include "trajsched/errors.h"

namespace trajsched {

void throw_group_size_zero() {
  throw PreconditionViolation("group size must be >= 1");
}

bool WorkerCostModel::monotone() const {
  for (std::size_t i = 1; i < factors.size(); ++i) {
    if (!(factors[i] >= factors[i - 1])) return false;
  }
  return true;
}

WorkerCostModel make_cost_model(const ProfileTable& profile,
                                const WorkerConfig& worker,
                                std::size_t max_group_size,
                                double queue_fill) {
  if (!(queue_fill > 0.0 && queue_fill <= 1.0)) {
    throw PreconditionViolation("queue_fill must be in (0, 1]");
  }
  WorkerCostModel model;
  model.worker_id = worker.worker_id;
  model.mp_degree = worker.mp_degree;
  model.per_token_time = profile.base_per_token_time(worker.mp_degree);
  const std::size_t size = std::max<std::size_t>(max_group_size, 1);
  const std::uint32_t cap = worker.max_active;
  model.factors.resize(size);
  for (std::size_t s = 1; s <= size; ++s) {
    if (s <= cap) {
      model.factors[s - 1] = profile.interference_factor(
          worker.mp_degree, static_cast<std::uint32_t>(s));
    } else {
      model.factors[s - 1] =
          profile.interference_factor(worker.mp_degree, cap) *
          std::max(1.0, queue_fill * static_cast<double>(s) /
                            static_cast<double>(cap));
    }
  }
  return model;
}

void PlacementProblem::validate() const {
  if (workers.empty()) throw PreconditionViolation("no workers");
  if (!weights.empty() && weights.size() != lengths.size()) {
    throw PreconditionViolation("weights and lengths differ in size");
  }
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (!std::isfinite(lengths[i]) || lengths[i] < 0.0) {
      throw PreconditionViolation("lengths must be finite and >= 0");
    }
    if (i > 0 && lengths[i] > lengths[i - 1]) {
      throw PreconditionViolation("lengths must be sorted descending");
    }
    if (weight(i) == 0) throw PreconditionViolation("zero item weight");
  }
  for (const auto& w : workers) {
    if (w.factors.empty() || !(w.per_token_time > 0.0)) {
      throw PreconditionViolation("worker cost model is empty");
    }
  }
  if (lengths.size() < workers.size()) {
    throw InfeasiblePartition(std::to_string(lengths.size()) +
                              " items cannot fill " +
                              std::to_string(workers.size()) + " workers");
  }
}

std::string PlacementPlan::to_json() const {
  nlohmann::json j = {{"boundaries", boundaries},
                      {"group_sizes", group_sizes},
                      {"predicted_makespan_s", predicted_makespan}};
  return j.dump();
}

namespace {

PlacementPlan plan_from_boundaries(const PlacementProblem& pb,
                                   std::vector<std::size_t> boundaries,
                                   double makespan) {
  PlacementPlan plan;
  plan.assignment.resize(pb.item_count());
  for (std::size_t g = 0; g + 1 < boundaries.size(); ++g) {
    std::size_t size = 0;
    for (std::size_t i = boundaries[g]; i < boundaries[g + 1]; ++i) {
      plan.assignment[i] = static_cast<std::uint32_t>(g);
      size += pb.weight(i);
    }
    plan.group_sizes.push_back(size);
  }
  plan.boundaries = std::move(boundaries);
  plan.predicted_makespan = makespan;
  return plan;
}

}  // namespace

PlacementPlan presorted_dp(const PlacementProblem& pb) {
  pb.validate();
  const std::size_t n = pb.item_count();
  const std::size_t m = pb.workers.size();
  const auto& len = pb.lengths;

  std::vector<std::uint64_t> prefix(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + pb.weight(i);

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(n + 1, kInf);
  std::vector<double> cur(n + 1, kInf);
  // parent[j][i]: split k chosen for dp[i][j].
  std::vector<std::uint32_t> parent((m + 1) * (n + 1), 0);

  const WorkerCostModel& first = pb.workers[0];
  for (std::size_t i = 1; i <= n; ++i) {
    prev[i] = group_cost(len[0], prefix[i], first);
  }

  for (std::size_t j = 2; j <= m; ++j) {
    const WorkerCostModel& w = pb.workers[j - 1];
    const bool prune = w.monotone();
    std::fill(cur.begin(), cur.end(), kInf);
    std::uint32_t* par = parent.data() + j * (n + 1);
    for (std::size_t i = j; i <= n; ++i) {
      double best = kInf;
      std::size_t arg = i - 1;
      for (std::size_t k = i - 1;; --k) {
        const double tail = group_cost(len[k], prefix[i] - prefix[k], w);
        if (prune && tail >= best) break;
        const double v = std::max(prev[k], tail);
        if (v < best) {
          best = v;
          arg = k;
        }
        if (k == j - 1) break;
      }
      cur[i] = best;
      par[i] = static_cast<std::uint32_t>(arg);
    }
    std::swap(prev, cur);
  }

  std::vector<std::size_t> boundaries(m + 1, 0);
  boundaries[m] = n;
  std::size_t i = n;
  for (std::size_t j = m; j >= 2; --j) {
    i = parent[j * (n + 1) + i];
    boundaries[j - 1] = i;
  }
  return plan_from_boundaries(pb, std::move(boundaries), prev[n]);
}

namespace {

PlacementProblem slice(const PlacementProblem& pb, std::size_t first,
                       std::size_t last, std::size_t w_first,
                       std::size_t w_last) {
  PlacementProblem sub;
  sub.lengths.assign(pb.lengths.begin() + first, pb.lengths.begin() + last);
  if (!pb.weights.empty()) {
    sub.weights.assign(pb.weights.begin() + first, pb.weights.begin() + last);
  }
  sub.workers.assign(pb.workers.begin() + w_first, pb.workers.begin() + w_last);
  return sub;
}

// Fills cuts[w_first .. w_last] for items [first, last).
void balance(const PlacementProblem& pb, std::size_t first, std::size_t last,
             std::size_t w_first, std::size_t w_last,
             std::vector<std::size_t>& cuts) {
  const std::size_t groups = w_last - w_first;
  if (groups == 0) return;
  if (groups == 1) {
    cuts[w_first] = first;
    cuts[w_last] = last;
    return;
  }
  const PlacementProblem sub = slice(pb, first, last, w_first, w_last);
  const PlacementPlan plan = presorted_dp(sub);
  std::size_t worst = 0;
  double worst_cost = -1.0;
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t b = plan.boundaries[g];
    const double c = group_cost(sub.lengths[b], plan.group_sizes[g],
                                sub.workers[g]);
    if (c > worst_cost) {
      worst_cost = c;
      worst = g;
    }
  }
  const std::size_t lo = first + plan.boundaries[worst];
  const std::size_t hi = first + plan.boundaries[worst + 1];
  balance(pb, first, lo, w_first, w_first + worst, cuts);
  balance(pb, hi, last, w_first + worst + 1, w_last, cuts);
  cuts[w_first + worst] = lo;
  cuts[w_first + worst + 1] = hi;
}

}  // namespace

PlacementPlan presorted_dp_balanced(const PlacementProblem& pb) {
  const PlacementPlan optimal = presorted_dp(pb);
  std::vector<std::size_t> cuts(pb.workers.size() + 1, 0);
  balance(pb, 0, pb.item_count(), 0, pb.workers.size(), cuts);
  return plan_from_boundaries(pb, std::move(cuts),
                              optimal.predicted_makespan);
}

PlacementPlan brute_force_partition(std::span<const double> lengths,
                                    std::span<const WorkerCostModel> workers,
                                    bool contiguous_only) {
  const std::size_t n = lengths.size();
  const std::size_t m = workers.size();
  if (n > kOracleMaxItems) {
    throw OracleTooLarge(std::to_string(n) + " items exceed the oracle cap of " +
                         std::to_string(kOracleMaxItems));
  }
  if (m == 0 || n == 0) throw PreconditionViolation("empty oracle instance");

  PlacementProblem pb;
  pb.lengths.assign(lengths.begin(), lengths.end());
  pb.workers.assign(workers.begin(), workers.end());

  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (contiguous_only) {
    pb.validate();
    std::vector<std::size_t> cuts(m + 1, 0);
    cuts[m] = n;
    std::vector<std::size_t> best_cuts;
    double best = kInf;
    // Choose b_1 < ... < b_{m-1} in [1, n-1].
    std::function<void(std::size_t, std::size_t)> rec =
        [&](std::size_t j, std::size_t lo) {
          if (j == m) {
            double worst = 0.0;
            for (std::size_t g = 0; g < m; ++g) {
              worst = std::max(worst, group_cost(lengths[cuts[g]],
                                                 cuts[g + 1] - cuts[g],
                                                 workers[g]));
            }
            if (worst < best) {
              best = worst;
              best_cuts = cuts;
            }
            return;
          }
          for (std::size_t b = lo; b + (m - j) <= n; ++b) {
            cuts[j] = b;
            rec(j + 1, b + 1);
          }
        };
    rec(1, 1);
    return plan_from_boundaries(pb, std::move(best_cuts), best);
  }

  double space = std::pow(static_cast<double>(m), static_cast<double>(n));
  if (space > 5e7) {
    throw OracleTooLarge("m^n = " + detail::format_double(space) +
                         " assignments");
  }
  std::vector<std::uint32_t> assign(n, 0);
  std::vector<std::uint32_t> best_assign;
  std::vector<double> longest(m);
  std::vector<std::uint64_t> count(m);
  double best = kInf;
  while (true) {
    std::fill(longest.begin(), longest.end(), 0.0);
    std::fill(count.begin(), count.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      longest[assign[i]] = std::max(longest[assign[i]], lengths[i]);
      ++count[assign[i]];
    }
    double worst = 0.0;
    for (std::size_t g = 0; g < m; ++g) {
      if (count[g] > 0) {
        worst = std::max(worst, group_cost(longest[g], count[g], workers[g]));
      }
    }
    if (worst < best) {
      best = worst;
      best_assign = assign;
    }
    std::size_t pos = 0;
    while (pos < n && ++assign[pos] == m) assign[pos++] = 0;
    if (pos == n) break;
  }
  PlacementPlan plan;
  plan.assignment = std::move(best_assign);
  plan.group_sizes.assign(m, 0);
  for (auto g : plan.assignment) ++plan.group_sizes[g];
  plan.predicted_makespan = best;
  return plan;
}

// ---------------------------------------------------------------------------
// Aggregation

AggregatedProblem aggregate_short(const PlacementProblem& pb, double threshold,
                                  std::size_t bucket_size) {
  if (bucket_size < 1) throw PreconditionViolation("bucket_size must be >= 1");
  if (!(threshold >= 0.0)) throw PreconditionViolation("threshold must be >= 0");
  AggregatedProblem out;
  out.problem.workers = pb.workers;
  const std::size_t n = pb.item_count();
  std::size_t i = 0;
  for (; i < n && !(pb.lengths[i] < threshold); ++i) {
    out.problem.lengths.push_back(pb.lengths[i]);
    out.problem.weights.push_back(pb.weight(i));
    out.expansion.emplace_back(i, i + 1);
  }
  while (i < n) {
    const std::size_t end = std::min(n, i + bucket_size);
    std::uint64_t w = 0;
    for (std::size_t k = i; k < end; ++k) w += pb.weight(k);
    out.problem.lengths.push_back(pb.lengths[i]);
    out.problem.weights.push_back(w);
    out.expansion.emplace_back(i, end);
    i = end;
  }
  return out;
}

PlacementPlan AggregatedProblem::expand(const PlacementPlan& reduced) const {
  PlacementPlan plan;
  plan.group_sizes = reduced.group_sizes;
  plan.predicted_makespan = reduced.predicted_makespan;
  plan.boundaries.reserve(reduced.boundaries.size());
  for (auto b : reduced.boundaries) {
    plan.boundaries.push_back(b == 0 ? 0 : expansion[b - 1].second);
  }
  const std::size_t n = expansion.empty() ? 0 : expansion.back().second;
  plan.assignment.resize(n);
  for (std::size_t r = 0; r < expansion.size(); ++r) {
    for (std::size_t i = expansion[r].first; i < expansion[r].second; ++i) {
      plan.assignment[i] = reduced.assignment[r];
    }
  }
  return plan;
}

double threshold_for_target(const PlacementProblem& pb,
                            std::size_t bucket_size, std::size_t target) {
  if (bucket_size < 1) throw PreconditionViolation("bucket_size must be >= 1");
  const std::size_t n = pb.item_count();
  const auto reduced_count = [&](std::size_t kept) {
    return kept + (n - kept + bucket_size - 1) / bucket_size;
  };
  if (n <= target) return 0.0;
  // Items are descending; threshold lengths[k] keeps every item >= it. Pick
  // the largest kept prefix (smallest threshold) that still meets target.
  std::vector<double> asc(pb.lengths.rbegin(), pb.lengths.rend());
  asc.erase(std::unique(asc.begin(), asc.end()), asc.end());
  double chosen = asc.back() + 1.0;
  for (auto it = asc.begin(); it != asc.end(); ++it) {
    const std::size_t kept = static_cast<std::size_t>(
        std::count_if(pb.lengths.begin(), pb.lengths.end(),
                      [&](double l) { return !(l < *it); }));
    if (reduced_count(kept) <= target) {
      chosen = *it;
      break;
    }
  }
  return chosen;
}

PlacementPlan presorted_dp_aggregated(const PlacementProblem& pb,
                                      double threshold,
                                      std::size_t bucket_size,
                                      bool balanced) {
  const auto solve = [balanced](const PlacementProblem& p) {
    return balanced ? presorted_dp_balanced(p) : presorted_dp(p);
  };
  auto agg = aggregate_short(pb, threshold, bucket_size);
  if (agg.problem.item_count() < pb.workers.size()) return solve(pb);
  return agg.expand(solve(agg.problem));
}

// ---------------------------------------------------------------------------
// Routing

PlacementPolicy PlacementPolicy::parse(std::string_view text) {
  PlacementPolicy p;
  if (text == "heddle" || text == "plan") {
    p.kind = PlacementKind::kPlan;
  } else if (text == "least_load") {
    p.kind = PlacementKind::kLeastLoad;
  } else if (text == "cache_aware") {
    p.kind = PlacementKind::kCacheAware;
  } else if (text.starts_with("hybrid")) {
    p.kind = PlacementKind::kHybrid;
    if (text.size() > 6) {
      const auto skew = text[6] == ':' ? detail::parse_double(text.substr(7))
                                       : std::nullopt;
      if (!skew || !(*skew >= 1.0)) {
        throw ConfigError("--placement: bad hybrid skew in '" +
                          std::string(text) + "'");
      }
      p.skew_threshold = *skew;
    }
  } else {
    throw ConfigError("--placement: unknown policy '" + std::string(text) +
                      "' (expected heddle|least_load|cache_aware|hybrid:<skew>)");
  }
  return p;
}

std::string PlacementPolicy::to_string() const {
  switch (kind) {
    case PlacementKind::kPlan:
      return "heddle";
    case PlacementKind::kLeastLoad:
      return "least_load";
    case PlacementKind::kCacheAware:
      return "cache_aware";
    case PlacementKind::kHybrid:
      return "hybrid:" + detail::format_double(skew_threshold);
  }
  return "?";
}

std::uint32_t least_loaded(std::span<const std::size_t> loads) {
  if (loads.empty()) throw PreconditionViolation("no workers to route to");
  return static_cast<std::uint32_t>(
      std::min_element(loads.begin(), loads.end()) - loads.begin());
}

Router::Router(PlacementPolicy policy, std::size_t n_workers)
    : policy_(policy), n_workers_(n_workers) {
  if (n_workers_ == 0) throw PreconditionViolation("router needs workers");
}

void Router::register_trajectory(TrajectoryId id) { entries_.try_emplace(id); }

Router::Entry& Router::entry(TrajectoryId id) {
  const auto it = entries_.find(id);
  if (it == entries_.end()) {
    throw UnknownTrajectory("trajectory " + std::to_string(id));
  }
  return it->second;
}

void Router::bind(TrajectoryId id, std::uint32_t worker) {
  if (worker >= n_workers_) throw PreconditionViolation("worker out of range");
  entry(id).bound = worker;
}

std::optional<std::uint32_t> Router::binding(TrajectoryId id) const {
  const auto it = entries_.find(id);
  return it == entries_.end() ? std::nullopt : it->second.bound;
}

std::optional<std::uint32_t> Router::cache_location(TrajectoryId id) const {
  const auto it = entries_.find(id);
  return it == entries_.end() ? std::nullopt : it->second.cache;
}

void Router::move_cache(TrajectoryId id, std::uint32_t worker) {
  if (worker >= n_workers_) throw PreconditionViolation("worker out of range");
  entry(id).cache = worker;
}

std::uint32_t Router::route_step(TrajectoryId id,
                                 std::span<const std::size_t> loads) {
  Entry& e = entry(id);
  if (loads.size() != n_workers_) {
    throw PreconditionViolation("load vector does not match worker count");
  }
  const auto cache_or_least = [&]() -> std::uint32_t {
    return e.cache ? *e.cache : least_loaded(loads);
  };
  std::uint32_t target = 0;
  switch (policy_.kind) {
    case PlacementKind::kPlan:
      target = e.bound ? *e.bound : least_loaded(loads);
      break;
    case PlacementKind::kLeastLoad:
      target = least_loaded(loads);
      break;
    case PlacementKind::kCacheAware:
      target = cache_or_least();
      break;
    case PlacementKind::kHybrid: {
      const auto [lo, hi] = std::minmax_element(loads.begin(), loads.end());
      const bool skewed = static_cast<double>(*hi) >
                          policy_.skew_threshold * static_cast<double>(*lo);
      target = skewed ? least_loaded(loads) : cache_or_least();
      break;
    }
  }
  e.cache = target;
  return target;
}

}  // namespace trajsched
