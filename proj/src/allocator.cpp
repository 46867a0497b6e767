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

#include "trajsched/allocator.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "trajsched/errors.h"

namespace trajsched {

void SAConfig::validate() const {
  if (!(cooling_rate > 0.0 && cooling_rate < 1.0)) {
    throw InvalidSpec("allocator cooling_rate must be in (0, 1)");
  }
  if (!(epsilon_frac > 0.0 && epsilon_frac < 1.0)) {
    throw InvalidSpec("allocator epsilon_frac must be in (0, 1)");
  }
  if (allowed_degrees.empty()) throw InvalidSpec("no allowed degrees");
  for (auto d : allowed_degrees) {
    if (d == 0) throw InvalidSpec("allowed degrees must be >= 1");
  }
  if (restarts < 1) throw InvalidSpec("allocator restarts must be >= 1");
  if (m_min < 1) throw InvalidSpec("allocator m_min must be >= 1");
  if (m_max != 0 && m_max < m_min) {
    throw InvalidSpec("allocator m_max must be >= m_min");
  }
}

std::vector<WorkerConfig> AllocationProblem::workers_for(
    const std::vector<std::uint32_t>& degrees) const {
  std::vector<WorkerConfig> out;
  out.reserve(degrees.size());
  for (std::size_t i = 0; i < degrees.size(); ++i) {
    out.push_back(WorkerConfig{static_cast<std::uint32_t>(i), degrees[i],
                               max_active});
  }
  return out;
}

PlacementProblem AllocationProblem::placement_problem(
    const std::vector<std::uint32_t>& degrees) const {
  PlacementProblem pb;
  pb.lengths = lengths;
  for (const auto& w : workers_for(degrees)) {
    pb.workers.push_back(make_cost_model(profile, w, lengths.size()));
  }
  return pb;
}

PlacementPlan AllocationProblem::plan(
    const std::vector<std::uint32_t>& degrees) const {
  const PlacementProblem pb = placement_problem(degrees);
  if (aggregate_target > 0 && pb.item_count() > aggregate_target) {
    const double threshold =
        threshold_for_target(pb, bucket_size, aggregate_target);
    return presorted_dp_aggregated(pb, threshold, bucket_size);
  }
  return presorted_dp(pb);
}

namespace {

using Degrees = std::vector<std::uint32_t>;

Degrees sorted_desc(Degrees d) {
  std::sort(d.begin(), d.end(), std::greater<>());
  return d;
}

bool allowed(const DegreeBounds& b, std::uint64_t d) {
  return std::binary_search(b.allowed.begin(), b.allowed.end(), d);
}

DegreeBounds normalized(DegreeBounds b) {
  std::sort(b.allowed.begin(), b.allowed.end());
  b.allowed.erase(std::unique(b.allowed.begin(), b.allowed.end()),
                  b.allowed.end());
  return b;
}

// reach[r][k]: some k allowed degrees sum to r.
std::vector<std::vector<char>> reachability(std::uint32_t budget,
                                            const DegreeBounds& b,
                                            std::size_t k_max) {
  std::vector<std::vector<char>> reach(budget + 1,
                                       std::vector<char>(k_max + 1, 0));
  reach[0][0] = 1;
  for (std::size_t k = 1; k <= k_max; ++k) {
    for (std::uint32_t r = 1; r <= budget; ++r) {
      for (auto d : b.allowed) {
        if (d <= r && reach[r - d][k - 1]) {
          reach[r][k] = 1;
          break;
        }
      }
    }
  }
  return reach;
}

}  // namespace

std::vector<Degrees> neighbours(const Degrees& degrees, Move move,
                                const DegreeBounds& raw) {
  const DegreeBounds b = normalized(raw);
  const Degrees current = sorted_desc(degrees);
  std::set<Degrees> out;
  const std::size_t m = degrees.size();
  switch (move) {
    case Move::kRedistribute:
      for (std::size_t a = 0; a < m; ++a) {
        const auto it =
            std::lower_bound(b.allowed.begin(), b.allowed.end(), degrees[a]);
        if (it == b.allowed.begin()) continue;
        const std::uint32_t lower = *std::prev(it);
        const std::uint32_t delta = degrees[a] - lower;
        for (std::size_t c = 0; c < m; ++c) {
          if (c == a || !allowed(b, std::uint64_t{degrees[c]} + delta)) continue;
          Degrees next = degrees;
          next[a] = lower;
          next[c] += delta;
          out.insert(sorted_desc(std::move(next)));
        }
      }
      break;
    case Move::kSplit:
      if (m + 1 > b.upper()) break;
      for (std::size_t a = 0; a < m; ++a) {
        for (auto x : b.allowed) {
          if (x >= degrees[a] || x < degrees[a] - x) continue;
          if (!allowed(b, degrees[a] - x)) continue;
          Degrees next = degrees;
          next[a] = x;
          next.push_back(degrees[a] - x);
          out.insert(sorted_desc(std::move(next)));
        }
      }
      break;
    case Move::kMerge:
      if (m < 2 || m - 1 < b.m_min) break;
      for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t c = a + 1; c < m; ++c) {
          if (!allowed(b, std::uint64_t{degrees[a]} + degrees[c])) continue;
          Degrees next;
          for (std::size_t i = 0; i < m; ++i) {
            if (i != a && i != c) next.push_back(degrees[i]);
          }
          next.push_back(degrees[a] + degrees[c]);
          out.insert(sorted_desc(std::move(next)));
        }
      }
      break;
  }
  out.erase(current);
  return {out.begin(), out.end()};
}

Degrees perturb(const Degrees& degrees, Move move, const DegreeBounds& bounds,
                Rng& rng) {
  auto options = neighbours(degrees, move, bounds);
  if (options.empty()) {
    std::vector<Move> moves;
    for (Move alt : {Move::kRedistribute, Move::kSplit, Move::kMerge}) {
      if (alt != move && !neighbours(degrees, alt, bounds).empty()) {
        moves.push_back(alt);
      }
    }
    if (moves.empty()) {
      throw NoFeasibleMove("no redistribute/split/merge applies to a " +
                           std::to_string(degrees.size()) + "-worker state");
    }
    const Move pick = moves[std::uniform_int_distribution<std::size_t>(
        0, moves.size() - 1)(rng)];
    options = neighbours(degrees, pick, bounds);
  }
  return options[std::uniform_int_distribution<std::size_t>(
      0, options.size() - 1)(rng)];
}

std::vector<Degrees> enumerate_allocations(std::uint32_t budget,
                                           const DegreeBounds& raw) {
  const DegreeBounds b = normalized(raw);
  std::vector<Degrees> out;
  Degrees cur;
  // Non-increasing sequences; `cap_idx` bounds the next degree.
  const auto rec = [&](auto&& self, std::uint32_t remaining,
                       std::size_t cap_idx) -> void {
    if (remaining == 0) {
      if (cur.size() >= b.m_min) out.push_back(cur);
      return;
    }
    if (cur.size() >= b.upper()) return;
    for (std::size_t i = cap_idx + 1; i-- > 0;) {
      const auto d = b.allowed[i];
      if (d > remaining) continue;
      cur.push_back(d);
      self(self, remaining - d, i);
      cur.pop_back();
    }
  };
  if (!b.allowed.empty()) rec(rec, budget, b.allowed.size() - 1);
  return out;
}

AllocationState exhaustive_best(const AllocationProblem& problem,
                                std::uint32_t budget,
                                const DegreeBounds& bounds) {
  DegreeBounds b = bounds;
  b.m_max = std::min(b.upper(), problem.lengths.size());
  const auto all = enumerate_allocations(budget, b);
  if (all.empty()) {
    throw InfeasibleBudget("no allowed composition of " +
                           std::to_string(budget));
  }
  AllocationState best;
  best.budget = budget;
  best.makespan = std::numeric_limits<double>::infinity();
  for (const auto& d : all) {
    const double c = problem.plan(d).predicted_makespan;
    if (c < best.makespan) {
      best.makespan = c;
      best.degrees = d;
    }
  }
  return best;
}

namespace {

struct Chain {
  AllocationState best;
  std::vector<Degrees> trace;
  std::vector<double> history;
  std::size_t iterations = 0;
};

Chain run_chain(const AllocationProblem& problem, std::uint32_t budget,
                const SAConfig& config, const DegreeBounds& bounds,
                const std::vector<std::vector<char>>& reach,
                std::map<Degrees, double>& memo, Rng& rng) {
  const auto cost = [&](const Degrees& d) {
    const auto it = memo.find(d);
    if (it != memo.end()) return it->second;
    const double c = problem.plan(d).predicted_makespan;
    memo.emplace(d, c);
    return c;
  };

  // Initial sample: a uniformly drawn feasible worker count, then degrees
  // drawn one at a time among those that keep the remainder completable.
  std::vector<std::size_t> counts;
  for (std::size_t k = bounds.m_min; k < reach[budget].size(); ++k) {
    if (reach[budget][k]) counts.push_back(k);
  }
  std::size_t k =
      counts[std::uniform_int_distribution<std::size_t>(0, counts.size() - 1)(
          rng)];
  Degrees cur;
  std::uint32_t remaining = budget;
  while (k > 0) {
    std::vector<std::uint32_t> choices;
    for (auto d : bounds.allowed) {
      if (d <= remaining && reach[remaining - d][k - 1]) choices.push_back(d);
    }
    const auto d = choices[std::uniform_int_distribution<std::size_t>(
        0, choices.size() - 1)(rng)];
    cur.push_back(d);
    remaining -= d;
    --k;
  }
  cur = sorted_desc(std::move(cur));

  Chain chain;
  double cur_cost = cost(cur);
  chain.best = AllocationState{cur, budget, cur_cost};
  double temperature = cur_cost;
  const double epsilon = config.epsilon_frac * temperature;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> pick_move(0, 2);

  while (temperature > epsilon && chain.iterations < config.max_iterations) {
    const Move move = static_cast<Move>(pick_move(rng));
    Degrees cand;
    try {
      cand = perturb(cur, move, bounds, rng);
    } catch (const NoFeasibleMove&) {
      break;
    }
    const double c = cost(cand);
    const double delta = c - cur_cost;
    if (delta < 0.0 || unit(rng) < std::exp(-delta / temperature)) {
      cur = std::move(cand);
      cur_cost = c;
    }
    if (cur_cost < chain.best.makespan) {
      chain.best = AllocationState{cur, budget, cur_cost};
    }
    chain.trace.push_back(cur);
    chain.history.push_back(chain.best.makespan);
    temperature *= config.cooling_rate;
    ++chain.iterations;
  }
  return chain;
}

}  // namespace

AnnealResult anneal(const AllocationProblem& problem, std::uint32_t budget,
                    const SAConfig& config) {
  config.validate();
  if (problem.lengths.empty()) throw EmptyInput("no trajectory lengths");
  DegreeBounds bounds =
      normalized(DegreeBounds{config.allowed_degrees, config.m_min, config.m_max});
  const std::size_t k_cap = std::min<std::size_t>(
      {bounds.upper(), problem.lengths.size(),
       budget / bounds.allowed.front()});
  bounds.m_max = std::max<std::size_t>(k_cap, 1);

  const auto reach = reachability(budget, bounds, k_cap);
  bool feasible = false;
  for (std::size_t k = bounds.m_min; k <= k_cap; ++k) {
    feasible = feasible || reach[budget][k];
  }
  if (!feasible) {
    throw InfeasibleBudget("budget " + std::to_string(budget) +
                           " has no allowed composition with " +
                           std::to_string(bounds.m_min) + ".." +
                           std::to_string(k_cap) + " workers");
  }

  std::map<Degrees, double> memo;
  Chain best;
  for (std::size_t r = 0; r < config.restarts; ++r) {
    Rng rng(derive_seed(config.seed, {0x616e6e65616c, r}));
    Chain chain = run_chain(problem, budget, config, bounds, reach, memo, rng);
    if (r == 0 || chain.best.makespan < best.best.makespan) {
      best = std::move(chain);
    }
  }
  AnnealResult result;
  result.best = best.best;
  result.plan = problem.plan(best.best.degrees);
  result.accepted_trace = std::move(best.trace);
  result.best_history = std::move(best.history);
  result.iterations = best.iterations;
  return result;
}

}  // namespace trajsched
