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

#include "trajsched/model.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "text_util.h"
#include "trajsched/errors.h"

namespace trajsched {

Trajectory::Trajectory(TrajectoryId id, PromptGroupId prompt_group,
                       std::vector<Step> steps, Seconds created_at)
    : id_(id),
      prompt_group_(prompt_group),
      steps_(std::move(steps)),
      created_at_(created_at) {
  const auto tag = "trajectory " + std::to_string(id_);
  if (steps_.empty()) throw InvalidTrajectory(tag + ": no steps");
  if (!std::isfinite(created_at_) || created_at_ < 0.0) {
    throw InvalidTrajectory(tag + ": created_at must be finite and >= 0");
  }
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    const Step& s = steps_[i];
    if (s.decode_tokens < 1) {
      throw InvalidTrajectory(tag + ": step " + std::to_string(i) +
                              " has zero decode tokens");
    }
    if (!std::isfinite(s.tool_latency) || s.tool_latency < 0.0) {
      throw InvalidTrajectory(tag + ": step " + std::to_string(i) +
                              " has invalid tool latency");
    }
    total_tokens_ += s.decode_tokens;
  }
  if (steps_.back().tool_latency != 0.0) {
    throw InvalidTrajectory(tag + ": final step must not call a tool");
  }
}

TokenCount Trajectory::decoded_before(std::size_t step) const {
  TokenCount sum = 0;
  for (std::size_t i = 0; i < step && i < steps_.size(); ++i) {
    sum += steps_[i].decode_tokens;
  }
  return sum;
}

TokenCount Trajectory::context_tokens_at(std::size_t step) const {
  TokenCount sum = 0;
  for (std::size_t i = 0; i <= step && i < steps_.size(); ++i) {
    sum += steps_[i].prefill_tokens;
    if (i < step) sum += steps_[i].decode_tokens;
  }
  return sum;
}

// ---------------------------------------------------------------------------
// ProfileTable

ProfileTable ProfileTable::from_entries(std::map<Key, double> entries,
                                        bool monotone_mp) {
  ProfileTable table;
  for (const auto& [key, time] : entries) {
    const auto [mp, batch] = key;
    if (mp == 0 || !std::has_single_bit(mp)) {
      throw InvalidProfile("mp_degree " + std::to_string(mp) +
                           " is not a power of two");
    }
    if (batch == 0) throw InvalidProfile("batch_size must be >= 1");
    if (!std::isfinite(time) || time <= 0.0) {
      throw InvalidProfile("per_token_time must be positive at (" +
                           std::to_string(mp) + "," + std::to_string(batch) +
                           ")");
    }
    table.by_mp_[mp].emplace_back(batch, time);
  }
  for (auto& [mp, row] : table.by_mp_) {
    // std::map iteration already yields ascending batch per mp.
    if (row.front().first != 1) {
      throw InvalidProfile("mp_degree " + std::to_string(mp) +
                           " lacks a batch_size=1 entry");
    }
    for (std::size_t i = 1; i < row.size(); ++i) {
      if (row[i].second < row[i - 1].second) {
        throw InvalidProfile("per_token_time decreases with batch at mp=" +
                             std::to_string(mp));
      }
    }
  }
  if (monotone_mp) {
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& [mp, row] : table.by_mp_) {
      if (row.front().second > prev) {
        throw InvalidProfile("declared monotone-mp but base time rises at mp=" +
                             std::to_string(mp));
      }
      prev = row.front().second;
    }
  }
  table.entries_ = std::move(entries);
  table.monotone_mp_ = monotone_mp;
  return table;
}

ProfileTable ProfileTable::load_csv(std::istream& in) {
  static constexpr std::string_view kHeader =
      "mp_degree,batch_size,per_token_time_s";
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  ++line_no;
  if (detail::trim(line) != kHeader) {
    throw ParseError(line_no, "expected header '" + std::string(kHeader) + "'");
  }
  std::map<Key, double> entries;
  std::size_t blank_at = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) {
      if (blank_at == 0) blank_at = line_no;
      continue;
    }
    if (blank_at != 0) throw ParseError(blank_at, "blank line inside table");
    const auto fields = detail::split(line, ',');
    if (fields.size() != 3) throw ParseError(line_no, "expected 3 fields");
    const auto mp = detail::parse_int<std::uint32_t>(fields[0]);
    const auto batch = detail::parse_int<std::uint32_t>(fields[1]);
    const auto time = detail::parse_double(fields[2]);
    if (!mp || !batch || !time) throw ParseError(line_no, "malformed number");
    if (!std::isfinite(*time) || *time <= 0.0) {
      throw ParseError(line_no, "per_token_time_s must be positive");
    }
    if (!entries.emplace(Key{*mp, *batch}, *time).second) {
      throw ParseError(line_no, "duplicate (mp_degree, batch_size)");
    }
  }
  return from_entries(std::move(entries));
}

void ProfileTable::save_csv(std::ostream& out) const {
  out << "mp_degree,batch_size,per_token_time_s\n";
  for (const auto& [key, time] : entries_) {
    out << key.first << ',' << key.second << ',' << detail::format_double(time)
        << '\n';
  }
}

double ProfileTable::per_token_time(std::uint32_t mp,
                                    std::uint32_t batch) const {
  const auto it = entries_.find(Key{mp, batch});
  if (it == entries_.end()) {
    throw MissingProfileEntry("(mp=" + std::to_string(mp) +
                              ", batch=" + std::to_string(batch) + ")");
  }
  return it->second;
}

double ProfileTable::base_per_token_time(std::uint32_t mp) const {
  return per_token_time(mp, 1);
}

double ProfileTable::interference_factor(std::uint32_t mp,
                                         std::uint32_t batch) const {
  if (batch < 1) throw PreconditionViolation("batch must be >= 1");
  const auto it = by_mp_.find(mp);
  if (it == by_mp_.end()) {
    throw MissingProfileEntry("mp=" + std::to_string(mp));
  }
  const auto& row = it->second;
  const double base = row.front().second;
  if (batch >= row.back().first) return row.back().second / base;
  const auto hi = std::lower_bound(
      row.begin(), row.end(), batch,
      [](const auto& entry, std::uint32_t b) { return entry.first < b; });
  if (hi->first == batch) return hi->second / base;
  const auto lo = std::prev(hi);
  const double w = static_cast<double>(batch - lo->first) /
                   static_cast<double>(hi->first - lo->first);
  return (lo->second + w * (hi->second - lo->second)) / base;
}

std::vector<std::uint32_t> ProfileTable::mp_degrees() const {
  std::vector<std::uint32_t> out;
  for (const auto& [mp, row] : by_mp_) out.push_back(mp);
  return out;
}

std::uint32_t ProfileTable::max_batch(std::uint32_t mp) const {
  const auto it = by_mp_.find(mp);
  if (it == by_mp_.end()) {
    throw MissingProfileEntry("mp=" + std::to_string(mp));
  }
  return it->second.back().first;
}

ProfileTable synthesize_profile(const SyntheticProfileParams& p) {
  if (p.c0 <= 0.0 || p.c1 < 0.0 || p.max_batch < 1 || p.mp_degrees.empty()) {
    throw InvalidSpec("synthetic profile parameters out of range");
  }
  std::map<ProfileTable::Key, double> entries;
  for (const auto mp : p.mp_degrees) {
    const double base = p.c0 / std::pow(static_cast<double>(mp), p.gamma);
    for (std::uint32_t b = 1; b <= p.max_batch; ++b) {
      entries[{mp, b}] = base * (1.0 + p.c1 * static_cast<double>(b - 1));
    }
  }
  return ProfileTable::from_entries(std::move(entries), p.gamma >= 0.0);
}

// ---------------------------------------------------------------------------
// InterferenceFn

InterferenceFn::InterferenceFn(std::uint32_t mp_degree,
                               std::vector<double> factors)
    : mp_(mp_degree), factors_(std::move(factors)) {
  if (factors_.empty() || factors_.front() != 1.0) {
    throw InvalidProfile("interference factor at batch 1 must be exactly 1");
  }
  for (std::size_t i = 1; i < factors_.size(); ++i) {
    if (!(factors_[i] >= factors_[i - 1])) {
      throw InvalidProfile("interference factor must be non-decreasing");
    }
  }
}

InterferenceFn InterferenceFn::from_profile(const ProfileTable& profile,
                                            std::uint32_t mp) {
  const std::uint32_t max_b = profile.max_batch(mp);
  std::vector<double> factors(max_b);
  for (std::uint32_t b = 1; b <= max_b; ++b) {
    factors[b - 1] = profile.interference_factor(mp, b);
  }
  return InterferenceFn(mp, std::move(factors));
}

double InterferenceFn::factor(std::uint64_t batch) const {
  if (batch < 1) throw PreconditionViolation("batch must be >= 1");
  const auto idx = std::min<std::uint64_t>(batch, factors_.size()) - 1;
  return factors_[idx];
}

void validate_cluster(std::span<const WorkerConfig> workers,
                      const ProfileTable& profile) {
  if (workers.empty()) throw InvalidSpec("cluster has no workers");
  for (const auto& w : workers) {
    if (!profile.has_mp(w.mp_degree)) {
      throw InvalidSpec("worker " + std::to_string(w.worker_id) +
                        " uses unprofiled mp_degree " +
                        std::to_string(w.mp_degree));
    }
    if (w.max_active < 1) {
      throw InvalidSpec("worker " + std::to_string(w.worker_id) +
                        " has max_active 0");
    }
  }
}

// ---------------------------------------------------------------------------
// Makespan decomposition

bool MakespanBreakdown::identity_holds(double rel_tol) const {
  const double parts[] = {queueing, base_compute, interference_overhead,
                          tool_time, exposed_migration, exposed_prediction};
  for (double p : parts) {
    if (!(p >= 0.0)) return false;
  }
  const double scale = std::max(std::abs(total), 1e-300);
  return std::abs(total - component_sum()) <= rel_tol * scale;
}

StepTiming StepTiming::at_constant_rate(std::size_t step_index,
                                        TokenCount tokens,
                                        double per_token_time, double alpha,
                                        Seconds queueing, Seconds tool) {
  StepTiming t;
  t.step_index = step_index;
  t.queueing = queueing;
  t.base_compute = static_cast<double>(tokens) * per_token_time;
  t.interference_overhead =
      static_cast<double>(tokens) * (alpha - 1.0) * per_token_time;
  t.tool = tool;
  return t;
}

MakespanBreakdown trajectory_makespan(const Trajectory& traj,
                                      std::span<const StepTiming> log) {
  std::vector<const StepTiming*> by_step(traj.step_count(), nullptr);
  for (const auto& rec : log) {
    if (rec.step_index >= by_step.size()) {
      throw IncompleteTrace("step " + std::to_string(rec.step_index) +
                            " out of range for trajectory " +
                            std::to_string(traj.id()));
    }
    if (by_step[rec.step_index] != nullptr) {
      throw IncompleteTrace("step " + std::to_string(rec.step_index) +
                            " recorded twice");
    }
    by_step[rec.step_index] = &rec;
  }
  MakespanBreakdown b;
  for (std::size_t i = 0; i < by_step.size(); ++i) {
    const StepTiming* rec = by_step[i];
    if (rec == nullptr) {
      throw IncompleteTrace("trajectory " + std::to_string(traj.id()) +
                            " missing step " + std::to_string(i));
    }
    b.queueing += rec->queueing;
    b.base_compute += rec->base_compute;
    b.interference_overhead += rec->interference_overhead;
    b.tool_time += rec->tool;
    b.exposed_migration += rec->exposed_migration;
    b.exposed_prediction += rec->exposed_prediction;
  }
  b.total = b.component_sum();
  return b;
}

}  // namespace trajsched
