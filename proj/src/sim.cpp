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

#include "trajsched/sim.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <optional>
#include <ostream>
#include <queue>
#include <set>
#include <unordered_map>

#include "json.hpp"
#include "text_util.h"
#include "trajsched/errors.h"

namespace trajsched {

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kStepGenerationDone:
      return "step_generation_done";
    case EventKind::kMigrationDone:
      return "migration_done";
    case EventKind::kToolDone:
      return "tool_done";
    case EventKind::kPredictionReady:
      return "prediction_ready";
    case EventKind::kAdmitTick:
      return "admit_tick";
  }
  return "?";
}

std::uint64_t EventLog::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& e : events_) {
    mix(std::bit_cast<std::uint64_t>(e.time));
    mix(static_cast<std::uint64_t>(e.kind));
    mix(e.trajectory_id);
    mix(e.worker);
  }
  return h;
}

void EventLog::write_jsonl(std::ostream& out) const {
  for (const auto& e : events_) {
    nlohmann::json j = {{"t", e.time},
                        {"kind", to_string(e.kind)},
                        {"trajectory", e.trajectory_id},
                        {"worker", e.worker}};
    out << j.dump() << '\n';
  }
}

void SimConfig::validate() const {
  if (cluster.empty()) throw InvalidSpec("cluster has no workers");
  validate_cluster(cluster, profile);
  if (!(prefill_speedup > 0.0) || !std::isfinite(prefill_speedup)) {
    throw InvalidSpec("prefill_speedup must be > 0");
  }
  if (aggregate_bucket < 1) throw InvalidSpec("aggregate_bucket must be >= 1");
  link.validate();
  const bool needs_predictions =
      uses_predictions(policies.scheduler) ||
      policies.placement.kind == PlacementKind::kPlan;
  if (needs_predictions && !estimator) {
    throw InvalidSpec("policy '" + to_string(policies.scheduler) + "+" +
                      policies.placement.to_string() +
                      "' needs a length predictor");
  }
}

std::vector<double> RunMetrics::completion_times() const {
  std::vector<double> out;
  out.reserve(trajectories.size());
  for (const auto& t : trajectories) out.push_back(t.completion_time);
  return out;
}

std::string RunMetrics::to_json() const {
  nlohmann::json traj = nlohmann::json::array();
  for (const auto& t : trajectories) {
    const auto& b = t.breakdown;
    traj.push_back({{"id", t.id},
                    {"completion_s", t.completion_time},
                    {"steps", t.steps},
                    {"decode_tokens", t.decode_tokens},
                    {"queueing_s", b.queueing},
                    {"base_compute_s", b.base_compute},
                    {"interference_s", b.interference_overhead},
                    {"tool_s", b.tool_time},
                    {"exposed_migration_s", b.exposed_migration},
                    {"exposed_prediction_s", b.exposed_prediction},
                    {"total_s", b.total}});
  }
  nlohmann::json j = {{"makespan_s", makespan},
                      {"throughput_tok_s", throughput},
                      {"total_decode_tokens", total_decode_tokens},
                      {"preemptions", preemptions},
                      {"migrations", migrations},
                      {"migrations_cancelled", migrations_cancelled},
                      {"exposed_migration_s", exposed_migration},
                      {"planned_makespan_s", planned_makespan},
                      {"worker_busy_fraction", worker_busy_fraction},
                      {"worker_generated_tokens", worker_generated_tokens},
                      {"trajectories", traj}};
  return j.dump(2);
}

double rebatch_rate(const ProfileTable& profile, std::uint32_t mp,
                    std::uint32_t batch) {
  if (batch < 1) throw PreconditionViolation("rebatch_rate needs batch >= 1");
  return 1.0 / (profile.base_per_token_time(mp) *
                profile.interference_factor(mp, batch));
}

namespace {

// Remaining work below this (token-equivalents) counts as finished.
constexpr double kWorkEpsilon = 1e-6;

struct Event {
  Seconds time;
  EventKind kind;
  TrajectoryId trajectory_id;
  std::uint32_t worker;
  std::uint64_t version;
  std::uint64_t seq;
};

struct EventAfter {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    if (a.kind != b.kind) return a.kind > b.kind;
    if (a.trajectory_id != b.trajectory_id) {
      return a.trajectory_id > b.trajectory_id;
    }
    return a.seq > b.seq;
  }
};

enum class Phase { kArriving, kQueued, kActive, kTool, kBlocked, kDone };

struct TrajState {
  const Trajectory* traj = nullptr;
  std::size_t step = 0;
  Phase phase = Phase::kArriving;
  std::uint32_t worker = 0;
  double remaining = 0.0;
  Seconds pending_since = 0.0;
  MakespanBreakdown bd;
  Seconds completion = 0.0;

  double pred_remaining = 0.0;
  double pred_total = 0.0;
  bool prediction_pending = false;
  Seconds prediction_ready_at = 0.0;
  Seconds tool_end = 0.0;

  std::optional<MigrationRequest> migration;
  bool migration_eligible = false;
  bool migration_in_flight = false;
};

struct WorkerState {
  WorkerConfig config;
  double per_token_time = 0.0;
  std::vector<double> factors;  // factors[b - 1]
  WorkerQueue queue;
  Seconds last = 0.0;
  std::uint64_t version = 0;
  Seconds busy = 0.0;
  TokenCount generated = 0;

  WorkerState(WorkerConfig c, SchedulerPolicy policy)
      : config(c), queue(policy, c.max_active) {}

  double factor(std::size_t batch) const {
    return factors[std::min(batch, factors.size()) - 1];
  }
};

class Simulator {
 public:
  Simulator(std::span<const Trajectory> workload, const SimConfig& config)
      : config_((config.validate(), config)),
        router_(config.policies.placement, config.cluster.size()) {
    if (workload.empty()) throw EmptyInput("workload has no trajectories");
    predictions_ = uses_predictions(config.policies.scheduler) ||
                   config.policies.placement.kind == PlacementKind::kPlan;
    for (const auto& w : config.cluster) {
      WorkerState ws(w, config.policies.scheduler);
      ws.per_token_time = config.profile.base_per_token_time(w.mp_degree);
      for (std::uint32_t b = 1; b <= w.max_active; ++b) {
        ws.factors.push_back(config.profile.interference_factor(w.mp_degree, b));
      }
      workers_.push_back(std::move(ws));
    }
    std::set<TrajectoryId> seen;
    for (const auto& t : workload) {
      if (!seen.insert(t.id()).second) {
        throw InvalidSpec("duplicate trajectory id " + std::to_string(t.id()));
      }
      TrajState s;
      s.traj = &t;
      index_.emplace(t.id(), states_.size());
      states_.push_back(s);
      router_.register_trajectory(t.id());
    }
  }

  RunResult run() {
    for (auto& s : states_) {
      if (predictions_) apply_prediction(s, s.traj->created_at());
      push(s.traj->created_at(), EventKind::kAdmitTick, s.traj->id(), 0, 0);
    }
    if (config_.policies.placement.kind == PlacementKind::kPlan) make_plan();

    while (!events_.empty()) {
      const Event e = events_.top();
      events_.pop();
      if (e.kind == EventKind::kStepGenerationDone &&
          e.version != workers_[e.worker].version) {
        continue;
      }
      now_ = e.time;
      if (config_.record_events) {
        result_.log.append({e.time, e.kind, e.trajectory_id, e.worker});
      }
      switch (e.kind) {
        case EventKind::kStepGenerationDone:
          on_generation_done(e.worker);
          break;
        case EventKind::kMigrationDone:
          on_migration_done(state(e.trajectory_id));
          break;
        case EventKind::kToolDone:
          on_tool_done(state(e.trajectory_id));
          break;
        case EventKind::kPredictionReady:
          on_prediction_ready(state(e.trajectory_id));
          break;
        case EventKind::kAdmitTick:
          on_admit(state(e.trajectory_id));
          break;
      }
    }
    finalize();
    return std::move(result_);
  }

 private:
  TrajState& state(TrajectoryId id) { return states_[index_.at(id)]; }

  void push(Seconds t, EventKind kind, TrajectoryId id, std::uint32_t worker,
            std::uint64_t version) {
    events_.push(Event{t, kind, id, worker, version, seq_++});
  }

  // ---- placement plan -----------------------------------------------------

  void make_plan() {
    const std::size_t n = states_.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (states_[a].pred_total != states_[b].pred_total) {
        return states_[a].pred_total > states_[b].pred_total;
      }
      return states_[a].traj->id() < states_[b].traj->id();
    });
    std::vector<std::uint32_t> by_degree(workers_.size());
    std::iota(by_degree.begin(), by_degree.end(), 0);
    std::stable_sort(by_degree.begin(), by_degree.end(),
                     [&](std::uint32_t a, std::uint32_t b) {
                       return workers_[a].config.mp_degree >
                              workers_[b].config.mp_degree;
                     });
    by_degree.resize(std::min(by_degree.size(), n));

    PlacementProblem pb;
    for (auto i : order) pb.lengths.push_back(states_[i].pred_total);
    for (auto w : by_degree) {
      pb.workers.push_back(
          make_cost_model(config_.profile, workers_[w].config, n));
    }
    PlacementPlan plan;
    if (n > config_.aggregate_target) {
      const double threshold = threshold_for_target(
          pb, config_.aggregate_bucket, config_.aggregate_target);
      plan = presorted_dp_aggregated(pb, threshold, config_.aggregate_bucket,
                                     true);
    } else {
      plan = presorted_dp_balanced(pb);
    }
    result_.metrics.planned_makespan = plan.predicted_makespan;
    group_worker_ = by_degree;
    for (std::size_t r = 0; r < n; ++r) {
      router_.bind(states_[order[r]].traj->id(),
                   group_worker_[plan.assignment[r]]);
    }
    retargeter_.emplace(plan.group_sizes, n);
    for (const auto& s : states_) retargeter_->update(s.traj->id(), s.pred_total);
  }

  // ---- worker progress ----------------------------------------------------

  void advance(WorkerState& w) {
    const Seconds dt = now_ - w.last;
    w.last = now_;
    const auto& active = w.queue.active();
    if (dt <= 0.0 || active.empty()) return;
    const double f = w.factor(active.size());
    const double tokens = dt / (w.per_token_time * f);
    const double base = dt / f;
    for (const auto& r : active) {
      TrajState& s = state(r.trajectory_id);
      s.remaining -= tokens;
      s.bd.base_compute += base;
      s.bd.interference_overhead += dt - base;
    }
    w.busy += dt;
  }

  void reschedule(std::uint32_t wi) {
    WorkerState& w = workers_[wi];
    ++w.version;
    const auto& active = w.queue.active();
    if (active.empty()) return;
    const GenRequest* next = nullptr;
    double least = 0.0;
    for (const auto& r : active) {
      const double rem = state(r.trajectory_id).remaining;
      if (!next || rem < least ||
          (rem == least && r.trajectory_id < next->trajectory_id)) {
        next = &r;
        least = rem;
      }
    }
    const double dt = std::max(0.0, least) * w.per_token_time *
                      w.factor(active.size());
    push(now_ + dt, EventKind::kStepGenerationDone, next->trajectory_id, wi,
         w.version);
  }

  void activated(std::span<const GenRequest> reqs) {
    for (const auto& r : reqs) {
      TrajState& s = state(r.trajectory_id);
      s.bd.queueing += now_ - s.pending_since;
      s.phase = Phase::kActive;
    }
  }

  // ---- event handlers -----------------------------------------------------

  void on_admit(TrajState& s) {
    const Trajectory& t = *s.traj;
    const TrajectoryId id = t.id();
    std::vector<std::size_t> loads;
    loads.reserve(workers_.size());
    for (const auto& w : workers_) loads.push_back(w.queue.load());
    const auto cached = router_.cache_location(id);
    const std::uint32_t wi = router_.route_step(id, loads);
    const bool hit = cached && *cached == wi;
    const Step& step = t.steps()[s.step];
    const double prefill = static_cast<double>(
        hit ? step.prefill_tokens : t.context_tokens_at(s.step));
    s.remaining = static_cast<double>(step.decode_tokens) +
                  prefill / config_.prefill_speedup;
    s.worker = wi;
    s.pending_since = now_;
    s.phase = Phase::kQueued;

    WorkerState& w = workers_[wi];
    advance(w);
    GenRequest req;
    req.trajectory_id = id;
    req.step_index = s.step;
    req.priority = s.pred_remaining;
    req.predicted_total = s.pred_total;
    req.enqueued_at = now_;
    const ScheduleOutcome out = w.queue.schedule(req);
    if (out.preemption) {
      ++result_.metrics.preemptions;
      TrajState& ev = state(out.preemption->evicted.trajectory_id);
      ev.phase = Phase::kQueued;
      ev.pending_since = now_;
      if (config_.recompute_on_evict) {
        ev.remaining += static_cast<double>(ev.traj->context_tokens_at(ev.step)) /
                        config_.prefill_speedup;
      }
    }
    activated(out.activated);
    reschedule(wi);
  }

  void on_generation_done(std::uint32_t wi) {
    WorkerState& w = workers_[wi];
    advance(w);
    std::vector<TrajectoryId> finished;
    // The event's own trajectory always finishes; near-simultaneous peers
    // within the tolerance finish with it.
    for (const auto& r : w.queue.active()) {
      if (state(r.trajectory_id).remaining <= kWorkEpsilon) {
        finished.push_back(r.trajectory_id);
      }
    }
    if (finished.empty()) {
      const auto& active = w.queue.active();
      const auto it = std::min_element(
          active.begin(), active.end(),
          [&](const GenRequest& a, const GenRequest& b) {
            const double ra = state(a.trajectory_id).remaining;
            const double rb = state(b.trajectory_id).remaining;
            return ra != rb ? ra < rb : a.trajectory_id < b.trajectory_id;
          });
      finished.push_back(it->trajectory_id);
    }
    std::sort(finished.begin(), finished.end());
    for (auto id : finished) {
      w.queue.complete(id);
      TrajState& s = state(id);
      s.remaining = 0.0;
      w.generated += s.traj->steps()[s.step].decode_tokens;
      step_finished(s);
    }
    activated(w.queue.admit());
    reschedule(wi);
    start_transfers();
  }

  void step_finished(TrajState& s) {
    const Trajectory& t = *s.traj;
    const Step& step = t.steps()[s.step];
    if (s.step + 1 == t.step_count()) {
      s.phase = Phase::kDone;
      s.completion = now_;
      if (retargeter_) retargeter_->finish(t.id());
      if (s.migration) {
        s.migration.reset();
        ++result_.metrics.migrations_cancelled;
      }
      return;
    }
    ++s.step;
    s.phase = Phase::kTool;
    s.tool_end = now_ + step.tool_latency;
    s.bd.tool_time += step.tool_latency;
    push(s.tool_end, EventKind::kToolDone, t.id(), s.worker, 0);
    if (predictions_) {
      s.prediction_pending = true;
      s.prediction_ready_at = now_ + config_.estimator->latency();
      push(s.prediction_ready_at, EventKind::kPredictionReady, t.id(),
           s.worker, 0);
    }
    if (s.migration) s.migration_eligible = true;
  }

  void apply_prediction(TrajState& s, Seconds at) {
    const Prediction p = config_.estimator->predict(*s.traj, s.step, at);
    s.pred_remaining = static_cast<double>(p.predicted_remaining_tokens);
    s.pred_total = static_cast<double>(p.predicted_total_tokens);
  }

  void on_prediction_ready(TrajState& s) {
    const double previous = s.pred_total;
    apply_prediction(s, now_);
    s.prediction_pending = false;
    if (retargeter_ && config_.policies.migration && !s.migration_in_flight &&
        s.pred_total != previous) {
      const TrajectoryId id = s.traj->id();
      const std::uint32_t target =
          group_worker_[retargeter_->retarget(id, s.pred_total)];
      const std::uint32_t host = *router_.binding(id);
      if (target == host) {
        s.migration.reset();
      } else {
        MigrationRequest req;
        req.trajectory_id = id;
        req.src_worker = host;
        req.dst_worker = target;
        req.cache_tokens = s.traj->context_tokens_at(s.step) -
                           s.traj->steps()[s.step].prefill_tokens;
        req.priority_len = s.pred_total;
        req.issued_at = now_;
        s.migration = req;
        // Created after the tool finished: wait for the next tool interval.
        s.migration_eligible = s.phase == Phase::kTool;
      }
    } else if (retargeter_) {
      retargeter_->update(s.traj->id(), s.pred_total);
    }
    release(s);
    start_transfers();
  }

  void on_tool_done(TrajState& s) {
    s.phase = Phase::kBlocked;
    release(s);
  }

  void on_migration_done(TrajState& s) {
    const MigrationRequest req = in_flight_.at(s.traj->id());
    busy_.erase(req.src_worker);
    busy_.erase(req.dst_worker);
    router_.bind(req.trajectory_id, req.dst_worker);
    router_.move_cache(req.trajectory_id, req.dst_worker);
    in_flight_.erase(s.traj->id());
    s.migration_in_flight = false;
    ++result_.metrics.migrations;
    release(s);
    start_transfers();
  }

  // Issues the next step once the tool, the prediction and any in-flight
  // migration are all done.
  void release(TrajState& s) {
    if (s.phase != Phase::kBlocked || s.prediction_pending ||
        s.migration_in_flight) {
      return;
    }
    const Seconds waited = now_ - s.tool_end;
    const Seconds pred_wait =
        predictions_ ? std::clamp(s.prediction_ready_at - s.tool_end, 0.0, waited)
                     : 0.0;
    s.bd.exposed_prediction += pred_wait;
    s.bd.exposed_migration += waited - pred_wait;
    result_.metrics.exposed_migration += waited - pred_wait;
    if (s.migration) {
      if (s.step + 1 == s.traj->step_count()) {
        s.migration.reset();
        ++result_.metrics.migrations_cancelled;
      } else {
        s.migration_eligible = false;
      }
    }
    s.phase = Phase::kArriving;
    push(now_, EventKind::kAdmitTick, s.traj->id(), s.worker, 0);
  }

  void start_transfers() {
    std::vector<MigrationRequest> ready;
    for (const auto& s : states_) {
      if (s.migration && s.migration_eligible) ready.push_back(*s.migration);
    }
    if (ready.empty()) return;
    for (const auto& req : schedule_transfers(ready, busy_)) {
      TrajState& s = state(req.trajectory_id);
      s.migration.reset();
      s.migration_eligible = false;
      s.migration_in_flight = true;
      busy_.insert(req.src_worker);
      busy_.insert(req.dst_worker);
      in_flight_[req.trajectory_id] = req;
      push(now_ + transfer_time(req, config_.link), EventKind::kMigrationDone,
           req.trajectory_id, req.dst_worker, 0);
    }
  }

  void finalize() {
    RunMetrics& m = result_.metrics;
    std::size_t unfinished = 0;
    for (const auto& s : states_) {
      if (s.phase != Phase::kDone) ++unfinished;
    }
    if (unfinished > 0) {
      std::size_t queued = 0;
      for (const auto& w : workers_) queued += w.queue.load();
      throw SimulatorStall(std::to_string(unfinished) +
                           " trajectories unfinished at t=" +
                           detail::format_double(now_) + " with " +
                           std::to_string(queued) + " requests queued");
    }
    for (const auto& s : states_) {
      TrajectoryResult r;
      r.id = s.traj->id();
      r.completion_time = s.completion;
      r.breakdown = s.bd;
      r.breakdown.total = s.completion - s.traj->created_at();
      r.steps = s.traj->step_count();
      r.decode_tokens = s.traj->true_total_tokens();
      m.makespan = std::max(m.makespan, s.completion);
      m.total_decode_tokens += r.decode_tokens;
      m.trajectories.push_back(r);
    }
    m.throughput = m.makespan > 0.0
                       ? static_cast<double>(m.total_decode_tokens) / m.makespan
                       : 0.0;
    for (const auto& w : workers_) {
      m.worker_busy_fraction.push_back(m.makespan > 0.0 ? w.busy / m.makespan
                                                        : 0.0);
      m.worker_generated_tokens.push_back(w.generated);
    }
  }

  SimConfig config_;
  Router router_;
  bool predictions_ = false;
  std::vector<WorkerState> workers_;
  std::vector<TrajState> states_;
  std::unordered_map<TrajectoryId, std::size_t> index_;
  std::priority_queue<Event, std::vector<Event>, EventAfter> events_;
  std::uint64_t seq_ = 0;
  Seconds now_ = 0.0;

  std::vector<std::uint32_t> group_worker_;
  std::optional<Retargeter> retargeter_;
  std::set<std::uint32_t> busy_;
  std::unordered_map<TrajectoryId, MigrationRequest> in_flight_;

  RunResult result_;
};

}  // namespace

RunResult run(std::span<const Trajectory> workload, const SimConfig& config) {
  return Simulator(workload, config).run();
}

}  // namespace trajsched
