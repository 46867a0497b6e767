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

#include "trajsched/cli.h"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <ostream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "CLI11.hpp"
#include "json.hpp"
#include "text_util.h"
#include "trajsched/errors.h"
#include "trajsched/reporting.h"

namespace trajsched::cli {
namespace {

using detail::format_double;

const OptionSpec& spec_for(const std::string& key) {
  for (const auto& o : config_schema()) {
    if (o.key == key) return o;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw ConfigError(spec_for(key).flag + ": " + why);
}

class Reader {
 public:
  explicit Reader(const RawConfig& raw) : raw_(raw) {}

  std::string str(const std::string& key) const {
    const auto it = raw_.find(key);
    return it != raw_.end() ? it->second : spec_for(key).default_value;
  }

  bool given(const std::string& key) const {
    return !detail::trim(str(key)).empty();
  }

  double real(const std::string& key) const {
    const auto v = detail::parse_double(str(key));
    if (!v) bad(key, "expected a number, got '" + str(key) + "'");
    return *v;
  }

  template <typename Int>
  Int integer(const std::string& key) const {
    const auto v = detail::parse_int<Int>(str(key));
    if (!v) bad(key, "expected a non-negative integer, got '" + str(key) + "'");
    return *v;
  }

  bool flag(const std::string& key) const {
    const auto v = detail::trim(str(key));
    if (v == "on" || v == "true" || v == "1") return true;
    if (v == "off" || v == "false" || v == "0") return false;
    bad(key, "expected on|off, got '" + std::string(v) + "'");
  }

  template <typename Fn>
  auto parsed(const std::string& key, Fn fn) const {
    try {
      return fn(str(key));
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      bad(key, e.what());
    }
  }

 private:
  const RawConfig& raw_;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  for (auto part : detail::split(text, ',')) {
    const auto t = detail::trim(part);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

// "0,3,5-9"
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(text)) {
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      const auto v = detail::parse_int<std::uint64_t>(item);
      if (!v) throw ConfigError("bad seed '" + item + "'");
      out.push_back(*v);
      continue;
    }
    const auto lo = detail::parse_int<std::uint64_t>(item.substr(0, dash));
    const auto hi = detail::parse_int<std::uint64_t>(item.substr(dash + 1));
    if (!lo || !hi || *hi < *lo) throw ConfigError("bad seed range '" + item + "'");
    for (auto s = *lo; s <= *hi; ++s) out.push_back(s);
  }
  if (out.empty()) throw ConfigError("empty seed list");
  return out;
}

std::uint32_t fixed_degree(const std::string& allocation) {
  if (allocation.rfind("fix:", 0) != 0) return 0;
  const auto d = detail::parse_int<std::uint32_t>(allocation.substr(4));
  if (!d || *d == 0) {
    throw ConfigError("bad allocation '" + allocation + "'");
  }
  return *d;
}

void check_allocation(const ExperimentConfig& c) {
  if (c.allocation == "anneal") return;
  if (c.allocation.rfind("fix:", 0) != 0) {
    throw ConfigError("--allocation: expected anneal or fix:<degree>, got '" +
                      c.allocation + "'");
  }
  std::uint32_t d = 0;
  try {
    d = fixed_degree(c.allocation);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("--allocation: ") + e.what());
  }
  const auto& allowed = c.allocator.allowed_degrees;
  if (std::find(allowed.begin(), allowed.end(), d) == allowed.end()) {
    throw ConfigError("--allocation: degree " + std::to_string(d) +
                      " is not in --allowed-degrees");
  }
  if (c.gpus % d != 0) {
    throw ConfigError("--allocation: degree " + std::to_string(d) +
                      " does not divide --gpus " + std::to_string(c.gpus));
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + path + "' for writing");
  return f;
}

// Writes to `path`, or to `fallback` when path is empty.
template <typename Fn>
void emit(const std::string& path, std::ostream& fallback, Fn fn) {
  if (path.empty()) {
    fn(fallback);
    return;
  }
  auto f = open_out(path);
  fn(f);
}

std::string policy_label(const ExperimentConfig& c) {
  return to_string(c.policies.scheduler) + "+" +
         c.policies.placement.to_string() + "+" +
         (c.policies.migration ? "mig" : "nomig") + "+" + c.allocation;
}

RunResult simulate(const ExperimentConfig& config,
                   std::vector<Trajectory> workload,
                   const ProfileTable& profile, std::uint64_t seed,
                   bool record_events, std::vector<std::uint32_t>* degrees) {
  auto prepared = prepare_run(config, std::move(workload), profile, seed);
  prepared.sim.record_events = record_events;
  if (degrees) *degrees = prepared.degrees;
  return trajsched::run(prepared.workload, prepared.sim);
}

int cmd_run(const ExperimentConfig& c, std::ostream& out) {
  if (c.seeds.size() != 1) {
    throw ConfigError("--seeds: run takes exactly one seed; use compare for sweeps");
  }
  const auto seed = c.seeds.front();
  const auto profile = load_profile(c);
  std::vector<std::uint32_t> degrees;
  const auto result = simulate(c, load_workload(c, seed), profile, seed,
                               !c.dump_events.empty(), &degrees);
  auto j = nlohmann::json::parse(result.metrics.to_json());
  j["policy"] = policy_label(c);
  j["seed"] = seed;
  j["cluster_degrees"] = degrees;
  emit(c.out, out, [&](std::ostream& o) { o << j.dump(2) << "\n"; });
  if (!c.dump_events.empty()) {
    auto f = open_out(c.dump_events);
    result.log.write_jsonl(f);
  }
  if (!c.cdf_out.empty()) {
    auto f = open_out(c.cdf_out);
    normalized_cdf(result.metrics.completion_times()).write_csv(f);
  }
  return kExitOk;
}

struct CellRun {
  double makespan = 0.0;
  double throughput = 0.0;
  double p50 = 0.0;
  double p95 = 0.0;
  double max = 0.0;
  double preemptions = 0.0;
  double migrations = 0.0;
  double exposed_migration = 0.0;
  std::vector<double> completions;
};

void write_row(std::ostream& o, const std::string& policy,
               const std::string& seed, const CellRun& r, double speedup) {
  o << policy << "," << seed << "," << format_double(r.makespan) << ","
    << format_double(r.throughput) << "," << format_double(r.p50) << ","
    << format_double(r.p95) << "," << format_double(r.max) << ","
    << format_double(r.preemptions) << "," << format_double(r.migrations)
    << "," << format_double(r.exposed_migration) << ","
    << format_double(speedup) << "\n";
}

int cmd_compare(const ExperimentConfig& c, std::ostream& out) {
  if (c.cells.size() < 2) {
    throw ConfigError("--cells: compare needs at least two cells");
  }
  if (c.baseline.empty()) throw ConfigError("--baseline: required by compare");
  const auto base_it = std::find(c.cells.begin(), c.cells.end(), c.baseline);
  if (base_it == c.cells.end()) {
    throw ConfigError("--baseline: '" + c.baseline + "' is not one of --cells");
  }
  const auto baseline = static_cast<std::size_t>(base_it - c.cells.begin());
  std::vector<ExperimentConfig> cells;
  for (const auto& cell : c.cells) cells.push_back(apply_cell(c, cell));

  const auto profile = load_profile(c);
  std::vector<std::vector<Trajectory>> workloads;
  for (auto seed : c.seeds) workloads.push_back(load_workload(c, seed));

  const std::size_t n_seeds = c.seeds.size();
  const std::size_t tasks = cells.size() * n_seeds;
  std::vector<CellRun> runs(tasks);
  std::vector<std::exception_ptr> errors(tasks);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (auto t = next++; t < tasks; t = next++) {
      try {
        const auto ci = t / n_seeds;
        const auto si = t % n_seeds;
        const auto m = simulate(cells[ci], workloads[si], profile,
                                c.seeds[si], false, nullptr)
                           .metrics;
        auto& r = runs[t];
        r.makespan = m.makespan;
        r.throughput = m.throughput;
        r.completions = m.completion_times();
        r.p50 = percentile(r.completions, 50);
        r.p95 = percentile(r.completions, 95);
        r.max = percentile(r.completions, 100);
        r.preemptions = static_cast<double>(m.preemptions);
        r.migrations = static_cast<double>(m.migrations);
        r.exposed_migration = m.exposed_migration;
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };
  const auto n_threads = std::min<std::size_t>(c.jobs, tasks);
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  emit(c.out, out, [&](std::ostream& o) {
    o << "policy,seed,makespan_s,throughput_tok_s,p50_completion_s,"
         "p95_completion_s,max_completion_s,preemptions,migrations,"
         "exposed_migration_s,speedup_vs_baseline\n";
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
      for (std::size_t si = 0; si < n_seeds; ++si) {
        const auto& r = runs[ci * n_seeds + si];
        const auto& b = runs[baseline * n_seeds + si];
        write_row(o, c.cells[ci], std::to_string(c.seeds[si]), r,
                  speedup(b.makespan, r.makespan));
      }
    }
    auto mean_of = [&](std::size_t ci) {
      CellRun m;
      const double k = static_cast<double>(n_seeds);
      for (std::size_t si = 0; si < n_seeds; ++si) {
        const auto& r = runs[ci * n_seeds + si];
        m.makespan += r.makespan / k;
        m.throughput += r.throughput / k;
        m.p50 += r.p50 / k;
        m.p95 += r.p95 / k;
        m.max += r.max / k;
        m.preemptions += r.preemptions / k;
        m.migrations += r.migrations / k;
        m.exposed_migration += r.exposed_migration / k;
      }
      return m;
    };
    const auto base_mean = mean_of(baseline);
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
      const auto m = mean_of(ci);
      write_row(o, c.cells[ci], "mean", m,
                speedup(base_mean.makespan, m.makespan));
    }
  });

  if (!c.cdf_out.empty()) {
    auto f = open_out(c.cdf_out);
    f << "policy,seed,normalized_time,cum_fraction\n";
    for (std::size_t t = 0; t < tasks; ++t) {
      const auto cdf = normalized_cdf(runs[t].completions);
      for (std::size_t i = 0; i < cdf.normalized.size(); ++i) {
        f << c.cells[t / n_seeds] << "," << c.seeds[t % n_seeds] << ","
          << format_double(cdf.normalized[i]) << ","
          << format_double(cdf.cum_fraction[i]) << "\n";
      }
    }
  }
  return kExitOk;
}

int cmd_oracle(const ExperimentConfig& c, std::ostream& out) {
  auto oc = c.oracle;
  oc.seed = c.seeds.front();
  const auto reports = run_oracle_suite(oc);
  bool ok = true;
  emit(c.out, out, [&](std::ostream& o) {
    for (const auto& r : reports) {
      o << r.to_json() << "\n";
      ok = ok && r.passed;
    }
  });
  return ok ? kExitOk : kExitOracle;
}

int cmd_gen(const ExperimentConfig& c) {
  if (c.out.empty() || !c.out.ends_with(".jsonl")) {
    throw ConfigError("--out: gen writes a .jsonl trace path");
  }
  if (!c.trace_path.empty()) {
    throw ConfigError("--trace: gen generates a workload; drop the trace");
  }
  const auto w = load_workload(c, c.seeds.front());
  auto f = open_out(c.out);
  save_trace(w, f);
  return kExitOk;
}

int cmd_profile_synth(const ExperimentConfig& c, std::ostream& out) {
  if (!c.profile_path.empty()) {
    throw ConfigError("--profile: profile-synth synthesizes; drop the path");
  }
  const auto profile = load_profile(c);
  emit(c.out, out, [&](std::ostream& o) { profile.save_csv(o); });
  return kExitOk;
}

bool is_config_error(const Error& e) {
  return dynamic_cast<const ConfigError*>(&e) ||
         dynamic_cast<const InvalidSpec*>(&e) ||
         dynamic_cast<const ParseError*>(&e) ||
         dynamic_cast<const InvalidProfile*>(&e) ||
         dynamic_cast<const IncompleteTrace*>(&e) ||
         dynamic_cast<const InvalidTrajectory*>(&e) ||
         dynamic_cast<const MissingProfileEntry*>(&e) ||
         dynamic_cast<const InfeasibleBudget*>(&e);
}

}  // namespace

const std::vector<OptionSpec>& config_schema() {
  static const std::vector<OptionSpec> schema{
      {"workload.preset", "--workload", "coding", "Workload preset: coding|search|math"},
      {"workload.trace", "--trace", "", "Replay a .jsonl trace instead of generating"},
      {"workload.n_prompts", "--n-prompts", "", "Prompt groups (preset value when empty)"},
      {"workload.samples_per_prompt", "--samples-per-prompt", "", "Trajectories per prompt"},
      {"workload.step_count", "--step-count", "", "Step-count distribution, e.g. geometric:0.3"},
      {"workload.decode_tokens", "--decode-tokens", "", "Decode tokens per step, e.g. lognormal:6.9,0.9"},
      {"workload.tool_latency", "--tool-latency", "", "Tool latency seconds distribution"},
      {"workload.divergence", "--divergence", "", "Intra-group length divergence"},
      {"workload.max_output_tokens", "--max-output-tokens", "", "Generation cap per trajectory"},
      {"profile.path", "--profile", "", "Profile CSV (mp,batch,per_token_time); synthetic when empty"},
      {"profile.c0", "--profile-c0", "0.05", "Synthetic T(mp,1) at mp=1"},
      {"profile.gamma", "--profile-gamma", "0.8", "Synthetic MP scaling exponent"},
      {"profile.c1", "--profile-c1", "0.01", "Synthetic interference slope"},
      {"profile.max_batch", "--profile-max-batch", "256", "Synthetic largest profiled batch"},
      {"cluster.gpus", "--gpus", "8", "GPU budget"},
      {"cluster.max_active", "--max-active", "32", "Concurrent requests per worker"},
      {"cluster.allocation", "--allocation", "fix:1", "anneal|fix:<degree>"},
      {"policy.scheduler", "--scheduler", "pps", "pps|fcfs|rr|sjf"},
      {"policy.placement", "--placement", "heddle", "heddle|least_load|cache_aware|hybrid:<skew>"},
      {"policy.migration", "--migration", "on", "on|off"},
      {"predictor.sigma0", "--sigma0", "0.5", "Log-error std-dev of the prompt-only estimate"},
      {"predictor.decay", "--decay", "0.6", "Per-step error decay"},
      {"predictor.latency_s", "--predictor-latency", "0.1", "Prediction latency seconds"},
      {"migration.bandwidth_tokens_per_s", "--bandwidth", "40000", "KV transfer bandwidth, tokens/s"},
      {"migration.setup_s", "--migration-setup", "0.05", "Per-transfer setup seconds"},
      {"allocator.allowed_degrees", "--allowed-degrees", "1,2,4,8", "Admissible MP degrees"},
      {"allocator.cooling_rate", "--cooling-rate", "0.95", "Annealing temperature multiplier"},
      {"allocator.epsilon_frac", "--epsilon-frac", "0.001", "Stop temperature as a fraction of T0"},
      {"allocator.max_iters", "--max-iters", "2000", "Annealing iteration cap"},
      {"allocator.restarts", "--restarts", "1", "Independent annealing chains"},
      {"sim.prefill_speedup", "--prefill-speedup", "8", "Decode/prefill per-token time ratio"},
      {"sim.recompute_on_evict", "--recompute-on-evict", "off", "Preempted steps recompute their context"},
      {"sim.aggregate_target", "--aggregate-target", "1024", "Bucket short trajectories above this count"},
      {"sim.aggregate_bucket", "--aggregate-bucket", "8", "Trajectories per bucket"},
      {"run.seeds", "--seeds", "0", "Seed list, e.g. 0,1,5-9"},
      {"run.jobs", "--jobs", "1", "Parallel simulations in compare"},
      {"run.out", "--out", "", "Output path; stdout when empty"},
      {"run.dump_events", "--dump-events", "", "Event log JSONL path"},
      {"run.cdf_out", "--cdf-out", "", "Normalized completion-time CDF CSV path"},
      {"compare.cells", "--cells", "", "Policy cells, e.g. heddle,rr+least_load"},
      {"compare.baseline", "--baseline", "", "Cell the speedup column divides by"},
      {"oracle.instances", "--oracle-instances", "500", "Instances per partition property"},
      {"oracle.max_n", "--oracle-max-n", "10", "Largest instance drawn"},
      {"oracle.max_m", "--oracle-max-m", "3", "Most workers drawn"},
      {"oracle.factor", "--oracle-factor", "monotone", "monotone|decreasing interference tables"},
      {"oracle.sa_seeds", "--oracle-sa-seeds", "10", "Seeds for the annealing property"},
  };
  return schema;
}

RawConfig load_config_file(const std::string& path) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(path, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("--config: ") + e.what());
  }
  RawConfig raw;
  for (const auto& [section, node] : tree) {
    if (node.empty()) {
      throw ConfigError("--config: key '" + section + "' is outside a section");
    }
    for (const auto& [name, value] : node) {
      const auto key = section + "." + name;
      const auto& schema = config_schema();
      const bool known = std::any_of(schema.begin(), schema.end(),
                                     [&](const auto& o) { return o.key == key; });
      if (!known) throw ConfigError("--config: unknown key '" + key + "'");
      raw[key] = value.get_value<std::string>();
    }
  }
  return raw;
}

ExperimentConfig build_config(const RawConfig& raw) {
  for (const auto& [key, value] : raw) spec_for(key);
  const Reader r(raw);
  ExperimentConfig c;

  c.trace_path = r.str("workload.trace");
  c.workload = r.parsed("workload.preset",
                        [](const std::string& s) { return workload_preset(s); });
  if (r.given("workload.n_prompts")) {
    c.workload.n_prompts = r.integer<std::uint32_t>("workload.n_prompts");
  }
  if (r.given("workload.samples_per_prompt")) {
    c.workload.samples_per_prompt =
        r.integer<std::uint32_t>("workload.samples_per_prompt");
  }
  auto dist = [](const std::string& s) { return Distribution::parse(s); };
  if (r.given("workload.step_count")) {
    c.workload.step_count_dist = r.parsed("workload.step_count", dist);
  }
  if (r.given("workload.decode_tokens")) {
    c.workload.decode_tokens_dist = r.parsed("workload.decode_tokens", dist);
  }
  if (r.given("workload.tool_latency")) {
    c.workload.tool_latency_dist = r.parsed("workload.tool_latency", dist);
  }
  if (r.given("workload.divergence")) {
    c.workload.intra_group_divergence = r.real("workload.divergence");
  }
  if (r.given("workload.max_output_tokens")) {
    c.workload.max_output_tokens =
        r.integer<TokenCount>("workload.max_output_tokens");
  }
  r.parsed("workload.preset", [&](const std::string&) {
    c.workload.validate();
    return 0;
  });

  c.profile_path = r.str("profile.path");
  c.profile_params.c0 = r.real("profile.c0");
  c.profile_params.gamma = r.real("profile.gamma");
  c.profile_params.c1 = r.real("profile.c1");
  c.profile_params.max_batch = r.integer<std::uint32_t>("profile.max_batch");

  c.gpus = r.integer<std::uint32_t>("cluster.gpus");
  if (c.gpus == 0) bad("cluster.gpus", "must be >= 1");
  c.max_active = r.integer<std::uint32_t>("cluster.max_active");
  if (c.max_active == 0) bad("cluster.max_active", "must be >= 1");
  c.allocation = std::string(detail::trim(r.str("cluster.allocation")));

  c.policies.scheduler = r.parsed("policy.scheduler", [](const std::string& s) {
    return parse_scheduler_policy(s);
  });
  c.policies.placement = r.parsed("policy.placement", [](const std::string& s) {
    return PlacementPolicy::parse(s);
  });
  c.policies.migration = r.flag("policy.migration");

  c.predictor.sigma0 = r.real("predictor.sigma0");
  c.predictor.decay = r.real("predictor.decay");
  c.predictor.latency = r.real("predictor.latency_s");
  c.predictor.max_total_tokens = c.workload.max_output_tokens;
  r.parsed("predictor.sigma0", [&](const std::string&) {
    c.predictor.validate();
    return 0;
  });

  c.link.bandwidth_tokens_per_s = r.real("migration.bandwidth_tokens_per_s");
  c.link.per_transfer_setup = r.real("migration.setup_s");
  r.parsed("migration.bandwidth_tokens_per_s", [&](const std::string&) {
    c.link.validate();
    return 0;
  });

  c.allocator.allowed_degrees.clear();
  for (const auto& d : split_list(r.str("allocator.allowed_degrees"))) {
    const auto v = detail::parse_int<std::uint32_t>(d);
    if (!v || *v == 0) bad("allocator.allowed_degrees", "bad degree '" + d + "'");
    c.allocator.allowed_degrees.push_back(*v);
  }
  std::sort(c.allocator.allowed_degrees.begin(), c.allocator.allowed_degrees.end());
  c.allocator.allowed_degrees.erase(
      std::unique(c.allocator.allowed_degrees.begin(),
                  c.allocator.allowed_degrees.end()),
      c.allocator.allowed_degrees.end());
  c.allocator.cooling_rate = r.real("allocator.cooling_rate");
  c.allocator.epsilon_frac = r.real("allocator.epsilon_frac");
  c.allocator.max_iterations = r.integer<std::size_t>("allocator.max_iters");
  c.allocator.restarts = r.integer<std::size_t>("allocator.restarts");
  r.parsed("allocator.allowed_degrees", [&](const std::string&) {
    c.allocator.validate();
    return 0;
  });
  c.profile_params.mp_degrees = c.allocator.allowed_degrees;

  c.prefill_speedup = r.real("sim.prefill_speedup");
  if (!(c.prefill_speedup > 0.0)) bad("sim.prefill_speedup", "must be > 0");
  c.recompute_on_evict = r.flag("sim.recompute_on_evict");
  c.aggregate_target = r.integer<std::size_t>("sim.aggregate_target");
  c.aggregate_bucket = r.integer<std::size_t>("sim.aggregate_bucket");
  if (c.aggregate_bucket == 0) bad("sim.aggregate_bucket", "must be >= 1");

  c.seeds = r.parsed("run.seeds",
                     [](const std::string& s) { return parse_seeds(s); });
  c.jobs = r.integer<unsigned>("run.jobs");
  if (c.jobs == 0) bad("run.jobs", "must be >= 1");
  c.out = r.str("run.out");
  c.dump_events = r.str("run.dump_events");
  c.cdf_out = r.str("run.cdf_out");

  c.cells = split_list(r.str("compare.cells"));
  c.baseline = std::string(detail::trim(r.str("compare.baseline")));

  c.oracle.instances = r.integer<std::size_t>("oracle.instances");
  c.oracle.max_n = r.integer<std::size_t>("oracle.max_n");
  c.oracle.max_m = r.integer<std::size_t>("oracle.max_m");
  c.oracle.sa_seeds = r.integer<std::size_t>("oracle.sa_seeds");
  const auto factor = detail::trim(r.str("oracle.factor"));
  if (factor == "decreasing") {
    c.oracle.decreasing_factor = true;
  } else if (factor != "monotone") {
    bad("oracle.factor", "expected monotone|decreasing");
  }
  if (c.oracle.instances == 0 || c.oracle.max_n == 0 || c.oracle.max_m == 0 ||
      c.oracle.sa_seeds == 0) {
    throw ConfigError("--oracle-*: counts must be >= 1");
  }

  check_allocation(c);
  return c;
}

ExperimentConfig apply_cell(const ExperimentConfig& base,
                            const std::string& cell) {
  ExperimentConfig c = base;
  if (detail::trim(cell).empty()) throw ConfigError("--cells: empty cell");
  for (auto tok_view : detail::split(cell, '+')) {
    const std::string tok(detail::trim(tok_view));
    if (tok == "mig" || tok == "nomig") {
      c.policies.migration = tok == "mig";
      continue;
    }
    if (tok == "anneal" || tok.rfind("fix:", 0) == 0) {
      c.allocation = tok;
      continue;
    }
    try {
      c.policies.scheduler = parse_scheduler_policy(tok);
      continue;
    } catch (const Error&) {
    }
    try {
      c.policies.placement = PlacementPolicy::parse(tok);
      continue;
    } catch (const Error&) {
    }
    throw ConfigError("--cells: unknown token '" + tok + "' in cell '" + cell +
                      "'");
  }
  try {
    check_allocation(c);
  } catch (const ConfigError& e) {
    throw ConfigError("--cells: cell '" + cell + "': " + e.what());
  }
  return c;
}

ProfileTable load_profile(const ExperimentConfig& config) {
  if (config.profile_path.empty()) {
    try {
      return synthesize_profile(config.profile_params);
    } catch (const Error& e) {
      throw ConfigError(std::string("--profile-*: ") + e.what());
    }
  }
  std::ifstream in(config.profile_path);
  if (!in) throw ConfigError("--profile: cannot open '" + config.profile_path + "'");
  return ProfileTable::load_csv(in);
}

std::vector<Trajectory> load_workload(const ExperimentConfig& config,
                                      std::uint64_t seed) {
  if (!config.trace_path.empty()) {
    if (!config.trace_path.ends_with(".jsonl")) {
      throw ConfigError("--trace: only .jsonl traces are accepted");
    }
    return load_trace(std::filesystem::path(config.trace_path));
  }
  auto spec = config.workload;
  spec.seed = seed;
  return generate(spec);
}

PreparedRun prepare_run(const ExperimentConfig& config,
                        std::vector<Trajectory> workload,
                        const ProfileTable& profile, std::uint64_t seed) {
  PreparedRun p;
  p.workload = std::move(workload);

  auto oracle_cfg = config.predictor;
  oracle_cfg.seed = seed;
  auto estimator = std::make_shared<NoisyOracle>(oracle_cfg);

  if (config.allocation == "anneal") {
    AllocationProblem ap;
    ap.profile = profile;
    ap.max_active = config.max_active;
    ap.aggregate_target = config.aggregate_target;
    ap.bucket_size = config.aggregate_bucket;
    for (const auto& t : p.workload) {
      ap.lengths.push_back(static_cast<double>(
          estimator->predict(t, 0, t.created_at()).predicted_total_tokens));
    }
    std::sort(ap.lengths.rbegin(), ap.lengths.rend());
    auto sa = config.allocator;
    sa.seed = seed;
    p.degrees = anneal(ap, config.gpus, sa).best.degrees;
  } else {
    const auto d = fixed_degree(config.allocation);
    p.degrees.assign(config.gpus / d, d);
  }

  auto& s = p.sim;
  for (std::size_t i = 0; i < p.degrees.size(); ++i) {
    s.cluster.push_back(
        {static_cast<std::uint32_t>(i), p.degrees[i], config.max_active});
  }
  s.profile = profile;
  s.policies = config.policies;
  s.estimator = estimator;
  s.link = config.link;
  s.prefill_speedup = config.prefill_speedup;
  s.recompute_on_evict = config.recompute_on_evict;
  s.aggregate_target = config.aggregate_target;
  s.aggregate_bucket = config.aggregate_bucket;
  s.seed = seed;
  return p;
}

int main(int argc, const char* const* argv, std::ostream& out,
         std::ostream& err) {
  CLI::App app{"trajsched: rollout scheduling simulator for agentic RL"};
  app.require_subcommand(1);
  app.fallthrough();
  app.footer(
      "Precedence: built-in defaults < --config file < command-line flags.\n"
      "Config keys are [section] name = value, e.g. [policy] scheduler = rr.");

  std::string config_path;
  app.add_option("--config", config_path, "INI config file");
  std::map<std::string, std::string> flag_values;
  for (const auto& o : config_schema()) {
    auto* opt = app.add_option(o.flag, flag_values[o.key],
                               o.help + " [" + o.key + "]");
    if (!o.default_value.empty()) opt->default_str(o.default_value);
  }

  auto* run_cmd = app.add_subcommand("run", "Run one simulation, print metrics JSON");
  auto* compare_cmd = app.add_subcommand("compare", "Run a policy matrix over seeds, print CSV");
  auto* oracle_cmd = app.add_subcommand("oracle", "Check the partitioning and annealing oracles");
  auto* gen_cmd = app.add_subcommand("gen", "Generate a workload trace (.jsonl)");
  auto* synth_cmd = app.add_subcommand("profile-synth", "Emit a synthetic profile CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    RawConfig raw;
    if (!config_path.empty()) raw = load_config_file(config_path);
    for (const auto& o : config_schema()) {
      if (app.count(o.flag) > 0) raw[o.key] = flag_values[o.key];
    }
    const auto config = build_config(raw);
    if (run_cmd->parsed()) return cmd_run(config, out);
    if (compare_cmd->parsed()) return cmd_compare(config, out);
    if (oracle_cmd->parsed()) return cmd_oracle(config, out);
    if (gen_cmd->parsed()) return cmd_gen(config);
    if (synth_cmd->parsed()) return cmd_profile_synth(config, out);
    err << "error: no subcommand\n";
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return is_config_error(e) ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace trajsched::cli
