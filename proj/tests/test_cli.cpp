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

#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "json.hpp"
#include "trajsched/cli.h"
#include "trajsched/errors.h"

namespace trajsched::cli {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "trajsched");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("trajsched_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

const std::vector<std::string> kSmall{"--n-prompts", "4", "--samples-per-prompt", "8",
                                      "--gpus", "4", "--max-active", "8"};

std::vector<std::string> with_small(std::vector<std::string> args) {
  args.insert(args.end(), kSmall.begin(), kSmall.end());
  return args;
}

TEST(Cli, HelpListsExactlyTheSchema) {
  const auto r = invoke({"--help"});
  ASSERT_EQ(r.code, kExitOk);
  std::set<std::string> in_help;
  const std::regex flag_re("(--[a-z][a-z0-9-]*)");
  for (std::sregex_iterator it(r.out.begin(), r.out.end(), flag_re), end; it != end; ++it) {
    in_help.insert((*it)[1]);
  }
  in_help.erase("--help");
  in_help.erase("--config");
  std::set<std::string> in_schema;
  for (const auto& o : config_schema()) in_schema.insert(o.flag);
  EXPECT_EQ(in_help, in_schema);
  EXPECT_NE(r.out.find("Precedence"), std::string::npos);
}

TEST(Cli, SchemaKeysUnique) {
  std::set<std::string> keys, flags;
  for (const auto& o : config_schema()) {
    EXPECT_TRUE(keys.insert(o.key).second) << o.key;
    EXPECT_TRUE(flags.insert(o.flag).second) << o.flag;
    EXPECT_FALSE(o.help.empty());
  }
}

TEST(Cli, ConfigErrorsNameTheFlag) {
  auto r = invoke({"run", "--scheduler", "lifo"});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("--scheduler"), std::string::npos);
  r = invoke({"run", "--sigma0", "-1"});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("--sigma0"), std::string::npos);
  r = invoke({"run", "--allocation", "fix:3"});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("--allocation"), std::string::npos);
  r = invoke({"run", "--gpus", "6", "--allocation", "fix:4"});
  EXPECT_EQ(r.code, kExitConfig);
  r = invoke({"run", "--seeds", "0,1"});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_EQ(invoke({"run", "--no-such-flag", "1"}).code, kExitConfig);
  EXPECT_EQ(invoke({}).code, kExitConfig);
}

TEST(Cli, MissingTraceIsRuntimeOrConfig) {
  const auto r = invoke(with_small({"run", "--trace", "/nonexistent/t.jsonl"}));
  EXPECT_NE(r.code, kExitOk);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, RunPrintsMetricsAndEvents) {
  TempDir dir;
  const auto events = dir.file("events.jsonl");
  const auto cdf = dir.file("cdf.csv");
  const auto r = invoke(with_small({"run", "--seeds", "3", "--dump-events", events,
                                    "--cdf-out", cdf}));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_GT(j["makespan_s"].get<double>(), 0.0);
  EXPECT_EQ(j["seed"].get<int>(), 3);
  EXPECT_EQ(j["cluster_degrees"].size(), 4u);
  std::istringstream ev(slurp(events));
  std::string line;
  std::size_t lines = 0;
  while (std::getline(ev, line)) {
    const auto e = nlohmann::json::parse(line);
    EXPECT_TRUE(e.contains("kind"));
    ++lines;
  }
  EXPECT_GT(lines, 32u);
  EXPECT_EQ(slurp(cdf).rfind("normalized_time,cum_fraction\n", 0), 0u);
  // Same seed, same output.
  EXPECT_EQ(invoke(with_small({"run", "--seeds", "3"})).out, r.out);
}

TEST(Cli, CompareRowAccounting) {
  const auto args = with_small({"compare", "--cells", "heddle,rr+least_load",
                                "--baseline", "rr+least_load", "--seeds", "0-4"});
  auto a1 = args;
  a1.insert(a1.end(), {"--jobs", "1"});
  auto a3 = args;
  a3.insert(a3.end(), {"--jobs", "3"});
  const auto r1 = invoke(a1);
  ASSERT_EQ(r1.code, kExitOk) << r1.err;
  const auto r3 = invoke(a3);
  EXPECT_EQ(r1.out, r3.out);

  std::istringstream csv(r1.out);
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line,
            "policy,seed,makespan_s,throughput_tok_s,p50_completion_s,p95_completion_s,"
            "max_completion_s,preemptions,migrations,exposed_migration_s,speedup_vs_baseline");
  std::size_t data = 0, summary = 0;
  while (std::getline(csv, line)) {
    std::vector<std::string> cols;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cols.push_back(c);
    ASSERT_EQ(cols.size(), 11u) << line;
    if (cols[1] == "mean") {
      ++summary;
    } else {
      ++data;
    }
    if (cols[0] == "rr+least_load") {
      EXPECT_EQ(cols[10], "1");
    }
  }
  EXPECT_EQ(data, 10u);
  EXPECT_EQ(summary, 2u);
}

TEST(Cli, CompareBaselineErrors) {
  auto r = invoke(with_small({"compare", "--cells", "heddle,rr", "--baseline", "sjf"}));
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("--baseline"), std::string::npos);
  r = invoke(with_small({"compare", "--cells", "heddle,rr"}));
  EXPECT_EQ(r.code, kExitConfig);
  r = invoke(with_small({"compare", "--cells", "heddle,bogus", "--baseline", "heddle"}));
  EXPECT_EQ(r.code, kExitConfig);
}

TEST(Cli, ApplyCell) {
  const auto base = build_config({});
  const auto c = apply_cell(base, "rr+least_load+nomig+fix:2");
  EXPECT_EQ(c.policies.scheduler, SchedulerPolicy::kRoundRobin);
  EXPECT_EQ(c.policies.placement.kind, PlacementKind::kLeastLoad);
  EXPECT_FALSE(c.policies.migration);
  EXPECT_EQ(c.allocation, "fix:2");
  EXPECT_EQ(apply_cell(base, "anneal").allocation, "anneal");
  EXPECT_THROW(apply_cell(base, "fix:3"), ConfigError);
  EXPECT_THROW(apply_cell(base, "heddle+"), ConfigError);
}

TEST(Cli, OracleCommand) {
  auto r = invoke({"oracle", "--oracle-instances", "100"});
  ASSERT_EQ(r.code, kExitOk) << r.out << r.err;
  std::istringstream lines(r.out);
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j["passed"].get<bool>());
    ++n;
  }
  EXPECT_EQ(n, 3u);

  r = invoke({"oracle", "--oracle-instances", "300", "--oracle-factor", "decreasing"});
  EXPECT_EQ(r.code, kExitOracle);
  bool found = false;
  std::istringstream l2(r.out);
  while (std::getline(l2, line)) {
    const auto j = nlohmann::json::parse(line);
    if (j["property"] == "contiguous_partition_optimal") {
      EXPECT_FALSE(j["passed"].get<bool>());
      EXPECT_TRUE(j.contains("counterexample"));
      found = true;
    }
  }
  EXPECT_TRUE(found);

  r = invoke({"oracle", "--oracle-max-n", "13"});
  EXPECT_EQ(r.code, kExitOracle);
  EXPECT_NE(r.out.find("OracleTooLarge"), std::string::npos);
}

TEST(Cli, GenAndReplay) {
  TempDir dir;
  const auto trace = dir.file("w.jsonl");
  auto r = invoke(with_small({"gen", "--seeds", "2", "--out", trace}));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto from_trace = invoke({"run", "--trace", trace, "--gpus", "4", "--max-active", "8",
                                  "--seeds", "2"});
  const auto generated = invoke(with_small({"run", "--seeds", "2"}));
  ASSERT_EQ(from_trace.code, kExitOk) << from_trace.err;
  EXPECT_EQ(nlohmann::json::parse(from_trace.out)["makespan_s"],
            nlohmann::json::parse(generated.out)["makespan_s"]);
  EXPECT_EQ(invoke({"gen", "--out", dir.file("w.csv")}).code, kExitConfig);
  EXPECT_EQ(invoke({"gen"}).code, kExitConfig);
}

TEST(Cli, ProfileSynthRoundTrip) {
  TempDir dir;
  const auto path = dir.file("p.csv");
  ASSERT_EQ(invoke({"profile-synth", "--out", path}).code, kExitOk);
  const auto text = slurp(path);
  EXPECT_EQ(text.rfind("mp_degree,batch_size,per_token_time_s\n", 0), 0u);
  const auto a = invoke(with_small({"run", "--profile", path}));
  const auto b = invoke(with_small({"run"}));
  ASSERT_EQ(a.code, kExitOk) << a.err;
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, ConfigFilePrecedence) {
  TempDir dir;
  const auto ini = dir.file("c.ini");
  {
    std::ofstream f(ini);
    f << "[policy]\nscheduler = rr\nplacement = least_load\n[cluster]\ngpus = 4\n";
  }
  auto raw = load_config_file(ini);
  EXPECT_EQ(raw.at("policy.scheduler"), "rr");
  const auto c = build_config(raw);
  EXPECT_EQ(c.policies.scheduler, SchedulerPolicy::kRoundRobin);
  EXPECT_EQ(c.gpus, 4u);

  auto from_file = invoke({"run", "--config", ini, "--n-prompts", "4",
                           "--samples-per-prompt", "8", "--max-active", "8"});
  ASSERT_EQ(from_file.code, kExitOk) << from_file.err;
  EXPECT_EQ(nlohmann::json::parse(from_file.out)["policy"].get<std::string>().find("rr"), 0u);
  auto overridden = invoke({"run", "--config", ini, "--scheduler", "fcfs", "--n-prompts", "4",
                            "--samples-per-prompt", "8", "--max-active", "8"});
  ASSERT_EQ(overridden.code, kExitOk) << overridden.err;
  EXPECT_EQ(nlohmann::json::parse(overridden.out)["policy"].get<std::string>().find("fcfs"),
            0u);

  const auto bad = dir.file("bad.ini");
  {
    std::ofstream f(bad);
    f << "[policy]\nschedular = rr\n";
  }
  EXPECT_THROW(load_config_file(bad), ConfigError);
  EXPECT_EQ(invoke({"run", "--config", bad}).code, kExitConfig);
  EXPECT_EQ(invoke({"run", "--config", dir.file("missing.ini")}).code, kExitConfig);
}

TEST(Cli, BuildConfigDefaults) {
  const auto c = build_config({});
  EXPECT_EQ(c.gpus, 8u);
  EXPECT_EQ(c.max_active, 32u);
  EXPECT_EQ(c.policies.scheduler, SchedulerPolicy::kPps);
  EXPECT_EQ(c.policies.placement.kind, PlacementKind::kPlan);
  EXPECT_TRUE(c.policies.migration);
  EXPECT_EQ(c.predictor.max_total_tokens, c.workload.max_output_tokens);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{0}));
  EXPECT_EQ(build_config({{"run.seeds", "0,2,5-7"}}).seeds,
            (std::vector<std::uint64_t>{0, 2, 5, 6, 7}));
}

}  // namespace
}  // namespace trajsched::cli
