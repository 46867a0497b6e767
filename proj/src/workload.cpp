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

#include "trajsched/workload.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "text_util.h"
#include "trajsched/errors.h"

namespace trajsched {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Distribution

Distribution Distribution::constant(double value) {
  return {Family::kConstant, value, 0.0};
}
Distribution Distribution::lognormal(double mu, double sigma) {
  return {Family::kLognormal, mu, sigma};
}
Distribution Distribution::shifted_geometric(double p, double shift) {
  return {Family::kShiftedGeometric, p, shift};
}
Distribution Distribution::pareto(double scale, double shape) {
  return {Family::kPareto, scale, shape};
}

Distribution Distribution::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw InvalidSpec("distribution '" + std::string(text) +
                      "' must look like family:params");
  }
  const auto family = detail::trim(text.substr(0, colon));
  std::vector<double> params;
  for (auto field : detail::split(text.substr(colon + 1), ',')) {
    const auto v = detail::parse_double(field);
    if (!v) {
      throw InvalidSpec("bad distribution parameter in '" + std::string(text) +
                        "'");
    }
    params.push_back(*v);
  }
  auto need = [&](std::size_t lo, std::size_t hi) {
    if (params.size() < lo || params.size() > hi) {
      throw InvalidSpec("wrong parameter count in '" + std::string(text) + "'");
    }
  };
  if (family == "const" || family == "constant") {
    need(1, 1);
    return constant(params[0]);
  }
  if (family == "lognormal") {
    need(2, 2);
    return lognormal(params[0], params[1]);
  }
  if (family == "geometric") {
    need(1, 2);
    return shifted_geometric(params[0], params.size() == 2 ? params[1] : 1.0);
  }
  if (family == "pareto") {
    need(2, 2);
    return pareto(params[0], params[1]);
  }
  throw InvalidSpec("unknown distribution family '" + std::string(family) +
                    "'");
}

double Distribution::mean() const {
  switch (family_) {
    case Family::kConstant:
      return a_;
    case Family::kLognormal:
      return std::exp(a_ + 0.5 * b_ * b_);
    case Family::kShiftedGeometric:
      return b_ + (1.0 - a_) / a_;
    case Family::kPareto:
      return b_ > 1.0 ? a_ * b_ / (b_ - 1.0)
                      : std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

double Distribution::sample(Rng& rng) const {
  switch (family_) {
    case Family::kConstant:
      return a_;
    case Family::kLognormal:
      return std::lognormal_distribution<double>(a_, b_)(rng);
    case Family::kShiftedGeometric:
      return b_ + static_cast<double>(
                      std::geometric_distribution<std::int64_t>(a_)(rng));
    case Family::kPareto: {
      const double u = 1.0 - std::uniform_real_distribution<double>(0, 1)(rng);
      return a_ * std::pow(u, -1.0 / b_);
    }
  }
  return 0.0;
}

std::string Distribution::to_string() const {
  const auto f = [](double v) { return detail::format_double(v); };
  switch (family_) {
    case Family::kConstant:
      return "const:" + f(a_);
    case Family::kLognormal:
      return "lognormal:" + f(a_) + "," + f(b_);
    case Family::kShiftedGeometric:
      return "geometric:" + f(a_) + "," + f(b_);
    case Family::kPareto:
      return "pareto:" + f(a_) + "," + f(b_);
  }
  return {};
}

void Distribution::validate(std::string_view what) const {
  const auto fail = [&](const char* why) {
    throw InvalidSpec(std::string(what) + " " + to_string() + ": " + why);
  };
  if (!std::isfinite(a_) || !std::isfinite(b_)) fail("non-finite parameter");
  switch (family_) {
    case Family::kConstant:
      if (a_ < 0.0) fail("value must be >= 0");
      break;
    case Family::kLognormal:
      if (b_ < 0.0) fail("sigma must be >= 0");
      break;
    case Family::kShiftedGeometric:
      if (!(a_ > 0.0 && a_ <= 1.0)) fail("p must be in (0, 1]");
      if (b_ < 0.0) fail("shift must be >= 0");
      break;
    case Family::kPareto:
      if (a_ <= 0.0 || b_ <= 0.0) fail("scale and shape must be > 0");
      break;
  }
}

// ---------------------------------------------------------------------------
// WorkloadSpec

void WorkloadSpec::validate() const {
  if (n_prompts < 1) throw InvalidSpec("n_prompts must be >= 1");
  if (samples_per_prompt < 1) {
    throw InvalidSpec("samples_per_prompt must be >= 1");
  }
  step_count_dist.validate("step_count_dist");
  decode_tokens_dist.validate("decode_tokens_dist");
  tool_latency_dist.validate("tool_latency_dist");
  prompt_tokens_dist.validate("prompt_tokens_dist");
  tool_output_tokens_dist.validate("tool_output_tokens_dist");
  if (!(prompt_difficulty_sigma >= 0.0)) {
    throw InvalidSpec("prompt_difficulty_sigma must be >= 0");
  }
  if (!(intra_group_divergence >= 0.0) ||
      !std::isfinite(intra_group_divergence)) {
    throw InvalidSpec("intra_group_divergence must be >= 0");
  }
  if (max_output_tokens < 1) throw InvalidSpec("max_output_tokens must be >= 1");
}

namespace {

// Lognormal whose mean is `mean`.
Distribution lognormal_with_mean(double mean, double sigma) {
  return Distribution::lognormal(std::log(mean) - 0.5 * sigma * sigma, sigma);
}

}  // namespace

WorkloadSpec workload_preset(std::string_view name) {
  WorkloadSpec s;
  if (name == "coding") {
    s.step_count_dist = Distribution::shifted_geometric(0.3);
    s.decode_tokens_dist = Distribution::lognormal(std::log(1000.0), 0.9);
    s.tool_latency_dist = lognormal_with_mean(0.43, 0.8);
    s.prompt_tokens_dist = Distribution::lognormal(std::log(800.0), 0.4);
    s.tool_output_tokens_dist = Distribution::lognormal(std::log(400.0), 0.8);
  } else if (name == "search") {
    s.step_count_dist = Distribution::shifted_geometric(0.18);
    s.decode_tokens_dist = Distribution::lognormal(std::log(250.0), 0.8);
    s.tool_latency_dist = lognormal_with_mean(1.42, 0.8);
    s.prompt_tokens_dist = Distribution::lognormal(std::log(300.0), 0.4);
    s.tool_output_tokens_dist = Distribution::lognormal(std::log(1500.0), 0.6);
  } else if (name == "math") {
    s.step_count_dist = Distribution::shifted_geometric(0.4);
    s.decode_tokens_dist = Distribution::lognormal(std::log(1500.0), 0.9);
    s.tool_latency_dist = lognormal_with_mean(0.05, 0.8);
    s.prompt_tokens_dist = Distribution::lognormal(std::log(400.0), 0.4);
    s.tool_output_tokens_dist = Distribution::lognormal(std::log(100.0), 0.8);
  } else {
    throw InvalidSpec("unknown workload preset '" + std::string(name) + "'");
  }
  return s;
}

std::vector<std::string> workload_preset_names() {
  return {"coding", "search", "math"};
}

// ---------------------------------------------------------------------------
// Generation

namespace {

TokenCount round_tokens(double v) {
  if (!(v >= 1.0)) return 1;
  if (v > 1e12) return static_cast<TokenCount>(1e12);
  return static_cast<TokenCount>(std::llround(v));
}

}  // namespace

std::vector<Trajectory> generate(const WorkloadSpec& spec) {
  spec.validate();
  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(spec.n_prompts) *
              spec.samples_per_prompt);
  for (std::uint32_t p = 0; p < spec.n_prompts; ++p) {
    Rng prompt_rng(derive_seed(spec.seed, {0x70726f6d7074ULL, p}));
    std::normal_distribution<double> normal(0.0, 1.0);
    const double base_steps =
        std::max(1.0, std::round(spec.step_count_dist.sample(prompt_rng)));
    const double difficulty =
        std::exp(spec.prompt_difficulty_sigma * normal(prompt_rng));
    const TokenCount prompt_tokens =
        round_tokens(spec.prompt_tokens_dist.sample(prompt_rng));

    for (std::uint32_t s = 0; s < spec.samples_per_prompt; ++s) {
      Rng rng(derive_seed(spec.seed, {0x73616d706c65ULL, p, s}));
      const double z = std::normal_distribution<double>(0.0, 1.0)(rng);
      const auto n_steps = static_cast<std::size_t>(std::max(
          1.0, std::round(base_steps *
                          std::exp(spec.intra_group_divergence * z))));
      std::vector<Step> steps;
      steps.reserve(n_steps);
      TokenCount emitted = 0;
      for (std::size_t k = 0; k < n_steps; ++k) {
        Step step;
        step.prefill_tokens =
            k == 0 ? prompt_tokens
                   : round_tokens(spec.tool_output_tokens_dist.sample(rng));
        step.decode_tokens =
            round_tokens(spec.decode_tokens_dist.sample(rng) * difficulty);
        step.tool_latency = spec.tool_latency_dist.sample(rng);
        bool last = k + 1 == n_steps;
        if (emitted + step.decode_tokens >= spec.max_output_tokens) {
          step.decode_tokens = spec.max_output_tokens - emitted;
          last = true;
        }
        emitted += step.decode_tokens;
        if (last) step.tool_latency = 0.0;
        steps.push_back(step);
        if (last) break;
      }
      const TrajectoryId id =
          static_cast<TrajectoryId>(p) * spec.samples_per_prompt + s;
      out.emplace_back(id, p, std::move(steps), 0.0);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trace I/O

namespace {

Trajectory parse_record(const std::string& line, std::size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(line_no, e.what());
  }
  try {
    if (!j.is_object()) throw ParseError(line_no, "record is not an object");
    std::vector<Step> steps;
    const auto& js = j.at("steps");
    if (!js.is_array()) throw ParseError(line_no, "steps is not an array");
    for (const auto& s : js) {
      Step step;
      step.prefill_tokens = s.at("prefill_tokens").get<TokenCount>();
      step.decode_tokens = s.at("decode_tokens").get<TokenCount>();
      step.tool_latency = s.at("tool_latency_s").get<double>();
      steps.push_back(step);
    }
    return Trajectory(j.at("id").get<TrajectoryId>(),
                      j.at("prompt_group").get<PromptGroupId>(),
                      std::move(steps), j.at("created_at_s").get<double>());
  } catch (const json::exception& e) {
    throw ParseError(line_no, e.what());
  } catch (const InvalidTrajectory& e) {
    throw ParseError(line_no, e.what());
  }
}

}  // namespace

std::vector<Trajectory> load_trace(std::istream& in) {
  std::vector<Trajectory> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    out.push_back(parse_record(line, line_no));
  }
  return out;
}

std::vector<Trajectory> load_trace(const std::filesystem::path& path) {
  if (path.extension() != ".jsonl") {
    throw InvalidSpec("trace files must use the .jsonl extension: " +
                      path.string());
  }
  std::ifstream in(path);
  if (!in) throw InvalidSpec("cannot open trace " + path.string());
  return load_trace(in);
}

void save_trace(std::span<const Trajectory> trajectories, std::ostream& out) {
  for (const auto& t : trajectories) {
    json steps = json::array();
    for (const auto& s : t.steps()) {
      steps.push_back({{"prefill_tokens", s.prefill_tokens},
                       {"decode_tokens", s.decode_tokens},
                       {"tool_latency_s", s.tool_latency}});
    }
    json rec = {{"id", t.id()},
                {"prompt_group", t.prompt_group()},
                {"steps", std::move(steps)},
                {"created_at_s", t.created_at()}};
    out << rec.dump() << '\n';
  }
}

void save_trace(std::span<const Trajectory> trajectories,
                const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidSpec("cannot write trace " + path.string());
  save_trace(trajectories, out);
}

}  // namespace trajsched
