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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trajsched/model.h"
#include "trajsched/rng.h"

namespace trajsched {

// Parametric distribution used by the workload generator.
//   constant:c            always c
//   lognormal:mu,sigma    exp(N(mu, sigma^2))
//   geometric:p[,shift]   shift + Geometric(p) failures (shift defaults to 1)
//   pareto:scale,shape    scale * U^(-1/shape)
class Distribution {
 public:
  enum class Family { kConstant, kLognormal, kShiftedGeometric, kPareto };

  static Distribution constant(double value);
  static Distribution lognormal(double mu, double sigma);
  static Distribution shifted_geometric(double p, double shift = 1.0);
  static Distribution pareto(double scale, double shape);
  // Parses the textual form above; throws InvalidSpec.
  static Distribution parse(std::string_view text);

  Family family() const { return family_; }
  double mean() const;
  double sample(Rng& rng) const;
  std::string to_string() const;
  // Throws InvalidSpec naming `what` when parameters are out of range.
  void validate(std::string_view what) const;

  bool operator==(const Distribution&) const = default;

 private:
  Distribution(Family f, double a, double b) : family_(f), a_(a), b_(b) {}

  Family family_ = Family::kConstant;
  double a_ = 0.0;
  double b_ = 0.0;
};

struct WorkloadSpec {
  std::uint32_t n_prompts = 64;
  std::uint32_t samples_per_prompt = 16;
  // Base step count of a prompt group.
  Distribution step_count_dist = Distribution::shifted_geometric(0.3);
  // Decode tokens per step, before the prompt difficulty multiplier.
  Distribution decode_tokens_dist = Distribution::lognormal(6.9, 0.9);
  Distribution tool_latency_dist = Distribution::lognormal(-1.16, 0.8);
  Distribution prompt_tokens_dist = Distribution::lognormal(6.7, 0.4);
  Distribution tool_output_tokens_dist = Distribution::lognormal(6.0, 0.8);
  // Log-std of the per-prompt multiplier on decode tokens.
  double prompt_difficulty_sigma = 0.5;
  // Per-sample step-count spread: steps = round(base * exp(divergence * z)).
  double intra_group_divergence = 0.5;
  TokenCount max_output_tokens = 40960;
  std::uint64_t seed = 0;

  // Throws InvalidSpec.
  void validate() const;
};

// Named presets "coding", "search" and "math". Mean tool latency orders
// search >> coding >> math; search has more steps with shorter generations
// and larger tool outputs.
WorkloadSpec workload_preset(std::string_view name);
std::vector<std::string> workload_preset_names();

// Deterministic in spec.seed. Trajectory ids are prompt * samples + sample.
std::vector<Trajectory> generate(const WorkloadSpec& spec);

// One JSON object per line:
// {"id","prompt_group","steps":[{"prefill_tokens","decode_tokens",
//  "tool_latency_s"}],"created_at_s"}
std::vector<Trajectory> load_trace(std::istream& in);
std::vector<Trajectory> load_trace(const std::filesystem::path& path);
void save_trace(std::span<const Trajectory> trajectories, std::ostream& out);
void save_trace(std::span<const Trajectory> trajectories,
                const std::filesystem::path& path);

}  // namespace trajsched
