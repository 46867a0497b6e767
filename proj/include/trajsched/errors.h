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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace trajsched {

// Base of every error the library throws. Each subclass names one failure
// kind so callers (and the CLI exit-code mapping) can dispatch on type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define TRAJSCHED_DEFINE_ERROR(Name)                    \
  class Name : public Error {                           \
   public:                                              \
    explicit Name(const std::string& what)              \
        : Error(std::string(#Name ": ") + what) {}      \
  }

TRAJSCHED_DEFINE_ERROR(MissingProfileEntry);
TRAJSCHED_DEFINE_ERROR(InvalidProfile);
TRAJSCHED_DEFINE_ERROR(IncompleteTrace);
TRAJSCHED_DEFINE_ERROR(InvalidSpec);
TRAJSCHED_DEFINE_ERROR(InvalidTrajectory);
TRAJSCHED_DEFINE_ERROR(EmptyInput);
TRAJSCHED_DEFINE_ERROR(DegenerateInput);
TRAJSCHED_DEFINE_ERROR(DuplicateRequest);
TRAJSCHED_DEFINE_ERROR(InfeasiblePartition);
TRAJSCHED_DEFINE_ERROR(OracleTooLarge);
TRAJSCHED_DEFINE_ERROR(UnknownTrajectory);
TRAJSCHED_DEFINE_ERROR(TrajectoryInactive);
TRAJSCHED_DEFINE_ERROR(InfeasibleBudget);
TRAJSCHED_DEFINE_ERROR(NoFeasibleMove);
TRAJSCHED_DEFINE_ERROR(SimulatorStall);
TRAJSCHED_DEFINE_ERROR(InvalidMetric);
TRAJSCHED_DEFINE_ERROR(PreconditionViolation);
TRAJSCHED_DEFINE_ERROR(ConfigError);

#undef TRAJSCHED_DEFINE_ERROR

// Malformed input record; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("ParseError(line=" + std::to_string(line) + "): " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace trajsched
