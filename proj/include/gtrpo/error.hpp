// Copyright 2026 The gtrpo-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GTRPO_ERROR_HPP_
#define GTRPO_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gtrpo {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A PomdpSpec (or EnvConfig) violates one of its structural invariants.
class SpecError : public Error {
 public:
  using Error::Error;
};

/// Index or shape mismatch between a policy, a trajectory and a spec.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Enumeration horizon too short: probability mass survives past tau_max.
class MassLeakError : public Error {
 public:
  using Error::Error;
};

/// Enumeration would exceed the configured entry budget.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// Read of a conditional-table entry whose context has zero probability.
class MaskedEntryError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver did not reach the requested tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration or serialized file. Carries the offending line
/// (0 when unknown) and field name.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::size_t line = 0, std::string field = {})
      : Error(format(what, line, field)), line_(line), field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  static std::string format(const std::string& what, std::size_t line, const std::string& field) {
    std::string out;
    if (line > 0) out += "line " + std::to_string(line) + ": ";
    if (!field.empty()) out += "field '" + field + "': ";
    return out + what;
  }

  std::size_t line_;
  std::string field_;
};

}  // namespace gtrpo

#endif  // GTRPO_ERROR_HPP_
