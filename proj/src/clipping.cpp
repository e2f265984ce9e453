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

#include "gtrpo/clipping.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gtrpo/error.hpp"

namespace gtrpo {

ClipKind parse_clip_kind(std::string_view name) {
  if (name == "constant") return ClipKind::kConstant;
  if (name == "length_dep") return ClipKind::kLengthDep;
  if (name == "gamma_dep") return ClipKind::kGammaDep;
  throw ConfigError("unknown clip schedule '" + std::string(name) + "'", 0, "kind");
}

std::string_view clip_kind_name(ClipKind kind) {
  switch (kind) {
    case ClipKind::kConstant: return "constant";
    case ClipKind::kLengthDep: return "length_dep";
    case ClipKind::kGammaDep: return "gamma_dep";
  }
  return "constant";
}

ClipSchedule ClipSchedule::constant(double delta) {
  ClipSchedule s;
  s.kind = ClipKind::kConstant;
  s.delta = delta;
  s.validate();
  return s;
}

ClipSchedule ClipSchedule::length_dep(double alpha) {
  ClipSchedule s;
  s.kind = ClipKind::kLengthDep;
  s.alpha = alpha;
  s.validate();
  return s;
}

ClipSchedule ClipSchedule::gamma_dep(double alpha, double beta, double gamma) {
  ClipSchedule s;
  s.kind = ClipKind::kGammaDep;
  s.alpha = alpha;
  s.beta = beta;
  s.gamma = gamma;
  s.validate();
  return s;
}

void ClipSchedule::validate() const {
  switch (kind) {
    case ClipKind::kConstant:
      if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)", 0, "delta");
      break;
    case ClipKind::kGammaDep:
      if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("beta must lie in (0, 1)", 0, "beta");
      if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]", 0, "gamma");
      [[fallthrough]];
    case ClipKind::kLengthDep:
      if (!(alpha > 1.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be finite and > 1", 0, "alpha");
      break;
  }
}

ClipBounds clip_bounds(const ClipSchedule& sched, std::size_t tau_len, std::size_t h) {
  if (tau_len == 0 || h == 0 || h > tau_len)
    throw Error("clip_bounds needs 1 <= h <= tau_len, got h=" + std::to_string(h) + " tau_len=" +
                std::to_string(tau_len));
  sched.validate();
  const double len = static_cast<double>(tau_len);
  switch (sched.kind) {
    case ClipKind::kConstant:
      return {1.0 - sched.delta, 1.0 + sched.delta};
    case ClipKind::kLengthDep:
      return {std::pow(sched.alpha, -1.0 / len), std::pow(sched.alpha, 1.0 / len)};
    case ClipKind::kGammaDep: {
      const double e = 1.0 / (len * std::pow(sched.gamma, static_cast<double>(h)));
      return {std::max(std::pow(sched.alpha, -e), 1.0 - sched.beta), std::min(std::pow(sched.alpha, e), 1.0 + sched.beta)};
    }
  }
  return {};
}

ClipSchedule dynamic_clip_schedule(double progress) {
  if (!(progress >= 0.0 && progress <= 1.0)) throw Error("progress must lie in [0, 1]");
  return ClipSchedule::constant(progress < 0.5 ? 0.1 : 0.05);
}

}  // namespace gtrpo
