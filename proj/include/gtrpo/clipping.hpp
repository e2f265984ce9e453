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

#ifndef GTRPO_CLIPPING_HPP_
#define GTRPO_CLIPPING_HPP_

#include <cstddef>
#include <string_view>

namespace gtrpo {

enum class ClipKind { kConstant, kLengthDep, kGammaDep };

ClipKind parse_clip_kind(std::string_view name);
std::string_view clip_kind_name(ClipKind kind);

/// Rule for per-sample ratio bounds.
///
///   constant:   (1 - delta, 1 + delta)
///   length_dep: (alpha^(-1/|tau|), alpha^(1/|tau|))
///   gamma_dep:  (max{alpha^(-e), 1 - beta}, min{alpha^(e), 1 + beta}), e = 1 / (|tau| gamma^h)
struct ClipSchedule {
  ClipKind kind = ClipKind::kConstant;
  double alpha = 1.2;  ///< > 1, alpha = exp(nu)
  double beta = 0.3;   ///< in (0, 1)
  double delta = 0.1;  ///< in (0, 1)
  double gamma = 0.99; ///< in (0, 1]

  static ClipSchedule constant(double delta);
  static ClipSchedule length_dep(double alpha);
  static ClipSchedule gamma_dep(double alpha, double beta, double gamma);

  /// Throws ConfigError naming the offending parameter.
  void validate() const;
};

struct ClipBounds {
  double lower = 1.0;
  double upper = 1.0;
};

/// h is the 1-based step index, 1 <= h <= tau_len. Throws Error on bad
/// indices and ConfigError on invalid schedule parameters.
ClipBounds clip_bounds(const ClipSchedule& sched, std::size_t tau_len, std::size_t h);

/// Constant schedule: delta = 0.1 while progress < 0.5, then 0.05.
ClipSchedule dynamic_clip_schedule(double progress);

}  // namespace gtrpo

#endif  // GTRPO_CLIPPING_HPP_
