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

#ifndef GTRPO_SPEC_IO_HPP_
#define GTRPO_SPEC_IO_HPP_

#include <iosfwd>
#include <string>

#include "gtrpo/pomdp.hpp"

namespace gtrpo {

/// Plain-text key/value serialization of a PomdpSpec.
///
///   [spaces]       num_latent, num_obs, num_actions, gamma, max_steps, reward_noise_std
///   [init]         p1 = <num_latent-1 probabilities>
///   [transition]   x<i>_a<j> = <num_latent probabilities>
///   [observation]  x<i> = <num_obs probabilities>
///   [reward]       y<i>_a<j> = <num_obs mean rewards>
///
/// Numbers are written with 17 significant digits, so write/read is lossless.
void write_spec(std::ostream& out, const PomdpSpec& spec);

/// Throws ConfigError (with the line number when the parser reports one) on
/// malformed text and SpecError when the tables violate an invariant.
PomdpSpec read_spec(std::istream& in);

void save_spec(const std::string& path, const PomdpSpec& spec);
PomdpSpec load_spec(const std::string& path);

}  // namespace gtrpo

#endif  // GTRPO_SPEC_IO_HPP_
