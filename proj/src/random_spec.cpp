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

#include "gtrpo/random_spec.hpp"

#include <cmath>

#include "gtrpo/error.hpp"

namespace gtrpo {
namespace {

// Dirichlet(1) via normalized exponentials.
void fill_simplex(Rng& rng, double* out, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = -std::log(1.0 - rng.uniform());
    sum += out[i];
  }
  for (std::size_t i = 0; i < n; ++i) out[i] /= sum;
}

// Keeps row sums at 1 after the renormalization rounding: puts the residual
// on the largest entry.
void fix_row(double* row, std::size_t n) {
  double sum = 0.0;
  std::size_t big = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sum += row[i];
    if (row[i] > row[big]) big = i;
  }
  row[big] += 1.0 - sum;
}

}  // namespace

PomdpSpec random_spec(Rng& rng, const RandomSpecOptions& o) {
  if (o.identity_observation && o.num_obs != o.num_latent)
    throw SpecError("identity observation needs num_obs == num_latent");
  PomdpTables t;
  t.num_latent = o.num_latent;
  t.num_obs = o.num_obs;
  t.num_actions = o.num_actions;
  t.max_steps = o.max_steps;
  t.gamma = o.gamma;
  const auto nx = o.num_latent, ny = o.num_obs, na = o.num_actions;

  t.init.resize(nx - 1);
  fill_simplex(rng, t.init.data(), nx - 1);
  fix_row(t.init.data(), nx - 1);

  t.transition.assign(nx * na * nx, 0.0);
  for (std::size_t x = 0; x + 1 < nx; ++x)
    for (std::size_t a = 0; a < na; ++a) {
      double* row = &t.transition[(x * na + a) * nx];
      fill_simplex(rng, row, nx);
      fix_row(row, nx);
    }
  for (std::size_t a = 0; a < na; ++a) t.transition[((nx - 1) * na + a) * nx + nx - 1] = 1.0;

  t.observation.assign(nx * ny, 0.0);
  for (std::size_t x = 0; x + 1 < nx; ++x) {
    double* row = &t.observation[x * ny];
    if (o.identity_observation) {
      row[x] = 1.0;
    } else {
      fill_simplex(rng, row, ny - 1);
      fix_row(row, ny - 1);
    }
  }
  t.observation[(nx - 1) * ny + ny - 1] = 1.0;

  t.reward_mean.resize(ny * na * ny);
  for (double& r : t.reward_mean) r = rng.normal(0.0, o.reward_scale);
  return PomdpSpec(std::move(t));
}

PomdpSpec random_small_spec(Rng& rng, bool identity_observation) {
  RandomSpecOptions o;
  auto pick = [&rng](std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng.uniform() * static_cast<double>(hi - lo + 1));
  };
  o.num_latent = pick(2, 3);
  o.num_obs = identity_observation ? o.num_latent : pick(2, 3);
  o.num_actions = pick(2, 3);
  o.max_steps = pick(2, 4);
  o.gamma = 0.5 + 0.5 * rng.uniform();
  o.identity_observation = identity_observation;
  return random_spec(rng, o);
}

PolicyParams random_policy(Rng& rng, std::size_t num_obs, std::size_t num_actions, double scale) {
  Table logits(static_cast<Eigen::Index>(num_obs), static_cast<Eigen::Index>(num_actions));
  for (Eigen::Index i = 0; i < logits.size(); ++i) logits.data()[i] = rng.normal(0.0, scale);
  return PolicyParams(std::move(logits));
}

PolicyParams perturbed_policy(Rng& rng, const PolicyParams& base, double scale) {
  Table logits = base.logits();
  for (Eigen::Index i = 0; i < logits.size(); ++i) logits.data()[i] += rng.normal(0.0, scale);
  return PolicyParams(std::move(logits));
}

}  // namespace gtrpo
