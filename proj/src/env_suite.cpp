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

#include "gtrpo/env_suite.hpp"

#include <cmath>

#include "gtrpo/error.hpp"

namespace gtrpo {
namespace {

// Small helper for filling the flat row-major tables.
struct TableBuilder {
  std::size_t nx, ny, na;
  PomdpTables t;
  std::vector<double> alive_pos, alive_neg;

  TableBuilder(std::size_t latent, std::size_t observations, std::size_t actions)
      : nx(latent), ny(observations), na(actions) {
    t.num_latent = nx;
    t.num_obs = ny;
    t.num_actions = na;
    t.init.assign(nx - 1, 0.0);
    t.transition.assign(nx * na * nx, 0.0);
    t.observation.assign(nx * ny, 0.0);
    t.reward_mean.assign(ny * na * ny, 0.0);
    alive_pos.assign(ny * na * ny, 0.0);
    alive_neg.assign(ny * na * ny, 0.0);
    for (std::size_t a = 0; a < na; ++a) trans(nx - 1, a, nx - 1) = 1.0;
    obs(nx - 1, ny - 1) = 1.0;
  }

  double& trans(std::size_t x, std::size_t a, std::size_t xn) { return t.transition[(x * na + a) * nx + xn]; }
  double& obs(std::size_t x, std::size_t y) { return t.observation[x * ny + y]; }
  std::size_t rix(std::size_t y, std::size_t a, std::size_t yn) const { return (y * na + a) * ny + yn; }
};

EnvComponents two_door() {
  enum : std::size_t { kPrizeLeft, kPrizeRight, kEnd };
  enum : std::size_t { kCueLeft, kCueRight, kTerminalObs };
  enum : std::size_t { kGoLeft, kGoRight, kListen };
  TableBuilder b(3, 3, 3);
  b.t.init = {0.5, 0.5};
  for (std::size_t x : {kPrizeLeft, kPrizeRight}) {
    const std::size_t good = x == kPrizeLeft ? kGoLeft : kGoRight;
    const std::size_t bad = x == kPrizeLeft ? kGoRight : kGoLeft;
    b.trans(x, good, kPrizeLeft) = 0.5;
    b.trans(x, good, kPrizeRight) = 0.5;
    b.trans(x, bad, kEnd) = 1.0;
    b.trans(x, kListen, x) = 1.0;
  }
  b.obs(kPrizeLeft, kCueLeft) = 0.75;
  b.obs(kPrizeLeft, kCueRight) = 0.25;
  b.obs(kPrizeRight, kCueLeft) = 0.25;
  b.obs(kPrizeRight, kCueRight) = 0.75;
  for (std::size_t y : {kCueLeft, kCueRight}) {
    for (std::size_t a : {kGoLeft, kGoRight}) {
      b.t.reward_mean[b.rix(y, a, kCueLeft)] = 1.0;
      b.t.reward_mean[b.rix(y, a, kCueRight)] = 1.0;
      b.t.reward_mean[b.rix(y, a, kTerminalObs)] = -1.0;
    }
    for (std::size_t yn : {kCueLeft, kCueRight}) b.t.reward_mean[b.rix(y, kListen, yn)] = -0.1;
  }
  b.t.gamma = 0.9;
  b.t.max_steps = 4;
  return {std::move(b.t), std::move(b.alive_pos), std::move(b.alive_neg)};
}

EnvComponents noisy_chain() {
  constexpr std::size_t kCells = 3, kEnd = 3;
  enum : std::size_t { kLeft, kRight };
  TableBuilder b(kCells + 1, kCells + 1, 2);
  b.t.init = {1.0, 0.0, 0.0};
  for (std::size_t x = 0; x < kCells; ++x) {
    b.trans(x, kRight, x + 1 < kCells ? x + 1 : kEnd) += 0.9;
    b.trans(x, kRight, x) += 0.1;
    if (x == 0) {
      b.trans(x, kLeft, x) = 1.0;
    } else {
      b.trans(x, kLeft, x - 1) = 0.9;
      b.trans(x, kLeft, x) = 0.1;
    }
  }
  b.obs(0, 0) = 0.9;
  b.obs(0, 1) = 0.1;
  b.obs(1, 0) = 0.1;
  b.obs(1, 1) = 0.8;
  b.obs(1, 2) = 0.1;
  b.obs(2, 1) = 0.1;
  b.obs(2, 2) = 0.9;
  for (std::size_t y = 0; y < kCells; ++y)
    for (std::size_t a = 0; a < 2; ++a) {
      b.t.reward_mean[b.rix(y, a, kEnd)] = 1.0;
      for (std::size_t yn = 0; yn < kCells; ++yn) b.alive_neg[b.rix(y, a, yn)] = -0.05;
    }
  b.t.gamma = 0.95;
  b.t.max_steps = 8;
  return {std::move(b.t), std::move(b.alive_pos), std::move(b.alive_neg)};
}

EnvComponents cliff_alive() {
  enum : std::size_t { kLow, kMid, kHigh, kGoal, kEnd };
  enum : std::size_t { kClimb, kRest };
  TableBuilder b(5, 5, 2);
  b.t.init = {1.0, 0.0, 0.0, 0.0};
  for (std::size_t x : {kLow, kMid, kHigh}) {
    b.trans(x, kClimb, x + 1) = 0.7;
    b.trans(x, kClimb, kEnd) = 0.2;
    b.trans(x, kClimb, x) = 0.1;
    if (x == kLow) {
      b.trans(x, kRest, x) = 1.0;
    } else {
      b.trans(x, kRest, x) = 0.9;
      b.trans(x, kRest, x - 1) = 0.1;
    }
  }
  b.trans(kGoal, kClimb, kEnd) = 1.0;
  b.trans(kGoal, kRest, kEnd) = 1.0;
  b.obs(kLow, kLow) = 1.0;
  b.obs(kMid, kMid) = 0.9;
  b.obs(kMid, kHigh) = 0.1;
  b.obs(kHigh, kMid) = 0.1;
  b.obs(kHigh, kHigh) = 0.9;
  b.obs(kGoal, kGoal) = 1.0;
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t a = 0; a < 2; ++a) {
      b.t.reward_mean[b.rix(y, a, kGoal)] = 1.0;
      b.alive_pos[b.rix(y, a, kMid)] = 0.1;
      b.alive_pos[b.rix(y, a, kHigh)] = 0.1;
      b.alive_neg[b.rix(y, a, kLow)] = -0.1;
    }
  b.t.gamma = 0.95;
  b.t.max_steps = 10;
  return {std::move(b.t), std::move(b.alive_pos), std::move(b.alive_neg)};
}

}  // namespace

Benchmark parse_benchmark(std::string_view name) {
  if (name == "TwoDoor") return Benchmark::kTwoDoor;
  if (name == "NoisyChain") return Benchmark::kNoisyChain;
  if (name == "CliffAlive") return Benchmark::kCliffAlive;
  throw SpecError("unknown benchmark '" + std::string(name) + "' (expected TwoDoor, NoisyChain or CliffAlive)");
}

std::string_view benchmark_name(Benchmark base) {
  switch (base) {
    case Benchmark::kTwoDoor: return "TwoDoor";
    case Benchmark::kNoisyChain: return "NoisyChain";
    case Benchmark::kCliffAlive: return "CliffAlive";
  }
  return "unknown";
}

EnvComponents env_components(Benchmark base) {
  switch (base) {
    case Benchmark::kTwoDoor: return two_door();
    case Benchmark::kNoisyChain: return noisy_chain();
    case Benchmark::kCliffAlive: return cliff_alive();
  }
  throw SpecError("unknown benchmark");
}

PomdpSpec build_env(const EnvConfig& config) {
  if (!(config.obs_noise >= 0.0 && config.obs_noise < 1.0)) throw SpecError("obs_noise must lie in [0, 1)");
  if (!std::isfinite(config.alive_bonus_scale_pos) || !std::isfinite(config.alive_bonus_scale_neg))
    throw SpecError("alive bonus scales must be finite");

  EnvComponents parts = env_components(config.base);
  PomdpTables t = std::move(parts.tables);
  const std::size_t ny_nt = t.num_obs - 1;
  const double eps = config.obs_noise;
  if (eps > 0.0) {
    for (std::size_t x = 0; x + 1 < t.num_latent; ++x)
      for (std::size_t y = 0; y < ny_nt; ++y) {
        double& o = t.observation[x * t.num_obs + y];
        o = (1.0 - eps) * o + eps / static_cast<double>(ny_nt);
      }
  }
  for (std::size_t i = 0; i < t.reward_mean.size(); ++i)
    t.reward_mean[i] += config.alive_bonus_scale_pos * parts.alive_pos[i] +
                        config.alive_bonus_scale_neg * parts.alive_neg[i];
  if (config.max_steps > 0) t.max_steps = config.max_steps;
  return PomdpSpec(std::move(t));
}

PomdpSpec one_step_bandit(double r0, double r1) {
  PomdpTables t;
  t.num_latent = 2;
  t.num_obs = 2;
  t.num_actions = 2;
  t.init = {1.0};
  t.transition = {0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0};
  t.observation = {1.0, 0.0, 0.0, 1.0};
  t.reward_mean.assign(8, 0.0);
  t.reward_mean[(0 * 2 + 0) * 2 + 1] = r0;
  t.reward_mean[(0 * 2 + 1) * 2 + 1] = r1;
  t.gamma = 1.0;
  t.max_steps = 1;
  return PomdpSpec(std::move(t));
}

}  // namespace gtrpo
