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

#ifndef GTRPO_UPDATE_RULES_HPP_
#define GTRPO_UPDATE_RULES_HPP_

#include <cstddef>
#include <limits>
#include <string_view>

#include <Eigen/Core>

#include "gtrpo/clipping.hpp"
#include "gtrpo/estimation.hpp"
#include "gtrpo/oracle.hpp"
#include "gtrpo/trust_region.hpp"

namespace gtrpo {

enum class OptimizerKind { kSgd, kSignSgd };

OptimizerKind parse_optimizer_kind(std::string_view name);
std::string_view optimizer_kind_name(OptimizerKind kind);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kSgd;
  double lr = 0.1;
  std::size_t epochs = 4;
  std::size_t minibatch = 0;  ///< episodes per minibatch, 0 = whole batch

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

struct UpdateReport {
  double objective_before = 0.0;
  double objective_after = 0.0;
  double constraint_value = 0.0;
  double constraint_limit = std::numeric_limits<double>::infinity();
  bool accepted = false;
  bool diverged = false;  ///< non-finite objective, pre-update policy kept
  std::size_t backtrack_count = 0;
  double clipped_fraction = 0.0;
};

struct UpdateResult {
  PolicyParams policy;
  UpdateReport report;
};

/// kPomdp evaluates ratios at the observation y_h; kMdp at the latent state
/// x_h, which requires a policy indexed by latent states.
enum class PpoMode { kMdp, kPomdp };

struct PpoEvaluation {
  double objective = 0.0;      ///< mean over valid positions
  Table gradient;              ///< d objective / d logits of policy_new
  double clipped_fraction = 0.0;
  std::size_t positions = 0;   ///< valid positions used
  std::size_t skipped = 0;     ///< positions with an invalid advantage
};

/// Clipped objective mean of min{rho A, clip(rho; lower_h, upper_h) A} and its
/// gradient over episodes [first, last). Saturated positions (A > 0 and
/// rho > upper, or A < 0 and rho < lower) contribute exactly zero gradient.
PpoEvaluation ppo_evaluate(const Batch& batch, const PolicyParams& policy_new, const PositionAdvantages& advantages,
                           const ClipSchedule& sched, PpoMode mode, std::size_t first = 0,
                           std::size_t last = std::numeric_limits<std::size_t>::max());

double ppo_objective(const Batch& batch, const PolicyParams& policy_new, const PositionAdvantages& advantages,
                     const ClipSchedule& sched, PpoMode mode);

/// params + lr * sign(grad), with sign(0) = 0.
Eigen::VectorXd sign_sgd_step(const Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr);

/// Epochs of minibatch ascent on the clipped objective. The report's
/// constraint_value is the episodic empirical KL from the old policy.
UpdateResult ppo_update(const Batch& batch, const PolicyParams& policy, const PositionAdvantages& advantages,
                        const ClipSchedule& sched, const OptimizerConfig& optimizer, PpoMode mode = PpoMode::kPomdp);

/// What a GTRPO step needs to know about the surrogate around a base policy.
class SurrogateModel {
 public:
  virtual ~SurrogateModel() = default;
  virtual const PolicyParams& base() const = 0;
  virtual double surrogate(const PolicyParams& candidate) const = 0;
  virtual double divergence(const PolicyParams& candidate) const = 0;
  /// Gradient of the surrogate at the base policy, flattened.
  virtual Eigen::VectorXd gradient() const = 0;
  virtual const FisherOperator& fisher() const = 0;
};

/// Importance-weighted sample surrogate
///   L(theta) = (1/m) sum_t sum_h gamma^(h-1) rho_h A_h,
/// divergence = episodic KL (kTrajectory) or the sampled discounted divergence (kGamma).
class SampledSurrogate final : public SurrogateModel {
 public:
  SampledSurrogate(const Batch& batch, const PositionAdvantages& advantages, KlVariant variant, double gamma,
                   std::size_t horizon, double damping = FisherOperator::kDefaultDamping);

  const PolicyParams& base() const override { return batch_.policy_used; }
  double surrogate(const PolicyParams& candidate) const override;
  double divergence(const PolicyParams& candidate) const override;
  Eigen::VectorXd gradient() const override;
  const FisherOperator& fisher() const override { return fisher_; }

 private:
  const Batch& batch_;
  const PositionAdvantages& adv_;
  KlVariant variant_;
  double gamma_;
  std::size_t horizon_;
  FisherOperator fisher_;
};

/// Oracle-backed surrogate: exact L, exact gradient, exact Fisher (F or
/// F_gamma) and exact divergence kl(base, candidate, variant).
class ExactSurrogate final : public SurrogateModel {
 public:
  ExactSurrogate(const TrajectoryAtlas& atlas, const PolicyParams& policy, KlVariant variant,
                 double damping = FisherOperator::kDefaultDamping);

  const PolicyParams& base() const override { return policy_; }
  double surrogate(const PolicyParams& candidate) const override;
  double divergence(const PolicyParams& candidate) const override;
  Eigen::VectorXd gradient() const override;
  const FisherOperator& fisher() const override { return fisher_; }
  double eta_base() const noexcept { return eta_; }

 private:
  const TrajectoryAtlas& atlas_;
  PolicyParams policy_;
  KlVariant variant_;
  ConditionalTables tables_;
  double eta_;
  std::vector<double> probs_;
  FisherOperator fisher_;
};

/// Natural-gradient step with boundary scaling and backtracking:
/// solve F d = g by CG (ConvergenceError if it fails), scale d so that
/// 1/2 d^T F d = delta_prime, then try 0.5^k d for k = 0..max_backtracks until
/// the surrogate improves and divergence <= delta_prime. A zero gradient or
/// exhausted backtracking returns the base policy with accepted = false.
UpdateResult gtrpo_step(const SurrogateModel& model, double delta_prime, std::size_t max_backtracks = 10);

/// Sampled GTRPO on a batch with per-position advantages.
UpdateResult gtrpo_update(const Batch& batch, const PositionAdvantages& advantages, KlVariant divergence,
                          double delta_prime, double gamma, std::size_t horizon,
                          double damping = FisherOperator::kDefaultDamping);

}  // namespace gtrpo

#endif  // GTRPO_UPDATE_RULES_HPP_
