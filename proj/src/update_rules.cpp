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

#include "gtrpo/update_rules.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gtrpo/error.hpp"

namespace gtrpo {

OptimizerKind parse_optimizer_kind(std::string_view name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "signsgd") return OptimizerKind::kSignSgd;
  throw ConfigError("unknown optimizer '" + std::string(name) + "'", 0, "optimizer");
}

std::string_view optimizer_kind_name(OptimizerKind kind) { return kind == OptimizerKind::kSgd ? "sgd" : "signsgd"; }

void OptimizerConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be finite and positive", 0, "lr");
  if (epochs == 0) throw ConfigError("epochs must be positive", 0, "epochs");
}

PpoEvaluation ppo_evaluate(const Batch& batch, const PolicyParams& policy_new, const PositionAdvantages& advantages,
                           const ClipSchedule& sched, PpoMode mode, std::size_t first, std::size_t last) {
  const auto& old = batch.policy_used;
  if (policy_new.num_obs() != old.num_obs() || policy_new.num_actions() != old.num_actions())
    throw ShapeError("new and old policies differ in shape");
  if (advantages.values.size() != batch.size() || advantages.valid.size() != batch.size())
    throw ShapeError("advantages are not aligned with the batch");
  last = std::min(last, batch.size());
  const Table lp_old = old.log_probabilities();
  const Table lp_new = policy_new.log_probabilities();
  const Table p_new = policy_new.probabilities();
  const Eigen::Index na = p_new.cols();

  PpoEvaluation out;
  out.gradient = Table::Zero(p_new.rows(), na);
  double total = 0.0;
  std::size_t clipped = 0;
  for (std::size_t t = first; t < last; ++t) {
    const auto& traj = batch.trajectories[t];
    if (advantages.values[t].size() != traj.length()) throw ShapeError("advantages are not aligned with the batch");
    for (std::size_t h = 0; h < traj.length(); ++h) {
      if (!advantages.valid[t][h]) {
        ++out.skipped;
        continue;
      }
      const auto& ev = traj.events[h];
      const std::size_t s = mode == PpoMode::kPomdp ? ev.obs : ev.latent;
      if (s >= old.num_obs()) throw ShapeError("mdp mode needs a policy indexed by latent states");
      const auto y = static_cast<Eigen::Index>(s), a = static_cast<Eigen::Index>(ev.action);
      const double adv = advantages.values[t][h];
      const double rho = std::exp(lp_new(y, a) - lp_old(y, a));
      const ClipBounds b = clip_bounds(sched, traj.length(), h + 1);
      const double clipped_rho = std::clamp(rho, b.lower, b.upper);
      if (rho < b.lower || rho > b.upper) ++clipped;
      total += std::min(rho * adv, clipped_rho * adv);
      ++out.positions;
      const bool saturated = (adv > 0.0 && rho > b.upper) || (adv < 0.0 && rho < b.lower);
      if (saturated || adv == 0.0) continue;
      // d rho / d theta[y][c] = rho (1{a=c} - pi_new(c|y))
      const double scale = adv * rho;
      for (Eigen::Index c = 0; c < na; ++c) out.gradient(y, c) -= scale * p_new(y, c);
      out.gradient(y, a) += scale;
    }
  }
  if (out.positions > 0) {
    out.objective = total / static_cast<double>(out.positions);
    out.gradient /= static_cast<double>(out.positions);
    out.clipped_fraction = static_cast<double>(clipped) / static_cast<double>(out.positions);
  }
  return out;
}

double ppo_objective(const Batch& batch, const PolicyParams& policy_new, const PositionAdvantages& advantages,
                     const ClipSchedule& sched, PpoMode mode) {
  return ppo_evaluate(batch, policy_new, advantages, sched, mode).objective;
}

Eigen::VectorXd sign_sgd_step(const Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr) {
  if (params.size() != grad.size()) throw ShapeError("sign_sgd_step dimension mismatch");
  if (!(lr > 0.0)) throw Error("lr must be positive");
  Eigen::VectorXd out = params;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (grad[i] > 0.0) out[i] += lr;
    else if (grad[i] < 0.0) out[i] -= lr;
  }
  return out;
}

UpdateResult ppo_update(const Batch& batch, const PolicyParams& policy, const PositionAdvantages& advantages,
                        const ClipSchedule& sched, const OptimizerConfig& optimizer, PpoMode mode) {
  optimizer.validate();
  UpdateResult result{policy, {}};
  const PpoEvaluation before = ppo_evaluate(batch, policy, advantages, sched, mode);
  result.report.objective_before = before.objective;
  const std::size_t chunk = optimizer.minibatch == 0 ? batch.size() : optimizer.minibatch;
  Eigen::VectorXd theta = policy.flat();
  for (std::size_t epoch = 0; epoch < optimizer.epochs; ++epoch) {
    for (std::size_t first = 0; first < batch.size(); first += chunk) {
      const PpoEvaluation ev =
          ppo_evaluate(batch, policy.with_flat(theta), advantages, sched, mode, first, first + chunk);
      const Eigen::VectorXd g = flatten(ev.gradient);
      if (!std::isfinite(ev.objective) || !g.allFinite()) {
        result.report.diverged = true;
        return result;
      }
      theta = optimizer.kind == OptimizerKind::kSignSgd ? sign_sgd_step(theta, g, optimizer.lr)
                                                        : Eigen::VectorXd(theta + optimizer.lr * g);
      if (!theta.allFinite()) {
        result.report.diverged = true;
        return result;
      }
    }
  }
  const PolicyParams updated = policy.with_flat(theta);
  const PpoEvaluation after = ppo_evaluate(batch, updated, advantages, sched, mode);
  if (!std::isfinite(after.objective)) {
    result.report.diverged = true;
    return result;
  }
  result.policy = updated;
  result.report.objective_after = after.objective;
  result.report.clipped_fraction = after.clipped_fraction;
  result.report.constraint_value = empirical_kl(batch, updated, EmpiricalKlVariant::kEpisodic);
  result.report.accepted = true;
  return result;
}

SampledSurrogate::SampledSurrogate(const Batch& batch, const PositionAdvantages& advantages, KlVariant variant,
                                   double gamma, std::size_t horizon, double damping)
    : batch_(batch),
      adv_(advantages),
      variant_(variant),
      gamma_(gamma),
      horizon_(horizon),
      fisher_(FisherOperator::from_batch(batch, variant == KlVariant::kGamma, gamma, horizon, damping)) {
  if (advantages.values.size() != batch.size()) throw ShapeError("advantages are not aligned with the batch");
}

double SampledSurrogate::surrogate(const PolicyParams& candidate) const {
  const Table lp_old = batch_.policy_used.log_probabilities();
  const Table lp_new = candidate.log_probabilities();
  double total = 0.0;
  for (std::size_t t = 0; t < batch_.size(); ++t) {
    const auto& traj = batch_.trajectories[t];
    double discount = 1.0;
    for (std::size_t h = 0; h < traj.length(); ++h, discount *= gamma_) {
      if (!adv_.valid[t][h]) continue;
      const auto y = static_cast<Eigen::Index>(traj.events[h].obs);
      const auto a = static_cast<Eigen::Index>(traj.events[h].action);
      total += discount * std::exp(lp_new(y, a) - lp_old(y, a)) * adv_.values[t][h];
    }
  }
  return total / static_cast<double>(batch_.size());
}

double SampledSurrogate::divergence(const PolicyParams& candidate) const {
  if (variant_ == KlVariant::kGamma) return empirical_gamma_divergence(batch_, candidate, gamma_, horizon_);
  return empirical_kl(batch_, candidate, EmpiricalKlVariant::kEpisodic);
}

Eigen::VectorXd SampledSurrogate::gradient() const {
  const auto& policy = batch_.policy_used;
  Table g = Table::Zero(policy.logits().rows(), policy.logits().cols());
  for (std::size_t t = 0; t < batch_.size(); ++t) {
    const auto& traj = batch_.trajectories[t];
    double discount = 1.0;
    for (std::size_t h = 0; h < traj.length(); ++h, discount *= gamma_) {
      if (!adv_.valid[t][h]) continue;
      g += (discount * adv_.values[t][h]) * log_prob_grad(policy, traj.events[h].obs, traj.events[h].action);
    }
  }
  return flatten(g) / static_cast<double>(batch_.size());
}

ExactSurrogate::ExactSurrogate(const TrajectoryAtlas& atlas, const PolicyParams& policy, KlVariant variant,
                               double damping)
    : atlas_(atlas),
      policy_(policy),
      variant_(variant),
      tables_(atlas, policy),
      eta_(eta(atlas, policy)),
      probs_(trajectory_probs(atlas, policy)),
      fisher_(FisherOperator::from_atlas(atlas, policy, variant == KlVariant::kGamma, damping)) {}

double ExactSurrogate::surrogate(const PolicyParams& candidate) const {
  return surrogate_L(atlas_, tables_, eta_, probs_, candidate);
}

double ExactSurrogate::divergence(const PolicyParams& candidate) const {
  return kl(atlas_, policy_, candidate, variant_);
}

Eigen::VectorXd ExactSurrogate::gradient() const { return flatten(grad_eta(atlas_, policy_)); }

UpdateResult gtrpo_step(const SurrogateModel& model, double delta_prime, std::size_t max_backtracks) {
  if (!(delta_prime > 0.0)) throw Error("delta_prime must be positive");
  const PolicyParams& base = model.base();
  UpdateResult result{base, {}};
  result.report.constraint_limit = delta_prime;
  const double l_base = model.surrogate(base);
  result.report.objective_before = l_base;
  result.report.objective_after = l_base;
  const Eigen::VectorXd g = model.gradient();
  if (!std::isfinite(l_base) || !g.allFinite()) {
    result.report.diverged = true;
    return result;
  }
  if (g.squaredNorm() == 0.0) return result;

  const CgResult cg = conjugate_gradient(model.fisher(), g);
  if (!cg.converged)
    throw ConvergenceError("CG did not converge: residual " + std::to_string(cg.residual_norm) + " after " +
                           std::to_string(cg.iterations) + " iterations");
  const double quad = quadratic_constraint(cg.x, model.fisher());
  if (!(quad > 0.0)) return result;
  const Eigen::VectorXd step = std::sqrt(delta_prime / quad) * cg.x;
  const Eigen::VectorXd theta = base.flat();
  double scale = 1.0;
  for (std::size_t k = 0; k <= max_backtracks; ++k, scale *= 0.5) {
    const PolicyParams candidate = base.with_flat(theta + scale * step);
    const double l_new = model.surrogate(candidate);
    const double div = model.divergence(candidate);
    result.report.backtrack_count = k;
    if (std::isfinite(l_new) && l_new > l_base && div <= delta_prime) {
      result.policy = candidate;
      result.report.objective_after = l_new;
      result.report.constraint_value = div;
      result.report.accepted = true;
      return result;
    }
  }
  return result;
}

UpdateResult gtrpo_update(const Batch& batch, const PositionAdvantages& advantages, KlVariant divergence,
                          double delta_prime, double gamma, std::size_t horizon, double damping) {
  const SampledSurrogate model(batch, advantages, divergence, gamma, horizon, damping);
  return gtrpo_step(model, delta_prime);
}

}  // namespace gtrpo
