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

#include "gtrpo/trust_region.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "gtrpo/error.hpp"

namespace gtrpo {
namespace {

void accumulate_score(const Table& probs, const Event& ev, Eigen::Ref<Eigen::VectorXd> s) {
  const Eigen::Index na = probs.cols();
  const auto y = static_cast<Eigen::Index>(ev.obs);
  for (Eigen::Index b = 0; b < na; ++b) s[y * na + b] -= probs(y, b);
  s[y * na + static_cast<Eigen::Index>(ev.action)] += 1.0;
}

// Appends the score columns of one episode, weighted by `base`. In the
// discounted form an episode shorter than the horizon keeps its full score
// for the remaining prefixes.
void append_scores(const Table& probs, const std::vector<Event>& events, double base, bool discounted,
                   double gamma, std::size_t horizon, std::vector<Eigen::VectorXd>& cols, std::vector<double>& w) {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(probs.size());
  for (std::size_t h = 0; h < events.size(); ++h) {
    accumulate_score(probs, events[h], s);
    if (!discounted) continue;
    double weight = prefix_weight(gamma, h + 1);
    if (h + 1 == events.size())
      for (std::size_t k = events.size() + 1; k <= horizon; ++k) weight += prefix_weight(gamma, k);
    cols.push_back(s);
    w.push_back(base * weight);
  }
  if (!discounted) {
    cols.push_back(s);
    w.push_back(base);
  }
}

FisherOperator assemble(const std::vector<Eigen::VectorXd>& cols, const std::vector<double>& w, Eigen::Index dim,
                        double damping) {
  Eigen::MatrixXd scores(dim, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) scores.col(static_cast<Eigen::Index>(i)) = cols[i];
  return FisherOperator(std::move(scores), Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())),
                        damping);
}

}  // namespace

FisherOperator::FisherOperator(Eigen::MatrixXd scores, Eigen::VectorXd weights, double damping)
    : scores_(std::move(scores)), weights_(std::move(weights)), damping_(damping) {
  if (scores_.cols() != weights_.size()) throw ShapeError("one weight per score vector is required");
  if (!(damping_ >= 0.0) || !std::isfinite(damping_)) throw Error("damping must be finite and nonnegative");
  if ((weights_.array() < 0.0).any()) throw Error("Fisher weights must be nonnegative");
}

FisherOperator FisherOperator::from_batch(const Batch& batch, bool discounted, double gamma, std::size_t horizon,
                                          double damping) {
  const Table probs = batch.policy_used.probabilities();
  std::vector<Eigen::VectorXd> cols;
  std::vector<double> w;
  const double base = 1.0 / static_cast<double>(batch.size());
  for (const auto& t : batch.trajectories) append_scores(probs, t.events, base, discounted, gamma, horizon, cols, w);
  return assemble(cols, w, probs.size(), damping);
}

FisherOperator FisherOperator::from_atlas(const TrajectoryAtlas& atlas, const PolicyParams& policy, bool discounted,
                                          double damping) {
  const auto f = trajectory_probs(atlas, policy);
  const Table probs = policy.probabilities();
  std::vector<Eigen::VectorXd> cols;
  std::vector<double> w;
  std::vector<Event> events;
  for (std::size_t i = 0; i < atlas.size(); ++i) {
    const auto& e = atlas.entries()[i];
    events.assign(atlas.events().begin() + static_cast<std::ptrdiff_t>(e.offset),
                  atlas.events().begin() + static_cast<std::ptrdiff_t>(e.offset + e.length));
    append_scores(probs, events, f[i], discounted, atlas.spec().gamma(), atlas.horizon(), cols, w);
  }
  return assemble(cols, w, probs.size(), damping);
}

Eigen::VectorXd FisherOperator::apply(const Eigen::VectorXd& v) const {
  if (v.size() != scores_.rows()) throw ShapeError("Fisher-vector product dimension mismatch");
  const Eigen::VectorXd projections = (scores_.transpose() * v).cwiseProduct(weights_);
  return scores_ * projections + damping_ * v;
}

Eigen::MatrixXd FisherOperator::dense() const {
  Eigen::MatrixXd out = scores_ * weights_.asDiagonal() * scores_.transpose();
  out.diagonal().array() += damping_;
  return out;
}

Eigen::VectorXd fisher_vector_product(const FisherOperator& op, const Eigen::VectorXd& v) { return op.apply(v); }

CgResult conjugate_gradient(const LinearOperator& op, const Eigen::VectorXd& g, std::size_t max_iter, double tol) {
  CgResult out;
  const auto n = g.size();
  if (max_iter == 0) max_iter = 10 * static_cast<std::size_t>(std::max<Eigen::Index>(n, 1));
  out.x = Eigen::VectorXd::Zero(n);
  const double target = tol * g.norm();
  Eigen::VectorXd r = g, p = g;
  double rr = r.squaredNorm();
  Eigen::VectorXd best = out.x;
  double best_norm = std::sqrt(rr);
  if (best_norm <= target) {
    out.converged = true;
    out.residual_norm = best_norm;
    return out;
  }
  for (std::size_t k = 0; k < max_iter; ++k) {
    const Eigen::VectorXd ap = op(p);
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) break;
    const double step = rr / pap;
    out.x += step * p;
    r -= step * ap;
    out.iterations = k + 1;
    // The recursive residual drifts; confirm with a true residual near the end.
    double rr_next = r.squaredNorm();
    if (std::sqrt(rr_next) <= target) {
      r = g - op(out.x);
      rr_next = r.squaredNorm();
    }
    const double norm = std::sqrt(rr_next);
    if (norm < best_norm) {
      best_norm = norm;
      best = out.x;
    }
    if (norm <= target) break;
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  out.x = best;
  out.residual_norm = (g - op(best)).norm();
  out.converged = out.residual_norm <= target;
  return out;
}

CgResult conjugate_gradient(const FisherOperator& op, const Eigen::VectorXd& g, std::size_t max_iter, double tol) {
  if (static_cast<std::size_t>(g.size()) != op.dim()) throw ShapeError("CG right-hand side dimension mismatch");
  return conjugate_gradient([&op](const Eigen::VectorXd& v) { return op.apply(v); }, g, max_iter, tol);
}

CompatibleResult compatible_weights(const Eigen::MatrixXd& features, const Eigen::VectorXd& weights,
                                    const Eigen::VectorXd& returns, double damping) {
  if (features.rows() != weights.size() || features.rows() != returns.size())
    throw ShapeError("compatible_weights: one weight and one return per feature row");
  const Eigen::VectorXd sw = weights.cwiseSqrt();
  const Eigen::MatrixXd a = sw.asDiagonal() * features;
  const Eigen::VectorXd b = sw.cwiseProduct(returns);
  CompatibleResult out;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  out.rank_deficient = cod.rank() < features.cols();
  if (damping > 0.0) {
    Eigen::MatrixXd gram = a.transpose() * a;
    gram.diagonal().array() += damping;
    out.omega = gram.ldlt().solve(a.transpose() * b);
  } else {
    out.omega = cod.solve(b);
  }
  return out;
}

CompatibleResult compatible_weights(const Batch& batch, double gamma, double damping) {
  const auto& policy = batch.policy_used;
  Eigen::MatrixXd features(static_cast<Eigen::Index>(batch.size()), static_cast<Eigen::Index>(policy.dim()));
  Eigen::VectorXd returns(features.rows());
  for (std::size_t t = 0; t < batch.size(); ++t) {
    const auto& traj = batch.trajectories[t];
    features.row(static_cast<Eigen::Index>(t)) = flatten(trajectory_score(policy, traj)).transpose();
    returns[static_cast<Eigen::Index>(t)] = discounted_return(traj, gamma);
  }
  const Eigen::VectorXd weights = Eigen::VectorXd::Constant(features.rows(), 1.0 / static_cast<double>(batch.size()));
  return compatible_weights(features, weights, returns, damping);
}

CompatibleResult compatible_weights(const TrajectoryAtlas& atlas, const PolicyParams& policy, double damping) {
  const auto f = trajectory_probs(atlas, policy);
  Eigen::MatrixXd features(static_cast<Eigen::Index>(atlas.size()), static_cast<Eigen::Index>(policy.dim()));
  Eigen::VectorXd returns(features.rows());
  for (std::size_t i = 0; i < atlas.size(); ++i) {
    features.row(static_cast<Eigen::Index>(i)) = flatten(trajectory_score(policy, atlas.trajectory(i))).transpose();
    returns[static_cast<Eigen::Index>(i)] = atlas.entries()[i].expected_return;
  }
  return compatible_weights(features, Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size())),
                            returns, damping);
}

double quadratic_constraint(const Eigen::VectorXd& direction, const FisherOperator& op) {
  return 0.5 * direction.dot(op.apply(direction));
}

}  // namespace gtrpo
