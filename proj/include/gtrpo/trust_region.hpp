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

#ifndef GTRPO_TRUST_REGION_HPP_
#define GTRPO_TRUST_REGION_HPP_

#include <cstddef>
#include <functional>

#include <Eigen/Core>

#include "gtrpo/estimation.hpp"
#include "gtrpo/oracle.hpp"

namespace gtrpo {

/// Matrix-free Fisher operator: v -> sum_i w_i s_i (s_i^T v) + damping v.
/// Immutable after construction.
class FisherOperator {
 public:
  static constexpr double kDefaultDamping = 1e-3;

  /// Columns of `scores` are flattened score vectors. Throws Error on a
  /// negative weight or a size mismatch.
  FisherOperator(Eigen::MatrixXd scores, Eigen::VectorXd weights, double damping = kDefaultDamping);

  /// Sampled operator: per-trajectory scores with weight 1/m, or (discounted)
  /// per-prefix scores with weight prefix_weight(h)/m for h = 1..horizon.
  static FisherOperator from_batch(const Batch& batch, bool discounted, double gamma, std::size_t horizon,
                                   double damping = kDefaultDamping);

  /// Exact operator with atlas weights f(tau; theta).
  static FisherOperator from_atlas(const TrajectoryAtlas& atlas, const PolicyParams& policy, bool discounted,
                                   double damping = kDefaultDamping);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(scores_.rows()); }
  double damping() const noexcept { return damping_; }

  /// Throws ShapeError on a dimension mismatch.
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;

  /// Materialized matrix (tests and small problems only).
  Eigen::MatrixXd dense() const;

 private:
  Eigen::MatrixXd scores_;
  Eigen::VectorXd weights_;
  double damping_;
};

Eigen::VectorXd fisher_vector_product(const FisherOperator& op, const Eigen::VectorXd& v);

using LinearOperator = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct CgResult {
  Eigen::VectorXd x;
  double residual_norm = 0.0;  ///< ||op(x) - g||
  std::size_t iterations = 0;
  bool converged = false;
};

/// Conjugate gradient for op(x) = g. Stops when ||op(x) - g|| <= tol ||g||;
/// max_iter = 0 means 10 * dim. On non-convergence the best iterate is
/// returned with converged = false.
CgResult conjugate_gradient(const LinearOperator& op, const Eigen::VectorXd& g, std::size_t max_iter = 0,
                            double tol = 1e-8);
CgResult conjugate_gradient(const FisherOperator& op, const Eigen::VectorXd& g, std::size_t max_iter = 0,
                            double tol = 1e-8);

struct CompatibleResult {
  Eigen::VectorXd omega;
  bool rank_deficient = false;  ///< Gram matrix of the scores is singular
};

/// Weighted least squares min_w sum_i w_i (phi_i^T omega - R_i)^2. With
/// damping = 0 the minimum-norm solution is returned; with damping > 0 the
/// damped normal equations (Phi^T W Phi + damping I) omega = Phi^T W R are solved.
CompatibleResult compatible_weights(const Eigen::MatrixXd& features, const Eigen::VectorXd& weights,
                                    const Eigen::VectorXd& returns, double damping = 0.0);

/// Sampled form: phi = trajectory score, R = discounted return, weight 1/m.
CompatibleResult compatible_weights(const Batch& batch, double gamma, double damping = 0.0);

/// Exact form: atlas weights f(tau; theta) and expected returns.
CompatibleResult compatible_weights(const TrajectoryAtlas& atlas, const PolicyParams& policy, double damping = 0.0);

/// 1/2 d^T op(d).
double quadratic_constraint(const Eigen::VectorXd& direction, const FisherOperator& op);

}  // namespace gtrpo

#endif  // GTRPO_TRUST_REGION_HPP_
