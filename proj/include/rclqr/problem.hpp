/*
 * Copyright 2026 The rclqr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <string>
#include <vector>

#include "rclqr/noise.hpp"
#include "rclqr/numlin.hpp"

namespace rclqr {

/// The user's risk tolerance, either for the original predictive-variance
/// constraint (ρ) or for the reformulated quadratic constraint (ρ̄).
struct RiskBudget {
  enum class Kind { Original, Reformulated };
  Kind kind = Kind::Original;
  double value = 0.0;

  static RiskBudget original(double rho) { return {Kind::Original, rho}; }
  static RiskBudget reformulated(double rho_bar) { return {Kind::Reformulated, rho_bar}; }
};

/// ρ̄ = ρ − m₄ + 4tr{(WQ)²}.
inline double risk_tolerance_transform(double rho, const NoiseStats& stats, const Matrix& Q) {
  const Matrix WQ = stats.covariance * Q;
  return rho - stats.weighted_fourth + 4.0 * (WQ * WQ).trace();
}

/// Inverse of risk_tolerance_transform.
inline double risk_tolerance_inverse(double rho_bar, const NoiseStats& stats, const Matrix& Q) {
  const Matrix WQ = stats.covariance * Q;
  return rho_bar + stats.weighted_fourth - 4.0 * (WQ * WQ).trace();
}

/// One risk-constrained LQR instance: x⁺ = Ax + Bu + w, stage cost
/// xᵀQx + uᵀRu, and the risk budget in both parameterisations.
///
/// Build through make_problem (synthesis.hpp), which validates the data and
/// certifies stabilizability.
struct ProblemSpec {
  Matrix A;
  Matrix B;
  Matrix Q;
  Matrix R;
  NoiseModel noise;  // the disturbance w entering the state equation directly
  NoiseStats stats;  // cached statistics of `noise` weighted by Q
  double rho = 0.0;
  double rho_bar = 0.0;
  std::vector<std::string> warnings;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
};

/// Stationary affine controller u(x) = −Kx + l together with its relative
/// value function V(x) = xᵀPx + gᵀx and optimal Lagrangian average h.
struct Policy {
  double lambda = 0.0;
  Matrix K;
  Vector l;
  Matrix P;
  Vector g;
  double h = 0.0;
};

}  // namespace rclqr
