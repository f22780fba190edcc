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

// Planar UAV double integrator with a skewed gust on the first axis.
//
//   x = (p₁, v₁, p₂, v₂),  x⁺ = Ax + B(u + w),  dt = 0.5
//   w₁ ~ 0.2·N(3, 30) + 0.8·N(8, 60),  w₂ ~ N(0, 0.01)
//   Q = diag(1, 0.1, 2, 0.2),  R = I₂

#pragma once

#include "rclqr/noise.hpp"
#include "rclqr/problem.hpp"
#include "rclqr/synthesis.hpp"

namespace rclqr::presets {

inline Matrix uav_A() {
  Matrix A(4, 4);
  A << 1, 0.5, 0, 0,
       0, 1, 0, 0,
       0, 0, 1, 0.5,
       0, 0, 0, 1;
  return A;
}

inline Matrix uav_B() {
  Matrix B(4, 2);
  B << 0.125, 0,
       0.5, 0,
       0, 0.125,
       0, 0.5;
  return B;
}

inline Matrix uav_Q() { return Vector((Vector(4) << 1, 0.1, 2, 0.2).finished()).asDiagonal(); }

inline Matrix uav_R() { return Matrix::Identity(2, 2); }

/// The gust in input coordinates (before it passes through B).
inline NoiseModel uav_input_noise() {
  auto component = [](double mean1, double var1) {
    Vector mean(2);
    mean << mean1, 0.0;
    Matrix cov = Matrix::Zero(2, 2);
    cov(0, 0) = var1;
    cov(1, 1) = 0.01;
    return Gaussian{mean, cov};
  };
  return NoiseModel::mixture({{0.2, component(3.0, 30.0)}, {0.8, component(8.0, 60.0)}});
}

inline constexpr double kUavRho = 8.0;      // original budget of the trajectory experiment
inline constexpr double kUavRhoBar = 15.0;  // reformulated budget of the convergence experiment

/// The UAV problem with the gust folded into the state equation as Bw.
inline ProblemSpec uav_problem(RiskBudget budget = RiskBudget::reformulated(kUavRhoBar),
                               const McOptions& mc = {}) {
  const Matrix B = uav_B();
  return make_problem(uav_A(), B, uav_Q(), uav_R(), uav_input_noise().transformed(B), budget, mc);
}

/// Same dynamics and noise statistics with a different budget, without
/// re-estimating m₄.
inline ProblemSpec with_budget(const ProblemSpec& base, RiskBudget budget) {
  return make_problem(base.A, base.B, base.Q, base.R, base.noise, budget, base.stats);
}

}  // namespace rclqr::presets
