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

// Closed-form long-run averages of an affine policy u = −Kx + l.
//
// Every routine first requires F = A − BK to be Schur stable; evaluating an
// unstable policy raises InstabilityError instead of returning infinity.

#pragma once

#include <sstream>
#include <utility>
#include <vector>

#include "rclqr/errors.hpp"
#include "rclqr/numlin.hpp"
#include "rclqr/problem.hpp"
#include "rclqr/synthesis.hpp"

namespace rclqr {

struct EvalReport {
  double J = 0.0;
  double J_c = 0.0;
  double rho_bar = 0.0;
  double dual_value = 0.0;
  double riccati_residual = 0.0;
  double lyapunov_residual = 0.0;
  double acoe_residual = 0.0;
  double spectral_radius = 0.0;
};

struct StationaryMoments {
  Vector mu;
  Matrix Sigma;
};

namespace detail {

inline Matrix closed_loop(const Policy& policy, const ProblemSpec& problem) {
  const Matrix F = problem.A - problem.B * policy.K;
  const double radius = numlin::spectral_radius(F);
  if (radius >= 1.0) {
    std::ostringstream os;
    os << "policy is not stabilizing: spectral radius of A - BK is " << radius;
    throw InstabilityError(os.str(), radius);
  }
  return F;
}

}  // namespace detail

/// Mean μ = (I − F)⁻¹(Bl + w̄) and covariance Σ = FΣFᵀ + W of the invariant
/// state distribution.
inline StationaryMoments stationary_moments(const Policy& policy, const ProblemSpec& problem,
                                            const numlin::IterOptions& opts = {}) {
  const Matrix F = detail::closed_loop(policy, problem);
  const auto n = problem.n();
  StationaryMoments sm;
  sm.mu = numlin::solve_linear(Matrix::Identity(n, n) - F,
                               problem.B * policy.l + problem.stats.mean);
  sm.Sigma = numlin::solve_discrete_lyapunov(F.transpose(), problem.stats.covariance, opts);
  return sm;
}

/// J_c = tr{P_c(W + bbᵀ)} + g_cᵀb with b = Bl + w̄,
/// P_c = 4QWQ + FᵀP_cF and g_cᵀ = 2(bᵀP_cF + 2M₃ᵀQ)(I − F)⁻¹.
inline double risk_closed_form(const Policy& policy, const ProblemSpec& problem,
                               const numlin::IterOptions& opts = {}) {
  const Matrix F = detail::closed_loop(policy, problem);
  const Matrix& Q = problem.Q;
  const Matrix& W = problem.stats.covariance;
  const auto n = problem.n();
  const Vector b = problem.B * policy.l + problem.stats.mean;
  const Matrix Pc = numlin::solve_discrete_lyapunov(F, numlin::symmetrize(4.0 * Q * W * Q), opts);
  const Vector rhs = 2.0 * (F.transpose() * Pc * b + 2.0 * Q * problem.stats.weighted_third);
  const Vector gc = numlin::solve_linear((Matrix::Identity(n, n) - F).transpose(), rhs);
  return (Pc * (W + b * b.transpose())).trace() + gc.dot(b);
}

/// The same risk from the stationary moments: 4tr{QWQ(Σ + μμᵀ)} + 4μᵀQM₃.
inline double risk_via_moments(const Policy& policy, const ProblemSpec& problem,
                               const numlin::IterOptions& opts = {}) {
  const StationaryMoments sm = stationary_moments(policy, problem, opts);
  const Matrix& Q = problem.Q;
  const Matrix QWQ = Q * problem.stats.covariance * Q;
  return 4.0 * (QWQ * (sm.Sigma + sm.mu * sm.mu.transpose())).trace() +
         4.0 * sm.mu.dot(Q * problem.stats.weighted_third);
}

/// J = tr{QΣ} + μᵀQμ + tr{KᵀRKΣ} + (l − Kμ)ᵀR(l − Kμ).
inline double lqr_cost_closed_form(const Policy& policy, const ProblemSpec& problem,
                                   const numlin::IterOptions& opts = {}) {
  const StationaryMoments sm = stationary_moments(policy, problem, opts);
  const Matrix& K = policy.K;
  const Vector ubar = policy.l - K * sm.mu;
  return (problem.Q * sm.Sigma).trace() + sm.mu.dot(problem.Q * sm.mu) +
         (K.transpose() * problem.R * K * sm.Sigma).trace() + ubar.dot(problem.R * ubar);
}

/// Cost and risk of one synthesized policy, used by the dual iteration.
struct PolicyValue {
  Policy policy;
  double J = 0.0;
  double J_c = 0.0;
  double dual_value = 0.0;  // J + λ(J_c − ρ̄)
};

inline PolicyValue evaluate_lambda(const ProblemSpec& problem, double lambda,
                                   const numlin::IterOptions& opts = {}) {
  PolicyValue v;
  v.policy = synthesize(problem, lambda, opts);
  v.J = lqr_cost_closed_form(v.policy, problem, opts);
  v.J_c = risk_closed_form(v.policy, problem, opts);
  v.dual_value = v.J + lambda * (v.J_c - problem.rho_bar);
  return v;
}

/// D(λ) = J(u(x,λ)) + λ(J_c(u(x,λ)) − ρ̄).
inline double dual_value(const ProblemSpec& problem, double lambda,
                         const numlin::IterOptions& opts = {}) {
  return evaluate_lambda(problem, lambda, opts).dual_value;
}

/// Deterministic probe states for the ACOE residual in reports: the origin,
/// the unit vectors, and the all-ones vector.
inline std::vector<Vector> probe_states(int n) {
  std::vector<Vector> states{Vector::Zero(n)};
  for (int i = 0; i < n; ++i) states.push_back(Vector::Unit(n, i));
  states.push_back(Vector::Ones(n));
  return states;
}

inline EvalReport evaluate(const Policy& policy, const ProblemSpec& problem,
                           const numlin::IterOptions& opts = {}) {
  const Matrix F = detail::closed_loop(policy, problem);
  const LagrangianWeights lw = lagrangian_weights(problem.stats, problem.Q, policy.lambda);
  const Matrix C = numlin::symmetrize(4.0 * problem.Q * problem.stats.covariance * problem.Q);
  const Matrix Pc = numlin::solve_discrete_lyapunov(F, C, opts);

  EvalReport r;
  r.spectral_radius = numlin::spectral_radius(F);
  r.J = lqr_cost_closed_form(policy, problem, opts);
  r.J_c = risk_closed_form(policy, problem, opts);
  r.rho_bar = problem.rho_bar;
  r.dual_value = r.J + policy.lambda * (r.J_c - problem.rho_bar);
  r.riccati_residual = numlin::riccati_residual(problem.A, problem.B, lw.Q_lambda, problem.R, policy.P);
  r.lyapunov_residual = numlin::lyapunov_residual(F, C, Pc);
  r.acoe_residual = acoe_residual(policy, problem, probe_states(problem.n()));
  return r;
}

}  // namespace rclqr
