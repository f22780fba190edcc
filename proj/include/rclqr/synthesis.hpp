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

// Optimal stationary policy for the Lagrangian
//
//   L(u, λ) = limsup 1/T E Σ (xᵀQ_λx + 2λSᵀx + uᵀRu) − λρ̄,
//   Q_λ = Q + 4λQWQ,  S = 2QM₃.
//
// With M = R + BᵀPB and F = A − BK the policy is
//
//   P  = DARE(A, B, Q_λ, R)
//   K  = M⁻¹BᵀPA                               (u = −Kx + l)
//   gᵀ = (2w̄ᵀP + gᵀ)F + 2λSᵀ
//   l  = −½ M⁻¹Bᵀ(2Pw̄ + g)
//   h  = tr{P(W + w̄w̄ᵀ)} + gᵀw̄ − lᵀMl − λρ̄
//
// Completing the square in the Bellman backup gives the −lᵀMl term and a
// positive gain K applied as −Kx; acoe_residual checks both.

#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "rclqr/errors.hpp"
#include "rclqr/noise.hpp"
#include "rclqr/numlin.hpp"
#include "rclqr/problem.hpp"

namespace rclqr {

struct LagrangianWeights {
  Matrix Q_lambda;
  Vector S;
};

inline LagrangianWeights lagrangian_weights(const NoiseStats& stats, const Matrix& Q, double lambda) {
  if (!(lambda >= 0.0)) {
    throw InvalidArgumentError("lagrangian_weights: lambda must be non-negative");
  }
  LagrangianWeights w;
  w.Q_lambda = numlin::symmetrize(Q + 4.0 * lambda * Q * stats.covariance * Q);
  w.S = 2.0 * Q * stats.weighted_third;
  return w;
}

/// Synthesizes u(x, λ) = −K(λ)x + l(λ). Throws InstabilityError when the
/// closed loop is not Schur stable, which signals a non-detectable
/// (A, Q_λ^{1/2}) pair.
inline Policy synthesize(const ProblemSpec& problem, double lambda,
                         const numlin::IterOptions& opts = {}) {
  const LagrangianWeights lw = lagrangian_weights(problem.stats, problem.Q, lambda);
  const Matrix& A = problem.A;
  const Matrix& B = problem.B;
  const Vector& wbar = problem.stats.mean;
  const auto n = A.rows();

  Policy pol;
  pol.lambda = lambda;
  pol.P = numlin::solve_dare(A, B, lw.Q_lambda, problem.R, opts);

  const Matrix M = problem.R + B.transpose() * pol.P * B;
  const Eigen::LLT<Matrix> llt(M);
  pol.K = llt.solve(B.transpose() * pol.P * A);
  const Matrix F = A - B * pol.K;
  const double radius = numlin::spectral_radius(F);
  if (radius >= 1.0) {
    std::ostringstream os;
    os << "synthesize: closed loop at lambda=" << lambda << " has spectral radius " << radius
       << "; (A, Q_lambda^{1/2}) is likely not detectable";
    throw InstabilityError(os.str(), radius);
  }

  const Matrix I = Matrix::Identity(n, n);
  const Vector rhs = F.transpose() * (2.0 * pol.P * wbar) + 2.0 * lambda * lw.S;
  pol.g = numlin::solve_linear((I - F).transpose(), rhs);
  pol.l = -0.5 * llt.solve(B.transpose() * (2.0 * pol.P * wbar + pol.g));

  const Matrix second = problem.stats.covariance + wbar * wbar.transpose();
  pol.h = (pol.P * second).trace() + pol.g.dot(wbar) - pol.l.dot(M * pol.l) -
          lambda * problem.rho_bar;
  return pol;
}

/// Backward recursion of the T-stage Lagrangian cost E Σ_{t<T}(xᵀQ_λx +
/// 2λSᵀx + uᵀRu) with V_t(x) = xᵀP_tx + g_tᵀx + z_t and P_T = g_T = z_T = 0.
/// P, g, z hold t = 0..T; K, l hold t = 0..T−1.
struct FiniteHorizonSolution {
  std::vector<Matrix> P;
  std::vector<Vector> g;
  std::vector<double> z;
  std::vector<Matrix> K;
  std::vector<Vector> l;
};

inline FiniteHorizonSolution finite_horizon_backward(const ProblemSpec& problem, double lambda,
                                                     std::size_t T) {
  if (T < 1) throw InvalidArgumentError("finite_horizon_backward: T must be at least 1");
  const LagrangianWeights lw = lagrangian_weights(problem.stats, problem.Q, lambda);
  const Matrix& A = problem.A;
  const Matrix& B = problem.B;
  const Vector& wbar = problem.stats.mean;
  const Matrix second = problem.stats.covariance + wbar * wbar.transpose();
  const auto n = problem.n();

  FiniteHorizonSolution sol;
  sol.P.assign(T + 1, Matrix::Zero(n, n));
  sol.g.assign(T + 1, Vector::Zero(n));
  sol.z.assign(T + 1, 0.0);
  sol.K.assign(T, Matrix());
  sol.l.assign(T, Vector());

  for (std::size_t t = T; t >= 1; --t) {
    const Matrix& Pt = sol.P[t];
    const Vector& gt = sol.g[t];
    const Matrix M = problem.R + B.transpose() * Pt * B;
    const Eigen::LLT<Matrix> llt(M);
    const Matrix K = llt.solve(B.transpose() * Pt * A);
    const Vector l = -0.5 * llt.solve(B.transpose() * (2.0 * Pt * wbar + gt));
    const Matrix F = A - B * K;

    sol.P[t - 1] = numlin::symmetrize(lw.Q_lambda + A.transpose() * Pt * A -
                                      A.transpose() * Pt * B * K);
    sol.g[t - 1] = F.transpose() * (2.0 * Pt * wbar + gt) + 2.0 * lambda * lw.S;
    sol.z[t - 1] = sol.z[t] + (Pt * second).trace() + gt.dot(wbar) - l.dot(M * l);
    sol.K[t - 1] = K;
    sol.l[t - 1] = l;
  }
  return sol;
}

/// max over `states` of |LHS − RHS| in the average-cost optimality equation
///
///   h + λρ̄ + xᵀPx + gᵀx = xᵀQ_λx + 2λSᵀx + uᵀRu + gᵀ(Ax + Bu + w̄)
///                          + E[(Ax + Bu + w)ᵀP(Ax + Bu + w)]
///
/// at u = −Kx + l. The λρ̄ term undoes the constant offset folded into h.
inline double acoe_residual(const Policy& policy, const ProblemSpec& problem,
                            const std::vector<Vector>& states) {
  const LagrangianWeights lw = lagrangian_weights(problem.stats, problem.Q, policy.lambda);
  const Vector& wbar = problem.stats.mean;
  const Matrix& P = policy.P;
  const double noise_term = (P * problem.stats.covariance).trace() + wbar.dot(P * wbar);
  const double h_avg = policy.h + policy.lambda * problem.rho_bar;

  double worst = 0.0;
  for (const Vector& x : states) {
    const Vector u = -policy.K * x + policy.l;
    const Vector y = problem.A * x + problem.B * u;
    const double lhs = h_avg + x.dot(P * x) + policy.g.dot(x);
    const double rhs = x.dot(lw.Q_lambda * x) + 2.0 * policy.lambda * lw.S.dot(x) +
                       u.dot(problem.R * u) + policy.g.dot(y + wbar) + y.dot(P * y) +
                       2.0 * y.dot(P * wbar) + noise_term;
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

/// Validates the problem data, converts the risk budget, and certifies
/// stabilizability by synthesizing the λ = 0 policy.
inline ProblemSpec make_problem(Matrix A, Matrix B, Matrix Q, Matrix R, NoiseModel noise,
                                RiskBudget budget, NoiseStats stats) {
  const auto n = A.rows();
  numlin::require_square(A, "problem: A");
  if (B.rows() != n || B.cols() < 1) throw DimensionError("problem: B has shape " + numlin::shape(B));
  if (Q.rows() != n || Q.cols() != n) throw DimensionError("problem: Q has shape " + numlin::shape(Q));
  if (R.rows() != B.cols() || R.cols() != B.cols()) {
    throw DimensionError("problem: R has shape " + numlin::shape(R));
  }
  if (noise.dim() != n) {
    throw DimensionError("problem: noise dimension " + std::to_string(noise.dim()) +
                         " does not match state dimension " + std::to_string(n));
  }
  if (!A.allFinite() || !B.allFinite() || !Q.allFinite() || !R.allFinite()) {
    throw InvalidArgumentError("problem: non-finite matrix entries");
  }
  if (!numlin::is_psd(Q)) throw InvalidArgumentError("problem: Q must be symmetric positive semi-definite");
  if (!numlin::is_pd(R)) throw InvalidArgumentError("problem: R must be symmetric positive definite");
  if (!(budget.value > 0.0)) throw InvalidArgumentError("problem: risk budget must be positive");

  ProblemSpec p{std::move(A), std::move(B), std::move(Q), std::move(R),
                std::move(noise), std::move(stats), 0.0, 0.0, {}};
  if (budget.kind == RiskBudget::Kind::Original) {
    p.rho = budget.value;
    p.rho_bar = risk_tolerance_transform(p.rho, p.stats, p.Q);
  } else {
    p.rho_bar = budget.value;
    p.rho = risk_tolerance_inverse(p.rho_bar, p.stats, p.Q);
  }
  if (p.rho_bar <= 0.0) {
    std::ostringstream os;
    os << "reformulated budget rho_bar = " << p.rho_bar << " <= 0; the constraint may be infeasible";
    p.warnings.push_back(os.str());
  }
  (void)synthesize(p, 0.0);
  return p;
}

inline ProblemSpec make_problem(Matrix A, Matrix B, Matrix Q, Matrix R, NoiseModel noise,
                                RiskBudget budget, const McOptions& mc = {}) {
  if (Q.rows() != noise.dim() || Q.cols() != noise.dim()) {
    throw DimensionError("problem: Q has shape " + numlin::shape(Q) + ", noise dimension is " +
                         std::to_string(noise.dim()));
  }
  NoiseStats stats = compute_stats(noise, Q, mc);
  return make_problem(std::move(A), std::move(B), std::move(Q), std::move(R), std::move(noise),
                      budget, std::move(stats));
}

}  // namespace rclqr
