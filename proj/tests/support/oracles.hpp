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

// Test-only reference computations. Nothing here calls into the library's
// solvers, so each routine is an independent check of the path it guards.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

#include "rclqr/noise.hpp"
#include "rclqr/problem.hpp"
#include "rclqr/synthesis.hpp"

namespace rclqr::oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Classical LQR by plain value iteration with an explicit inverse:
/// P ← Q + AᵀPA − AᵀPB(R + BᵀPB)⁻¹BᵀPA, K = (R + BᵀPB)⁻¹BᵀPA.
struct ClassicalLqr {
  MatrixXd P;
  MatrixXd K;
};

inline ClassicalLqr classical_lqr(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                                  const MatrixXd& R, int max_iter = 200000) {
  MatrixXd P = Q;
  for (int it = 0; it < max_iter; ++it) {
    const MatrixXd G = (R + B.transpose() * P * B).inverse();
    MatrixXd next = Q + A.transpose() * P * A - A.transpose() * P * B * G * B.transpose() * P * A;
    next = 0.5 * (next + next.transpose());
    const double diff = (next - P).cwiseAbs().maxCoeff();
    P = next;
    if (diff <= 1e-14 * std::max(1.0, P.cwiseAbs().maxCoeff())) break;
  }
  const MatrixXd K = (R + B.transpose() * P * B).inverse() * B.transpose() * P * A;
  return {P, K};
}

/// Σ_{k<terms} (Fᵀ)ᵏ C Fᵏ.
inline MatrixXd lyapunov_truncated_sum(const MatrixXd& F, const MatrixXd& C, int terms = 200) {
  MatrixXd sum = MatrixXd::Zero(C.rows(), C.cols());
  MatrixXd Fk = MatrixXd::Identity(F.rows(), F.cols());
  for (int k = 0; k < terms; ++k) {
    sum += Fk.transpose() * C * Fk;
    Fk = Fk * F;
  }
  return sum;
}

/// Direct solve of vec(P) = vec(C) + (Fᵀ ⊗ Fᵀ) vec(P).
inline MatrixXd lyapunov_kronecker(const MatrixXd& F, const MatrixXd& C) {
  const auto n = F.rows();
  MatrixXd kron(n * n, n * n);
  const MatrixXd Ft = F.transpose();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) kron.block(i * n, j * n, n, n) = Ft(i, j) * Ft;
  const MatrixXd lhs = MatrixXd::Identity(n * n, n * n) - kron;
  const VectorXd vecC = Eigen::Map<const VectorXd>(C.data(), n * n);
  const VectorXd vecP = lhs.fullPivLu().solve(vecC);
  return Eigen::Map<const MatrixXd>(vecP.data(), n, n);
}

/// Optimal steady state of min x̄ᵀQx̄ + 2sᵀx̄ + ūᵀRū s.t. x̄ = Ax̄ + Bū + w̄,
/// by solving the KKT system. Requires Q ≻ 0 on the constraint null space.
inline double steady_state_cost(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                                const MatrixXd& R, const VectorXd& s, const VectorXd& wbar) {
  const auto n = A.rows(), m = B.cols();
  const auto N = n + m + n;
  MatrixXd kkt = MatrixXd::Zero(N, N);
  VectorXd rhs = VectorXd::Zero(N);
  const MatrixXd E = (MatrixXd(n, n + m) << MatrixXd::Identity(n, n) - A, -B).finished();
  kkt.topLeftCorner(n, n) = 2.0 * Q;
  kkt.block(n, n, m, m) = 2.0 * R;
  kkt.topRightCorner(n + m, n) = E.transpose();
  kkt.bottomLeftCorner(n, n + m) = E;
  rhs.head(n) = -2.0 * s;
  rhs.tail(n) = wbar;
  const VectorXd sol = kkt.fullPivLu().solve(rhs);
  const VectorXd x = sol.head(n), u = sol.segment(n, m);
  return x.dot(Q * x) + 2.0 * s.dot(x) + u.dot(R * u);
}

/// Exact expected T-stage Lagrangian cost of a time-varying affine policy
/// u_t = −K_t x_t + l_t from a deterministic x₀, by propagating the first two
/// moments forward.
inline double finite_horizon_cost(const ProblemSpec& p, double lambda, const VectorXd& x0,
                                  const std::vector<MatrixXd>& K, const std::vector<VectorXd>& l) {
  const MatrixXd Ql = p.Q + 4.0 * lambda * p.Q * p.stats.covariance * p.Q;
  const VectorXd S = 2.0 * p.Q * p.stats.weighted_third;
  VectorXd mu = x0;
  MatrixXd cov = MatrixXd::Zero(x0.size(), x0.size());
  double total = 0.0;
  for (std::size_t t = 0; t < K.size(); ++t) {
    const VectorXd umean = -K[t] * mu + l[t];
    const MatrixXd ucov = K[t] * cov * K[t].transpose();
    total += (Ql * (cov + mu * mu.transpose())).trace() + 2.0 * lambda * S.dot(mu) +
             (p.R * (ucov + umean * umean.transpose())).trace();
    const MatrixXd F = p.A - p.B * K[t];
    mu = F * mu + p.B * l[t] + p.stats.mean;
    cov = F * cov * F.transpose() + p.stats.covariance;
  }
  return total;
}

inline MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  MatrixXd M(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) M(i, j) = nd(rng);
  return M;
}

inline MatrixXd random_spd(std::mt19937_64& rng, Eigen::Index n, double floor = 0.1) {
  const MatrixXd G = random_matrix(rng, n, n);
  MatrixXd S = G * G.transpose() / static_cast<double>(n) + floor * MatrixXd::Identity(n, n);
  return 0.5 * (S + S.transpose());
}

/// A random asymmetric two-component Gaussian mixture (nonzero mean and M₃).
inline NoiseModel random_mixture(std::mt19937_64& rng, Eigen::Index n, double scale = 0.3) {
  std::uniform_real_distribution<double> wd(0.15, 0.85);
  const double w = wd(rng);
  Gaussian a{random_matrix(rng, n, 1, 1.0).col(0), scale * random_spd(rng, n, 0.05)};
  Gaussian b{random_matrix(rng, n, 1, 0.5).col(0), scale * random_spd(rng, n, 0.05)};
  return NoiseModel::mixture({{w, a}, {1.0 - w, b}});
}

/// Random stabilizable problem with n ≤ 6 states. Open-loop radius is kept
/// near or above one so feedback matters; random B is generically
/// controllable. Statistics use a small Monte-Carlo budget for m₄, which only
/// affects ρ ↔ ρ̄ conversion.
inline ProblemSpec random_problem(std::mt19937_64& rng, bool mixture_noise = true,
                                  double rho_bar = 1e6) {
  std::uniform_int_distribution<int> nd(1, 6);
  const int n = nd(rng);
  std::uniform_int_distribution<int> md(1, n);
  const int m = md(rng);
  MatrixXd A = random_matrix(rng, n, n);
  Eigen::EigenSolver<MatrixXd> es(A, false);
  const double radius = es.eigenvalues().cwiseAbs().maxCoeff();
  std::uniform_real_distribution<double> target(0.8, 1.3);
  if (radius > 0) A *= target(rng) / radius;
  const MatrixXd B = random_matrix(rng, n, m);
  const MatrixXd Q = random_spd(rng, n, 0.2);
  const MatrixXd R = random_spd(rng, m, 0.5);
  McOptions mc;
  mc.samples = 20000;
  NoiseModel noise = mixture_noise
                         ? random_mixture(rng, n)
                         : NoiseModel::gaussian(VectorXd::Zero(n), 0.3 * random_spd(rng, n, 0.05));
  return make_problem(A, B, Q, R, noise, RiskBudget::reformulated(rho_bar), mc);
}

}  // namespace rclqr::oracle
