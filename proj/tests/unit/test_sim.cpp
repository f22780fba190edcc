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

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "rclqr/dual.hpp"
#include "rclqr/evaluation.hpp"
#include "rclqr/presets.hpp"
#include "rclqr/sim.hpp"
#include "support/oracles.hpp"

using namespace rclqr;

namespace {

const ProblemSpec& uav30() {
  static const ProblemSpec p = [] {
    McOptions mc;
    mc.samples = 1'000'000;
    return presets::uav_problem(RiskBudget::reformulated(30.0), mc);
  }();
  return p;
}

double reformulation_offset(const ProblemSpec& p) {
  const Matrix WQ = p.stats.covariance * p.Q;
  return p.stats.weighted_fourth - 4.0 * (WQ * WQ).trace();
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace

TEST(Rollout, ZeroNoiseZeroStateStaysAtOrigin) {
  std::mt19937_64 rng(3);
  const ProblemSpec base = oracle::random_problem(rng, false);
  const ProblemSpec p = make_problem(base.A, base.B, base.Q, base.R,
                                     NoiseModel::gaussian(Vector::Zero(base.n()), Matrix::Zero(base.n(), base.n())),
                                     RiskBudget::reformulated(1.0));
  const Policy pol = synthesize(p, 0.0);
  const auto traj = rollout(p, pol, Vector::Zero(p.n()), 200, 1);
  EXPECT_EQ(traj.states.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(traj.inputs.cwiseAbs().maxCoeff(), 0.0);
  const auto costs = empirical_costs(traj, p, 0);
  EXPECT_EQ(costs.J.value, 0.0);
  EXPECT_EQ(costs.J_c.value, 0.0);
}

TEST(Rollout, NoiselessStableLoopDecays) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const ProblemSpec base = oracle::random_problem(rng, false);
    const auto n = base.n();
    const ProblemSpec p = make_problem(base.A, base.B, base.Q, base.R,
                                       NoiseModel::gaussian(Vector::Zero(n), Matrix::Zero(n, n)),
                                       RiskBudget::reformulated(1.0));
    const Policy pol = synthesize(p, 0.0);
    const Vector x0 = oracle::random_matrix(rng, n, 1).col(0);
    const auto traj = rollout(p, pol, x0, 3000, 2);
    const Matrix F = p.A - p.B * pol.K;
    // ‖x_T‖ ≤ ‖F^T‖‖x₀‖, which decays like ρ(F)^T
    Matrix FT = Matrix::Identity(n, n);
    for (int t = 0; t < 3000; ++t) FT = F * FT;
    EXPECT_LE(traj.states.col(3000).norm(), FT.norm() * x0.norm() + 1e-300);
    EXPECT_LE(traj.states.col(3000).norm(), 1e-6 * std::max(1.0, x0.norm()));
  }
}

TEST(Rollout, ReplayIsBitwiseIdentical) {
  const ProblemSpec& p = uav30();
  const Policy pol = synthesize(p, 2.0);
  const Vector x0 = stationary_moments(pol, p).mu;
  const auto a = rollout(p, pol, x0, 5000, 42);
  const auto b = rollout(p, pol, x0, 5000, 42);
  const auto c = rollout(p, pol, x0, 5000, 43);
  EXPECT_TRUE(bitwise_equal(a.states, b.states));
  EXPECT_TRUE(bitwise_equal(a.inputs, b.inputs));
  EXPECT_TRUE(bitwise_equal(a.noises, b.noises));
  EXPECT_FALSE(bitwise_equal(a.states, c.states));
  EXPECT_EQ(a.T, 5000u);
  EXPECT_EQ(a.states.cols(), 5001);
  EXPECT_EQ(a.inputs.cols(), 5000);
  EXPECT_EQ(a.noises.cols(), 5000);
}

TEST(Rollout, StateSatisfiesDynamics) {
  const ProblemSpec& p = uav30();
  const Policy pol = synthesize(p, 1.0);
  const auto traj = rollout(p, pol, Vector::Ones(4), 100, 9);
  for (Eigen::Index t = 0; t < 100; ++t) {
    const Vector u = pol.l - pol.K * traj.states.col(t);
    EXPECT_LE((traj.inputs.col(t) - u).cwiseAbs().maxCoeff(), 1e-12);
    const Vector next = p.A * traj.states.col(t) + p.B * u + traj.noises.col(t);
    EXPECT_LE((traj.states.col(t + 1) - next).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Rollout, RejectsBadInputsAndDetectsOverflow) {
  const Matrix A = Matrix::Constant(1, 1, 2.0);
  const ProblemSpec p = make_problem(A, Matrix::Ones(1, 1), Matrix::Ones(1, 1), Matrix::Ones(1, 1),
                                     NoiseModel::gaussian(Vector::Zero(1), Matrix::Ones(1, 1)),
                                     RiskBudget::reformulated(1.0));
  Policy open = synthesize(p, 0.0);
  open.K.setZero();
  EXPECT_THROW(rollout(p, open, Vector::Ones(1), 100, 1), OverflowError);
  EXPECT_THROW(rollout(p, open, Vector::Ones(2), 10, 1), DimensionError);
  EXPECT_THROW(rollout(p, open, Vector::Ones(1), 0, 1), InvalidArgumentError);
  const auto traj = rollout(p, synthesize(p, 0.0), Vector::Ones(1), 10, 1);
  EXPECT_THROW(empirical_costs(traj, p, 10), InvalidArgumentError);
  EXPECT_THROW(empirical_predictive_variance(traj, p, 10), InvalidArgumentError);
}

TEST(EmpiricalCosts, ErgodicAveragesMatchClosedForms) {
  const ProblemSpec& p = uav30();
  const double lambda = bisection_lambda(p);
  const Policy pol = synthesize(p, lambda);
  const std::size_t T = 1'000'000;
  const auto traj = rollout(p, pol, stationary_moments(pol, p).mu, T, 2021);
  const auto est = empirical_costs(traj, p, 1000);
  const double J = lqr_cost_closed_form(pol, p);
  const double Jc = risk_closed_form(pol, p);
  EXPECT_NEAR(est.J.value, J, 0.02 * J);
  EXPECT_NEAR(est.J_c.value, Jc, 0.02 * Jc);
  EXPECT_GT(est.J.std_error, 0.0);
  EXPECT_LT(est.J.std_error, 0.01 * J);
}

TEST(EmpiricalCosts, ErgodicAveragesOnRandomProblems) {
  std::mt19937_64 rng(7);
  int checked = 0;
  for (int trial = 0; trial < 6; ++trial) {
    const ProblemSpec p = oracle::random_problem(rng, true);
    const Policy pol = synthesize(p, 0.5);
    if (numlin::spectral_radius(p.A - p.B * pol.K) > 0.98) continue;
    ++checked;
    const auto traj = rollout(p, pol, stationary_moments(pol, p).mu, 400'000, 100 + trial);
    const auto est = empirical_costs(traj, p, 1000);
    const double J = lqr_cost_closed_form(pol, p);
    const double Jc = risk_closed_form(pol, p);
    EXPECT_NEAR(est.J.value, J, std::max(0.02 * J, 4.0 * est.J.std_error));
    EXPECT_NEAR(est.J_c.value, Jc, std::max(0.02 * std::abs(Jc), 4.0 * est.J_c.std_error));
  }
  EXPECT_GE(checked, 3);
}

TEST(EmpiricalCosts, IndependentSeedsAgree) {
  const ProblemSpec& p = uav30();
  const Policy pol = synthesize(p, 3.0);
  const Vector x0 = stationary_moments(pol, p).mu;
  const auto a = empirical_costs(rollout(p, pol, x0, 200'000, 1), p, 1000);
  const auto b = empirical_costs(rollout(p, pol, x0, 200'000, 2), p, 1000);
  const double se_J = std::hypot(a.J.std_error, b.J.std_error);
  const double se_Jc = std::hypot(a.J_c.std_error, b.J_c.std_error);
  EXPECT_LE(std::abs(a.J.value - b.J.value), 3.0 * se_J);
  EXPECT_LE(std::abs(a.J_c.value - b.J_c.value), 3.0 * se_Jc);
}

TEST(PredictiveVariance, DeterministicNoiseIsPerfectlyPredicted) {
  std::mt19937_64 rng(11);
  const ProblemSpec base = oracle::random_problem(rng, false);
  const auto n = base.n();
  const ProblemSpec p = make_problem(base.A, base.B, base.Q, base.R,
                                     NoiseModel::gaussian(Vector::Constant(n, 0.7), Matrix::Zero(n, n)),
                                     RiskBudget::reformulated(1.0));
  const Policy pol = synthesize(p, 0.0);
  const auto traj = rollout(p, pol, Vector::Ones(n), 500, 3);
  EXPECT_LE(empirical_predictive_variance(traj, p, 0).value, 1e-18);
}

TEST(PredictiveVariance, ReformulationIdentityOnUav) {
  const ProblemSpec& p = uav30();
  const Policy pol = synthesize(p, bisection_lambda(p));
  const auto traj = rollout(p, pol, stationary_moments(pol, p).mu, 1'000'000, 77);
  const auto est = empirical_costs(traj, p, 1000);
  const auto var = empirical_predictive_variance(traj, p, 1000);
  const double target = est.J_c.value + reformulation_offset(p);
  EXPECT_NEAR(var.value, target, 0.03 * target);
}

TEST(PredictiveVariance, GaussianMatchesClosedForm) {
  std::mt19937_64 rng(13);
  int checked = 0;
  for (int trial = 0; trial < 4; ++trial) {
    const ProblemSpec p = oracle::random_problem(rng, false);
    const Policy pol = synthesize(p, 1.0);
    if (numlin::spectral_radius(p.A - p.B * pol.K) > 0.98) continue;
    ++checked;
    const auto traj = rollout(p, pol, stationary_moments(pol, p).mu, 500'000, 200 + trial);
    const auto var = empirical_predictive_variance(traj, p, 1000);
    const double target = risk_closed_form(pol, p) + reformulation_offset(p);
    EXPECT_NEAR(var.value, target, std::max(0.03 * target, 4.0 * var.std_error));
  }
  EXPECT_GE(checked, 2);
}

TEST(PredictiveVariance, MixtureIdentityOnRandomProblems) {
  std::mt19937_64 rng(17);
  int checked = 0;
  for (int trial = 0; trial < 4; ++trial) {
    const ProblemSpec p = oracle::random_problem(rng, true);
    const Policy pol = synthesize(p, 0.2);
    if (numlin::spectral_radius(p.A - p.B * pol.K) > 0.98) continue;
    ++checked;
    const auto traj = rollout(p, pol, stationary_moments(pol, p).mu, 500'000, 300 + trial);
    const auto est = empirical_costs(traj, p, 1000);
    const auto var = empirical_predictive_variance(traj, p, 1000);
    // p.stats.m₄ came from 20000 draws, so allow for its own error as well
    const double target = est.J_c.value + reformulation_offset(p);
    EXPECT_NEAR(var.value, target,
                std::max(0.03 * target, 4.0 * (var.std_error + est.J_c.std_error + p.stats.weighted_fourth_stderr)));
  }
  EXPECT_GE(checked, 2);
}

TEST(StateVariance, RiskConstrainedPolicyShrinksFirstAxis) {
  const ProblemSpec& p = uav30();
  const Policy base = synthesize(p, 0.0);
  const Policy constrained = synthesize(p, bisection_lambda(p));
  const auto a = rollout(p, base, stationary_moments(base, p).mu, 10'000, 5);
  const auto b = rollout(p, constrained, stationary_moments(constrained, p).mu, 10'000, 5);
  const Vector va = empirical_state_variance(a, default_burn_in(10'000));
  const Vector vb = empirical_state_variance(b, default_burn_in(10'000));
  EXPECT_LT(vb(0), va(0));
  EXPECT_EQ(default_burn_in(10'000), 1000u);
  EXPECT_EQ(default_burn_in(500), 50u);
}
