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

#include <algorithm>
#include <cmath>
#include <random>

#include "rclqr/noise.hpp"
#include "support/oracles.hpp"

using namespace rclqr;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

NoiseModel scalar_mixture() {
  return NoiseModel::mixture({{0.2, {vec({3.0}), Matrix::Constant(1, 1, 30.0)}},
                              {0.8, {vec({8.0}), Matrix::Constant(1, 1, 60.0)}}});
}

// Central fourth moment of a scalar Gaussian mixture, term by term:
// E(w − w̄)⁴ = Σ πᵢ(δᵢ⁴ + 6δᵢ²σᵢ² + 3σᵢ⁴).
double scalar_mixture_m4() {
  const double pi[2] = {0.2, 0.8}, mu[2] = {3.0, 8.0}, var[2] = {30.0, 60.0};
  double mean = 0.0, W = 0.0, c4 = 0.0;
  for (int i = 0; i < 2; ++i) mean += pi[i] * mu[i];
  for (int i = 0; i < 2; ++i) {
    const double d = mu[i] - mean;
    W += pi[i] * (var[i] + d * d);
    c4 += pi[i] * (d * d * d * d + 6 * d * d * var[i] + 3 * var[i] * var[i]);
  }
  return c4 - W * W;
}

McOptions mc(std::size_t n, std::uint64_t seed = 99) {
  McOptions o;
  o.samples = n;
  o.seed = seed;
  return o;
}

double normal_cdf(double x, double mu, double sd) { return 0.5 * std::erfc(-(x - mu) / (sd * std::sqrt(2.0))); }

}  // namespace

TEST(NoiseModel, RejectsInvalidParameters) {
  EXPECT_THROW(NoiseModel::gaussian(vec({0, 0}), -Matrix::Identity(2, 2)), InvalidArgumentError);
  EXPECT_THROW(NoiseModel::gaussian(vec({0}), Matrix::Identity(2, 2)), DimensionError);
  EXPECT_THROW(NoiseModel::mixture({}), InvalidArgumentError);
  EXPECT_THROW(NoiseModel::mixture({{0.5, {vec({0}), Matrix::Identity(1, 1)}},
                                    {0.6, {vec({1}), Matrix::Identity(1, 1)}}}),
               InvalidArgumentError);
  EXPECT_THROW(NoiseModel::mixture({{0.0, {vec({0}), Matrix::Identity(1, 1)}},
                                    {1.0, {vec({1}), Matrix::Identity(1, 1)}}}),
               InvalidArgumentError);
  EXPECT_THROW(NoiseModel::empirical({}), InvalidArgumentError);
  EXPECT_THROW(NoiseModel::empirical({vec({1}), vec({1, 2})}), DimensionError);
  Matrix asym(2, 2);
  asym << 1, 0.5, 0, 1;
  EXPECT_THROW(NoiseModel::gaussian(vec({0, 0}), asym), InvalidArgumentError);
}

TEST(AnalyticStats, StandardGaussian) {
  const auto st = analytic_stats(NoiseModel::gaussian(Vector::Zero(2), Matrix::Identity(2, 2)),
                                 Matrix::Identity(2, 2));
  EXPECT_EQ(st.mean, Vector::Zero(2));
  EXPECT_EQ(st.covariance, Matrix::Identity(2, 2));
  EXPECT_EQ(st.weighted_third, Vector::Zero(2));
  EXPECT_DOUBLE_EQ(st.weighted_fourth, 4.0);
  EXPECT_EQ(st.weighted_fourth_stderr, 0.0);
}

TEST(AnalyticStats, ScalarMixtureMoments) {
  const auto st = analytic_stats(scalar_mixture(), Matrix::Identity(1, 1), mc(2'000'000));
  EXPECT_NEAR(st.mean(0), 7.0, 1e-14);
  EXPECT_NEAR(st.covariance(0, 0), 58.0, 1e-12);
  // E(w−w̄)³ = Σπ(δ³ + 3δσ²) = 0.2(−64 − 360) + 0.8(1 + 180) = 60
  EXPECT_NEAR(st.weighted_third(0), 60.0, 1e-12);
  const double exact = scalar_mixture_m4();
  EXPECT_NEAR(exact, 6732.0, 1e-9);
  EXPECT_NEAR(st.weighted_fourth, exact, 0.02 * exact);
  EXPECT_NEAR(st.weighted_fourth, exact, 5.0 * st.weighted_fourth_stderr);
  EXPECT_GT(st.weighted_fourth_stderr, 0.0);
}

TEST(AnalyticStats, SymmetricMixtureHasNoSkew) {
  const Vector mu = vec({1.5, -0.5});
  const Matrix cov = (Matrix(2, 2) << 1.0, 0.3, 0.3, 0.5).finished();
  const NoiseModel m = NoiseModel::mixture({{0.5, {mu, cov}}, {0.5, {-mu, cov}}});
  const auto st = analytic_stats(m, Matrix::Identity(2, 2), mc(200'000));
  EXPECT_LE(st.mean.cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE(st.weighted_third.cwiseAbs().maxCoeff(), 1e-14);
  const auto emp = mc_stats(m, Matrix::Identity(2, 2), mc(1'000'000));
  const double scale = std::pow(st.covariance.trace(), 1.5);
  EXPECT_LE(emp.weighted_third.cwiseAbs().maxCoeff(), 0.05 * scale);
}

TEST(AnalyticStats, EmpiricalIsUnsupported) {
  EXPECT_THROW(analytic_stats(NoiseModel::empirical({vec({1.0})}), Matrix::Identity(1, 1)),
               UnsupportedVariantError);
  EXPECT_THROW(analytic_stats(NoiseModel::gaussian(Vector::Zero(2), Matrix::Identity(2, 2)),
                              Matrix::Identity(3, 3)),
               DimensionError);
}

TEST(AnalyticStats, ThirdMomentLinearInWeight) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 5;
    const NoiseModel m = oracle::random_mixture(rng, n);
    const Matrix Q = oracle::random_spd(rng, n);
    const auto base = analytic_stats(m, Q, mc(1000));
    const auto quad = analytic_stats(m, 4.0 * Q, mc(1000));
    EXPECT_EQ(quad.weighted_third, 4.0 * base.weighted_third);
    const auto odd = analytic_stats(m, 3.7 * Q, mc(1000));
    EXPECT_LE((odd.weighted_third - 3.7 * base.weighted_third).cwiseAbs().maxCoeff(),
              1e-13 * (1.0 + base.weighted_third.cwiseAbs().maxCoeff()));
  }
}

TEST(AnalyticStats, MixtureThirdMomentMatchesMonteCarlo) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 1 + trial % 4;
    const NoiseModel m = oracle::random_mixture(rng, n);
    const Matrix Q = oracle::random_spd(rng, n);
    const auto exact = analytic_stats(m, Q, mc(1000));
    const auto est = mc_stats(m, Q, mc(1'000'000, 100 + trial));
    const double scale = numlin::inf_norm(Q) * std::pow(exact.covariance.trace(), 1.5);
    EXPECT_LE((est.weighted_third - exact.weighted_third).cwiseAbs().maxCoeff(), 0.05 * scale);
    EXPECT_LE(numlin::max_abs(est.covariance - exact.covariance),
              0.02 * numlin::max_abs(exact.covariance));
  }
}

TEST(McStats, GaussianAgreesWithClosedForm) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 4; ++trial) {
    const int n = 1 + trial;
    const Vector mu = oracle::random_matrix(rng, n, 1).col(0);
    const Matrix W = oracle::random_spd(rng, n);
    const Matrix Q = oracle::random_spd(rng, n);
    const NoiseModel m = NoiseModel::gaussian(mu, W);
    const auto exact = analytic_stats(m, Q);
    const auto est = mc_stats(m, Q, mc(1'000'000, 7 + trial));
    const double wscale = std::sqrt(W.diagonal().maxCoeff());
    EXPECT_LE((est.mean - exact.mean).cwiseAbs().maxCoeff(), 0.005 * std::max(wscale, mu.cwiseAbs().maxCoeff()));
    EXPECT_LE(numlin::max_abs(est.covariance - exact.covariance), 0.02 * numlin::max_abs(W));
    EXPECT_LE(est.weighted_third.cwiseAbs().maxCoeff(),
              0.05 * numlin::inf_norm(Q) * std::pow(W.trace(), 1.5));
    EXPECT_NEAR(est.weighted_fourth, exact.weighted_fourth, 0.05 * exact.weighted_fourth);
  }
}

TEST(McStats, StandardGaussianDimTwo) {
  const auto est = mc_stats(NoiseModel::gaussian(Vector::Zero(2), Matrix::Identity(2, 2)),
                            Matrix::Identity(2, 2), mc(1'000'000));
  EXPECT_LE(numlin::max_abs(est.covariance - Matrix::Identity(2, 2)), 0.01);
  EXPECT_NEAR(est.weighted_fourth, 4.0, 0.08);
}

TEST(McStats, ConstantEmpiricalModelIsDegenerate) {
  const Vector c = vec({1.25, -3.0, 0.5});
  const auto est = mc_stats(NoiseModel::empirical({c}), Matrix::Identity(3, 3), mc(5000));
  EXPECT_LE((est.mean - c).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(numlin::max_abs(est.covariance), 1e-20);
  EXPECT_LE(est.weighted_third.cwiseAbs().maxCoeff(), 1e-30);
  EXPECT_LE(est.weighted_fourth, 1e-40);
}

TEST(McStats, DeterministicAndThreadIndependent) {
  const NoiseModel m = scalar_mixture();
  McOptions a = mc(300'000, 5);
  a.threads = 1;
  McOptions b = a;
  b.threads = 4;
  const auto s1 = mc_stats(m, Matrix::Identity(1, 1), a);
  const auto s2 = mc_stats(m, Matrix::Identity(1, 1), a);
  const auto s3 = mc_stats(m, Matrix::Identity(1, 1), b);
  for (const auto* s : {&s2, &s3}) {
    EXPECT_EQ(s1.mean, s->mean);
    EXPECT_EQ(s1.covariance, s->covariance);
    EXPECT_EQ(s1.weighted_third, s->weighted_third);
    EXPECT_EQ(s1.weighted_fourth, s->weighted_fourth);
  }
  const auto other = mc_stats(m, Matrix::Identity(1, 1), mc(300'000, 6));
  EXPECT_NE(s1.weighted_fourth, other.weighted_fourth);
}

TEST(McStats, FourthMomentInvariantUnderMeanShift) {
  std::mt19937_64 rng(37);
  const NoiseModel m = oracle::random_mixture(rng, 3);
  const Vector shift = vec({10.0, -4.0, 2.5});
  std::vector<MixtureComponent> comps = m.as_mixture().components;
  for (auto& c : comps) c.dist.mean += shift;
  const NoiseModel shifted = NoiseModel::mixture(comps);
  const Matrix Q = oracle::random_spd(rng, 3);
  const auto a = mc_stats(m, Q, mc(100'000, 3));
  const auto b = mc_stats(shifted, Q, mc(100'000, 3));
  EXPECT_NEAR(a.weighted_fourth, b.weighted_fourth, 1e-9 * a.weighted_fourth);
  EXPECT_LE((b.mean - a.mean - shift).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(McStats, RejectsTooFewSamples) {
  EXPECT_THROW(mc_stats(scalar_mixture(), Matrix::Identity(1, 1), mc(999)), InvalidArgumentError);
}

TEST(PluginStats, EmpiricalUsesSampleMoments) {
  const NoiseModel m = NoiseModel::empirical({vec({0.0}), vec({1.0}), vec({5.0})});
  const auto st = compute_stats(m, Matrix::Identity(1, 1));
  // centred values −2, −1, 3
  EXPECT_NEAR(st.mean(0), 2.0, 1e-15);
  EXPECT_NEAR(st.covariance(0, 0), 14.0 / 3.0, 1e-14);
  EXPECT_NEAR(st.weighted_third(0), (-8.0 - 1.0 + 27.0) / 3.0, 1e-13);
  const double W = 14.0 / 3.0;
  const double m4 = (std::pow(4 - W, 2) + std::pow(1 - W, 2) + std::pow(9 - W, 2)) / 3.0;
  EXPECT_NEAR(st.weighted_fourth, m4, 1e-12);
}

TEST(Sample, DegenerateCases) {
  Rng rng = make_rng(1);
  const Vector mu = vec({2.0, -1.0});
  const NoiseModel point = NoiseModel::gaussian(mu, Matrix::Zero(2, 2));
  const NoiseModel single = NoiseModel::empirical({mu});
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(sample(point, rng), mu);
    EXPECT_EQ(sample(single, rng), mu);
  }
}

TEST(Sample, SingleComponentMixtureMatchesGaussian) {
  const NoiseModel m = NoiseModel::mixture({{1.0, {vec({3.0}), Matrix::Constant(1, 1, 4.0)}}});
  Rng rng = make_rng(42);
  const int n = 100000;
  std::vector<double> xs(n);
  for (auto& x : xs) x = sample(m, rng)(0);
  std::sort(xs.begin(), xs.end());
  double ks = 0.0;
  for (int i = 0; i < n; ++i) {
    const double F = normal_cdf(xs[i], 3.0, 2.0);
    ks = std::max({ks, std::abs(F - double(i) / n), std::abs(F - double(i + 1) / n)});
  }
  // 0.1% critical value of the one-sample KS statistic
  EXPECT_LT(ks, 1.95 / std::sqrt(double(n)));
}

TEST(Sample, MixtureSelectsComponentsByWeight) {
  const NoiseModel m = NoiseModel::mixture({{0.3, {vec({-100.0}), Matrix::Identity(1, 1)}},
                                            {0.7, {vec({100.0}), Matrix::Identity(1, 1)}}});
  Rng rng = make_rng(8);
  const int n = 100000;
  int left = 0;
  for (int i = 0; i < n; ++i) left += sample(m, rng)(0) < 0.0;
  EXPECT_NEAR(left / double(n), 0.3, 0.005);
}

TEST(Sample, TransformedModelPushesMomentsForward) {
  const Matrix G = (Matrix(3, 2) << 0.125, 0, 0.5, 0, 0, 1).finished();
  const NoiseModel base = NoiseModel::mixture(
      {{0.4, {vec({1.0, 2.0}), Matrix::Identity(2, 2)}}, {0.6, {vec({-1.0, 0.0}), 2.0 * Matrix::Identity(2, 2)}}});
  const NoiseModel pushed = base.transformed(G);
  EXPECT_EQ(pushed.dim(), 3);
  EXPECT_LE((pushed.mean() - G * base.mean()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE(numlin::max_abs(pushed.covariance() - G * base.covariance() * G.transpose()), 1e-14);
  EXPECT_THROW(base.transformed(Matrix::Identity(3, 3)), DimensionError);
}

TEST(Rng, StreamsAreDistinctAndReproducible) {
  Rng a = make_rng(5, 0), b = make_rng(5, 1), c = make_rng(5, 0);
  const auto x = a(), y = b(), z = c();
  EXPECT_NE(x, y);
  EXPECT_EQ(x, z);
}
