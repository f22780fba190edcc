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

// Closed-loop Monte-Carlo rollouts and ergodic estimates of the cost, the
// reformulated risk, and the one-step predictive variance of xᵀQx.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>
#include <cstdint>
#include <sstream>

#include "rclqr/errors.hpp"
#include "rclqr/noise.hpp"
#include "rclqr/problem.hpp"

namespace rclqr {

inline constexpr double kStateOverflow = 1e12;

/// Columns are time steps: states has T+1 columns (x₀..x_T), inputs and
/// noises have T.
struct Trajectory {
  Matrix states;
  Matrix inputs;
  Matrix noises;
  std::uint64_t seed = 0;
  std::size_t T = 0;
};

inline Trajectory rollout(const ProblemSpec& problem, const Policy& policy, const Vector& x0,
                          std::size_t T, std::uint64_t seed) {
  const int n = problem.n();
  const int m = problem.m();
  if (T < 1) throw InvalidArgumentError("rollout: T must be at least 1");
  if (x0.size() != n) throw DimensionError("rollout: x0 has dimension " + std::to_string(x0.size()));
  if (policy.K.rows() != m || policy.K.cols() != n || policy.l.size() != m) {
    throw DimensionError("rollout: policy dimensions do not match the problem");
  }
  Trajectory traj;
  traj.seed = seed;
  traj.T = T;
  const auto cols = static_cast<Eigen::Index>(T);
  traj.states.resize(n, cols + 1);
  traj.inputs.resize(m, cols);
  traj.noises.resize(n, cols);
  traj.states.col(0) = x0;

  Rng rng = make_rng(seed);
  for (Eigen::Index t = 0; t < cols; ++t) {
    auto x = traj.states.col(t);
    auto u = traj.inputs.col(t);
    auto w = traj.noises.col(t);
    u.noalias() = policy.l - policy.K * x;
    problem.noise.sample_into(rng, w);
    auto next = traj.states.col(t + 1);
    next.noalias() = problem.A * x;
    next.noalias() += problem.B * u;
    next += w;
    const double norm = next.norm();
    if (!(norm <= kStateOverflow)) {
      std::ostringstream os;
      os << "rollout: state norm " << norm << " exceeded " << kStateOverflow << " at t = " << t + 1;
      throw OverflowError(os.str());
    }
  }
  return traj;
}

/// Time average with a batch-means standard error.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

namespace detail {

/// Mean of f(t) over [begin, end) and a 50-batch batch-means standard error.
template <typename F>
Estimate time_average(std::size_t begin, std::size_t end, F&& f) {
  Estimate est;
  if (end <= begin) return est;
  const std::size_t count = end - begin;
  const std::size_t batches = std::min<std::size_t>(50, count);
  const std::size_t per = count / batches;
  double total = 0.0;
  std::vector<double> means;
  means.reserve(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t lo = begin + b * per;
    const std::size_t hi = (b + 1 == batches) ? end : lo + per;
    double s = 0.0;
    for (std::size_t t = lo; t < hi; ++t) s += f(t);
    total += s;
    means.push_back(s / static_cast<double>(hi - lo));
  }
  est.value = total / static_cast<double>(count);
  if (batches > 1) {
    double mean_of_means = 0.0;
    for (double v : means) mean_of_means += v;
    mean_of_means /= static_cast<double>(batches);
    double var = 0.0;
    for (double v : means) var += (v - mean_of_means) * (v - mean_of_means);
    var /= static_cast<double>(batches - 1);
    est.std_error = std::sqrt(var / static_cast<double>(batches));
  }
  return est;
}

}  // namespace detail

struct EmpiricalCosts {
  Estimate J;
  Estimate J_c;
};

/// Averages over t ∈ [burn_in, T) of xᵀQx + uᵀRu and 4xᵀQWQx + 4xᵀQM₃.
inline EmpiricalCosts empirical_costs(const Trajectory& traj, const ProblemSpec& problem,
                                      std::size_t burn_in) {
  if (burn_in >= traj.T) throw InvalidArgumentError("empirical_costs: burn_in must be below T");
  const Matrix& Q = problem.Q;
  const Matrix QWQ4 = 4.0 * Q * problem.stats.covariance * Q;
  const Vector QM3_4 = 4.0 * Q * problem.stats.weighted_third;
  EmpiricalCosts out;
  out.J = detail::time_average(burn_in, traj.T, [&](std::size_t t) {
    const auto i = static_cast<Eigen::Index>(t);
    const auto x = traj.states.col(i);
    const auto u = traj.inputs.col(i);
    return x.dot(Q * x) + u.dot(problem.R * u);
  });
  out.J_c = detail::time_average(burn_in, traj.T, [&](std::size_t t) {
    const auto x = traj.states.col(static_cast<Eigen::Index>(t));
    return x.dot(QWQ4 * x) + x.dot(QM3_4);
  });
  return out;
}

/// Average of (x_{t+1}ᵀQx_{t+1} − m_t)², where m_t is the model-based mean of
/// x_{t+1}ᵀQx_{t+1} given the history through time t.
inline Estimate empirical_predictive_variance(const Trajectory& traj, const ProblemSpec& problem,
                                              std::size_t burn_in) {
  if (traj.T < 1 || burn_in + 1 > traj.T) {
    throw InvalidArgumentError("empirical_predictive_variance: burn_in must be below T - 1");
  }
  const Matrix& Q = problem.Q;
  const Vector& wbar = problem.stats.mean;
  const double noise_mean = (Q * problem.stats.covariance).trace() + wbar.dot(Q * wbar);
  const Vector Qwbar2 = 2.0 * Q * wbar;
  return detail::time_average(burn_in, traj.T, [&](std::size_t t) {
    const auto i = static_cast<Eigen::Index>(t);
    const Vector z = problem.A * traj.states.col(i) + problem.B * traj.inputs.col(i);
    const double predicted = z.dot(Q * z) + z.dot(Qwbar2) + noise_mean;
    const auto xn = traj.states.col(i + 1);
    const double dev = xn.dot(Q * xn) - predicted;
    return dev * dev;
  });
}

inline std::size_t default_burn_in(std::size_t T) { return std::min<std::size_t>(1000, T / 10); }

/// Per-axis sample variance of the states over [burn_in, T].
inline Vector empirical_state_variance(const Trajectory& traj, std::size_t burn_in) {
  const auto first = static_cast<Eigen::Index>(burn_in);
  const auto count = traj.states.cols() - first;
  const Matrix tail = traj.states.rightCols(count);
  const Vector mean = tail.rowwise().mean();
  return (tail.colwise() - mean).array().square().rowwise().sum() / static_cast<double>(count);
}

}  // namespace rclqr
