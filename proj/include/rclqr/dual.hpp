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

// Projected subgradient ascent on the concave dual D(λ):
//
//   dᵏ     = J_c(u(x, λᵏ)) − ρ̄
//   λᵏ⁺¹   = max(0, λᵏ + ζᵏ dᵏ)
//
// plus a bisection reference for λ* and the O(1/√k) certificate
// D* − D(λ̄ᵏ) ≤ 3be/√k for ζᵏ = (1/(be))√(2/k).

#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "rclqr/errors.hpp"
#include "rclqr/evaluation.hpp"
#include "rclqr/problem.hpp"
#include "rclqr/synthesis.hpp"

namespace rclqr {

struct StepSchedule {
  enum class Kind { Theorem3, Diminishing, Constant };
  Kind kind = Kind::Constant;
  double b = 1.0;     // theorem3: bound on |dᵏ|
  double e = 1.0;     // theorem3: bound on λᵏ
  double c = 0.1;     // diminishing: ζᵏ = c/√k
  double zeta = 0.1;  // constant

  static StepSchedule theorem3(double b, double e) { return {Kind::Theorem3, b, e, 0.1, 0.1}; }
  static StepSchedule diminishing(double c) { return {Kind::Diminishing, 1.0, 1.0, c, 0.1}; }
  static StepSchedule constant(double zeta) { return {Kind::Constant, 1.0, 1.0, 0.1, zeta}; }

  void validate() const {
    const bool ok = kind == Kind::Theorem3      ? (b > 0.0 && e > 0.0)
                    : kind == Kind::Diminishing ? c > 0.0
                                                : zeta > 0.0;
    if (!ok) throw InvalidArgumentError("step schedule parameters must be strictly positive");
  }
};

inline std::string to_string(StepSchedule::Kind kind) {
  switch (kind) {
    case StepSchedule::Kind::Theorem3: return "theorem3";
    case StepSchedule::Kind::Diminishing: return "diminishing";
    case StepSchedule::Kind::Constant: return "constant";
  }
  return "unknown";
}

inline double step_size(const StepSchedule& schedule, std::size_t k) {
  if (k < 1) throw InvalidArgumentError("step_size: k must be at least 1");
  const double kk = static_cast<double>(k);
  switch (schedule.kind) {
    case StepSchedule::Kind::Theorem3:
      return std::sqrt(2.0 / kk) / (schedule.b * schedule.e);
    case StepSchedule::Kind::Diminishing:
      return schedule.c / std::sqrt(kk);
    case StepSchedule::Kind::Constant:
      return schedule.zeta;
  }
  return 0.0;
}

/// dᵏ = J_c(u(x, λ)) − ρ̄.
inline double subgradient(const ProblemSpec& problem, double lambda,
                          const numlin::IterOptions& opts = {}) {
  return risk_closed_form(synthesize(problem, lambda, opts), problem, opts) - problem.rho_bar;
}

struct DualRecord {
  std::size_t k = 0;
  double lambda = 0.0;
  double subgradient = 0.0;
  double dual_value = 0.0;
  double J = 0.0;
  double J_c = 0.0;
  double lambda_bar = 0.0;  // running mean of λ¹..λᵏ
};

struct DualTrace {
  std::vector<DualRecord> iterations;
  double lambda_bar = 0.0;
  StepSchedule step_rule;
  bool converged = false;
  /// λ of the returned policy: λ̄ᵏ for constant steps, λᵏ otherwise.
  double policy_lambda = 0.0;
};

struct PrimalDualOptions {
  StepSchedule schedule = StepSchedule::constant(0.1);
  std::size_t max_iter = 1000;
  double lambda1 = 0.0;
  double stop_tol = 1e-6;
  bool slater_check = true;
  numlin::IterOptions numerics{};
};

struct PrimalDualResult {
  Policy policy;
  DualTrace trace;
};

/// {0} ∪ {10^(−4 + 10j/14) : j = 0..14}.
inline std::vector<double> slater_grid() {
  std::vector<double> grid{0.0};
  for (int j = 0; j <= 14; ++j) grid.push_back(std::pow(10.0, -4.0 + 10.0 * j / 14.0));
  return grid;
}

/// Coarse check for a strictly feasible policy u(x, λ) with J_c < ρ̄.
/// Returns the scan; throws InfeasibleError with it when no point qualifies.
inline std::vector<ScanPoint> slater_scan(const ProblemSpec& problem,
                                          const numlin::IterOptions& opts = {}) {
  std::vector<ScanPoint> scan;
  for (const double lambda : slater_grid()) {
    const double risk = risk_closed_form(synthesize(problem, lambda, opts), problem, opts);
    scan.push_back({lambda, risk});
    if (risk < problem.rho_bar) return scan;
  }
  std::ostringstream os;
  os << "risk budget rho_bar = " << problem.rho_bar
     << " is not met by any scanned multiplier (smallest J_c = " << scan.back().risk
     << " at lambda = " << scan.back().lambda << "); Slater's condition appears to fail";
  throw InfeasibleError(os.str(), problem.rho_bar, std::move(scan));
}

/// Projected subgradient ascent on the dual. Stops at max_iter or when the
/// KKT conditions hold to stop_tol·(1 + ρ̄): dᵏ ≤ tol and λᵏ|dᵏ| ≤ tol.
inline PrimalDualResult solve_primal_dual(const ProblemSpec& problem, const PrimalDualOptions& opts) {
  opts.schedule.validate();
  if (!(opts.lambda1 >= 0.0)) throw InvalidArgumentError("solve_primal_dual: lambda1 must be non-negative");
  if (opts.max_iter < 1) throw InvalidArgumentError("solve_primal_dual: max_iter must be at least 1");
  if (opts.slater_check) (void)slater_scan(problem, opts.numerics);

  const double tol = opts.stop_tol * (1.0 + std::abs(problem.rho_bar));
  PrimalDualResult out;
  out.trace.step_rule = opts.schedule;

  double lambda = opts.lambda1;
  double lambda_sum = 0.0;
  PolicyValue last;
  for (std::size_t k = 1; k <= opts.max_iter; ++k) {
    last = evaluate_lambda(problem, lambda, opts.numerics);
    const double d = last.J_c - problem.rho_bar;
    lambda_sum += lambda;
    DualRecord rec;
    rec.k = k;
    rec.lambda = lambda;
    rec.subgradient = d;
    rec.dual_value = last.dual_value;
    rec.J = last.J;
    rec.J_c = last.J_c;
    rec.lambda_bar = lambda_sum / static_cast<double>(k);
    out.trace.iterations.push_back(rec);

    if (d <= tol && lambda * std::abs(d) <= tol) {
      out.trace.converged = true;
      break;
    }
    lambda = std::max(0.0, lambda + step_size(opts.schedule, k) * d);
  }
  out.trace.lambda_bar = out.trace.iterations.back().lambda_bar;

  // On convergence the last iterate satisfies KKT and is returned as is;
  // otherwise constant steps return the averaged multiplier.
  if (opts.schedule.kind == StepSchedule::Kind::Constant && !out.trace.converged) {
    out.trace.policy_lambda = out.trace.lambda_bar;
    out.policy = synthesize(problem, out.trace.policy_lambda, opts.numerics);
  } else {
    out.trace.policy_lambda = out.trace.iterations.back().lambda;
    out.policy = std::move(last.policy);
  }
  return out;
}

struct BisectionOptions {
  double lambda_hi = 1.0;
  double tol = 1e-10;
  double cap = 1073741824.0;  // 2^30
  numlin::IterOptions numerics{};
};

/// λ* = inf{λ ≥ 0 : J_c(u(x, λ)) ≤ ρ̄} by bracketing on the non-increasing
/// map λ ↦ J_c(u(x, λ)). Returns the feasible end of the final bracket.
inline double bisection_lambda(const ProblemSpec& problem, const BisectionOptions& opts = {}) {
  auto d = [&](double lambda) { return subgradient(problem, lambda, opts.numerics); };
  if (d(0.0) <= 0.0) return 0.0;
  double lo = 0.0;
  double hi = std::max(opts.lambda_hi, 1e-12);
  std::vector<ScanPoint> evidence;
  for (;;) {
    const double dh = d(hi);
    evidence.push_back({hi, dh + problem.rho_bar});
    if (dh <= 0.0) break;
    lo = hi;
    if (hi * 2.0 > opts.cap) {
      std::ostringstream os;
      os << "bisection_lambda: constraint still violated at lambda = " << hi
         << " (J_c - rho_bar = " << dh << "); budget is infeasible";
      throw InfeasibleError(os.str(), problem.rho_bar, std::move(evidence));
    }
    hi *= 2.0;
  }
  while (hi - lo > opts.tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (d(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

/// Bounds (b, e) for the theorem3 schedule from a warm-up scan over
/// {0} ∪ {ρ̄·2^(−j)}, inflated by a safety factor of 2.
struct RateBounds {
  double b = 0.0;
  double e = 0.0;
};

inline RateBounds estimate_rate_bounds(const ProblemSpec& problem, int levels = 8,
                                       const numlin::IterOptions& opts = {}) {
  std::vector<double> grid{0.0};
  for (int j = 0; j < levels; ++j) grid.push_back(problem.rho_bar * std::pow(2.0, -j));
  double max_d = 0.0, max_lambda = 0.0;
  for (const double lambda : grid) {
    max_d = std::max(max_d, std::abs(subgradient(problem, lambda, opts)));
    max_lambda = std::max(max_lambda, lambda);
  }
  return {2.0 * std::max(max_d, 1e-12), 2.0 * std::max(max_lambda, 1e-12)};
}

struct RateCertificateRow {
  std::size_t k = 0;
  double lambda_bar = 0.0;
  double gap = 0.0;    // D* − D(λ̄ᵏ)
  double bound = 0.0;  // 3be/√k
  bool violated = false;
};

struct RateCertificate {
  double d_star = 0.0;
  double b = 0.0;
  double e = 0.0;
  double observed_max_subgradient = 0.0;
  double observed_max_lambda = 0.0;
  bool bounds_dominate = false;  // b ≥ max|dᵏ| and e ≥ max λᵏ
  std::vector<RateCertificateRow> rows;
  std::size_t violations = 0;
};

inline RateCertificate rate_certificate(const DualTrace& trace, const ProblemSpec& problem, double b,
                                        double e, double d_star,
                                        const numlin::IterOptions& opts = {}) {
  RateCertificate cert;
  cert.d_star = d_star;
  cert.b = b;
  cert.e = e;
  for (const auto& rec : trace.iterations) {
    cert.observed_max_subgradient = std::max(cert.observed_max_subgradient, std::abs(rec.subgradient));
    cert.observed_max_lambda = std::max(cert.observed_max_lambda, rec.lambda);
    RateCertificateRow row;
    row.k = rec.k;
    row.lambda_bar = rec.lambda_bar;
    row.gap = d_star - dual_value(problem, rec.lambda_bar, opts);
    row.bound = 3.0 * b * e / std::sqrt(static_cast<double>(rec.k));
    row.violated = row.gap > row.bound;
    cert.violations += row.violated ? 1 : 0;
    cert.rows.push_back(row);
  }
  cert.bounds_dominate = b >= cert.observed_max_subgradient && e >= cert.observed_max_lambda;
  return cert;
}

/// D* = D(λ*) with λ* from bisection.
inline double optimal_dual_value(const ProblemSpec& problem, const BisectionOptions& opts = {}) {
  return dual_value(problem, bisection_lambda(problem, opts), opts.numerics);
}

}  // namespace rclqr
