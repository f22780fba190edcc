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

// Small dense kernels: linear solves, spectral radius, and the two fixed
// points everything else is built on,
//
//   DARE:      P   = Q + AᵀPA − AᵀPB(R + BᵀPB)⁻¹BᵀPA
//   Lyapunov:  P_c = C + FᵀP_cF
//
// The DARE is solved by value iteration from P = 0, the same backward
// recursion whose limit defines the stationary controller.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>

#include "rclqr/errors.hpp"

namespace rclqr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace numlin {

inline constexpr double kPivotThreshold = 1e-12;
inline constexpr double kDivergenceBound = 1e12;
inline constexpr double kDefaultTol = 1e-10;
inline constexpr std::size_t kDefaultMaxIter = 100000;

/// Convergence controls shared by the iterative solvers. Steps are compared
/// against tol * max(1, |P|_inf).
struct IterOptions {
  double tol = kDefaultTol;
  std::size_t max_iter = kDefaultMaxIter;
};

inline double inf_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  return M.cwiseAbs().rowwise().sum().maxCoeff();
}

inline double max_abs(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  return M.cwiseAbs().maxCoeff();
}

inline bool all_finite(const Matrix& M) { return M.allFinite(); }

inline Matrix symmetrize(const Matrix& M) { return 0.5 * (M + M.transpose()); }

inline bool is_symmetric(const Matrix& M, double tol = 1e-10) {
  if (M.rows() != M.cols()) return false;
  return max_abs(M - M.transpose()) <= tol * std::max(1.0, max_abs(M));
}

/// Symmetric PSD check through the smallest eigenvalue, relative to scale.
inline bool is_psd(const Matrix& M, double tol = 1e-10) {
  if (!is_symmetric(M, std::max(tol, 1e-10))) return false;
  if (M.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(M), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol * std::max(1.0, max_abs(M));
}

inline bool is_pd(const Matrix& M) {
  if (!is_symmetric(M)) return false;
  Eigen::LLT<Matrix> llt(symmetrize(M));
  return llt.info() == Eigen::Success;
}

inline std::string shape(const Matrix& M) {
  std::ostringstream os;
  os << M.rows() << "x" << M.cols();
  return os.str();
}

inline void require_square(const Matrix& M, const char* name) {
  if (M.rows() != M.cols()) {
    throw DimensionError(std::string(name) + " must be square, got " + shape(M));
  }
}

/// Solves Mx = b by LU with partial pivoting.
inline Vector solve_linear(const Matrix& M, const Vector& b) {
  require_square(M, "solve_linear: M");
  if (b.size() != M.rows()) {
    throw DimensionError("solve_linear: b has dimension " + std::to_string(b.size()) +
                         ", expected " + std::to_string(M.rows()));
  }
  if (M.size() == 0) return Vector(0);
  const Eigen::PartialPivLU<Matrix> lu(M);
  const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (!(min_pivot >= kPivotThreshold)) {
    std::ostringstream os;
    os << "solve_linear: matrix is singular (pivot magnitude " << min_pivot << ")";
    throw SingularMatrixError(os.str());
  }
  Vector x = lu.solve(b);
  const double residual = (M * x - b).cwiseAbs().maxCoeff();
  const double b_scale = b.size() ? b.cwiseAbs().maxCoeff() : 0.0;
  // One step of iterative refinement brings ill-scaled systems back inside
  // the residual contract.
  if (residual > 1e-10 * (1.0 + b_scale)) {
    x += lu.solve(b - M * x);
  }
  if (!x.allFinite() || (M * x - b).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + b_scale)) {
    throw SingularMatrixError("solve_linear: no solution within tolerance");
  }
  return x;
}

/// Gelfand estimate lim ‖Mᵏ‖^{1/k} by repeated squaring, kept in log scale.
inline double spectral_radius_gelfand(const Matrix& M, std::size_t max_squarings = 80) {
  require_square(M, "spectral_radius: M");
  double s = inf_norm(M);
  if (s == 0.0) return 0.0;
  Matrix X = M / s;
  double log_scale = std::log(s);
  double prev = std::exp(log_scale);
  double exponent = 1.0;
  for (std::size_t k = 0; k < max_squarings; ++k) {
    X = X * X;
    exponent *= 2.0;
    log_scale *= 2.0;
    s = inf_norm(X);
    if (s == 0.0) return 0.0;  // nilpotent
    X /= s;
    log_scale += std::log(s);
    const double estimate = std::exp(log_scale / exponent);
    if (k >= 3 && std::abs(estimate - prev) <= 1e-12 * std::max(estimate, 1e-300)) return estimate;
    prev = estimate;
  }
  throw NonConvergenceError("spectral_radius: power iteration did not settle");
}

/// Largest eigenvalue modulus. Hessenberg/QR via Eigen, Gelfand fallback.
inline double spectral_radius(const Matrix& M) {
  require_square(M, "spectral_radius: M");
  if (M.size() == 0) return 0.0;
  if (!M.allFinite()) throw InvalidArgumentError("spectral_radius: non-finite entries");
  Eigen::EigenSolver<Matrix> es(M, /*computeEigenvectors=*/false);
  if (es.info() == Eigen::Success) return es.eigenvalues().cwiseAbs().maxCoeff();
  return spectral_radius_gelfand(M);
}

/// ‖P − (Q + AᵀPA − AᵀPB(R+BᵀPB)⁻¹BᵀPA)‖∞.
inline double riccati_residual(const Matrix& A, const Matrix& B, const Matrix& Q,
                               const Matrix& R, const Matrix& P) {
  const Matrix PB = P * B;
  const Matrix M = R + B.transpose() * PB;
  const Matrix next = Q + A.transpose() * P * A -
                      A.transpose() * PB * M.ldlt().solve(PB.transpose() * A);
  return inf_norm(P - next);
}

/// ‖P − (C + FᵀPF)‖∞.
inline double lyapunov_residual(const Matrix& F, const Matrix& C, const Matrix& P) {
  return inf_norm(P - (C + F.transpose() * P * F));
}

/// Stabilizing solution of the DARE by value iteration started at P = 0.
inline Matrix solve_dare(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                         const IterOptions& opts = {}) {
  const auto n = A.rows();
  const auto m = B.cols();
  require_square(A, "solve_dare: A");
  if (B.rows() != n) throw DimensionError("solve_dare: B has shape " + shape(B));
  if (Q.rows() != n || Q.cols() != n) throw DimensionError("solve_dare: Q has shape " + shape(Q));
  if (R.rows() != m || R.cols() != m) throw DimensionError("solve_dare: R has shape " + shape(R));
  if (!is_psd(Q)) throw InvalidArgumentError("solve_dare: Q must be symmetric positive semi-definite");
  if (!is_pd(R)) throw InvalidArgumentError("solve_dare: R must be symmetric positive definite");

  const Matrix At = A.transpose();
  Matrix P = Matrix::Zero(n, n);
  for (std::size_t it = 0; it < opts.max_iter; ++it) {
    const Matrix PB = P * B;
    const Matrix M = R + B.transpose() * PB;
    const Eigen::LLT<Matrix> llt(M);
    Matrix next = Q + At * P * A - At * PB * llt.solve(PB.transpose() * A);
    next = symmetrize(next);
    const double scale = max_abs(next);
    if (!next.allFinite() || scale > kDivergenceBound) {
      std::ostringstream os;
      os << "solve_dare: iterates diverged after " << it + 1
         << " steps; (A, B) may not be stabilizable";
      throw DivergenceError(os.str());
    }
    const double step = inf_norm(next - P);
    P = std::move(next);
    if (step <= opts.tol * std::max(1.0, inf_norm(P))) return P;
  }
  throw DivergenceError("solve_dare: no convergence within " + std::to_string(opts.max_iter) +
                        " iterations");
}

/// Solves P = C + FᵀPF for Schur-stable F by Smith doubling.
inline Matrix solve_discrete_lyapunov(const Matrix& F, const Matrix& C,
                                      const IterOptions& opts = {}) {
  require_square(F, "solve_discrete_lyapunov: F");
  if (C.rows() != F.rows() || C.cols() != F.cols()) {
    throw DimensionError("solve_discrete_lyapunov: C has shape " + shape(C) + ", F has shape " +
                         shape(F));
  }
  const double radius = spectral_radius(F);
  if (radius >= 1.0) {
    std::ostringstream os;
    os << "solve_discrete_lyapunov: spectral radius " << radius << " >= 1";
    throw InstabilityError(os.str(), radius);
  }
  Matrix P = symmetrize(C);
  Matrix Fk = F;
  for (std::size_t it = 0; it < opts.max_iter; ++it) {
    const Matrix increment = symmetrize(Fk.transpose() * P * Fk);
    P += increment;
    Fk = Fk * Fk;
    if (inf_norm(increment) <= opts.tol * std::max(1.0, inf_norm(P)) || max_abs(Fk) == 0.0) {
      return P;
    }
  }
  throw NonConvergenceError("solve_discrete_lyapunov: no convergence within " +
                            std::to_string(opts.max_iter) + " doublings");
}

}  // namespace numlin
}  // namespace rclqr
