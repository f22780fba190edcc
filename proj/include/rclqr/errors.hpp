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

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rclqr {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

class NonConvergenceError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Raised when a closed loop (or a Lyapunov operator) has spectral radius >= 1.
class InstabilityError : public Error {
 public:
  InstabilityError(const std::string& what, double radius)
      : Error(what), radius_(radius) {}
  double radius() const noexcept { return radius_; }

 private:
  double radius_;
};

class UnsupportedVariantError : public Error {
 public:
  using Error::Error;
};

class OverflowError : public Error {
 public:
  using Error::Error;
};

/// One point of the multiplier scan attached to an infeasibility report.
struct ScanPoint {
  double lambda;
  double risk;  // J_c(u(x, lambda))
};

/// The risk budget cannot be met by any scanned multiplier.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, double rho_bar,
                  std::vector<ScanPoint> evidence)
      : Error(what), rho_bar_(rho_bar), evidence_(std::move(evidence)) {}

  double rho_bar() const noexcept { return rho_bar_; }
  const std::vector<ScanPoint>& evidence() const noexcept { return evidence_; }

 private:
  double rho_bar_;
  std::vector<ScanPoint> evidence_;
};

}  // namespace rclqr
