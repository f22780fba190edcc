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

// JSON reports and CSV traces. Key order is fixed (ordered_json) and doubles
// are printed round-trip exact, so reruns give byte-identical files.

#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <string>

#include <json.hpp>

#include "rclqr/dual.hpp"
#include "rclqr/errors.hpp"
#include "rclqr/evaluation.hpp"
#include "rclqr/noise.hpp"
#include "rclqr/problem.hpp"
#include "rclqr/sim.hpp"

namespace rclqr::io {

using Json = nlohmann::ordered_json;

inline Json to_json(const Matrix& M) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Json to_json(const Policy& p) {
  return Json{{"lambda", p.lambda}, {"K", to_json(p.K)}, {"l", to_json(p.l)},
              {"P", to_json(p.P)},   {"g", to_json(p.g)}, {"h", p.h}};
}

inline Json to_json(const EvalReport& r) {
  return Json{{"J", r.J},
              {"J_c", r.J_c},
              {"rho_bar", r.rho_bar},
              {"dual_value", r.dual_value},
              {"riccati_residual", r.riccati_residual},
              {"lyapunov_residual", r.lyapunov_residual},
              {"acoe_residual", r.acoe_residual},
              {"spectral_radius", r.spectral_radius}};
}

inline Json to_json(const NoiseStats& s) {
  return Json{{"mean", to_json(s.mean)},
              {"covariance", to_json(s.covariance)},
              {"weighted_third", to_json(s.weighted_third)},
              {"weighted_fourth", s.weighted_fourth},
              {"weighted_fourth_stderr", s.weighted_fourth_stderr}};
}

inline Json to_json(const StepSchedule& s) {
  Json j{{"kind", to_string(s.kind)}};
  switch (s.kind) {
    case StepSchedule::Kind::Theorem3:
      j["b"] = s.b;
      j["e"] = s.e;
      break;
    case StepSchedule::Kind::Diminishing:
      j["c"] = s.c;
      break;
    case StepSchedule::Kind::Constant:
      j["zeta"] = s.zeta;
      break;
  }
  return j;
}

inline Json to_json(const std::vector<ScanPoint>& scan) {
  Json out = Json::array();
  for (const auto& pt : scan) out.push_back(Json{{"lambda", pt.lambda}, {"J_c", pt.risk}});
  return out;
}

inline Json to_json(const Estimate& e) { return Json{{"value", e.value}, {"std_error", e.std_error}}; }

/// Problem summary echoed in every report: both budgets and the statistics.
inline Json problem_json(const ProblemSpec& p) {
  const Matrix WQ = p.stats.covariance * p.Q;
  Json j{{"n", p.n()},
         {"m", p.m()},
         {"rho", p.rho},
         {"rho_bar", p.rho_bar},
         {"four_tr_WQ_sq", 4.0 * (WQ * WQ).trace()},
         {"stats", to_json(p.stats)}};
  Json warnings = Json::array();
  for (const auto& w : p.warnings) warnings.push_back(w);
  j["warnings"] = std::move(warnings);
  return j;
}

inline Json to_json(const RateCertificate& c) {
  return Json{{"d_star", c.d_star},
              {"b", c.b},
              {"e", c.e},
              {"observed_max_subgradient", c.observed_max_subgradient},
              {"observed_max_lambda", c.observed_max_lambda},
              {"bounds_dominate", c.bounds_dominate},
              {"iterations", c.rows.size()},
              {"violations", c.violations}};
}

inline Json to_json(const InfeasibleError& e) {
  return Json{{"error", "infeasible"}, {"message", e.what()}, {"rho_bar", e.rho_bar()},
              {"scan", to_json(e.evidence())}};
}

namespace detail {

inline std::ostream& csv_stream(std::ostream& os) {
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  return os;
}

// Empty field for NaN so spreadsheet tools read it as missing.
inline void put(std::ostream& os, double v) {
  if (!std::isnan(v)) os << v;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace detail

/// Per-iteration trace with the two relative diagnostics plotted against
/// the reference optimum: |J(λᵏ) − J*|/J* and (J_c(λᵏ) − ρ̄)/ρ̄. Pass NaN for
/// J* when no reference exists; the gap column is then left empty.
inline void write_trace_csv(std::ostream& os, const DualTrace& trace, double rho_bar, double J_star) {
  detail::csv_stream(os);
  os << "k,lambda,subgradient,dual_value,J,J_c,lambda_bar,optimality_gap,constraint_violation\n";
  for (const auto& r : trace.iterations) {
    os << r.k << ',' << r.lambda << ',' << r.subgradient << ',' << r.dual_value << ',' << r.J << ','
       << r.J_c << ',' << r.lambda_bar << ',';
    detail::put(os, std::abs(r.J - J_star) / std::abs(J_star));
    os << ',' << (r.J_c - rho_bar) / rho_bar << '\n';
  }
}

inline void write_certificate_csv(std::ostream& os, const RateCertificate& cert) {
  detail::csv_stream(os);
  os << "k,lambda_bar,gap,bound,violated\n";
  for (const auto& r : cert.rows) {
    os << r.k << ',' << r.lambda_bar << ',' << r.gap << ',' << r.bound << ',' << (r.violated ? 1 : 0) << '\n';
  }
}

/// t, x1..xn, u1..um. The last row (t = T) has empty input fields.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  detail::csv_stream(os);
  const auto n = traj.states.rows(), m = traj.inputs.rows();
  os << 't';
  for (Eigen::Index i = 0; i < n; ++i) os << ",x" << i + 1;
  for (Eigen::Index i = 0; i < m; ++i) os << ",u" << i + 1;
  os << '\n';
  for (Eigen::Index t = 0; t <= static_cast<Eigen::Index>(traj.T); ++t) {
    os << t;
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << traj.states(i, t);
    for (Eigen::Index i = 0; i < m; ++i) {
      os << ',';
      if (t < static_cast<Eigen::Index>(traj.T)) os << traj.inputs(i, t);
    }
    os << '\n';
  }
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
  auto out = detail::open_out(path);
  out << j.dump(2) << '\n';
}

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
  auto out = detail::open_out(path);
  writer(out);
}

}  // namespace rclqr::io
