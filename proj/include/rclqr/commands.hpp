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

// Subcommands behind the rclqr tool. Each one writes its files under
// GlobalOptions::out and returns the JSON report it wrote.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rclqr/config.hpp"
#include "rclqr/dual.hpp"
#include "rclqr/evaluation.hpp"
#include "rclqr/io.hpp"
#include "rclqr/presets.hpp"
#include "rclqr/sim.hpp"
#include "rclqr/synthesis.hpp"

namespace rclqr::cli {

using io::Json;
namespace fs = std::filesystem;

struct GlobalOptions {
  std::optional<std::uint64_t> seed;  // replaces sim.seeds
  fs::path out = ".";
  std::optional<double> tol;  // replaces solver.stop_tol
};

struct CommandResult {
  Json report;
  std::vector<fs::path> files;
  int exit_code = 0;
};

/// Exit status for a budget that no policy can meet.
inline constexpr int kExitInfeasible = 3;

inline void apply_globals(ConfigDocument& doc, const GlobalOptions& g) {
  if (g.seed) doc.sim.seeds = {*g.seed};
  if (g.tol) doc.solver.stop_tol = *g.tol;
}

namespace detail {

inline double nan() { return std::numeric_limits<double>::quiet_NaN(); }

inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

// m₄ − 4tr{(WQ)²}: the offset between the reformulated and original risk.
inline double reformulation_offset(const ProblemSpec& p) {
  const Matrix WQ = p.stats.covariance * p.Q;
  return p.stats.weighted_fourth - 4.0 * (WQ * WQ).trace();
}

inline PrimalDualOptions solver_options(const ProblemSpec& p, const SolverConfig& cfg) {
  PrimalDualOptions opts;
  opts.schedule = cfg.schedule;
  opts.max_iter = cfg.max_iter;
  opts.stop_tol = cfg.stop_tol;
  opts.lambda1 = cfg.lambda1;
  opts.slater_check = cfg.slater_check;
  if (cfg.warm_up) {
    const RateBounds rb = estimate_rate_bounds(p);
    opts.schedule = StepSchedule::theorem3(rb.b, rb.e);
  }
  return opts;
}

struct Reference {
  double lambda_star = nan();
  double J_star = nan();
  double D_star = nan();
};

// Bisection optimum, or NaNs when the budget admits none.
inline Reference reference_optimum(const ProblemSpec& p) {
  Reference ref;
  try {
    ref.lambda_star = bisection_lambda(p);
  } catch (const InfeasibleError&) {
    return ref;
  }
  const PolicyValue v = evaluate_lambda(p, ref.lambda_star);
  ref.J_star = v.J;
  ref.D_star = v.dual_value;
  return ref;
}

inline Json reference_json(const Reference& r) {
  return Json{{"lambda_star", number_or_null(r.lambda_star)},
              {"J_star", number_or_null(r.J_star)},
              {"D_star", number_or_null(r.D_star)}};
}

// The diagnostics at iteration k (or the last one before it).
inline Json trace_point(const DualTrace& trace, double rho_bar, double J_star, std::size_t k) {
  const DualRecord* rec = &trace.iterations.front();
  for (const auto& r : trace.iterations) {
    if (r.k <= k) rec = &r;
  }
  return Json{{"k", rec->k},
              {"lambda", rec->lambda},
              {"J", rec->J},
              {"J_c", rec->J_c},
              {"optimality_gap", number_or_null(std::abs(rec->J - J_star) / std::abs(J_star))},
              {"constraint_violation", (rec->J_c - rho_bar) / rho_bar}};
}

inline Json trace_summary(const DualTrace& trace, double rho_bar, double J_star) {
  return Json{{"schedule", io::to_json(trace.step_rule)},
              {"iterations", trace.iterations.size()},
              {"converged", trace.converged},
              {"lambda_bar", trace.lambda_bar},
              {"policy_lambda", trace.policy_lambda},
              {"final", trace_point(trace, rho_bar, J_star, trace.iterations.back().k)}};
}

inline Json policy_stationary(const Policy& pol, const ProblemSpec& p) {
  const StationaryMoments sm = stationary_moments(pol, p);
  return Json{{"J", lqr_cost_closed_form(pol, p)},
              {"J_c", risk_closed_form(pol, p)},
              {"predictive_variance", risk_closed_form(pol, p) + reformulation_offset(p)},
              {"state_mean", io::to_json(sm.mu)},
              {"state_variance", io::to_json(Vector(sm.Sigma.diagonal()))}};
}

inline double rel_error(double empirical, double exact) {
  return std::abs(empirical - exact) / std::max(std::abs(exact), 1e-300);
}

}  // namespace detail

/// Policy and evaluation report at a fixed multiplier.
inline CommandResult cmd_synthesize(ConfigDocument doc, double lambda, const GlobalOptions& g) {
  apply_globals(doc, g);
  if (!(lambda >= 0.0)) throw InvalidArgumentError("synthesize: --lambda must be non-negative");
  const ProblemSpec p = to_problem(doc);
  const Policy pol = synthesize(p, lambda);
  const EvalReport r = evaluate(pol, p);

  CommandResult res;
  res.report = Json{{"command", "synthesize"},
                    {"problem", io::problem_json(p)},
                    {"policy", io::to_json(pol)},
                    {"evaluation", io::to_json(r)},
                    {"dual_identity",
                     Json{{"h", pol.h},
                          {"dual_value", r.dual_value},
                          {"abs_diff", std::abs(pol.h - r.dual_value)},
                          {"rel_diff", std::abs(pol.h - r.dual_value) / (1.0 + std::abs(pol.h))}}}};
  const fs::path path = g.out / "synthesize.json";
  io::write_json(path, res.report);
  res.files.push_back(path);
  return res;
}

/// Primal-dual solve plus the bisection reference. Infeasible budgets write
/// infeasibility.json and rethrow.
inline CommandResult cmd_solve(ConfigDocument doc, const GlobalOptions& g) {
  apply_globals(doc, g);
  const ProblemSpec p = to_problem(doc);
  const PrimalDualOptions opts = detail::solver_options(p, doc.solver);

  CommandResult res;
  PrimalDualResult pd;
  try {
    pd = solve_primal_dual(p, opts);
  } catch (const InfeasibleError& e) {
    const fs::path path = g.out / "infeasibility.json";
    io::write_json(path, Json{{"command", "solve"}, {"problem", io::problem_json(p)}, {"infeasible", io::to_json(e)}});
    throw;
  }
  const detail::Reference ref = detail::reference_optimum(p);
  const EvalReport r = evaluate(pd.policy, p);

  const fs::path trace_path = g.out / "trace.csv";
  io::write_file(trace_path, [&](std::ostream& os) { io::write_trace_csv(os, pd.trace, p.rho_bar, ref.J_star); });

  res.report = Json{{"command", "solve"},
                    {"problem", io::problem_json(p)},
                    {"warm_up", doc.solver.warm_up},
                    {"trace", detail::trace_summary(pd.trace, p.rho_bar, ref.J_star)},
                    {"complementary_slackness", pd.policy.lambda * std::abs(r.J_c - p.rho_bar)},
                    {"reference", detail::reference_json(ref)},
                    {"policy", io::to_json(pd.policy)},
                    {"evaluation", io::to_json(r)},
                    {"trace_file", trace_path.filename().string()}};
  res.files.push_back(trace_path);

  if (opts.schedule.kind == StepSchedule::Kind::Theorem3 && std::isfinite(ref.D_star)) {
    const RateCertificate cert = rate_certificate(pd.trace, p, opts.schedule.b, opts.schedule.e, ref.D_star);
    const fs::path cert_path = g.out / "certificate.csv";
    io::write_file(cert_path, [&](std::ostream& os) { io::write_certificate_csv(os, cert); });
    res.report["rate_certificate"] = io::to_json(cert);
    res.report["certificate_file"] = cert_path.filename().string();
    res.files.push_back(cert_path);
  }

  const fs::path path = g.out / "solve.json";
  io::write_json(path, res.report);
  res.files.insert(res.files.begin(), path);
  return res;
}

/// Rollouts under the chosen policy and the λ = 0 baseline, one trajectory
/// file per policy and seed. x0 defaults to each policy's stationary mean.
inline CommandResult cmd_simulate(ConfigDocument doc, std::optional<double> lambda, const GlobalOptions& g) {
  apply_globals(doc, g);
  const ProblemSpec p = to_problem(doc);
  CommandResult res;

  Policy pol;
  Json source;
  if (lambda) {
    if (!(*lambda >= 0.0)) throw InvalidArgumentError("simulate: --lambda must be non-negative");
    pol = synthesize(p, *lambda);
    source = Json{{"kind", "lambda"}, {"lambda", *lambda}};
  } else {
    const PrimalDualResult pd = solve_primal_dual(p, detail::solver_options(p, doc.solver));
    pol = pd.policy;
    source = Json{{"kind", "solved"},
                  {"lambda", pd.trace.policy_lambda},
                  {"converged", pd.trace.converged},
                  {"iterations", pd.trace.iterations.size()}};
  }
  const Policy base = synthesize(p, 0.0);

  const std::size_t T = doc.sim.T;
  const std::size_t burn_in = doc.sim.burn_in.value_or(default_burn_in(T));
  Json policies = Json::object();
  std::vector<Vector> mean_var;
  for (const auto& [name, policy] : {std::pair<std::string, const Policy*>{"policy", &pol}, {"baseline", &base}}) {
    const Json closed = detail::policy_stationary(*policy, p);
    const Vector x0 = doc.sim.x0 ? *doc.sim.x0 : stationary_moments(*policy, p).mu;
    Json runs = Json::array();
    double J_sum = 0.0, Jc_sum = 0.0, pv_sum = 0.0;
    Vector var_sum = Vector::Zero(p.n());
    for (const std::uint64_t seed : doc.sim.seeds) {
      const Trajectory traj = rollout(p, *policy, x0, T, seed);
      const fs::path tpath = g.out / ("trajectory_" + name + "_seed" + std::to_string(seed) + ".csv");
      io::write_file(tpath, [&](std::ostream& os) { io::write_trajectory_csv(os, traj); });
      res.files.push_back(tpath);
      const EmpiricalCosts c = empirical_costs(traj, p, burn_in);
      const Estimate pv = empirical_predictive_variance(traj, p, burn_in);
      const Vector var = empirical_state_variance(traj, burn_in);
      J_sum += c.J.value;
      Jc_sum += c.J_c.value;
      pv_sum += pv.value;
      var_sum += var;
      runs.push_back(Json{{"seed", seed},
                          {"trajectory_file", tpath.filename().string()},
                          {"J", io::to_json(c.J)},
                          {"J_c", io::to_json(c.J_c)},
                          {"predictive_variance", io::to_json(pv)},
                          {"state_variance", io::to_json(var)}});
    }
    const double count = static_cast<double>(doc.sim.seeds.size());
    Json table = Json::array();
    for (const auto& [q, emp] : {std::pair<const char*, double>{"J", J_sum / count},
                                 {"J_c", Jc_sum / count},
                                 {"predictive_variance", pv_sum / count}}) {
      const double exact = closed.at(q).get<double>();
      table.push_back(Json{{"quantity", q},
                           {"closed_form", exact},
                           {"empirical", emp},
                           {"relative_error", detail::rel_error(emp, exact)}});
    }
    mean_var.push_back(var_sum / count);
    policies[name] = Json{{"lambda", policy->lambda},
                          {"x0", io::to_json(x0)},
                          {"closed_form", closed},
                          {"agreement", table},
                          {"runs", runs}};
  }
  Json ratio = Json::array();
  for (Eigen::Index i = 0; i < p.n(); ++i) ratio.push_back(mean_var[0](i) / mean_var[1](i));

  res.report = Json{{"command", "simulate"},
                    {"problem", io::problem_json(p)},
                    {"source", source},
                    {"T", T},
                    {"burn_in", burn_in},
                    {"seeds", doc.sim.seeds},
                    {"policies", policies},
                    {"state_variance_ratio", ratio}};
  const fs::path path = g.out / "simulate.json";
  io::write_json(path, res.report);
  res.files.insert(res.files.begin(), path);
  return res;
}

struct PaperUavOptions {
  std::optional<double> rho;      // trajectory experiment, default 8
  std::optional<double> rho_bar;  // convergence experiment, default 15
  std::size_t T = 10000;
  McOptions mc{};
};

/// The two UAV experiments: trajectories under the risk-constrained and
/// λ = 0 policies at budget ρ, and the constant and diminishing step traces
/// at budget ρ̄. An infeasible budget still produces every file (solver run
/// without the Slater check, gap column empty) and exits with
/// kExitInfeasible.
inline CommandResult cmd_paper_uav(const GlobalOptions& g, const PaperUavOptions& o = {}) {
  const ProblemSpec base = presets::uav_problem(RiskBudget::reformulated(presets::kUavRhoBar), o.mc);
  const std::uint64_t seed = g.seed.value_or(1);
  const double stop_tol = g.tol.value_or(1e-6);
  CommandResult res;
  Json infeasible = Json::array();

  auto run = [&](const ProblemSpec& p, const StepSchedule& schedule, const std::string& label) {
    PrimalDualOptions opts;
    opts.schedule = schedule;
    opts.stop_tol = stop_tol;
    try {
      return solve_primal_dual(p, opts);
    } catch (const InfeasibleError& e) {
      Json entry = io::to_json(e);
      entry["run"] = label;
      infeasible.push_back(std::move(entry));
      opts.slater_check = false;
      return solve_primal_dual(p, opts);
    }
  };

  // Trajectory experiment.
  const ProblemSpec p1 = presets::with_budget(base, RiskBudget::original(o.rho.value_or(presets::kUavRho)));
  const PrimalDualResult pd1 = run(p1, StepSchedule::constant(0.1), "fig1");
  const Policy lqr = synthesize(p1, 0.0);
  const std::size_t burn_in = default_burn_in(o.T);
  Json fig1 = Json{{"problem", io::problem_json(p1)},
                   {"feasible", infeasible.empty()},
                   {"solver", detail::trace_summary(pd1.trace, p1.rho_bar, detail::nan())},
                   {"T", o.T},
                   {"burn_in", burn_in},
                   {"seed", seed}};
  std::vector<Vector> variances;
  for (const auto& [name, policy] : {std::pair<std::string, const Policy*>{"constrained", &pd1.policy}, {"lqr", &lqr}}) {
    const Trajectory traj = rollout(p1, *policy, Vector::Zero(p1.n()), o.T, seed);
    const fs::path path = g.out / ("fig1_trajectory_" + name + ".csv");
    io::write_file(path, [&](std::ostream& os) { io::write_trajectory_csv(os, traj); });
    res.files.push_back(path);
    variances.push_back(empirical_state_variance(traj, burn_in));
    fig1[name] = Json{{"lambda", policy->lambda},
                      {"trajectory_file", path.filename().string()},
                      {"empirical_state_variance", io::to_json(variances.back())},
                      {"closed_form", detail::policy_stationary(*policy, p1)}};
  }
  fig1["x1_variance_ratio"] = variances[0](0) / variances[1](0);
  fig1["x3_variance_rel_diff"] = std::abs(variances[0](2) - variances[1](2)) / variances[1](2);

  // Convergence experiment.
  const std::size_t before = infeasible.size();
  const ProblemSpec p2 = presets::with_budget(base, RiskBudget::reformulated(o.rho_bar.value_or(presets::kUavRhoBar)));
  const detail::Reference ref = detail::reference_optimum(p2);
  Json fig2 = Json{{"problem", io::problem_json(p2)}, {"reference", detail::reference_json(ref)}};
  for (const auto& [name, schedule] : {std::pair<std::string, StepSchedule>{"constant", StepSchedule::constant(0.1)},
                                       {"diminishing", StepSchedule::diminishing(0.1)}}) {
    const PrimalDualResult pd = run(p2, schedule, "fig2_" + name);
    const fs::path path = g.out / ("fig2_trace_" + name + ".csv");
    io::write_file(path, [&](std::ostream& os) { io::write_trace_csv(os, pd.trace, p2.rho_bar, ref.J_star); });
    res.files.push_back(path);
    Json summary = detail::trace_summary(pd.trace, p2.rho_bar, ref.J_star);
    summary["at_k100"] = detail::trace_point(pd.trace, p2.rho_bar, ref.J_star, 100);
    summary["trace_file"] = path.filename().string();
    fig2[name] = summary;
  }
  fig2["feasible"] = infeasible.size() == before;

  res.report = Json{{"command", "paper-uav"}, {"fig1", fig1}, {"fig2", fig2}};
  if (!infeasible.empty()) {
    const fs::path path = g.out / "infeasibility.json";
    io::write_json(path, Json{{"command", "paper-uav"}, {"infeasible", infeasible}});
    res.files.push_back(path);
    res.exit_code = kExitInfeasible;
  }
  const fs::path path = g.out / "paper_uav.json";
  io::write_json(path, res.report);
  res.files.insert(res.files.begin(), path);
  return res;
}

}  // namespace rclqr::cli
