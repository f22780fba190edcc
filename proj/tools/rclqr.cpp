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

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rclqr/commands.hpp"

namespace {

// Exit codes: 0 ok, 1 library or I/O error, 2 bad config,
// 3 infeasible budget, CLI11's own codes for bad command lines.
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;

void print(const rclqr::cli::CommandResult& res) {
  for (const auto& f : res.files) std::cout << "wrote " << f.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  using namespace rclqr;
  CLI::App app{"Risk-constrained LQR: synthesis, dual solver and simulation"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  cli::GlobalOptions g;
  std::uint64_t seed = 0;
  double tol = 0.0;
  std::string out = ".";
  auto* seed_opt = app.add_option("--seed", seed, "Simulation seed (replaces sim.seeds)");
  auto* tol_opt = app.add_option("--tol", tol, "Dual stopping tolerance (replaces solver.stop_tol)")
                      ->check(CLI::NonNegativeNumber);
  app.add_option("--out", out, "Output directory");

  std::string config;
  double lambda = 0.0;

  auto* syn = app.add_subcommand("synthesize", "Policy and evaluation report at a fixed multiplier");
  syn->add_option("--config", config, "JSON problem description")->required();
  syn->add_option("--lambda", lambda, "Multiplier")->required()->check(CLI::NonNegativeNumber);

  auto* solve = app.add_subcommand("solve", "Primal-dual solve with trace and reference optimum");
  solve->add_option("--config", config, "JSON problem description")->required();

  auto* sim = app.add_subcommand("simulate", "Rollouts of a policy and the unconstrained baseline");
  sim->add_option("--config", config, "JSON problem description")->required();
  auto* sim_lambda = sim->add_option("--lambda", lambda, "Simulate the policy at this multiplier")
                         ->check(CLI::NonNegativeNumber);
  auto* sim_solved = sim->add_flag("--solved", "Simulate the primal-dual solution");
  sim_lambda->excludes(sim_solved);
  sim_solved->excludes(sim_lambda);

  auto* uav = app.add_subcommand("paper-uav", "UAV double-integrator experiments");
  cli::PaperUavOptions uav_opts;
  double rho = 0.0, rho_bar = 0.0;
  auto* rho_opt = uav->add_option("--rho", rho, "Budget of the trajectory experiment")->check(CLI::PositiveNumber);
  auto* rho_bar_opt =
      uav->add_option("--rho-bar", rho_bar, "Budget of the convergence experiment")->check(CLI::PositiveNumber);
  uav->add_option("--T", uav_opts.T, "Trajectory length")->check(CLI::Range(2, 100000000));
  uav->add_option("--mc-samples", uav_opts.mc.samples, "Monte-Carlo samples for the noise statistics")
      ->check(CLI::Range(1000, 1000000000));

  CLI11_PARSE(app, argc, argv);

  g.out = out;
  if (*seed_opt) g.seed = seed;
  if (*tol_opt) g.tol = tol;

  try {
    cli::CommandResult res;
    if (*syn) {
      res = cli::cmd_synthesize(parse_config_file(config), lambda, g);
    } else if (*solve) {
      res = cli::cmd_solve(parse_config_file(config), g);
    } else if (*sim) {
      if (!*sim_lambda && !*sim_solved) {
        std::cerr << "simulate: one of --lambda or --solved is required\n";
        return kExitConfig;
      }
      res = cli::cmd_simulate(parse_config_file(config), *sim_lambda ? std::optional<double>(lambda) : std::nullopt, g);
    } else {
      if (*rho_opt) uav_opts.rho = rho;
      if (*rho_bar_opt) uav_opts.rho_bar = rho_bar;
      res = cli::cmd_paper_uav(g, uav_opts);
    }
    print(res);
    if (res.exit_code == cli::kExitInfeasible) {
      std::cerr << "error: risk budget infeasible, see infeasibility.json\n";
    }
    return res.exit_code;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InfeasibleError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
}
