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

// JSON problem description.
//
//   {
//     "system":    {"A": [[..]], "B": [[..]]},
//     "penalties": {"Q": [[..]], "R": [[..]]},
//     "noise":     {"kind": "gaussian", "mean": [..], "cov": [[..]],
//                   "input_channel": false, "mc_samples": 10000000, "mc_seed": 20210301},
//                  mixture:   "components": [{"weight": w, "mean": [..], "cov": [[..]]}, ..]
//                  empirical: "samples": [[..], ..]
//     "risk":      {"rho": 8} or {"rho_bar": 15},
//     "solver":    {"schedule": {"kind": "constant", "zeta": 0.1},
//                   "max_iter": 1000, "stop_tol": 1e-6, "lambda1": 0, "slater_check": true},
//     "sim":       {"T": 10000, "seeds": [1], "burn_in": 1000, "x0": [..]}
//   }
//
// With "input_channel": true the noise lives in input coordinates
// (x⁺ = Ax + B(u + w)) and is pushed through B before anything else.
// A theorem3 schedule without b and e gets them from the warm-up scan.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rclqr/dual.hpp"
#include "rclqr/errors.hpp"
#include "rclqr/noise.hpp"
#include "rclqr/numlin.hpp"
#include "rclqr/problem.hpp"
#include "rclqr/synthesis.hpp"

namespace rclqr {

/// Malformed JSON text. line and column are 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(what), line_(line), column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Well-formed JSON that violates the schema. Every issue is prefixed with
/// the path of the offending field, e.g. "system.A: must be square".
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> issues)
      : Error(join(issues)), issues_(std::move(issues)) {}
  const std::vector<std::string>& issues() const noexcept { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& issues) {
    std::string out = "invalid config:";
    for (const auto& i : issues) out += "\n  " + i;
    return out;
  }
  std::vector<std::string> issues_;
};

struct SolverConfig {
  StepSchedule schedule = StepSchedule::constant(0.1);
  bool warm_up = false;  // theorem3 without explicit (b, e)
  std::size_t max_iter = 1000;
  double stop_tol = 1e-6;
  double lambda1 = 0.0;
  bool slater_check = true;
};

struct SimConfig {
  std::size_t T = 10000;
  std::vector<std::uint64_t> seeds{1};
  std::optional<std::size_t> burn_in;
  std::optional<Vector> x0;
};

struct ConfigDocument {
  Matrix A, B, Q, R;
  NoiseModel noise = NoiseModel::gaussian(Vector::Zero(1), Matrix::Zero(1, 1));
  bool input_channel = false;
  McOptions mc;
  RiskBudget budget;
  SolverConfig solver;
  SimConfig sim;
};

namespace detail {

using Json = nlohmann::json;

class ConfigReader {
 public:
  std::vector<std::string> issues;

  void fail(const std::string& path, const std::string& msg) { issues.push_back(path + ": " + msg); }

  const Json* section(const Json& root, const std::string& key, bool required) {
    if (!root.contains(key)) {
      if (required) fail(key, "missing");
      return nullptr;
    }
    const Json& s = root.at(key);
    if (!s.is_object()) {
      fail(key, "must be an object");
      return nullptr;
    }
    return &s;
  }

  void unknown_keys(const Json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (!ok.count(it.key())) fail(path.empty() ? it.key() : path + "." + it.key(), "unknown field");
    }
  }

  std::optional<Matrix> matrix(const Json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) {
      fail(path, "must be a non-empty array of rows");
      return std::nullopt;
    }
    const std::size_t cols = j.front().is_array() ? j.front().size() : 0;
    if (cols == 0) {
      fail(path, "rows must be non-empty arrays of numbers");
      return std::nullopt;
    }
    Matrix M(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < j.size(); ++i) {
      const Json& row = j[i];
      if (!row.is_array() || row.size() != cols) {
        fail(path, "row " + std::to_string(i) + " has a different length (matrices are row-major)");
        return std::nullopt;
      }
      for (std::size_t k = 0; k < cols; ++k) {
        if (!row[k].is_number()) {
          fail(path, "entry (" + std::to_string(i) + ", " + std::to_string(k) + ") is not a number");
          return std::nullopt;
        }
        M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k].get<double>();
      }
    }
    return M;
  }

  std::optional<Vector> vector(const Json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) {
      fail(path, "must be a non-empty array of numbers");
      return std::nullopt;
    }
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (!j[i].is_number()) {
        fail(path, "entry " + std::to_string(i) + " is not a number");
        return std::nullopt;
      }
      v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
  }

  std::optional<double> number(const Json& obj, const std::string& key, const std::string& path) {
    if (!obj.contains(key)) return std::nullopt;
    if (!obj.at(key).is_number()) {
      fail(path, "must be a number");
      return std::nullopt;
    }
    return obj.at(key).get<double>();
  }

  std::optional<std::uint64_t> count(const Json& obj, const std::string& key, const std::string& path) {
    if (!obj.contains(key)) return std::nullopt;
    const Json& v = obj.at(key);
    if (!v.is_number_unsigned()) {
      fail(path, "must be a non-negative integer");
      return std::nullopt;
    }
    return v.get<std::uint64_t>();
  }

  std::optional<bool> boolean(const Json& obj, const std::string& key, const std::string& path) {
    if (!obj.contains(key)) return std::nullopt;
    if (!obj.at(key).is_boolean()) {
      fail(path, "must be true or false");
      return std::nullopt;
    }
    return obj.at(key).get<bool>();
  }
};

inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  const std::size_t end = std::min(byte == 0 ? 0 : byte - 1, text.size());
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

inline std::optional<Gaussian> gaussian_fields(ConfigReader& rd, const Json& j, const std::string& path) {
  std::optional<Vector> mean;
  std::optional<Matrix> cov;
  if (!j.contains("mean")) rd.fail(path + ".mean", "missing");
  else mean = rd.vector(j.at("mean"), path + ".mean");
  if (!j.contains("cov")) rd.fail(path + ".cov", "missing");
  else cov = rd.matrix(j.at("cov"), path + ".cov");
  if (!mean || !cov) return std::nullopt;
  if (cov->rows() != mean->size() || cov->cols() != mean->size()) {
    rd.fail(path + ".cov", "must be " + std::to_string(mean->size()) + "x" + std::to_string(mean->size()) +
                               " to match mean, got " + numlin::shape(*cov));
    return std::nullopt;
  }
  if (!numlin::is_psd(*cov)) {
    rd.fail(path + ".cov", "must be symmetric positive semi-definite");
    return std::nullopt;
  }
  return Gaussian{*mean, *cov};
}

// dim is unknown when system.A or system.B failed; fields are still checked.
inline std::optional<NoiseModel> noise_model(ConfigReader& rd, const Json& j, std::optional<Eigen::Index> dim) {
  if (!j.contains("kind") || !j.at("kind").is_string()) {
    rd.fail("noise.kind", "must be one of \"gaussian\", \"mixture\", \"empirical\"");
    return std::nullopt;
  }
  const std::string kind = j.at("kind").get<std::string>();
  const std::string dim_msg = "dimension must be " + std::to_string(dim.value_or(0));
  auto wrong_dim = [&](Eigen::Index d) { return dim && d != *dim; };
  try {
    if (kind == "gaussian") {
      rd.unknown_keys(j, "noise", {"kind", "mean", "cov", "input_channel", "mc_samples", "mc_seed"});
      auto g = gaussian_fields(rd, j, "noise");
      if (!g) return std::nullopt;
      if (wrong_dim(g->mean.size())) {
        rd.fail("noise.mean", dim_msg);
        return std::nullopt;
      }
      return NoiseModel(*g);
    }
    if (kind == "mixture") {
      rd.unknown_keys(j, "noise", {"kind", "components", "input_channel", "mc_samples", "mc_seed"});
      if (!j.contains("components") || !j.at("components").is_array() || j.at("components").empty()) {
        rd.fail("noise.components", "must be a non-empty array");
        return std::nullopt;
      }
      Mixture mx;
      bool ok = true;
      const Json& comps = j.at("components");
      for (std::size_t i = 0; i < comps.size(); ++i) {
        const std::string path = "noise.components[" + std::to_string(i) + "]";
        const Json& c = comps[i];
        if (!c.is_object()) {
          rd.fail(path, "must be an object");
          ok = false;
          continue;
        }
        const auto w = rd.number(c, "weight", path + ".weight");
        if (!w) {
          if (!c.contains("weight")) rd.fail(path + ".weight", "missing");
          ok = false;
        } else if (!(*w > 0.0)) {
          rd.fail(path + ".weight", "must be positive");
          ok = false;
        }
        auto g = gaussian_fields(rd, c, path);
        if (!g) {
          ok = false;
          continue;
        }
        if (wrong_dim(g->mean.size())) {
          rd.fail(path + ".mean", dim_msg);
          ok = false;
          continue;
        }
        if (w) mx.components.push_back({*w, *g});
      }
      if (!ok) return std::nullopt;
      double total = 0.0;
      for (const auto& c : mx.components) total += c.weight;
      if (std::abs(total - 1.0) > 1e-12) {
        rd.fail("noise.components", "weights must sum to 1, got " + std::to_string(total));
        return std::nullopt;
      }
      return NoiseModel(std::move(mx));
    }
    if (kind == "empirical") {
      rd.unknown_keys(j, "noise", {"kind", "samples", "input_channel", "mc_samples", "mc_seed"});
      if (!j.contains("samples") || !j.at("samples").is_array() || j.at("samples").empty()) {
        rd.fail("noise.samples", "must be a non-empty array of vectors");
        return std::nullopt;
      }
      Empirical e;
      const Json& s = j.at("samples");
      for (std::size_t i = 0; i < s.size(); ++i) {
        const std::string path = "noise.samples[" + std::to_string(i) + "]";
        auto v = rd.vector(s[i], path);
        if (!v) return std::nullopt;
        if (wrong_dim(v->size())) {
          rd.fail(path, dim_msg);
          return std::nullopt;
        }
        e.samples.push_back(*v);
      }
      return NoiseModel(std::move(e));
    }
  } catch (const Error& e) {
    rd.fail("noise", e.what());
    return std::nullopt;
  }
  rd.fail("noise.kind", "must be one of \"gaussian\", \"mixture\", \"empirical\", got \"" + kind + "\"");
  return std::nullopt;
}

inline void schedule(ConfigReader& rd, const Json& j, SolverConfig& out) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    rd.fail("solver.schedule.kind", "must be one of \"theorem3\", \"diminishing\", \"constant\"");
    return;
  }
  const std::string kind = j.at("kind").get<std::string>();
  auto positive = [&](const char* key) -> std::optional<double> {
    const std::string path = std::string("solver.schedule.") + key;
    const auto v = rd.number(j, key, path);
    if (v && !(*v > 0.0)) {
      rd.fail(path, "must be strictly positive");
      return std::nullopt;
    }
    return v;
  };
  if (kind == "constant") {
    rd.unknown_keys(j, "solver.schedule", {"kind", "zeta"});
    const auto z = positive("zeta");
    if (!j.contains("zeta")) rd.fail("solver.schedule.zeta", "missing");
    if (z) out.schedule = StepSchedule::constant(*z);
  } else if (kind == "diminishing") {
    rd.unknown_keys(j, "solver.schedule", {"kind", "c"});
    const auto c = positive("c");
    if (!j.contains("c")) rd.fail("solver.schedule.c", "missing");
    if (c) out.schedule = StepSchedule::diminishing(*c);
  } else if (kind == "theorem3") {
    rd.unknown_keys(j, "solver.schedule", {"kind", "b", "e"});
    const bool has_b = j.contains("b"), has_e = j.contains("e");
    if (has_b != has_e) {
      rd.fail("solver.schedule", "theorem3 needs both b and e, or neither for the warm-up estimate");
      return;
    }
    if (!has_b) {
      out.warm_up = true;
      out.schedule = StepSchedule::theorem3(1.0, 1.0);
      return;
    }
    const auto b = positive("b"), e = positive("e");
    if (b && e) out.schedule = StepSchedule::theorem3(*b, *e);
  } else {
    rd.fail("solver.schedule.kind", "must be one of \"theorem3\", \"diminishing\", \"constant\", got \"" + kind + "\"");
  }
}

}  // namespace detail

/// Parses and validates a config document. Throws ParseError for malformed
/// JSON and ConfigError listing every schema violation found.
inline ConfigDocument parse_config(const std::string& text) {
  using detail::Json;
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    const auto [line, column] = detail::line_column(text, e.byte);
    std::ostringstream os;
    os << "config parse error at line " << line << ", column " << column << ": " << e.what();
    throw ParseError(os.str(), line, column);
  }
  if (!root.is_object()) throw ConfigError({"(root): must be a JSON object"});

  detail::ConfigReader rd;
  ConfigDocument doc;
  rd.unknown_keys(root, "", {"system", "penalties", "noise", "risk", "solver", "sim"});

  std::optional<Matrix> A, B, Q, R;
  if (const Json* s = rd.section(root, "system", true)) {
    rd.unknown_keys(*s, "system", {"A", "B"});
    if (s->contains("A")) A = rd.matrix(s->at("A"), "system.A");
    else rd.fail("system.A", "missing");
    if (s->contains("B")) B = rd.matrix(s->at("B"), "system.B");
    else rd.fail("system.B", "missing");
  }
  if (A && A->rows() != A->cols()) {
    rd.fail("system.A", "must be square, got " + numlin::shape(*A));
    A.reset();
  }
  if (A && B && B->rows() != A->rows()) {
    rd.fail("system.B", "must have " + std::to_string(A->rows()) + " rows to match system.A, got " +
                            numlin::shape(*B));
    B.reset();
  }
  if (const Json* s = rd.section(root, "penalties", true)) {
    rd.unknown_keys(*s, "penalties", {"Q", "R"});
    if (s->contains("Q")) Q = rd.matrix(s->at("Q"), "penalties.Q");
    else rd.fail("penalties.Q", "missing");
    if (s->contains("R")) R = rd.matrix(s->at("R"), "penalties.R");
    else rd.fail("penalties.R", "missing");
  }
  if (Q && A && (Q->rows() != A->rows() || Q->cols() != A->rows())) {
    rd.fail("penalties.Q", "must be " + std::to_string(A->rows()) + "x" + std::to_string(A->rows()) + ", got " +
                               numlin::shape(*Q));
  } else if (Q && !numlin::is_psd(*Q)) {
    rd.fail("penalties.Q", "must be symmetric positive semi-definite");
  }
  if (R && B && (R->rows() != B->cols() || R->cols() != B->cols())) {
    rd.fail("penalties.R", "must be " + std::to_string(B->cols()) + "x" + std::to_string(B->cols()) + ", got " +
                               numlin::shape(*R));
  } else if (R && !numlin::is_pd(*R)) {
    rd.fail("penalties.R", "must be symmetric positive definite");
  }

  if (const Json* s = rd.section(root, "noise", true)) {
    doc.input_channel = rd.boolean(*s, "input_channel", "noise.input_channel").value_or(false);
    if (const auto n = rd.count(*s, "mc_samples", "noise.mc_samples")) {
      if (*n < 1000) rd.fail("noise.mc_samples", "must be at least 1000");
      doc.mc.samples = *n;
    }
    if (const auto seed = rd.count(*s, "mc_seed", "noise.mc_seed")) doc.mc.seed = *seed;
    const std::optional<Eigen::Index> dim =
        doc.input_channel ? (B ? std::optional<Eigen::Index>(B->cols()) : std::nullopt)
                          : (A ? std::optional<Eigen::Index>(A->rows()) : std::nullopt);
    if (auto nm = detail::noise_model(rd, *s, dim)) doc.noise = std::move(*nm);
  }

  if (const Json* s = rd.section(root, "risk", true)) {
    rd.unknown_keys(*s, "risk", {"rho", "rho_bar"});
    const bool has_rho = s->contains("rho"), has_bar = s->contains("rho_bar");
    if (has_rho == has_bar) {
      rd.fail("risk", "exactly one of rho or rho_bar must be given");
    } else {
      const std::string key = has_rho ? "rho" : "rho_bar";
      const auto v = rd.number(*s, key, "risk." + key);
      if (v && !(*v > 0.0)) rd.fail("risk." + key, "must be positive");
      if (v) doc.budget = has_rho ? RiskBudget::original(*v) : RiskBudget::reformulated(*v);
    }
  }

  if (const Json* s = rd.section(root, "solver", false)) {
    rd.unknown_keys(*s, "solver", {"schedule", "max_iter", "stop_tol", "lambda1", "slater_check"});
    if (s->contains("schedule")) detail::schedule(rd, s->at("schedule"), doc.solver);
    if (const auto v = rd.count(*s, "max_iter", "solver.max_iter")) {
      if (*v < 1) rd.fail("solver.max_iter", "must be at least 1");
      doc.solver.max_iter = *v;
    }
    if (const auto v = rd.number(*s, "stop_tol", "solver.stop_tol")) {
      if (!(*v >= 0.0)) rd.fail("solver.stop_tol", "must be non-negative");
      doc.solver.stop_tol = *v;
    }
    if (const auto v = rd.number(*s, "lambda1", "solver.lambda1")) {
      if (!(*v >= 0.0)) rd.fail("solver.lambda1", "must be non-negative");
      doc.solver.lambda1 = *v;
    }
    if (const auto v = rd.boolean(*s, "slater_check", "solver.slater_check")) doc.solver.slater_check = *v;
  }

  if (const Json* s = rd.section(root, "sim", false)) {
    rd.unknown_keys(*s, "sim", {"T", "seeds", "burn_in", "x0"});
    if (const auto v = rd.count(*s, "T", "sim.T")) {
      if (*v < 2) rd.fail("sim.T", "must be at least 2");
      doc.sim.T = *v;
    }
    if (s->contains("seeds")) {
      const Json& seeds = s->at("seeds");
      if (!seeds.is_array() || seeds.empty()) {
        rd.fail("sim.seeds", "must be a non-empty array of non-negative integers");
      } else {
        doc.sim.seeds.clear();
        for (const auto& v : seeds) {
          if (!v.is_number_unsigned()) {
            rd.fail("sim.seeds", "must be a non-empty array of non-negative integers");
            break;
          }
          doc.sim.seeds.push_back(v.get<std::uint64_t>());
        }
      }
    }
    if (const auto v = rd.count(*s, "burn_in", "sim.burn_in")) {
      if (*v + 1 >= doc.sim.T) rd.fail("sim.burn_in", "must be below T - 1");
      doc.sim.burn_in = *v;
    }
    if (s->contains("x0")) {
      if (auto x0 = rd.vector(s->at("x0"), "sim.x0")) {
        if (A && x0->size() != A->rows()) rd.fail("sim.x0", "dimension must be " + std::to_string(A->rows()));
        doc.sim.x0 = *x0;
      }
    }
  }

  if (!rd.issues.empty()) throw ConfigError(std::move(rd.issues));
  doc.A = *A;
  doc.B = *B;
  doc.Q = *Q;
  doc.R = *R;
  return doc;
}

inline ConfigDocument parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// The effective problem: noise folded into the state equation when it
/// enters through the input channel.
inline ProblemSpec to_problem(const ConfigDocument& doc) {
  NoiseModel noise = doc.input_channel ? doc.noise.transformed(doc.B) : doc.noise;
  return make_problem(doc.A, doc.B, doc.Q, doc.R, std::move(noise), doc.budget, doc.mc);
}

}  // namespace rclqr
