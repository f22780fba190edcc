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

// Disturbance models and the Q-weighted statistics of the risk reformulation:
//
//   w̄  = E[w]
//   W  = E[(w − w̄)(w − w̄)ᵀ]
//   M₃ = E[(w − w̄)(w − w̄)ᵀQ(w − w̄)]
//   m₄ = E[((w − w̄)ᵀQ(w − w̄) − tr{WQ})²]

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "rclqr/errors.hpp"
#include "rclqr/numlin.hpp"

namespace rclqr {

/// SplitMix64 finalizer; used to key independent random streams.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream = 0) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(mix_seed(seed, stream));
}

struct Gaussian {
  Vector mean;
  Matrix cov;
};

struct MixtureComponent {
  double weight;
  Gaussian dist;
};

struct Mixture {
  std::vector<MixtureComponent> components;
};

struct Empirical {
  std::vector<Vector> samples;
};

/// A disturbance distribution. Immutable after construction; sampling
/// factors are precomputed so `sample` is cheap inside rollouts.
class NoiseModel {
 public:
  enum class Kind { Gaussian, Mixture, Empirical };

  explicit NoiseModel(Gaussian g) : repr_(std::move(g)) { validate_and_prepare(); }
  explicit NoiseModel(Mixture mx) : repr_(std::move(mx)) { validate_and_prepare(); }
  explicit NoiseModel(Empirical e) : repr_(std::move(e)) { validate_and_prepare(); }

  static NoiseModel gaussian(Vector mean, Matrix cov) {
    return NoiseModel(Gaussian{std::move(mean), std::move(cov)});
  }
  static NoiseModel mixture(std::vector<MixtureComponent> components) {
    return NoiseModel(Mixture{std::move(components)});
  }
  static NoiseModel empirical(std::vector<Vector> samples) {
    return NoiseModel(Empirical{std::move(samples)});
  }

  Kind kind() const { return static_cast<Kind>(repr_.index()); }
  int dim() const { return dim_; }

  const Gaussian& as_gaussian() const { return std::get<Gaussian>(repr_); }
  const Mixture& as_mixture() const { return std::get<Mixture>(repr_); }
  const Empirical& as_empirical() const { return std::get<Empirical>(repr_); }

  /// Exact mean of the model (plug-in mean for empirical models).
  Vector mean() const {
    switch (kind()) {
      case Kind::Gaussian:
        return as_gaussian().mean;
      case Kind::Mixture: {
        Vector mu = Vector::Zero(dim_);
        for (const auto& c : as_mixture().components) mu += c.weight * c.dist.mean;
        return mu;
      }
      case Kind::Empirical: {
        Vector mu = Vector::Zero(dim_);
        for (const auto& s : as_empirical().samples) mu += s;
        return mu / static_cast<double>(as_empirical().samples.size());
      }
    }
    return {};
  }

  /// Exact covariance (plug-in, 1/N normalised, for empirical models).
  Matrix covariance() const {
    const Vector mu = mean();
    Matrix W = Matrix::Zero(dim_, dim_);
    switch (kind()) {
      case Kind::Gaussian:
        return as_gaussian().cov;
      case Kind::Mixture:
        for (const auto& c : as_mixture().components) {
          const Vector d = c.dist.mean - mu;
          W += c.weight * (c.dist.cov + d * d.transpose());
        }
        return numlin::symmetrize(W);
      case Kind::Empirical:
        for (const auto& s : as_empirical().samples) W += (s - mu) * (s - mu).transpose();
        return numlin::symmetrize(W / static_cast<double>(as_empirical().samples.size()));
    }
    return W;
  }

  /// Push-forward of the distribution through w ↦ G w.
  NoiseModel transformed(const Matrix& G) const {
    if (G.cols() != dim_) {
      throw DimensionError("NoiseModel::transformed: G has " + std::to_string(G.cols()) +
                           " columns, model dimension is " + std::to_string(dim_));
    }
    auto push = [&](const Gaussian& g) {
      return Gaussian{G * g.mean, numlin::symmetrize(G * g.cov * G.transpose())};
    };
    switch (kind()) {
      case Kind::Gaussian:
        return NoiseModel(push(as_gaussian()));
      case Kind::Mixture: {
        Mixture out;
        for (const auto& c : as_mixture().components) out.components.push_back({c.weight, push(c.dist)});
        return NoiseModel(std::move(out));
      }
      case Kind::Empirical: {
        Empirical out;
        for (const auto& s : as_empirical().samples) out.samples.push_back(G * s);
        return NoiseModel(std::move(out));
      }
    }
    return *this;
  }

  /// One draw. Mixtures pick a component by weight; empirical models draw
  /// uniformly with replacement.
  template <typename Out>
  void sample_into(Rng& rng, Out&& out) const {
    switch (kind()) {
      case Kind::Gaussian:
        draw_gaussian(0, rng, out);
        return;
      case Kind::Mixture: {
        const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()),
                                               cumulative_.size() - 1);
        draw_gaussian(idx, rng, out);
        return;
      }
      case Kind::Empirical: {
        const auto& s = as_empirical().samples;
        std::uniform_int_distribution<std::size_t> pick(0, s.size() - 1);
        out = s[pick(rng)];
        return;
      }
    }
  }

  Vector sample(Rng& rng) const {
    Vector w(dim_);
    sample_into(rng, w);
    return w;
  }

 private:
  struct Factor {
    Vector mean;
    Matrix L;  // dim x rank, cov = L Lᵀ
  };

  static Factor factorize(const Gaussian& g) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(numlin::symmetrize(g.cov));
    const Vector& ev = es.eigenvalues();
    const double cutoff = 1e-14 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      if (ev(i) > cutoff) keep.push_back(i);
    Matrix L(g.cov.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) {
      const auto i = keep[j];
      L.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(i) * std::sqrt(ev(i));
    }
    return {g.mean, L};
  }

  template <typename Out>
  void draw_gaussian(std::size_t idx, Rng& rng, Out& out) const {
    const Factor& f = factors_[idx];
    std::normal_distribution<double> normal(0.0, 1.0);
    out = f.mean;
    for (Eigen::Index j = 0; j < f.L.cols(); ++j) out += f.L.col(j) * normal(rng);
  }

  void check_gaussian(const Gaussian& g, const std::string& where) {
    if (g.mean.size() != dim_ || g.cov.rows() != dim_ || g.cov.cols() != dim_) {
      throw DimensionError(where + ": mean/covariance dimensions disagree");
    }
    if (!g.mean.allFinite() || !g.cov.allFinite()) {
      throw InvalidArgumentError(where + ": non-finite parameters");
    }
    if (!numlin::is_psd(g.cov)) {
      throw InvalidArgumentError(where + ": covariance must be symmetric positive semi-definite");
    }
  }

  void validate_and_prepare() {
    switch (kind()) {
      case Kind::Gaussian: {
        const auto& g = as_gaussian();
        dim_ = static_cast<int>(g.mean.size());
        check_gaussian(g, "gaussian noise");
        factors_.push_back(factorize(g));
        break;
      }
      case Kind::Mixture: {
        const auto& comps = as_mixture().components;
        if (comps.empty()) throw InvalidArgumentError("mixture noise: no components");
        dim_ = static_cast<int>(comps.front().dist.mean.size());
        double total = 0.0;
        for (std::size_t i = 0; i < comps.size(); ++i) {
          const auto& c = comps[i];
          if (!(c.weight > 0.0)) {
            throw InvalidArgumentError("mixture noise: weight " + std::to_string(i) +
                                       " must be positive");
          }
          check_gaussian(c.dist, "mixture component " + std::to_string(i));
          total += c.weight;
          cumulative_.push_back(total);
          factors_.push_back(factorize(c.dist));
        }
        if (std::abs(total - 1.0) > 1e-12) {
          throw InvalidArgumentError("mixture noise: weights sum to " + std::to_string(total) +
                                     ", expected 1");
        }
        break;
      }
      case Kind::Empirical: {
        const auto& s = as_empirical().samples;
        if (s.empty()) throw InvalidArgumentError("empirical noise: sample list is empty");
        dim_ = static_cast<int>(s.front().size());
        for (const auto& v : s) {
          if (v.size() != dim_) throw DimensionError("empirical noise: samples differ in dimension");
          if (!v.allFinite()) throw InvalidArgumentError("empirical noise: non-finite sample");
        }
        break;
      }
    }
    if (dim_ <= 0) throw DimensionError("noise model must have positive dimension");
  }

  std::variant<Gaussian, Mixture, Empirical> repr_;
  int dim_ = 0;
  std::vector<Factor> factors_;
  std::vector<double> cumulative_;
};

inline Vector sample(const NoiseModel& model, Rng& rng) { return model.sample(rng); }

struct NoiseStats {
  Vector mean;             // w̄
  Matrix covariance;       // W
  Vector weighted_third;   // M₃
  double weighted_fourth;  // m₄
  /// Standard error of m₄ when it is a Monte-Carlo estimate, 0 when exact.
  double weighted_fourth_stderr = 0.0;
};

/// Sampling budget for the Monte-Carlo statistics.
struct McOptions {
  std::size_t samples = 10'000'000;
  std::uint64_t seed = 20210301;
  /// Worker threads; the result does not depend on this value.
  unsigned threads = 0;
};

namespace detail {

inline constexpr std::size_t kBlockSize = std::size_t{1} << 16;

inline void check_weight(const Matrix& Q, int dim, const char* where) {
  if (Q.rows() != dim || Q.cols() != dim) {
    throw DimensionError(std::string(where) + ": Q has shape " + numlin::shape(Q) +
                         ", noise dimension is " + std::to_string(dim));
  }
  if (!numlin::is_psd(Q)) {
    throw InvalidArgumentError(std::string(where) + ": Q must be symmetric positive semi-definite");
  }
}

/// Runs `body(block_index)` for every block, over `threads` workers. Each
/// block writes only its own slot, so the reduction order is fixed by index.
template <typename Body>
void for_each_block(std::size_t blocks, unsigned threads, Body&& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, blocks));
  if (threads <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) body(b);
    return;
  }
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t b = t; b < blocks; b += threads) body(b);
    });
  }
}

struct CentralSums {
  Matrix s2;
  Vector s3;
  double y1 = 0.0, y2 = 0.0, y3 = 0.0, y4 = 0.0;  // power sums of y − shift
};

/// Plug-in moments from sums of δ = w − w̄ taken about the sample mean.
inline NoiseStats finish_stats(const Vector& mean, const CentralSums& cs, double n) {
  NoiseStats st;
  st.mean = mean;
  st.covariance = numlin::symmetrize(cs.s2 / n);
  st.weighted_third = cs.s3 / n;
  const double e1 = cs.y1 / n, e2 = cs.y2 / n, e3 = cs.y3 / n, e4 = cs.y4 / n;
  // central moments of y from power sums about `shift`
  const double m2 = e2 - e1 * e1;
  const double m4c = e4 - 4 * e3 * e1 + 6 * e2 * e1 * e1 - 3 * e1 * e1 * e1 * e1;
  st.weighted_fourth = std::max(0.0, m2);
  st.weighted_fourth_stderr = std::sqrt(std::max(0.0, m4c - m2 * m2) / n);
  return st;
}

/// `shift` recentres y = δᵀQδ before taking power sums, for conditioning.
inline void accumulate(CentralSums& cs, const Vector& delta, const Matrix& Q, double shift) {
  const Vector Qd = Q * delta;
  const double y = delta.dot(Qd);
  cs.s2.noalias() += delta * delta.transpose();
  cs.s3 += delta * y;
  const double d = y - shift;
  const double d2 = d * d;
  cs.y1 += d;
  cs.y2 += d2;
  cs.y3 += d2 * d;
  cs.y4 += d2 * d2;
}

}  // namespace detail

/// Plug-in sample moments of a fixed sample set (no resampling).
inline NoiseStats plugin_stats(const std::vector<Vector>& samples, const Matrix& Q) {
  if (samples.empty()) throw InvalidArgumentError("plugin_stats: no samples");
  const int dim = static_cast<int>(samples.front().size());
  detail::check_weight(Q, dim, "plugin_stats");
  const double n = static_cast<double>(samples.size());
  Vector mean = Vector::Zero(dim);
  for (const auto& s : samples) mean += s;
  mean /= n;
  detail::CentralSums cs{Matrix::Zero(dim, dim), Vector::Zero(dim)};
  for (const auto& s : samples) detail::accumulate(cs, s - mean, Q, 0.0);
  return detail::finish_stats(mean, cs, n);
}

/// Monte-Carlo estimates of all four statistics from `opts.samples` draws.
/// Deterministic for fixed (model, samples, seed) regardless of thread count.
inline NoiseStats mc_stats(const NoiseModel& model, const Matrix& Q, const McOptions& opts = {}) {
  detail::check_weight(Q, model.dim(), "mc_stats");
  if (opts.samples < 1000) throw InvalidArgumentError("mc_stats: at least 1000 samples required");
  const int dim = model.dim();
  const std::size_t n = opts.samples;
  const std::size_t blocks = (n + detail::kBlockSize - 1) / detail::kBlockSize;
  auto block_len = [&](std::size_t b) { return std::min(detail::kBlockSize, n - b * detail::kBlockSize); };

  std::vector<Vector> partial_mean(blocks, Vector::Zero(dim));
  detail::for_each_block(blocks, opts.threads, [&](std::size_t b) {
    Rng rng = make_rng(opts.seed, b);
    Vector w(dim), acc = Vector::Zero(dim);
    for (std::size_t i = 0; i < block_len(b); ++i) {
      model.sample_into(rng, w);
      acc += w;
    }
    partial_mean[b] = acc;
  });
  Vector mean = Vector::Zero(dim);
  for (const auto& p : partial_mean) mean += p;
  mean /= static_cast<double>(n);

  const double shift = (model.covariance() * Q).trace();
  std::vector<detail::CentralSums> partial(blocks, {Matrix::Zero(dim, dim), Vector::Zero(dim)});
  detail::for_each_block(blocks, opts.threads, [&](std::size_t b) {
    Rng rng = make_rng(opts.seed, b);
    Vector w(dim);
    auto& cs = partial[b];
    for (std::size_t i = 0; i < block_len(b); ++i) {
      model.sample_into(rng, w);
      detail::accumulate(cs, w - mean, Q, shift);
    }
  });
  detail::CentralSums total{Matrix::Zero(dim, dim), Vector::Zero(dim)};
  for (const auto& cs : partial) {
    total.s2 += cs.s2;
    total.s3 += cs.s3;
    total.y1 += cs.y1;
    total.y2 += cs.y2;
    total.y3 += cs.y3;
    total.y4 += cs.y4;
  }
  return detail::finish_stats(mean, total, static_cast<double>(n));
}

/// Exact statistics for Gaussian and mixture models. A mixture's m₄ has no
/// closed form here and is estimated with `mc` (its standard error is kept).
inline NoiseStats analytic_stats(const NoiseModel& model, const Matrix& Q, const McOptions& mc = {}) {
  detail::check_weight(Q, model.dim(), "analytic_stats");
  if (model.kind() == NoiseModel::Kind::Empirical) {
    throw UnsupportedVariantError("analytic_stats: empirical models have no analytic moments");
  }
  NoiseStats st;
  st.mean = model.mean();
  st.covariance = model.covariance();
  if (model.kind() == NoiseModel::Kind::Gaussian ||
      model.as_mixture().components.size() == 1) {
    const Matrix WQ = st.covariance * Q;
    st.weighted_third = Vector::Zero(model.dim());
    st.weighted_fourth = 2.0 * (WQ * WQ).trace();
    return st;
  }
  Vector m3 = Vector::Zero(model.dim());
  for (const auto& c : model.as_mixture().components) {
    const Vector d = c.dist.mean - st.mean;
    const Vector Qd = Q * d;
    m3 += c.weight * (d * d.dot(Qd) + (Q * c.dist.cov).trace() * d + 2.0 * c.dist.cov * Qd);
  }
  st.weighted_third = m3;
  const NoiseStats est = mc_stats(model, Q, mc);
  st.weighted_fourth = est.weighted_fourth;
  st.weighted_fourth_stderr = est.weighted_fourth_stderr;
  return st;
}

/// Statistics by the natural route for each variant: analytic for Gaussian
/// and mixture models, plug-in sample moments for empirical ones.
inline NoiseStats compute_stats(const NoiseModel& model, const Matrix& Q, const McOptions& mc = {}) {
  if (model.kind() == NoiseModel::Kind::Empirical) return plugin_stats(model.as_empirical().samples, Q);
  return analytic_stats(model, Q, mc);
}

}  // namespace rclqr
