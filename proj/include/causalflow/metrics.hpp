// Copyright (c) 2026 The causalflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Context-standardised RMSE, Gaussian-kernel trajectory MMD, and the
// latent/state independence test with a product kernel.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "causalflow/diff/tape.hpp"
#include "causalflow/forecaster.hpp"
#include "causalflow/rng.hpp"
#include "causalflow/series.hpp"

namespace causalflow {

/// RMSE of one node over B windows, pred and truth laid out [window][step];
/// both are standardised with that window's context statistics first.
inline double rmse(std::span<const double> pred, std::span<const double> truth,
                   std::span<const ContextStats> stats) {
  require(pred.size() == truth.size() && !stats.empty() && pred.size() % stats.size() == 0, ErrorCode::ShapeMismatch,
          "rmse needs equally sized [window x step] arrays and one context entry per window");
  const std::size_t H = pred.size() / stats.size();
  double sum = 0.0;
  for (std::size_t b = 0; b < stats.size(); ++b) {
    require(stats[b].std > 1e-12, ErrorCode::ZeroContextStd,
            "window " + std::to_string(b) + " has a constant context; its RMSE scale is undefined");
    for (std::size_t h = 0; h < H; ++h) {
      const double e = (pred[b * H + h] - truth[b * H + h]) / stats[b].std;
      sum += e * e;
    }
  }
  return std::sqrt(sum / static_cast<double>(pred.size()));
}

namespace detail {

inline std::vector<std::size_t> node_list(std::span<const std::size_t> nodes, std::size_t K) {
  if (!nodes.empty()) return {nodes.begin(), nodes.end()};
  std::vector<std::size_t> all(K);
  std::iota(all.begin(), all.end(), 0);
  return all;
}

}  // namespace detail

/// Node-averaged RMSE of one realization: `pred(w, k, h)` against the
/// forecast window of `truth`, standardised with `truth`'s context
/// statistics. An empty `nodes` list means every node.
template <class Pred>
double node_mean_rmse(const Pred& pred, const SeriesBatch& truth, std::span<const std::size_t> nodes = {}) {
  const std::size_t B = truth.batch(), H = truth.horizon(), tau = truth.context_len();
  const auto list = detail::node_list(nodes, truth.nodes());
  require(!list.empty(), ErrorCode::ShapeMismatch, "no nodes to score");
  std::vector<double> p(B * H), x(B * H);
  std::vector<ContextStats> st(B);
  double total = 0.0;
  for (auto k : list) {
    require(k < truth.nodes(), ErrorCode::IndexOutOfRange, "node " + std::to_string(k));
    for (std::size_t b = 0; b < B; ++b) {
      st[b] = truth.stats(b, k);
      for (std::size_t h = 0; h < H; ++h) {
        p[b * H + h] = pred(b, k, h);
        x[b * H + h] = truth.at(b, k, tau + h);
      }
    }
    total += rmse(p, x, st);
  }
  return total / static_cast<double>(list.size());
}

/// One node-averaged RMSE per realization (sample index) of `r`.
inline std::vector<double> realization_rmse(const Rollouts& r, const SeriesBatch& truth,
                                            std::span<const std::size_t> nodes = {}) {
  require(r.windows == truth.batch() && r.nodes == truth.nodes() && r.horizon == truth.horizon(),
          ErrorCode::ShapeMismatch, "rollouts and truth cover different windows");
  std::vector<double> out;
  for (std::size_t n = 0; n < r.samples; ++n)
    out.push_back(node_mean_rmse(
        [&](std::size_t w, std::size_t k, std::size_t h) { return r.value(w, n, k, h); }, truth, nodes));
  return out;
}

inline double counterfactual_rmse(const CfRollout& cf, const SeriesBatch& truth,
                                  std::span<const std::size_t> nodes = {}) {
  require(cf.windows == truth.batch() && cf.nodes == truth.nodes() && cf.horizon == truth.horizon(),
          ErrorCode::ShapeMismatch, "counterfactual and truth cover different windows");
  return node_mean_rmse([&](std::size_t w, std::size_t k, std::size_t h) { return cf.value(w, k, h); }, truth,
                        nodes);
}

/// Mean and sample standard deviation of per-run values.
struct RunSummary {
  double mean = 0.0;
  double std = 0.0;
  std::size_t runs = 0;
};

inline RunSummary summarize_runs(std::span<const double> per_run) {
  RunSummary s{0.0, 0.0, per_run.size()};
  if (per_run.empty()) return s;
  s.mean = std::accumulate(per_run.begin(), per_run.end(), 0.0) / static_cast<double>(per_run.size());
  if (per_run.size() > 1) {
    double ss = 0.0;
    for (double v : per_run) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(per_run.size() - 1));
  }
  return s;
}

enum class Bandwidth { PooledMedian, HalfPooledMedian, Fixed };
enum class MmdEstimator { FullCross, PairedUnbiased };

struct MmdConfig {
  Bandwidth bandwidth = Bandwidth::PooledMedian;
  double sigma = 1.0;  // read for Fixed only
  MmdEstimator estimator = MmdEstimator::FullCross;

  void validate() const {
    require(bandwidth != Bandwidth::Fixed || (sigma > 0.0 && std::isfinite(sigma)), ErrorCode::InvalidConfig,
            "fixed bandwidth must be positive");
  }
};

/// Squared Euclidean distances between all rows of `a` and all rows of `b`.
inline Tensor2 squared_distances(const Tensor2& a, const Tensor2& b) {
  require(a.cols() == b.cols(), ErrorCode::ShapeMismatch, "samples have different dimensions");
  Tensor2 d(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) d(i, j) = (a.row(i) - b.row(j)).squaredNorm();
  return d;
}

/// Median of the pairwise distances within the union of the rows of `a` and `b`.
inline double pooled_median_distance(const Tensor2& a, const Tensor2& b) {
  Tensor2 u(a.rows() + b.rows(), a.cols());
  u << a, b;
  const Tensor2 d2 = squared_distances(u, u);
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(u.rows() * (u.rows() - 1) / 2));
  for (Eigen::Index i = 0; i < u.rows(); ++i)
    for (Eigen::Index j = i + 1; j < u.rows(); ++j) d.push_back(std::sqrt(d2(i, j)));
  require(!d.empty(), ErrorCode::DegenerateSample, "need at least two points for a median distance");
  const std::size_t mid = d.size() / 2;
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid), d.end());
  double med = d[mid];
  if (d.size() % 2 == 0) med = 0.5 * (med + *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid)));
  require(med > 0.0, ErrorCode::DegenerateSample, "median pairwise distance is zero; bandwidth undefined");
  return med;
}

inline double kernel_bandwidth(const MmdConfig& cfg, const Tensor2& a, const Tensor2& b) {
  cfg.validate();
  switch (cfg.bandwidth) {
    case Bandwidth::Fixed: return cfg.sigma;
    case Bandwidth::PooledMedian: return pooled_median_distance(a, b);
    case Bandwidth::HalfPooledMedian: return 0.5 * pooled_median_distance(a, b);
  }
  return cfg.sigma;
}

/// exp(-d2 / (2 sigma^2)) elementwise.
inline Tensor2 gaussian_kernel(const Tensor2& d2, double sigma) {
  return (-d2.array() / (2.0 * sigma * sigma)).exp().matrix();
}

namespace detail {

inline double off_diagonal_sum(const Tensor2& k) { return k.sum() - k.diagonal().sum(); }

/// Combines self and cross kernel matrices with the chosen estimator.
inline double mmd_from_kernels(const Tensor2& kaa, const Tensor2& kbb, const Tensor2& kab, MmdEstimator est) {
  const auto na = static_cast<double>(kaa.rows()), nb = static_cast<double>(kbb.rows());
  const double self = off_diagonal_sum(kaa) / (na * (na - 1)) + off_diagonal_sum(kbb) / (nb * (nb - 1));
  if (est == MmdEstimator::FullCross) return self - 2.0 * kab.sum() / (na * nb);
  return self - 2.0 * off_diagonal_sum(kab) / (na * (na - 1));
}

inline void check_mmd_sizes(Eigen::Index na, Eigen::Index nb, MmdEstimator est) {
  require(na >= 2 && nb >= 2, ErrorCode::DegenerateSample, "each sample needs at least two points");
  require(est == MmdEstimator::FullCross || na == nb, ErrorCode::ShapeMismatch,
          "the paired estimator needs equal sample sizes");
}

}  // namespace detail

/// Squared MMD between flattened trajectories (rows of `a` and `b`).
/// FullCross uses the full-mean cross term 2/(n_a n_b) sum k; PairedUnbiased uses
/// 2/(n(n-1)) over i != j, the paired form used by the independence test.
inline double trajectory_mmd(const Tensor2& a, const Tensor2& b, const MmdConfig& cfg = {}) {
  detail::check_mmd_sizes(a.rows(), b.rows(), cfg.estimator);
  const double sigma = kernel_bandwidth(cfg, a, b);
  return detail::mmd_from_kernels(gaussian_kernel(squared_distances(a, a), sigma),
                                  gaussian_kernel(squared_distances(b, b), sigma),
                                  gaussian_kernel(squared_distances(a, b), sigma), cfg.estimator);
}

/// Rows are flattened [node][step] forecast windows; one row per window and realization.
inline Tensor2 flatten_trajectories(const Rollouts& r, std::span<const std::size_t> nodes = {}) {
  const auto list = detail::node_list(nodes, r.nodes);
  Tensor2 out(static_cast<Eigen::Index>(r.windows * r.samples), static_cast<Eigen::Index>(list.size() * r.horizon));
  for (std::size_t w = 0; w < r.windows; ++w)
    for (std::size_t n = 0; n < r.samples; ++n)
      for (std::size_t j = 0; j < list.size(); ++j)
        for (std::size_t h = 0; h < r.horizon; ++h)
          out(static_cast<Eigen::Index>(w * r.samples + n), static_cast<Eigen::Index>(j * r.horizon + h)) =
              r.value(w, n, list[j], h);
  return out;
}

struct IndependenceMmd {
  double model = 0.0;     // {(z, h)} vs {(z', h)}
  double baseline = 0.0;  // {(z', h)} vs {(z'', h)}
};

/// Squared MMD between the joint sample {(z_i, h_i)} and {(z'_i, h_i)} with
/// z' ~ N(0, 1), under a product of Gaussian kernels whose bandwidths are half
/// the pooled median distance of each factor. The baseline replaces z with a
/// second independent normal draw.
inline IndependenceMmd a3_independence_mmd(std::span<const double> z, const Tensor2& h, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(z.size());
  require(n >= 10, ErrorCode::SampleTooSmall, "independence test needs at least 10 pairs, got " + std::to_string(n));
  require(h.rows() == n, ErrorCode::ShapeMismatch, "one state row per latent");
  Tensor2 zo(n, 1), z1(n, 1), z2(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    zo(i, 0) = z[static_cast<std::size_t>(i)];
    z1(i, 0) = rng::normal_at({seed, 1, static_cast<std::uint64_t>(i)});
    z2(i, 0) = rng::normal_at({seed, 2, static_cast<std::uint64_t>(i)});
  }
  // Both joint samples share h, so the pooled H set is h itself.
  const Tensor2 kh = gaussian_kernel(squared_distances(h, h), 0.5 * pooled_median_distance(h, Tensor2(0, h.cols())));
  auto joint = [&](const Tensor2& x, const Tensor2& y) {
    const double sz = 0.5 * pooled_median_distance(x, y);
    const Tensor2 kxx = gaussian_kernel(squared_distances(x, x), sz).cwiseProduct(kh);
    const Tensor2 kyy = gaussian_kernel(squared_distances(y, y), sz).cwiseProduct(kh);
    const Tensor2 kxy = gaussian_kernel(squared_distances(x, y), sz).cwiseProduct(kh);
    return detail::mmd_from_kernels(kxx, kyy, kxy, MmdEstimator::PairedUnbiased);
  };
  return {joint(zo, z1), joint(z1, z2)};
}

}  // namespace causalflow
