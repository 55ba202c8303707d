// Copyright (c) 2026 The causalflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Conditional flow matching over the forecast window with teacher-forced
// recurrent states.

#pragma once

#include <functional>
#include <numbers>
#include <numeric>
#include <optional>

#include "causalflow/diff/adam.hpp"
#include "causalflow/model.hpp"

namespace causalflow {

struct TrainConfig {
  double sigma_min = 0.0;
  std::size_t batch_size = 128;
  std::size_t epochs = 10;
  diff::AdamConfig adam;
  std::uint64_t seed = 0;
  std::size_t s_samples_per_point = 1;
  std::size_t ema_span = 50;
  double diverge_factor = 10.0;

  void validate() const {
    require(batch_size >= 1, ErrorCode::InvalidConfig, "batch_size must be >= 1");
    require(adam.learning_rate > 0.0, ErrorCode::InvalidConfig, "learning_rate must be positive");
    require(sigma_min >= 0.0 && sigma_min < 1.0, ErrorCode::InvalidConfig, "sigma_min must lie in [0, 1)");
    require(s_samples_per_point >= 1, ErrorCode::InvalidConfig, "s_samples_per_point must be >= 1");
    require(ema_span >= 1 && diverge_factor > 1.0, ErrorCode::InvalidConfig, "loss guard settings");
  }
};

struct PathPoint {
  double phi = 0.0;
  double dphi = 0.0;
};

/// Point and velocity of the interpolant between data x and latent z at s.
/// sigma_min = 0 gives the straight line (1 - s) x + s z.
inline PathPoint reference_path(double x, double z, double s, double sigma_min = 0.0) {
  require(s >= 0.0 && s <= 1.0, ErrorCode::SOutOfRange, "flow time s=" + std::to_string(s) + " outside [0, 1]");
  if (sigma_min == 0.0) return {(1.0 - s) * x + s * z, z - x};
  return {(1.0 - s) * x + (s + sigma_min * (1.0 - s)) * z, (1.0 - sigma_min) * z - x};
}

/// Fills flow times s and latents z for one (node, t, repeat) block of rows.
using PathSampler =
    std::function<void(std::size_t node, std::size_t t, std::size_t repeat, Eigen::ArrayXd& s, Eigen::ArrayXd& z)>;

/// s ~ U(0, 1), z ~ N(0, 1), drawn in a fixed order from `rng`.
inline PathSampler random_path_sampler(rng::Stream& rng) {
  return [&rng](std::size_t, std::size_t, std::size_t, Eigen::ArrayXd& s, Eigen::ArrayXd& z) {
    for (Eigen::Index r = 0; r < s.size(); ++r) {
      s(r) = rng.uniform();
      z(r) = rng.normal();
    }
  };
}

/// A loss recorded on its own tape, with handles to every model parameter in
/// registry order.
struct TracedLoss {
  diff::Tape tape;
  diff::Var loss;
  std::vector<diff::Var> params;

  [[nodiscard]] double value() const { return tape.value(loss)(0, 0); }

  [[nodiscard]] std::vector<Tensor2> gradients() const {
    const auto g = tape.backward(loss);
    std::vector<Tensor2> out;
    out.reserve(params.size());
    for (auto p : params) {
      const auto& v = tape.value(p);
      out.push_back(g.has(p) ? g.of(p) : Tensor2::Zero(v.rows(), v.cols()));
    }
    return out;
  }
};

/// Mean over nodes, forecast steps, rows and repeats of
/// || v_i(phi, s; H_{i,t-1}) - dphi ||^2, with states advanced on observed
/// values only.
inline TracedLoss cfm_loss(const CausalFlowModel& model, const SeriesBatch& batch, const PathSampler& sample,
                           const TrainConfig& cfg) {
  model.check_series(batch);
  require(batch.horizon() >= 1, ErrorCode::EmptyForecastWindow, "batch has no forecast steps");
  require(batch.batch() >= 1, ErrorCode::EmptyForecastWindow, "batch has no windows");
  const auto& dag = model.dag();
  const auto& enc = model.encoder();
  const std::size_t K = dag.node_count(), B = batch.batch(), T = batch.total_len(), tau = batch.context_len();
  const auto d = static_cast<Eigen::Index>(enc.hidden_dim());
  const auto Bi = static_cast<Eigen::Index>(B);

  TracedLoss out;
  auto& tp = out.tape;
  std::vector<RnnCellVars> cells;
  for (const auto& c : enc.cells()) {
    cells.push_back(record_cell(tp, c));
    for (auto v : {cells.back().wx, cells.back().wh, cells.back().bx, cells.back().bh}) out.params.push_back(v);
  }
  std::vector<diff::MlpVars> nets;
  for (std::size_t k = 0; k < K; ++k) {
    nets.push_back(diff::record_params(tp, model.net(k).mlp()));
    for (std::size_t l = 0; l < nets.back().weights.size(); ++l) {
      out.params.push_back(nets.back().weights[l]);
      out.params.push_back(nets.back().biases[l]);
    }
  }

  // Standardised values, node-major rows (k * B + b) by time.
  Tensor2 xs(static_cast<Eigen::Index>(K * B), static_cast<Eigen::Index>(T));
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t b = 0; b < B; ++b) {
      const auto& st = batch.stats(b, k);
      for (std::size_t t = 0; t < T; ++t)
        xs(static_cast<Eigen::Index>(k * B + b), static_cast<Eigen::Index>(t)) = st.standardize(batch.at(b, k, t));
    }

  const bool shared = !enc.config().per_node_rnn;
  diff::Var h_all{};
  std::vector<diff::Var> h_node;
  if (shared)
    h_all = tp.leaf(Tensor2::Zero(static_cast<Eigen::Index>(K * B), d));
  else
    for (std::size_t k = 0; k < K; ++k) h_node.push_back(tp.leaf(Tensor2::Zero(Bi, d)));
  auto own = [&](std::size_t k) {
    return shared ? tp.slice(h_all, 0, static_cast<Eigen::Index>(k) * Bi, Bi) : h_node[k];
  };

  const std::size_t M = cfg.s_samples_per_point;
  Eigen::ArrayXd s(Bi), z(Bi);
  std::optional<diff::Var> total;
  for (std::size_t t = 0; t < T; ++t) {
    if (t >= tau) {
      for (std::size_t k = 0; k < K; ++k) {
        const auto& pa = dag.parents_of(k);
        diff::Var mine = own(k);
        diff::Var pooled;
        if (pa.empty()) {
          pooled = tp.leaf(Tensor2::Zero(Bi, d));
        } else {
          pooled = own(pa[0]);
          for (std::size_t j = 1; j < pa.size(); ++j) pooled = tp.add(pooled, own(pa[j]));
          pooled = tp.scale(pooled, 1.0 / static_cast<double>(pa.size()));
        }
        auto cond = tp.concat_cols({mine, pooled});
        for (std::size_t m = 0; m < M; ++m) {
          sample(k, t, m, s, z);
          Tensor2 in(Bi, 3), neg_target(Bi, 1);
          for (Eigen::Index r = 0; r < Bi; ++r) {
            const double x = xs(static_cast<Eigen::Index>(k) * Bi + r, static_cast<Eigen::Index>(t));
            const auto p = reference_path(x, z(r), s(r), cfg.sigma_min);
            in(r, 0) = p.phi;
            in(r, 1) = s(r);
            in(r, 2) = std::sin(2.0 * std::numbers::pi * s(r));
            neg_target(r, 0) = -p.dphi;
          }
          auto v = model.net(k).trace(tp, nets[k], tp.leaf(std::move(in)), cond);
          auto term = tp.sum_squares(tp.add(v, tp.leaf(std::move(neg_target))));
          total = total ? tp.add(*total, term) : term;
        }
      }
    }
    if (t + 1 < T) {
      const Eigen::Index col = static_cast<Eigen::Index>(t);
      if (shared) {
        h_all = cell_step(tp, cells[0], tp.leaf(Tensor2(xs.col(col))), h_all);
      } else {
        for (std::size_t k = 0; k < K; ++k)
          h_node[k] = cell_step(tp, cells[k], tp.leaf(Tensor2(xs.col(col).segment(static_cast<Eigen::Index>(k) * Bi, Bi))),
                                h_node[k]);
      }
    }
  }
  const double count = static_cast<double>(K * (T - tau) * B * M);
  out.loss = tp.scale(*total, 1.0 / count);
  return out;
}

inline TracedLoss cfm_loss(const CausalFlowModel& model, const SeriesBatch& batch, rng::Stream& rng,
                           const TrainConfig& cfg) {
  return cfm_loss(model, batch, random_path_sampler(rng), cfg);
}

struct LossRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double loss = 0.0;
};

/// Everything needed to continue a run from an epoch boundary.
struct TrainState {
  std::size_t epochs_done = 0;
  std::size_t step = 0;
  double ema = 0.0;
  double ema_min = 0.0;
  bool ema_started = false;
  std::int64_t adam_step = 0;
  std::vector<Tensor2> adam_m, adam_v;
};

struct TrainResult {
  std::vector<LossRecord> curve;
  TrainState state;
};

using EpochCallback = std::function<void(const CausalFlowModel&, const TrainState&, std::size_t epoch)>;

/// Adam over shuffled minibatches of windows. Each epoch's order and each
/// minibatch's path draws come from substreams keyed by (seed, epoch, batch),
/// so a run resumed from an epoch boundary matches an uninterrupted one.
inline TrainResult train(CausalFlowModel& model, const SeriesBatch& data, const TrainConfig& cfg,
                         const EpochCallback& on_epoch = {}, std::optional<TrainState> resume = std::nullopt) {
  cfg.validate();
  model.check_series(data);
  require(data.batch() >= 1, ErrorCode::EmptyForecastWindow, "no training windows");
  TrainResult res;
  TrainState& st = res.state;
  diff::Adam opt(cfg.adam);
  if (resume) {
    st = *resume;
    opt.restore(st.adam_step, st.adam_m, st.adam_v);
  }
  const double alpha = 2.0 / (static_cast<double>(cfg.ema_span) + 1.0);
  const std::size_t n = data.batch();
  for (std::size_t epoch = st.epochs_done; epoch < cfg.epochs; ++epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng::Stream shuffle(rng::derive({cfg.seed, 0x7368756666ULL, epoch}));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);
    for (std::size_t start = 0, b = 0; start < n; start += cfg.batch_size, ++b) {
      const std::size_t len = std::min(cfg.batch_size, n - start);
      const auto idx = std::span<const std::size_t>(order).subspan(start, len);
      rng::Stream draws(rng::derive({cfg.seed, 0x64726177ULL, epoch, b}));
      auto traced = cfm_loss(model, data.select(idx), draws, cfg);
      const double loss = traced.value();
      const auto grads = traced.gradients();
      auto params = model.parameters();
      opt.update(params, grads);
      ++st.step;
      res.curve.push_back({st.step, epoch + 1, loss});
      if (!st.ema_started) {
        st.ema = st.ema_min = loss;
        st.ema_started = true;
      } else {
        st.ema = alpha * loss + (1.0 - alpha) * st.ema;
        st.ema_min = std::min(st.ema_min, st.ema);
      }
      if (!std::isfinite(loss) || st.ema > cfg.diverge_factor * st.ema_min)
        fail(ErrorCode::DivergingLoss, "loss EMA " + std::to_string(st.ema) + " exceeds " +
                                           std::to_string(cfg.diverge_factor) + "x its minimum " +
                                           std::to_string(st.ema_min) + " at step " + std::to_string(st.step));
    }
    st.epochs_done = epoch + 1;
    st.adam_step = opt.step();
    st.adam_m = opt.first_moments();
    st.adam_v = opt.second_moments();
    if (on_epoch) on_epoch(model, st, epoch + 1);
  }
  st.adam_step = opt.step();
  st.adam_m = opt.first_moments();
  st.adam_v = opt.second_moments();
  return res;
}

}  // namespace causalflow
