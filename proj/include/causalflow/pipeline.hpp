// Copyright (c) 2026 The causalflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment building blocks shared by the command-line tool and the
// acceptance run: data synthesis and split, evaluation batches, oracle
// realizations, per-regime metrics, latent independence statistics, and
// level-shift anomaly injection.

#pragma once

#include <numeric>
#include <string_view>

#include "causalflow/config.hpp"
#include "causalflow/forecaster.hpp"
#include "causalflow/metrics.hpp"
#include "causalflow/scm.hpp"

namespace causalflow {

struct SynthData {
  ScmSpec spec;
  SeriesBatch series;  // after burn-in; origin = burn_in
  SeriesBatch train;
  SeriesBatch test;
};

/// Copies steps [from, from + len) of item 0.
inline SeriesBatch segment(const SeriesBatch& s, std::size_t from, std::size_t len) {
  require(from + len <= s.total_len(), ErrorCode::IndexOutOfRange, "segment exceeds the series");
  SeriesBatch out(1, s.nodes(), len, 0);
  for (std::size_t k = 0; k < s.nodes(); ++k)
    for (std::size_t t = 0; t < len; ++t) out.at(0, k, t) = s.at(0, k, from + t);
  out.set_origin(0, s.origin(0) + static_cast<std::int64_t>(from));
  return out;
}

/// Simulates burn_in + length steps, drops the burn-in, and cuts the rest
/// into a train and a test segment that do not overlap. The cut puts
/// train_fraction of the stride-1 windows (of length window.total) in train.
inline SynthData synthesize(const ExperimentConfig& cfg) {
  cfg.validate();
  SynthData d;
  d.spec = cfg.make_spec();
  const auto T = cfg.window.total, L = cfg.scm.length;
  require(L >= 2 * T, ErrorCode::InvalidConfig, "series length must hold one train and one test window");
  const auto full = simulate(d.spec, 1, cfg.scm.burn_in + L, rng::derive({cfg.scm_seed(), 0x73796e74ULL}));
  d.series = segment(full, cfg.scm.burn_in, L);
  const std::size_t windows = L - 2 * T + 2;
  auto n_train = static_cast<std::size_t>(std::llround(cfg.scm.train_fraction * static_cast<double>(windows)));
  n_train = std::clamp<std::size_t>(n_train, 1, windows - 1);
  const std::size_t train_len = n_train + T - 1;
  d.train = segment(d.series, 0, train_len);
  d.test = segment(d.series, train_len, L - train_len);
  return d;
}

/// Every stride-1 window of a single series.
inline SeriesBatch all_windows(const SeriesBatch& series, const ExperimentConfig& cfg) {
  const auto n = window_count(series.total_len(), cfg.window.total);
  require(n >= 1, ErrorCode::InvalidConfig, "series is shorter than one window");
  return make_windows(series, 0, n, cfg.window.context, cfg.window.total);
}

/// `count` distinct windows of `series` for evaluation run `run`.
inline SeriesBatch eval_windows(const SeriesBatch& series, const ExperimentConfig& cfg, std::size_t run,
                                std::size_t count) {
  const auto all = all_windows(series, cfg);
  require(count <= all.batch(), ErrorCode::InvalidConfig,
          "asked for " + std::to_string(count) + " windows, the series holds " + std::to_string(all.batch()));
  std::vector<std::size_t> idx(all.batch());
  std::iota(idx.begin(), idx.end(), 0);
  rng::Stream s(rng::derive({cfg.eval_seed(), 0x6576616cULL, run}));
  for (std::size_t i = 0; i < count; ++i) std::swap(idx[i], idx[i + s.below(idx.size() - i)]);
  idx.resize(count);
  return all.select(idx);
}

enum class Regime { Observational, Interventional, Counterfactual };

constexpr std::string_view to_string(Regime r) noexcept {
  switch (r) {
    case Regime::Observational: return "obs";
    case Regime::Interventional: return "int";
    case Regime::Counterfactual: return "cf";
  }
  return "obs";
}

inline std::vector<std::size_t> intervened_nodes(const ExperimentConfig& cfg) {
  return cfg.eval.intervene_nodes.empty() ? cfg.graph().roots() : cfg.eval.intervene_nodes;
}

/// Nodes not touched by the evaluation intervention.
inline std::vector<std::size_t> free_nodes(const ExperimentConfig& cfg) {
  const auto hit = intervened_nodes(cfg);
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < cfg.graph().node_count(); ++k)
    if (std::find(hit.begin(), hit.end(), k) == hit.end()) out.push_back(k);
  return out;
}

/// Shift intervention: intervened nodes clamped to their own values
/// shift_offset steps earlier.
inline std::vector<InterventionSchedule> eval_schedules(const SeriesBatch& windows, const ExperimentConfig& cfg,
                                                        Regime regime) {
  if (regime == Regime::Observational)
    return {InterventionSchedule(windows.context_len(), windows.total_len())};
  const auto nodes = intervened_nodes(cfg);
  return build_intervention_by_shift(windows, nodes, cfg.eval.shift_offset);
}

/// N realizations per window from the true SCM under `schedules`, each with
/// its own noise seed.
inline Rollouts oracle_rollouts(const ScmSpec& spec, const SeriesBatch& windows,
                                std::span<const InterventionSchedule> schedules, std::size_t n, std::uint64_t seed) {
  const auto sched = detail::expand_schedules(windows, schedules, spec.nodes());
  Rollouts r{windows.batch(), n, spec.nodes(), windows.horizon(), windows.context_len(), {}, {}, sched};
  r.values.assign(r.windows * n * r.nodes * r.horizon, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    const auto sim = simulate_interventional(spec, windows, sched, rng::derive({seed, 0x6f72636cULL, s}));
    for (std::size_t w = 0; w < r.windows; ++w)
      for (std::size_t k = 0; k < r.nodes; ++k)
        for (std::size_t h = 0; h < r.horizon; ++h) r.values[r.index(w, s, k, h)] = sim.at(w, k, r.context_len + h);
  }
  return r;
}

/// Ground truth the forecasts of a regime are scored against: the observed
/// windows, one interventional realization, or the abducted counterfactual.
inline SeriesBatch regime_truth(Regime regime, const ScmSpec& spec, const SeriesBatch& windows,
                                std::span<const InterventionSchedule> schedules, std::uint64_t seed) {
  const auto sched = detail::expand_schedules(windows, schedules, spec.nodes());
  switch (regime) {
    case Regime::Observational: return windows;
    case Regime::Interventional:
      return simulate_interventional(spec, windows, sched, rng::derive({seed, 0x7472757468ULL}));
    case Regime::Counterfactual: return simulate_counterfactual(spec, windows, windows, sched);
  }
  return windows;
}

/// The regime's model output on `windows`: N rollouts, or one counterfactual
/// packed as a single-sample rollout.
template <ForecastModel M>
Rollouts regime_predictions(const M& model, Regime regime, const SeriesBatch& windows,
                            std::span<const InterventionSchedule> schedules, std::size_t n, std::uint64_t seed) {
  if (regime != Regime::Counterfactual) return forecast(model, windows, schedules, n, seed);
  const auto cf = counterfactual(model, windows, windows, schedules);
  Rollouts r{cf.windows, 1, cf.nodes, cf.horizon, cf.context_len, cf.values, cf.latents,
             detail::expand_schedules(windows, schedules, cf.nodes)};
  return r;
}

struct RegimeScore {
  double rmse = 0.0;  // node mean, then realization mean
  double mmd = std::numeric_limits<double>::quiet_NaN();
};

inline RegimeScore score_regime(const Rollouts& pred, const SeriesBatch& truth, const Rollouts* oracle,
                                std::span<const std::size_t> rmse_nodes, const MmdConfig& mmd) {
  RegimeScore s;
  const auto per = realization_rmse(pred, truth, rmse_nodes);
  s.rmse = std::accumulate(per.begin(), per.end(), 0.0) / static_cast<double>(per.size());
  if (oracle) s.mmd = trajectory_mmd(flatten_trajectories(pred), flatten_trajectories(*oracle), mmd);
  return s;
}

/// Latents z_{k,t} of observed values and the conditioning H_{k,t-1} they
/// were encoded under, over the forecast steps of `windows`.
struct LatentStatePairs {
  std::vector<double> z;
  Tensor2 h;
};

template <class M>
std::vector<LatentStatePairs> collect_latent_pairs(const M& model, const SeriesBatch& windows) {
  const auto& dag = model.dag();
  const std::size_t K = dag.node_count(), W = windows.batch(), H = windows.horizon(), tau = windows.context_len();
  std::vector<LatentStatePairs> out(K);
  auto state = model.init(windows);
  Tensor2 step(static_cast<Eigen::Index>(W), static_cast<Eigen::Index>(K));
  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t k = 0; k < K; ++k) {
      Eigen::ArrayXd x(static_cast<Eigen::Index>(W));
      for (std::size_t w = 0; w < W; ++w) x(static_cast<Eigen::Index>(w)) = windows.at(w, k, tau + h);
      const Eigen::ArrayXd z = model.encode(state, k, x);
      const Tensor2 cond = state.bank.conditioning(dag, k);
      auto& p = out[k];
      if (p.h.size() == 0) p.h.resize(0, cond.cols());
      const auto rows = p.h.rows();
      p.h.conservativeResize(rows + cond.rows(), cond.cols());
      p.h.bottomRows(cond.rows()) = cond;
      p.z.insert(p.z.end(), z.data(), z.data() + z.size());
      step.col(static_cast<Eigen::Index>(k)) = x.matrix();
    }
    if (h + 1 < H) state = model.advance(state, step);
  }
  return out;
}

/// Adds `size` context standard deviations to one node from step t_star to
/// the end of the window.
inline void inject_level_shift(SeriesBatch& b, std::size_t w, std::size_t node, std::size_t t_star, double size) {
  const double sd = b.stats(w, node).scale();
  for (std::size_t t = t_star; t < b.total_len(); ++t) b.at(w, node, t) += size * sd;
}

}  // namespace causalflow
