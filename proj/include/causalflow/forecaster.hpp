// Copyright (c) 2026 The causalflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Autoregressive observational / interventional rollout, counterfactual
// generation by encoding under factual states and decoding under
// counterfactual ones, and trajectory log-density scoring.

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "causalflow/dag.hpp"
#include "causalflow/flow.hpp"
#include "causalflow/rng.hpp"
#include "causalflow/series.hpp"

namespace causalflow {

/// What the rollout algorithms need from a model. Values cross this
/// interface in original units; each lane is one trajectory.
template <class M>
concept ForecastModel = requires(const M& m, const typename M::State& s, const SeriesBatch& b, std::size_t k,
                                 const Eigen::ArrayXd& a, const Tensor2& v) {
  { m.dag() } -> std::convertible_to<const CausalDag&>;
  { m.init(b) } -> std::same_as<typename M::State>;
  { m.encode(s, k, a) } -> std::convertible_to<Eigen::ArrayXd>;
  { m.decode(s, k, a) } -> std::convertible_to<Eigen::ArrayXd>;
  { m.advance(s, v) } -> std::same_as<typename M::State>;
};

template <class M>
concept ScoringModel = ForecastModel<M> && requires(const M& m, const typename M::State& s, std::size_t k,
                                                    const Eigen::ArrayXd& a) {
  { m.log_density(s, k, a) } -> std::same_as<Density>;
};

/// Values over the forecast window for windows x samples lanes, laid out
/// [window][sample][node][step]. Latents are NaN where a value was clamped.
struct Rollouts {
  std::size_t windows = 0, samples = 0, nodes = 0, horizon = 0, context_len = 0;
  std::vector<double> values;
  std::vector<double> latents;
  std::vector<InterventionSchedule> schedules;  // one per window

  [[nodiscard]] std::size_t index(std::size_t w, std::size_t n, std::size_t k, std::size_t h) const {
    return ((w * samples + n) * nodes + k) * horizon + h;
  }
  [[nodiscard]] double value(std::size_t w, std::size_t n, std::size_t k, std::size_t h) const {
    return values[index(w, n, k, h)];
  }
  [[nodiscard]] double latent(std::size_t w, std::size_t n, std::size_t k, std::size_t h) const {
    return latents[index(w, n, k, h)];
  }

  /// Lanes as full windows (context copied from `context`), lane = w * samples + n.
  [[nodiscard]] SeriesBatch as_windows(const SeriesBatch& context) const {
    SeriesBatch out(windows * samples, nodes, context_len + horizon, context_len);
    for (std::size_t w = 0; w < windows; ++w)
      for (std::size_t n = 0; n < samples; ++n) {
        const auto lane = w * samples + n;
        out.set_origin(lane, context.origin(w));
        for (std::size_t k = 0; k < nodes; ++k) {
          for (std::size_t t = 0; t < context_len; ++t) out.at(lane, k, t) = context.at(w, k, t);
          for (std::size_t h = 0; h < horizon; ++h) out.at(lane, k, context_len + h) = value(w, n, k, h);
        }
      }
    out.refresh_stats();
    return out;
  }
};

/// Counterfactual values for each window plus the latents abducted from the
/// factual observations (NaN where clamped).
struct CfRollout {
  std::size_t windows = 0, nodes = 0, horizon = 0, context_len = 0;
  std::vector<double> values;   // [window][node][step]
  std::vector<double> latents;  // same layout

  [[nodiscard]] std::size_t index(std::size_t w, std::size_t k, std::size_t h) const {
    return (w * nodes + k) * horizon + h;
  }
  [[nodiscard]] double value(std::size_t w, std::size_t k, std::size_t h) const { return values[index(w, k, h)]; }
  [[nodiscard]] double latent(std::size_t w, std::size_t k, std::size_t h) const { return latents[index(w, k, h)]; }

  [[nodiscard]] SeriesBatch as_windows(const SeriesBatch& context) const {
    SeriesBatch out(windows, nodes, context_len + horizon, context_len);
    for (std::size_t w = 0; w < windows; ++w) {
      out.set_origin(w, context.origin(w));
      for (std::size_t k = 0; k < nodes; ++k) {
        for (std::size_t t = 0; t < context_len; ++t) out.at(w, k, t) = context.at(w, k, t);
        for (std::size_t h = 0; h < horizon; ++h) out.at(w, k, context_len + h) = value(w, k, h);
      }
    }
    out.refresh_stats();
    return out;
  }
};

/// Latent for (window, sample, node, forecast step): a counter-based draw,
/// independent of evaluation order.
using LatentSource = std::function<double(std::size_t w, std::size_t n, std::size_t k, std::size_t h)>;

inline LatentSource seeded_latents(std::uint64_t seed) {
  return [seed](std::size_t w, std::size_t n, std::size_t k, std::size_t h) {
    return rng::normal_at({seed, 0x6c6174ULL, w, n, k, h});
  };
}

/// Replays the latents recorded in `r`.
inline LatentSource recorded_latents(const Rollouts& r) {
  return [&r](std::size_t w, std::size_t n, std::size_t k, std::size_t h) { return r.latent(w, n, k, h); };
}

namespace detail {

inline std::vector<InterventionSchedule> expand_schedules(const SeriesBatch& context,
                                                          std::span<const InterventionSchedule> schedules,
                                                          std::size_t nodes) {
  require(schedules.size() == 1 || schedules.size() == context.batch(), ErrorCode::ShapeMismatch,
          "pass one schedule, or one per window");
  std::vector<InterventionSchedule> out;
  for (std::size_t w = 0; w < context.batch(); ++w) {
    const auto& s = schedules.size() == 1 ? schedules[0] : schedules[w];
    require(s.context_len() == context.context_len() && s.total_len() == context.total_len(),
            ErrorCode::ScheduleOutOfWindow, "schedule window differs from the data window");
    s.check_nodes(nodes);
    out.push_back(s);
  }
  return out;
}

template <class M>
void check_model(const M& model, const SeriesBatch& b) {
  require(model.dag().node_count() == b.nodes(), ErrorCode::ModelDagMismatch,
          "model graph has " + std::to_string(model.dag().node_count()) + " nodes, data has " +
              std::to_string(b.nodes()));
}

}  // namespace detail

/// Observational / interventional rollout. For each forecast step, nodes
/// are visited in topological order; scheduled entries are clamped, the rest
/// decoded from latents. All states advance at the end of the step.
template <ForecastModel M>
Rollouts forecast(const M& model, const SeriesBatch& context, std::span<const InterventionSchedule> schedules,
                  std::size_t n_samples, const LatentSource& latents) {
  detail::check_model(model, context);
  require(n_samples >= 1, ErrorCode::InvalidConfig, "n_samples must be >= 1");
  const auto& dag = model.dag();
  const std::size_t K = dag.node_count(), W = context.batch(), tau = context.context_len(), H = context.horizon();
  Rollouts out{W, n_samples, K, H, tau, {}, {}, detail::expand_schedules(context, schedules, K)};
  out.values.assign(W * n_samples * K * H, 0.0);
  out.latents.assign(out.values.size(), std::numeric_limits<double>::quiet_NaN());

  std::vector<std::size_t> lane_window(W * n_samples);
  for (std::size_t l = 0; l < lane_window.size(); ++l) lane_window[l] = l / n_samples;
  const SeriesBatch lanes = context.select(lane_window);
  const auto R = static_cast<Eigen::Index>(lanes.batch());
  auto state = model.init(lanes);
  Tensor2 step(R, static_cast<Eigen::Index>(K));
  Eigen::ArrayXd z(R);
  for (std::size_t h = 0; h < H; ++h) {
    const std::size_t t = tau + h;
    for (auto k : dag.topo_order()) {
      bool any_free = false;
      for (Eigen::Index l = 0; l < R; ++l) {
        const auto w = lane_window[static_cast<std::size_t>(l)], n = static_cast<std::size_t>(l) % n_samples;
        if (out.schedules[w].lookup(k, t)) {
          z(l) = 0.0;
        } else {
          z(l) = latents(w, n, k, h);
          out.latents[out.index(w, n, k, h)] = z(l);
          any_free = true;
        }
      }
      Eigen::ArrayXd x = any_free ? Eigen::ArrayXd(model.decode(state, k, z)) : Eigen::ArrayXd::Zero(R);
      for (Eigen::Index l = 0; l < R; ++l) {
        const auto w = lane_window[static_cast<std::size_t>(l)], n = static_cast<std::size_t>(l) % n_samples;
        if (auto g = out.schedules[w].lookup(k, t)) x(l) = *g;
        step(l, static_cast<Eigen::Index>(k)) = x(l);
        out.values[out.index(w, n, k, h)] = x(l);
      }
    }
    if (h + 1 < H) state = model.advance(state, step);
  }
  return out;
}

template <ForecastModel M>
Rollouts forecast(const M& model, const SeriesBatch& context, const InterventionSchedule& schedule,
                  std::size_t n_samples, std::uint64_t seed) {
  return forecast(model, context, std::span<const InterventionSchedule>(&schedule, 1), n_samples,
                  seeded_latents(seed));
}

template <ForecastModel M>
Rollouts forecast(const M& model, const SeriesBatch& context, std::span<const InterventionSchedule> schedules,
                  std::size_t n_samples, std::uint64_t seed) {
  return forecast(model, context, schedules, n_samples, seeded_latents(seed));
}

/// Counterfactual generation. Factual states follow the observed factual
/// values, counterfactual states follow the generated ones; both start from
/// the context. Each free entry is encoded under the factual state and
/// decoded under the counterfactual state.
template <ForecastModel M>
CfRollout counterfactual(const M& model, const SeriesBatch& context, const SeriesBatch& factual,
                         std::span<const InterventionSchedule> schedules) {
  detail::check_model(model, context);
  require(factual.batch() == context.batch() && factual.nodes() == context.nodes() &&
              factual.total_len() == context.total_len() && factual.context_len() == context.context_len(),
          ErrorCode::FactualLengthMismatch, "factual series must cover the same windows and horizon as the context");
  const auto& dag = model.dag();
  const std::size_t K = dag.node_count(), W = context.batch(), tau = context.context_len(), H = context.horizon();
  const auto sched = detail::expand_schedules(context, schedules, K);
  CfRollout out{W, K, H, tau, std::vector<double>(W * K * H, 0.0),
                std::vector<double>(W * K * H, std::numeric_limits<double>::quiet_NaN())};
  const auto R = static_cast<Eigen::Index>(W);
  auto fact_state = model.init(context);
  auto cf_state = fact_state;
  Tensor2 fact_step(R, static_cast<Eigen::Index>(K)), cf_step(R, static_cast<Eigen::Index>(K));
  Eigen::ArrayXd xf(R);
  for (std::size_t h = 0; h < H; ++h) {
    const std::size_t t = tau + h;
    for (auto k : dag.topo_order()) {
      bool any_free = false;
      for (Eigen::Index w = 0; w < R; ++w) {
        xf(w) = factual.at(static_cast<std::size_t>(w), k, t);
        fact_step(w, static_cast<Eigen::Index>(k)) = xf(w);
        any_free = any_free || !sched[static_cast<std::size_t>(w)].lookup(k, t);
      }
      Eigen::ArrayXd x = Eigen::ArrayXd::Zero(R), z = Eigen::ArrayXd::Zero(R);
      if (any_free) {
        z = model.encode(fact_state, k, xf);
        x = model.decode(cf_state, k, z);
      }
      for (Eigen::Index w = 0; w < R; ++w) {
        const auto wi = static_cast<std::size_t>(w);
        if (auto g = sched[wi].lookup(k, t)) {
          x(w) = *g;
        } else {
          out.latents[out.index(wi, k, h)] = z(w);
        }
        cf_step(w, static_cast<Eigen::Index>(k)) = x(w);
        out.values[out.index(wi, k, h)] = x(w);
      }
    }
    if (h + 1 < H) {
      fact_state = model.advance(fact_state, fact_step);
      cf_state = model.advance(cf_state, cf_step);
    }
  }
  return out;
}

template <ForecastModel M>
CfRollout counterfactual(const M& model, const SeriesBatch& context, const SeriesBatch& factual,
                         const InterventionSchedule& schedule) {
  return counterfactual(model, context, factual, std::span<const InterventionSchedule>(&schedule, 1));
}

/// Per-entry and total trajectory log-densities of the observed forecast
/// window, with states advanced along the observed values.
struct TrajectoryScores {
  std::size_t windows = 0, nodes = 0, horizon = 0;
  std::vector<double> logp;  // [window][node][step]
  std::vector<double> total;  // per window

  [[nodiscard]] double at(std::size_t w, std::size_t k, std::size_t h) const {
    return logp[(w * nodes + k) * horizon + h];
  }
  [[nodiscard]] double node_total(std::size_t w, std::size_t k) const {
    double s = 0;
    for (std::size_t h = 0; h < horizon; ++h) s += at(w, k, h);
    return s;
  }
};

template <ScoringModel M>
TrajectoryScores score_trajectory(const M& model, const SeriesBatch& windows) {
  detail::check_model(model, windows);
  const auto& dag = model.dag();
  const std::size_t K = dag.node_count(), W = windows.batch(), tau = windows.context_len(), H = windows.horizon();
  TrajectoryScores out{W, K, H, std::vector<double>(W * K * H, 0.0), std::vector<double>(W, 0.0)};
  const auto R = static_cast<Eigen::Index>(W);
  auto state = model.init(windows);
  Tensor2 step(R, static_cast<Eigen::Index>(K));
  Eigen::ArrayXd x(R);
  for (std::size_t h = 0; h < H; ++h) {
    const std::size_t t = tau + h;
    for (std::size_t k = 0; k < K; ++k) {
      for (Eigen::Index w = 0; w < R; ++w) {
        x(w) = windows.at(static_cast<std::size_t>(w), k, t);
        step(w, static_cast<Eigen::Index>(k)) = x(w);
      }
      const auto d = model.log_density(state, k, x);
      for (Eigen::Index w = 0; w < R; ++w) {
        out.logp[(static_cast<std::size_t>(w) * K + k) * H + h] = d.logp(w);
        out.total[static_cast<std::size_t>(w)] += d.logp(w);
      }
    }
    if (h + 1 < H) state = model.advance(state, step);
  }
  return out;
}

/// Linear-interpolation sample quantile (the usual "type 7" rule).
inline double quantile(std::vector<double> xs, double q) {
  require(!xs.empty(), ErrorCode::DegenerateSample, "quantile of an empty sample");
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

/// Empirical central interval at `level` per (window, node, step), plus the median.
struct PredictionBand {
  double level = 0.0;
  std::size_t windows = 0, nodes = 0, horizon = 0;
  std::vector<double> lower, median, upper;  // [window][node][step]
};

inline PredictionBand prediction_band(const Rollouts& r, double level) {
  require(level > 0.0 && level < 1.0, ErrorCode::InvalidConfig, "interval level must lie in (0, 1)");
  PredictionBand b{level, r.windows, r.nodes, r.horizon, {}, {}, {}};
  std::vector<double> xs(r.samples);
  for (std::size_t w = 0; w < r.windows; ++w)
    for (std::size_t k = 0; k < r.nodes; ++k)
      for (std::size_t h = 0; h < r.horizon; ++h) {
        for (std::size_t n = 0; n < r.samples; ++n) xs[n] = r.value(w, n, k, h);
        b.lower.push_back(quantile(xs, 0.5 - level / 2));
        b.median.push_back(quantile(xs, 0.5));
        b.upper.push_back(quantile(xs, 0.5 + level / 2));
      }
  return b;
}

/// Percentile of scores on normal windows; windows scoring below it are flagged.
inline double anomaly_threshold(std::span<const double> normal_scores, double percentile = 0.01) {
  return quantile({normal_scores.begin(), normal_scores.end()}, percentile);
}

}  // namespace causalflow
