// Copyright (c) 2026 The causalflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "causalflow/dag.hpp"
#include "causalflow/errors.hpp"
#include "causalflow/rng.hpp"
#include "causalflow/series.hpp"

namespace causalflow {

enum class Family { Tree, Diamond, FcLayer, Chain };
enum class Mechanism { Additive, Nlna };

constexpr std::string_view to_string(Family f) noexcept {
  switch (f) {
    case Family::Tree: return "tree";
    case Family::Diamond: return "diamond";
    case Family::FcLayer: return "fc_layer";
    case Family::Chain: return "chain";
  }
  return "?";
}

constexpr std::string_view to_string(Mechanism m) noexcept {
  return m == Mechanism::Additive ? "additive" : "nlna";
}

inline Family parse_family(std::string_view s) {
  if (s == "tree") return Family::Tree;
  if (s == "diamond") return Family::Diamond;
  if (s == "fc_layer") return Family::FcLayer;
  if (s == "chain") return Family::Chain;
  fail(ErrorCode::InvalidConfig, "unknown family '" + std::string(s) + "'");
}

inline Mechanism parse_mechanism(std::string_view s) {
  if (s == "additive") return Mechanism::Additive;
  if (s == "nlna") return Mechanism::Nlna;
  fail(ErrorCode::InvalidConfig, "unknown mechanism '" + std::string(s) + "'");
}

inline CausalDag canonical_dag(Family f) {
  switch (f) {
    case Family::Tree: return tree_dag();
    case Family::Diamond: return diamond_dag();
    case Family::FcLayer: return fc_layer_dag();
    case Family::Chain: return chain_dag();
  }
  return tree_dag();
}

/// Sinusoidal AR driver of a root node:
/// x_t = beta x_{t-1} + amplitude sin(2 pi t / period + phase) + u_t.
struct RootProcess {
  double amplitude = 2.0;
  double period = 20.0;
  double phase = 0.0;
};

struct ScmSpec {
  CausalDag dag;
  Family family = Family::Tree;
  Mechanism mechanism = Mechanism::Additive;
  std::vector<double> self_coeffs;                  // beta_i, one per node
  std::vector<std::vector<double>> parent_coeffs;   // aligned with dag.parents_of(i)
  std::vector<RootProcess> root_params;             // one per node, read for roots only
  double overflow_guard = 1e6;

  [[nodiscard]] std::size_t nodes() const noexcept { return dag.node_count(); }

  /// Scale of the exogenous term for additive non-root nodes.
  [[nodiscard]] double additive_noise_scale() const noexcept {
    return family == Family::Tree ? 0.25 : 1.0;
  }

  void validate() const {
    const auto k = dag.node_count();
    require(self_coeffs.size() == k && parent_coeffs.size() == k && root_params.size() == k,
            ErrorCode::InvalidConfig, "coefficient arrays must have one entry per node");
    for (std::size_t i = 0; i < k; ++i) {
      require(parent_coeffs[i].size() == dag.parents_of(i).size(), ErrorCode::InvalidConfig,
              "parent coefficients of node " + std::to_string(i) + " do not match its parents");
      require(std::isfinite(self_coeffs[i]), ErrorCode::InvalidConfig, "non-finite coefficient");
      for (double c : parent_coeffs[i])
        require(std::isfinite(c), ErrorCode::InvalidConfig, "non-finite coefficient");
    }
  }
};

/// Coefficient sets the trial coefficients are drawn from.
inline constexpr std::array<double, 3> kSelfCoeffSet{0.3, 0.5, 0.7};
inline constexpr std::array<double, 4> kParentCoeffSet{-0.4, -0.2, 0.2, 0.4};

/// Exogenous noise laid out [batch][node][time], time relative to the window.
struct NoiseField {
  std::size_t batch = 0, nodes = 0, len = 0;
  std::vector<double> u;

  NoiseField() = default;
  NoiseField(std::size_t b, std::size_t k, std::size_t n) : batch(b), nodes(k), len(n), u(b * k * n, 0.0) {}
  double& at(std::size_t b, std::size_t k, std::size_t t) { return u[(b * nodes + k) * len + t]; }
  double at(std::size_t b, std::size_t k, std::size_t t) const { return u[(b * nodes + k) * len + t]; }
};

/// U_{i,t} of item b at absolute time step `abs_t`, a pure function of the seed.
inline double exogenous_noise(std::uint64_t seed, std::size_t b, std::size_t node, std::int64_t abs_t) {
  return rng::normal_at({seed, static_cast<std::uint64_t>(b), static_cast<std::uint64_t>(node),
                         static_cast<std::uint64_t>(abs_t)});
}

namespace detail {

inline double parent_sum(const ScmSpec& spec, std::size_t node, const std::function<double(std::size_t)>& prev) {
  double s = 0.0;
  const auto& pa = spec.dag.parents_of(node);
  for (std::size_t j = 0; j < pa.size(); ++j) s += spec.parent_coeffs[node][j] * prev(pa[j]);
  return s;
}

inline double root_drive(const RootProcess& r, std::int64_t abs_t) {
  return r.amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(abs_t) / r.period + r.phase);
}

}  // namespace detail

/// One structural assignment X_{i,t} = f_i(own past, parents' past, U_{i,t}).
/// `prev(j)` returns X_{j,t-1}.
inline double structural_value(const ScmSpec& spec, std::size_t node, std::int64_t abs_t,
                               const std::function<double(std::size_t)>& prev, double u) {
  const double beta = spec.self_coeffs[node];
  const double own = prev(node);
  if (spec.dag.is_root(node))
    return beta * own + detail::root_drive(spec.root_params[node], abs_t) + u;
  const double pa = detail::parent_sum(spec, node, prev);
  if (spec.mechanism == Mechanism::Additive) return beta * own + pa + u * spec.additive_noise_scale();
  switch (spec.family) {
    case Family::Tree: return beta * own * (std::abs(u) + 0.5) + pa;
    case Family::Diamond: return std::exp(beta * own) / (2.0 + std::abs(u)) + pa;
    case Family::FcLayer:
    case Family::Chain: return std::sqrt(0.5 * std::abs(pa) + std::abs(u)) + beta * own;
  }
  return 0.0;
}

/// Deterministic part f*_i of an additive assignment (the value at U = 0).
inline double additive_mean(const ScmSpec& spec, std::size_t node, std::int64_t abs_t,
                            const std::function<double(std::size_t)>& prev) {
  return structural_value(spec, node, abs_t, prev, 0.0);
}

/// Scale multiplying U in an additive assignment of `node`.
inline double additive_scale(const ScmSpec& spec, std::size_t node) {
  return spec.dag.is_root(node) ? 1.0 : spec.additive_noise_scale();
}

/// Recovers U_{i,t} from an observed value. Non-additive forms only identify
/// |U|; the non-negative root is returned.
inline double abduct_noise(const ScmSpec& spec, std::size_t node, std::int64_t abs_t,
                           const std::function<double(std::size_t)>& prev, double x) {
  if (spec.dag.is_root(node) || spec.mechanism == Mechanism::Additive)
    return (x - additive_mean(spec, node, abs_t, prev)) / additive_scale(spec, node);
  const double beta = spec.self_coeffs[node];
  const double own = prev(node);
  const double pa = detail::parent_sum(spec, node, prev);
  double mag = 0.0;
  switch (spec.family) {
    case Family::Tree: {
      const double factor = beta * own;
      require(factor != 0.0, ErrorCode::AbductionUnsolvable,
              "zero multiplicative factor at node " + std::to_string(node));
      mag = (x - pa) / factor - 0.5;
      break;
    }
    case Family::Diamond: {
      const double denom = x - pa;
      require(denom != 0.0, ErrorCode::AbductionUnsolvable,
              "zero denominator at node " + std::to_string(node));
      mag = std::exp(beta * own) / denom - 2.0;
      break;
    }
    case Family::FcLayer:
    case Family::Chain: {
      const double root = x - beta * own;
      require(root >= 0.0, ErrorCode::AbductionUnsolvable,
              "negative square-root branch at node " + std::to_string(node));
      mag = root * root - 0.5 * std::abs(pa);
      break;
    }
  }
  constexpr double kSlack = 1e-9;
  require(std::isfinite(mag) && mag >= -kSlack, ErrorCode::AbductionUnsolvable,
          "no non-negative |U| reproduces the observation at node " + std::to_string(node));
  return std::max(mag, 0.0);
}

namespace detail {

inline void guard(const ScmSpec& spec, double x, std::size_t node, std::int64_t t) {
  if (!std::isfinite(x) || std::abs(x) > spec.overflow_guard)
    fail(ErrorCode::NumericOverflow,
         "node " + std::to_string(node) + " at step " + std::to_string(t) + " left the guard band");
}

}  // namespace detail

/// Simulates `batch` independent series from zero initial state with the
/// given noise field (time origin 0).
inline SeriesBatch simulate_with_noise(const ScmSpec& spec, const NoiseField& noise,
                                       std::size_t context_len = 0) {
  spec.validate();
  const auto k = spec.nodes();
  require(noise.nodes == k, ErrorCode::ShapeMismatch, "noise field node count");
  require(noise.len >= 2, ErrorCode::InvalidConfig, "total length must be at least 2");
  SeriesBatch out(noise.batch, k, noise.len, context_len);
  const auto& order = spec.dag.topo_order();
  for (std::size_t b = 0; b < noise.batch; ++b) {
    for (std::size_t t = 0; t < noise.len; ++t) {
      auto prev = [&](std::size_t j) { return t == 0 ? 0.0 : out.at(b, j, t - 1); };
      for (auto i : order) {
        const double x = structural_value(spec, i, static_cast<std::int64_t>(t), prev, noise.at(b, i, t));
        detail::guard(spec, x, i, static_cast<std::int64_t>(t));
        out.at(b, i, t) = x;
      }
    }
  }
  if (context_len > 0) out.refresh_stats();
  return out;
}

inline NoiseField draw_noise(std::size_t batch, std::size_t nodes, std::size_t len, std::uint64_t seed,
                             std::int64_t origin = 0) {
  NoiseField f(batch, nodes, len);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t i = 0; i < nodes; ++i)
      for (std::size_t t = 0; t < len; ++t)
        f.at(b, i, t) = exogenous_noise(seed, b, i, origin + static_cast<std::int64_t>(t));
  return f;
}

/// Observational simulation: fresh standard-normal noise keyed by
/// (seed, item, node, step).
inline SeriesBatch simulate(const ScmSpec& spec, std::size_t batch, std::size_t total_len, std::uint64_t seed,
                            std::size_t context_len = 0) {
  require(total_len >= 2, ErrorCode::InvalidConfig, "total length must be at least 2");
  return simulate_with_noise(spec, draw_noise(batch, spec.nodes(), total_len, seed), context_len);
}

/// Recovers the exogenous noise of every (item, node, step) of `series`
/// given zero initial state (the inverse of simulate_with_noise).
inline NoiseField abduct_all(const ScmSpec& spec, const SeriesBatch& series) {
  NoiseField f(series.batch(), series.nodes(), series.total_len());
  for (std::size_t b = 0; b < series.batch(); ++b)
    for (std::size_t t = 0; t < series.total_len(); ++t) {
      auto prev = [&](std::size_t j) { return t == 0 ? 0.0 : series.at(b, j, t - 1); };
      const auto abs_t = series.origin(b) + static_cast<std::int64_t>(t);
      for (std::size_t i = 0; i < series.nodes(); ++i)
        f.at(b, i, t) = abduct_noise(spec, i, abs_t, prev, series.at(b, i, t));
    }
  return f;
}

namespace detail {

inline void check_window(const SeriesBatch& context, const InterventionSchedule& s, std::size_t nodes) {
  require(s.context_len() == context.context_len(), ErrorCode::ScheduleOutOfWindow,
          "schedule context length differs from the data window");
  s.check_nodes(nodes);
}

using ScheduleFor = std::function<const InterventionSchedule&(std::size_t)>;

}  // namespace detail

/// Interventional ground truth: context copied, forecast steps driven by
/// fresh noise keyed by (noise_seed, item, node, absolute step), scheduled
/// entries clamped.
inline SeriesBatch simulate_interventional(const ScmSpec& spec, const SeriesBatch& context,
                                           const detail::ScheduleFor& schedule_for, std::size_t total_len,
                                           std::uint64_t noise_seed) {
  const auto k = spec.nodes();
  const auto tau = context.context_len();
  require(context.nodes() == k, ErrorCode::ShapeMismatch, "context node count");
  SeriesBatch out(context.batch(), k, total_len, tau);
  for (std::size_t b = 0; b < context.batch(); ++b) {
    const auto& sched = schedule_for(b);
    detail::check_window(context, sched, k);
    require(sched.total_len() == total_len, ErrorCode::ScheduleOutOfWindow, "schedule window length");
    out.set_origin(b, context.origin(b));
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t t = 0; t < tau; ++t) out.at(b, i, t) = context.at(b, i, t);
    for (std::size_t t = tau; t < total_len; ++t) {
      const auto abs_t = context.origin(b) + static_cast<std::int64_t>(t);
      auto prev = [&](std::size_t j) { return out.at(b, j, t - 1); };
      for (auto i : spec.dag.topo_order()) {
        if (auto g = sched.lookup(i, t)) {
          out.at(b, i, t) = *g;
          continue;
        }
        const double x = structural_value(spec, i, abs_t, prev, exogenous_noise(noise_seed, b, i, abs_t));
        detail::guard(spec, x, i, abs_t);
        out.at(b, i, t) = x;
      }
    }
  }
  out.refresh_stats();
  return out;
}

inline SeriesBatch simulate_interventional(const ScmSpec& spec, const SeriesBatch& context,
                                           const InterventionSchedule& schedule, std::uint64_t noise_seed) {
  return simulate_interventional(
      spec, context, [&](std::size_t) -> const InterventionSchedule& { return schedule; },
      schedule.total_len(), noise_seed);
}

inline SeriesBatch simulate_interventional(const ScmSpec& spec, const SeriesBatch& context,
                                           std::span<const InterventionSchedule> schedules,
                                           std::uint64_t noise_seed) {
  require(schedules.size() == context.batch(), ErrorCode::ShapeMismatch, "one schedule per item");
  require(!schedules.empty(), ErrorCode::ShapeMismatch, "empty batch");
  return simulate_interventional(
      spec, context, [&](std::size_t b) -> const InterventionSchedule& { return schedules[b]; },
      schedules[0].total_len(), noise_seed);
}

/// Counterfactual ground truth: noises abducted from `factual` over the
/// forecast window, the schedule applied, and the system re-propagated with
/// the recovered noises. Context steps are taken from `context`.
inline SeriesBatch simulate_counterfactual(const ScmSpec& spec, const SeriesBatch& context,
                                           const SeriesBatch& factual,
                                           const detail::ScheduleFor& schedule_for) {
  const auto k = spec.nodes();
  const auto tau = context.context_len();
  const auto total = factual.total_len();
  require(factual.batch() == context.batch() && factual.nodes() == k && context.nodes() == k,
          ErrorCode::FactualLengthMismatch, "factual and context shapes differ");
  require(factual.context_len() == tau, ErrorCode::FactualLengthMismatch, "factual context length");
  SeriesBatch out(context.batch(), k, total, tau);
  for (std::size_t b = 0; b < context.batch(); ++b) {
    const auto& sched = schedule_for(b);
    detail::check_window(context, sched, k);
    require(sched.total_len() == total, ErrorCode::FactualLengthMismatch, "factual covers the schedule window");
    out.set_origin(b, context.origin(b));
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t t = 0; t < tau; ++t) out.at(b, i, t) = context.at(b, i, t);
    for (std::size_t t = tau; t < total; ++t) {
      const auto abs_t = context.origin(b) + static_cast<std::int64_t>(t);
      auto factual_prev = [&](std::size_t j) {
        return t == tau ? context.at(b, j, t - 1) : factual.at(b, j, t - 1);
      };
      auto cf_prev = [&](std::size_t j) { return out.at(b, j, t - 1); };
      for (auto i : spec.dag.topo_order()) {
        if (auto g = sched.lookup(i, t)) {
          out.at(b, i, t) = *g;
          continue;
        }
        const double u = abduct_noise(spec, i, abs_t, factual_prev, factual.at(b, i, t));
        const double x = structural_value(spec, i, abs_t, cf_prev, u);
        detail::guard(spec, x, i, abs_t);
        out.at(b, i, t) = x;
      }
    }
  }
  out.refresh_stats();
  return out;
}

inline SeriesBatch simulate_counterfactual(const ScmSpec& spec, const SeriesBatch& context,
                                           const SeriesBatch& factual, const InterventionSchedule& schedule) {
  return simulate_counterfactual(spec, context, factual,
                                 [&](std::size_t) -> const InterventionSchedule& { return schedule; });
}

inline SeriesBatch simulate_counterfactual(const ScmSpec& spec, const SeriesBatch& context,
                                           const SeriesBatch& factual,
                                           std::span<const InterventionSchedule> schedules) {
  require(schedules.size() == context.batch(), ErrorCode::ShapeMismatch, "one schedule per item");
  return simulate_counterfactual(
      spec, context, factual, [&](std::size_t b) -> const InterventionSchedule& { return schedules[b]; });
}

/// Clamps each listed root over the forecast window to its own values from
/// `source_offset` steps earlier. One schedule per batch item.
inline std::vector<InterventionSchedule> build_intervention_by_shift(const SeriesBatch& context,
                                                                     std::span<const std::size_t> roots,
                                                                     std::size_t source_offset,
                                                                     std::size_t total_len) {
  const auto tau = context.context_len();
  require(tau < total_len, ErrorCode::ScheduleOutOfWindow, "empty forecast window");
  const auto horizon = total_len - tau;
  require(source_offset >= horizon, ErrorCode::OffsetTooSmall,
          "offset " + std::to_string(source_offset) + " is shorter than the horizon " + std::to_string(horizon));
  require(source_offset <= tau, ErrorCode::IndexOutOfRange, "offset reaches before the context window");
  std::vector<InterventionSchedule> out;
  out.reserve(context.batch());
  for (std::size_t b = 0; b < context.batch(); ++b) {
    InterventionSchedule s(tau, total_len);
    for (auto r : roots) {
      require(r < context.nodes(), ErrorCode::IndexOutOfRange, "root index");
      for (std::size_t t = tau; t < total_len; ++t) s.set(r, t, context.at(b, r, t - source_offset));
    }
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<InterventionSchedule> build_intervention_by_shift(const SeriesBatch& context,
                                                                     std::span<const std::size_t> roots,
                                                                     std::size_t source_offset) {
  return build_intervention_by_shift(context, roots, source_offset, context.total_len());
}

/// Draws a coefficient set for `family`/`mechanism` from the configured sets,
/// redrawing until a probe simulation of `probe_len` steps stays inside the
/// overflow guard.
inline ScmSpec make_scm(CausalDag dag, Family family, Mechanism mechanism, std::uint64_t seed, RootProcess root = {},
                        bool random_phase = true, std::size_t probe_len = 2000) {
  ScmSpec spec;
  spec.dag = std::move(dag);
  spec.family = family;
  spec.mechanism = mechanism;
  constexpr int kMaxDraws = 200;
  for (int attempt = 0; attempt < kMaxDraws; ++attempt) {
    rng::Stream s(rng::derive({seed, static_cast<std::uint64_t>(attempt), 0x5c3ULL}));
    const auto k = spec.dag.node_count();
    spec.self_coeffs.assign(k, 0.0);
    spec.parent_coeffs.assign(k, {});
    spec.root_params.assign(k, root);
    for (std::size_t i = 0; i < k; ++i) {
      spec.self_coeffs[i] = kSelfCoeffSet[s.below(kSelfCoeffSet.size())];
      for (std::size_t j = 0; j < spec.dag.parents_of(i).size(); ++j)
        spec.parent_coeffs[i].push_back(kParentCoeffSet[s.below(kParentCoeffSet.size())]);
      if (random_phase) spec.root_params[i].phase = s.uniform(0.0, 2.0 * std::numbers::pi);
    }
    try {
      (void)simulate(spec, 1, probe_len, rng::derive({seed, 0x9b0eULL}));
      return spec;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NumericOverflow) throw;
    }
  }
  fail(ErrorCode::NumericOverflow, "no stable coefficient draw found for " + std::string(to_string(family)));
}

/// Same draw on the canonical graph of `family`.
inline ScmSpec make_scm(Family family, Mechanism mechanism, std::uint64_t seed, RootProcess root = {},
                        bool random_phase = true, std::size_t probe_len = 2000) {
  return make_scm(canonical_dag(family), family, mechanism, seed, root, random_phase, probe_len);
}

}  // namespace causalflow
