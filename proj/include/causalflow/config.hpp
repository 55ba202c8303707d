// Copyright (c) 2026 The causalflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration: one JSON document, validated before any work.
// Unknown keys are errors at every level.

#pragma once

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "causalflow/metrics.hpp"
#include "causalflow/model.hpp"
#include "causalflow/scm.hpp"
#include "causalflow/trainer.hpp"

namespace causalflow {

struct ScmSection {
  Family family = Family::Tree;
  Mechanism mechanism = Mechanism::Additive;
  std::optional<std::uint64_t> seed;
  std::size_t length = 2000;
  std::size_t burn_in = 100;
  double train_fraction = 0.8;
  double amplitude = 2.0;
  double period = 20.0;
  bool random_phase = true;
};

struct WindowSection {
  std::size_t context = 90;
  std::size_t total = 120;
};

struct EvalSection {
  std::size_t runs = 10;
  std::size_t batch = 32;
  std::size_t samples = 20;
  std::optional<std::uint64_t> seed;
  std::size_t shift_offset = 30;     // roots clamped to their values this many steps earlier
  std::vector<std::size_t> intervene_nodes;  // empty: every root
  Bandwidth bandwidth = Bandwidth::PooledMedian;
  double fixed_sigma = 1.0;
  double anomaly_percentile = 0.01;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  ScmSection scm;
  std::optional<CausalDag> dag;  // defaults to the family's canonical graph
  WindowSection window;
  ModelConfig model;
  TrainConfig train;
  bool train_seed_set = false;
  EvalSection eval;

  [[nodiscard]] CausalDag graph() const { return dag ? *dag : canonical_dag(scm.family); }
  [[nodiscard]] std::uint64_t scm_seed() const { return scm.seed.value_or(seed); }
  [[nodiscard]] std::uint64_t eval_seed() const { return eval.seed.value_or(seed); }
  [[nodiscard]] TrainConfig train_config() const {
    auto t = train;
    if (!train_seed_set) t.seed = seed;
    return t;
  }
  [[nodiscard]] ScmSpec make_spec() const {
    RootProcess root;
    root.amplitude = scm.amplitude;
    root.period = scm.period;
    return make_scm(graph(), scm.family, scm.mechanism, scm_seed(), root, scm.random_phase);
  }

  void validate() const {
    require(window.context >= 1 && window.total > window.context, ErrorCode::InvalidConfig,
            "window needs context >= 1 and total > context");
    require(scm.length >= window.total, ErrorCode::InvalidConfig, "series length must hold at least one window");
    require(scm.train_fraction > 0.0 && scm.train_fraction < 1.0, ErrorCode::InvalidConfig,
            "train_fraction must lie in (0, 1)");
    require(scm.period != 0.0, ErrorCode::InvalidConfig, "root period must be nonzero");
    require(model.encoder.hidden_dim >= 1 && model.velocity.width >= 1 && model.velocity.layers >= 2,
            ErrorCode::InvalidConfig, "model needs hidden_dim >= 1, width >= 1, layers >= 2");
    require(model.encoder.covariate_dim == 0, ErrorCode::InvalidConfig, "covariates are not configurable here");
    model.flow.validate();
    train.validate();
    require(eval.runs >= 1 && eval.batch >= 1 && eval.samples >= 1, ErrorCode::InvalidConfig,
            "eval runs, batch and samples must be >= 1");
    require(eval.shift_offset >= window.total - window.context && eval.shift_offset <= window.context,
            ErrorCode::InvalidConfig, "shift_offset must lie in [horizon, context]");
    require(eval.bandwidth != Bandwidth::Fixed || eval.fixed_sigma > 0.0, ErrorCode::InvalidConfig,
            "fixed_sigma must be positive");
    require(eval.anomaly_percentile > 0.0 && eval.anomaly_percentile < 1.0, ErrorCode::InvalidConfig,
            "anomaly_percentile must lie in (0, 1)");
    const auto K = graph().node_count();
    for (auto k : eval.intervene_nodes) require(k < K, ErrorCode::InvalidConfig, "intervene node out of range");
  }
};

namespace detail {

using Json = nlohmann::json;

inline void check_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  require(j.is_object(), ErrorCode::InvalidConfig, where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    require(ok.count(key) > 0, ErrorCode::InvalidConfig, "unknown key '" + key + "' in " + where);
}

template <class T>
void read(const Json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidConfig, where + "." + key + ": " + e.what());
  }
}

inline std::size_t read_count(const Json& j, const char* key, std::size_t fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  require(v.is_number_integer() && v.get<long long>() >= 0, ErrorCode::InvalidConfig,
          where + "." + key + " must be a non-negative integer");
  return v.get<std::size_t>();
}

inline std::string read_enum(const Json& j, const char* key, const std::string& fallback, const std::string& where) {
  std::string s = fallback;
  read(j, key, s, where);
  return s;
}

inline Integrator parse_integrator(const std::string& s) {
  if (s == "rk4") return Integrator::RK4;
  if (s == "euler") return Integrator::Euler;
  fail(ErrorCode::InvalidConfig, "unknown integrator '" + s + "'");
}

inline DivergenceMode parse_divergence(const std::string& s) {
  if (s == "exact") return DivergenceMode::ExactAutodiff;
  if (s == "central_difference") return DivergenceMode::CentralDifference;
  fail(ErrorCode::InvalidConfig, "unknown divergence mode '" + s + "'");
}

inline Bandwidth parse_bandwidth(const std::string& s) {
  if (s == "pooled_median") return Bandwidth::PooledMedian;
  if (s == "half_pooled_median") return Bandwidth::HalfPooledMedian;
  if (s == "fixed") return Bandwidth::Fixed;
  fail(ErrorCode::InvalidConfig, "unknown bandwidth rule '" + s + "'");
}

inline std::string to_string(Integrator i) { return i == Integrator::RK4 ? "rk4" : "euler"; }
inline std::string to_string(DivergenceMode d) {
  return d == DivergenceMode::ExactAutodiff ? "exact" : "central_difference";
}
inline std::string to_string(Bandwidth b) {
  switch (b) {
    case Bandwidth::PooledMedian: return "pooled_median";
    case Bandwidth::HalfPooledMedian: return "half_pooled_median";
    case Bandwidth::Fixed: return "fixed";
  }
  return "pooled_median";
}

}  // namespace detail

/// Graph as {"nodes": K, "edges": [[p, c], ...]}.
inline CausalDag dag_from_json(const nlohmann::json& j) {
  detail::check_keys(j, "dag", {"nodes", "edges"});
  require(j.contains("nodes"), ErrorCode::InvalidConfig, "dag.nodes is required");
  const auto K = detail::read_count(j, "nodes", 0, "dag");
  std::vector<Edge> edges;
  if (j.contains("edges")) {
    require(j["edges"].is_array(), ErrorCode::InvalidConfig, "dag.edges must be an array");
    for (const auto& e : j["edges"]) {
      require(e.is_array() && e.size() == 2 && e[0].is_number_unsigned() && e[1].is_number_unsigned(),
              ErrorCode::InvalidConfig, "each edge must be a [parent, child] pair of node indices");
      edges.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>()});
    }
  }
  return build_dag(K, edges);
}

inline nlohmann::json dag_to_json(const CausalDag& dag) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : dag.edges()) edges.push_back({e.first, e.second});
  return {{"nodes", dag.node_count()}, {"edges", edges}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& model, const nlohmann::json& flow) {
  using detail::read_count;
  ModelConfig m;
  detail::check_keys(model, "model", {"hidden_dim", "width", "layers", "per_node_rnn"});
  m.encoder.hidden_dim = read_count(model, "hidden_dim", m.encoder.hidden_dim, "model");
  m.velocity.width = read_count(model, "width", m.velocity.width, "model");
  m.velocity.layers = read_count(model, "layers", m.velocity.layers, "model");
  detail::read(model, "per_node_rnn", m.encoder.per_node_rnn, "model");
  detail::check_keys(flow, "flow", {"integrator", "steps", "divergence", "fd_step"});
  m.flow.integrator = detail::parse_integrator(detail::read_enum(flow, "integrator", "rk4", "flow"));
  m.flow.steps = read_count(flow, "steps", m.flow.steps, "flow");
  m.flow.divergence = detail::parse_divergence(detail::read_enum(flow, "divergence", "exact", "flow"));
  detail::read(flow, "fd_step", m.flow.fd_step, "flow");
  return m;
}

inline nlohmann::json model_config_to_json(const ModelConfig& m) {
  return {{"model",
           {{"hidden_dim", m.encoder.hidden_dim},
            {"width", m.velocity.width},
            {"layers", m.velocity.layers},
            {"per_node_rnn", m.encoder.per_node_rnn}}},
          {"flow",
           {{"integrator", detail::to_string(m.flow.integrator)},
            {"steps", m.flow.steps},
            {"divergence", detail::to_string(m.flow.divergence)},
            {"fd_step", m.flow.fd_step}}}};
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  using detail::read;
  using detail::read_count;
  detail::check_keys(j, "config", {"seed", "scm", "dag", "window", "model", "flow", "train", "eval"});
  ExperimentConfig c;
  read(j, "seed", c.seed, "config");

  const auto empty = nlohmann::json::object();
  const auto& scm = j.contains("scm") ? j["scm"] : empty;
  detail::check_keys(scm, "scm", {"family", "mechanism", "seed", "length", "burn_in", "train_fraction", "amplitude",
                                  "period", "random_phase"});
  c.scm.family = parse_family(detail::read_enum(scm, "family", "tree", "scm"));
  c.scm.mechanism = parse_mechanism(detail::read_enum(scm, "mechanism", "additive", "scm"));
  if (scm.contains("seed")) c.scm.seed = scm["seed"].get<std::uint64_t>();
  c.scm.length = read_count(scm, "length", c.scm.length, "scm");
  c.scm.burn_in = read_count(scm, "burn_in", c.scm.burn_in, "scm");
  read(scm, "train_fraction", c.scm.train_fraction, "scm");
  read(scm, "amplitude", c.scm.amplitude, "scm");
  read(scm, "period", c.scm.period, "scm");
  read(scm, "random_phase", c.scm.random_phase, "scm");

  if (j.contains("dag")) c.dag = dag_from_json(j["dag"]);

  const auto& win = j.contains("window") ? j["window"] : empty;
  detail::check_keys(win, "window", {"context", "total"});
  c.window.context = read_count(win, "context", c.window.context, "window");
  c.window.total = read_count(win, "total", c.window.total, "window");

  c.model = model_config_from_json(j.contains("model") ? j["model"] : empty, j.contains("flow") ? j["flow"] : empty);

  const auto& tr = j.contains("train") ? j["train"] : empty;
  detail::check_keys(tr, "train", {"epochs", "batch_size", "learning_rate", "beta1", "beta2", "epsilon", "sigma_min",
                                   "s_samples", "seed", "ema_span", "diverge_factor"});
  c.train.epochs = read_count(tr, "epochs", c.train.epochs, "train");
  c.train.batch_size = read_count(tr, "batch_size", c.train.batch_size, "train");
  read(tr, "learning_rate", c.train.adam.learning_rate, "train");
  read(tr, "beta1", c.train.adam.beta1, "train");
  read(tr, "beta2", c.train.adam.beta2, "train");
  read(tr, "epsilon", c.train.adam.epsilon, "train");
  read(tr, "sigma_min", c.train.sigma_min, "train");
  c.train.s_samples_per_point = read_count(tr, "s_samples", c.train.s_samples_per_point, "train");
  if (tr.contains("seed")) {
    read(tr, "seed", c.train.seed, "train");
    c.train_seed_set = true;
  }
  c.train.ema_span = read_count(tr, "ema_span", c.train.ema_span, "train");
  read(tr, "diverge_factor", c.train.diverge_factor, "train");

  const auto& ev = j.contains("eval") ? j["eval"] : empty;
  detail::check_keys(ev, "eval", {"runs", "batch", "samples", "seed", "shift_offset", "intervene_nodes", "bandwidth",
                                  "fixed_sigma", "anomaly_percentile"});
  c.eval.runs = read_count(ev, "runs", c.eval.runs, "eval");
  c.eval.batch = read_count(ev, "batch", c.eval.batch, "eval");
  c.eval.samples = read_count(ev, "samples", c.eval.samples, "eval");
  if (ev.contains("seed")) c.eval.seed = ev["seed"].get<std::uint64_t>();
  c.eval.shift_offset = read_count(ev, "shift_offset", c.eval.shift_offset, "eval");
  read(ev, "intervene_nodes", c.eval.intervene_nodes, "eval");
  c.eval.bandwidth = detail::parse_bandwidth(detail::read_enum(ev, "bandwidth", "pooled_median", "eval"));
  read(ev, "fixed_sigma", c.eval.fixed_sigma, "eval");
  read(ev, "anomaly_percentile", c.eval.anomaly_percentile, "eval");

  c.validate();
  return c;
}

/// Full, normalised form of a config; parsing it back gives the same config.
inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["seed"] = c.seed;
  j["scm"] = {{"family", std::string(to_string(c.scm.family))},
              {"mechanism", std::string(to_string(c.scm.mechanism))},
              {"length", c.scm.length},
              {"burn_in", c.scm.burn_in},
              {"train_fraction", c.scm.train_fraction},
              {"amplitude", c.scm.amplitude},
              {"period", c.scm.period},
              {"random_phase", c.scm.random_phase}};
  if (c.scm.seed) j["scm"]["seed"] = *c.scm.seed;
  if (c.dag) j["dag"] = dag_to_json(*c.dag);
  j["window"] = {{"context", c.window.context}, {"total", c.window.total}};
  const auto mj = model_config_to_json(c.model);
  j["model"] = mj["model"];
  j["flow"] = mj["flow"];
  j["train"] = {{"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"learning_rate", c.train.adam.learning_rate},
                {"beta1", c.train.adam.beta1},
                {"beta2", c.train.adam.beta2},
                {"epsilon", c.train.adam.epsilon},
                {"sigma_min", c.train.sigma_min},
                {"s_samples", c.train.s_samples_per_point},
                {"ema_span", c.train.ema_span},
                {"diverge_factor", c.train.diverge_factor}};
  if (c.train_seed_set) j["train"]["seed"] = c.train.seed;
  j["eval"] = {{"runs", c.eval.runs},
               {"batch", c.eval.batch},
               {"samples", c.eval.samples},
               {"shift_offset", c.eval.shift_offset},
               {"intervene_nodes", c.eval.intervene_nodes},
               {"bandwidth", detail::to_string(c.eval.bandwidth)},
               {"fixed_sigma", c.eval.fixed_sigma},
               {"anomaly_percentile", c.eval.anomaly_percentile}};
  if (c.eval.seed) j["eval"]["seed"] = *c.eval.seed;
  return j;
}

inline ExperimentConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
  try {
    return config_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidConfig, e.what());
  }
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::IoError, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace causalflow
