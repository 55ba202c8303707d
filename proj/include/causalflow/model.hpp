// Copyright (c) 2026 The causalflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "causalflow/flow.hpp"

namespace causalflow {

struct ModelConfig {
  EncoderConfig encoder;
  VelocityNetConfig velocity;
  FlowConfig flow;
  bool operator==(const ModelConfig&) const = default;
};

/// Name and shape of one parameter block.
struct ParamEntry {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  bool operator==(const ParamEntry&) const = default;
};

/// Recurrent encoder plus one velocity net per node of a fixed graph.
///
/// The forecasting interface works in original units: values are
/// standardised with the context statistics of each lane on the way in, and
/// de-standardised on the way out. Latents and log-densities live in
/// standardised units.
class CausalFlowModel {
 public:
  CausalFlowModel() = default;

  CausalFlowModel(CausalDag dag, ModelConfig cfg, std::uint64_t seed) : dag_(std::move(dag)), cfg_(cfg) {
    cfg_.flow.validate();
    rng::Stream s(rng::derive({seed, 0x6d6f64656cULL}));
    enc_ = Encoder(cfg_.encoder, dag_.node_count(), s);
    for (std::size_t k = 0; k < dag_.node_count(); ++k) nets_.emplace_back(cfg_.encoder.hidden_dim, cfg_.velocity, s);
  }

  [[nodiscard]] const CausalDag& dag() const noexcept { return dag_; }
  [[nodiscard]] const ModelConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] FlowConfig& flow_config() noexcept { return cfg_.flow; }
  [[nodiscard]] const Encoder& encoder() const noexcept { return enc_; }
  [[nodiscard]] Encoder& encoder() noexcept { return enc_; }
  [[nodiscard]] const VelocityNet& net(std::size_t node) const { return nets_.at(node); }
  [[nodiscard]] VelocityNet& net(std::size_t node) { return nets_.at(node); }

  // Parameter registry: recurrent cells first, then each node's net layer by layer.

  [[nodiscard]] std::vector<Tensor2*> parameters() {
    std::vector<Tensor2*> out;
    for (auto& c : enc_.cells())
      for (auto* m : {&c.wx, &c.wh, &c.bx, &c.bh}) out.push_back(m);
    for (auto& n : nets_)
      for (std::size_t l = 0; l < n.mlp().layers(); ++l) {
        out.push_back(&n.mlp().weights[l]);
        out.push_back(&n.mlp().biases[l]);
      }
    return out;
  }

  [[nodiscard]] std::vector<const Tensor2*> parameters() const {
    auto mut = const_cast<CausalFlowModel*>(this)->parameters();
    return {mut.begin(), mut.end()};
  }

  [[nodiscard]] std::vector<ParamEntry> manifest() const {
    std::vector<ParamEntry> out;
    const auto params = parameters();
    std::size_t i = 0;
    for (std::size_t c = 0; c < enc_.cells().size(); ++c)
      for (const char* n : {"wx", "wh", "bx", "bh"}) {
        out.push_back({"rnn." + std::to_string(c) + "." + n, params[i]->rows(), params[i]->cols()});
        ++i;
      }
    for (std::size_t k = 0; k < nets_.size(); ++k)
      for (std::size_t l = 0; l < nets_[k].mlp().layers(); ++l)
        for (const char* n : {"w", "b"}) {
          out.push_back({"flow." + std::to_string(k) + "." + n + std::to_string(l), params[i]->rows(),
                         params[i]->cols()});
          ++i;
        }
    return out;
  }

  [[nodiscard]] std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto* p : parameters()) n += static_cast<std::size_t>(p->size());
    return n;
  }

  [[nodiscard]] std::vector<double> flat_parameters() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (const auto* p : parameters()) out.insert(out.end(), p->data(), p->data() + p->size());
    return out;
  }

  void set_flat_parameters(std::span<const double> flat) {
    require(flat.size() == parameter_count(), ErrorCode::ShapeMismatch,
            "payload holds " + std::to_string(flat.size()) + " values, model needs " +
                std::to_string(parameter_count()));
    std::size_t off = 0;
    for (auto* p : parameters()) {
      std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off), p->size(), p->data());
      off += static_cast<std::size_t>(p->size());
    }
  }

  bool operator==(const CausalFlowModel& o) const {
    return dag_ == o.dag_ && cfg_ == o.cfg_ && enc_ == o.enc_ && nets_ == o.nets_;
  }

  // Forecasting interface.

  struct State {
    StateBank bank;
    std::vector<ContextStats> stats;  // lane-major, one per (lane, node)

    [[nodiscard]] const ContextStats& stat(std::size_t lane, std::size_t node, std::size_t nodes) const {
      return stats[lane * nodes + node];
    }
  };

  [[nodiscard]] State init(const SeriesBatch& context) const {
    check_series(context);
    State s{init_from_context(enc_, dag_, context), {}};
    s.stats.reserve(context.batch() * dag_.node_count());
    for (std::size_t b = 0; b < context.batch(); ++b)
      for (std::size_t k = 0; k < dag_.node_count(); ++k) s.stats.push_back(context.stats(b, k));
    return s;
  }

  [[nodiscard]] Eigen::ArrayXd standardize(const State& s, std::size_t node, const Eigen::ArrayXd& x) const {
    Eigen::ArrayXd out(x.size());
    for (Eigen::Index l = 0; l < x.size(); ++l)
      out(l) = s.stat(static_cast<std::size_t>(l), node, dag_.node_count()).standardize(x(l));
    return out;
  }

  [[nodiscard]] Eigen::ArrayXd destandardize(const State& s, std::size_t node, const Eigen::ArrayXd& y) const {
    Eigen::ArrayXd out(y.size());
    for (Eigen::Index l = 0; l < y.size(); ++l)
      out(l) = s.stat(static_cast<std::size_t>(l), node, dag_.node_count()).destandardize(y(l));
    return out;
  }

  /// Latent of observed values x (original units) under the current states.
  [[nodiscard]] Eigen::ArrayXd encode(const State& s, std::size_t node, const Eigen::ArrayXd& x) const {
    return causalflow::encode(field(s, node), cfg_.flow, standardize(s, node, x));
  }

  /// Values in original units generated from latents z.
  [[nodiscard]] Eigen::ArrayXd decode(const State& s, std::size_t node, const Eigen::ArrayXd& z) const {
    return destandardize(s, node, causalflow::decode(field(s, node), cfg_.flow, z));
  }

  /// Standardised-unit log-density of x (original units) and its latent.
  [[nodiscard]] Density log_density(const State& s, std::size_t node, const Eigen::ArrayXd& x) const {
    return causalflow::log_density(field(s, node), cfg_.flow, standardize(s, node, x));
  }

  /// Steps every node's state with lanes x K values in original units.
  [[nodiscard]] State advance(const State& s, const Tensor2& values) const {
    Tensor2 std_values(values.rows(), values.cols());
    for (Eigen::Index l = 0; l < values.rows(); ++l)
      for (Eigen::Index k = 0; k < values.cols(); ++k)
        std_values(l, k) = s.stat(static_cast<std::size_t>(l), static_cast<std::size_t>(k), dag_.node_count())
                               .standardize(values(l, k));
    return {advance_all(enc_, dag_, s.bank, std_values), s.stats};
  }

  [[nodiscard]] BoundField field(const State& s, std::size_t node) const {
    return nets_.at(node).bind(s.bank.conditioning(dag_, node));
  }

  void check_series(const SeriesBatch& b) const {
    require(b.nodes() == dag_.node_count(), ErrorCode::ModelDagMismatch,
            "series has " + std::to_string(b.nodes()) + " nodes, model graph has " +
                std::to_string(dag_.node_count()));
  }

 private:
  CausalDag dag_;
  ModelConfig cfg_;
  Encoder enc_;
  std::vector<VelocityNet> nets_;
};

}  // namespace causalflow
