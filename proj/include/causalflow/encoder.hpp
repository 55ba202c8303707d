// Copyright (c) 2026 The causalflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Per-node recurrent summaries of the past and the conditioning tuple built
// from them.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "causalflow/dag.hpp"
#include "causalflow/diff/tape.hpp"
#include "causalflow/rng.hpp"
#include "causalflow/series.hpp"

namespace causalflow {

using diff::Tensor2;

struct EncoderConfig {
  std::size_t hidden_dim = 32;
  std::size_t covariate_dim = 0;
  bool per_node_rnn = false;

  bool operator==(const EncoderConfig&) const = default;
};

/// Gated recurrent cell. Gate blocks sit side by side along the columns as
/// [reset | update | candidate]; the update is h' = h + u * (n - h), so u = 1
/// replaces the state by the candidate.
struct RnnCellParams {
  Tensor2 wx;  // input_dim x 3d
  Tensor2 wh;  // d x 3d
  Tensor2 bx;  // 1 x 3d
  Tensor2 bh;  // 1 x 3d

  [[nodiscard]] Eigen::Index hidden_dim() const noexcept { return wh.rows(); }
  [[nodiscard]] Eigen::Index input_dim() const noexcept { return wx.rows(); }

  void validate() const {
    const auto d = hidden_dim();
    const bool ok = wx.cols() == 3 * d && wh.cols() == 3 * d && bx.rows() == 1 && bx.cols() == 3 * d &&
                    bh.rows() == 1 && bh.cols() == 3 * d && d > 0 && input_dim() > 0;
    require(ok, ErrorCode::ShapeMismatch, "recurrent cell parameter shapes are inconsistent");
    for (const auto* m : {&wx, &wh, &bx, &bh}) diff::check_finite(*m, "recurrent cell parameters");
  }

  static RnnCellParams zeros(Eigen::Index input_dim, Eigen::Index d) {
    return {Tensor2::Zero(input_dim, 3 * d), Tensor2::Zero(d, 3 * d), Tensor2::Zero(1, 3 * d),
            Tensor2::Zero(1, 3 * d)};
  }

  /// Entries uniform in +-1/sqrt(d).
  static RnnCellParams random(Eigen::Index input_dim, Eigen::Index d, rng::Stream& rng) {
    auto p = zeros(input_dim, d);
    const double a = 1.0 / std::sqrt(static_cast<double>(d));
    for (auto* m : {&p.wx, &p.wh, &p.bx, &p.bh})
      for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = rng.uniform(-a, a);
    return p;
  }

  bool operator==(const RnnCellParams&) const = default;
};

/// One cell update on every row: x is R x input_dim, h is R x d.
inline Tensor2 cell_step(const RnnCellParams& p, const Tensor2& x, const Tensor2& h) {
  const auto d = p.hidden_dim();
  require(x.cols() == p.input_dim() && h.cols() == d && x.rows() == h.rows(), ErrorCode::ShapeMismatch,
          "cell_step input shapes");
  diff::check_finite(x, "cell_step input");
  const Tensor2 gx = (x * p.wx).rowwise() + p.bx.row(0);
  const Tensor2 gh = (h * p.wh).rowwise() + p.bh.row(0);
  const Eigen::ArrayXXd r = diff::sigmoid_array(gx.leftCols(d).array() + gh.leftCols(d).array());
  const Eigen::ArrayXXd u = diff::sigmoid_array(gx.middleCols(d, d).array() + gh.middleCols(d, d).array());
  const Eigen::ArrayXXd n = diff::tanh_array(gx.rightCols(d).array() + r * gh.rightCols(d).array());
  Tensor2 out = (h.array() + u * (n - h.array())).matrix();
  diff::check_finite(out, "cell_step");
  return out;
}

/// Single-state form. `covariates` may be empty when the cell takes none.
inline Eigen::VectorXd step(const RnnCellParams& p, const Eigen::VectorXd& own, double x,
                            std::span<const double> covariates = {}) {
  require(static_cast<Eigen::Index>(1 + covariates.size()) == p.input_dim(), ErrorCode::ShapeMismatch,
          "covariate count does not match the cell input");
  Tensor2 in(1, p.input_dim());
  in(0, 0) = x;
  for (std::size_t c = 0; c < covariates.size(); ++c) in(0, static_cast<Eigen::Index>(c + 1)) = covariates[c];
  const Tensor2 h = own.transpose();
  return cell_step(p, in, h).row(0).transpose();
}

/// Tape handles of one cell.
struct RnnCellVars {
  diff::Var wx, wh, bx, bh;
  Eigen::Index hidden_dim = 0;
};

inline RnnCellVars record_cell(diff::Tape& tape, const RnnCellParams& p, bool requires_grad = true) {
  return {tape.leaf(p.wx, requires_grad), tape.leaf(p.wh, requires_grad), tape.leaf(p.bx, requires_grad),
          tape.leaf(p.bh, requires_grad), p.hidden_dim()};
}

/// Traced counterpart of cell_step; same operations, equal up to rounding.
inline diff::Var cell_step(diff::Tape& t, const RnnCellVars& c, diff::Var x, diff::Var h) {
  const auto d = c.hidden_dim;
  auto gx = t.add(t.matmul(x, c.wx), c.bx);
  auto gh = t.add(t.matmul(h, c.wh), c.bh);
  auto r = t.sigmoid(t.add(t.slice(gx, 1, 0, d), t.slice(gh, 1, 0, d)));
  auto u = t.sigmoid(t.add(t.slice(gx, 1, d, d), t.slice(gh, 1, d, d)));
  auto n = t.tanh(t.add(t.slice(gx, 1, 2 * d, d), t.hadamard(r, t.slice(gh, 1, 2 * d, d))));
  return t.add(h, t.hadamard(u, t.add(n, t.scale(h, -1.0))));
}

/// Recurrent cell parameters for a whole graph: one shared cell, or one per
/// node when per_node_rnn is set.
class Encoder {
 public:
  Encoder() = default;

  Encoder(EncoderConfig cfg, std::size_t nodes, rng::Stream& rng) : cfg_(cfg), nodes_(nodes) {
    require(cfg.hidden_dim > 0, ErrorCode::InvalidConfig, "hidden_dim must be positive");
    const auto count = cfg.per_node_rnn ? nodes : std::size_t{1};
    for (std::size_t c = 0; c < count; ++c)
      cells_.push_back(RnnCellParams::random(static_cast<Eigen::Index>(1 + cfg.covariate_dim),
                                             static_cast<Eigen::Index>(cfg.hidden_dim), rng));
  }

  [[nodiscard]] const EncoderConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] std::size_t nodes() const noexcept { return nodes_; }
  [[nodiscard]] std::size_t hidden_dim() const noexcept { return cfg_.hidden_dim; }
  [[nodiscard]] std::size_t cell_index(std::size_t node) const { return cfg_.per_node_rnn ? node : 0; }
  [[nodiscard]] const RnnCellParams& cell_for(std::size_t node) const { return cells_.at(cell_index(node)); }
  [[nodiscard]] std::vector<RnnCellParams>& cells() noexcept { return cells_; }
  [[nodiscard]] const std::vector<RnnCellParams>& cells() const noexcept { return cells_; }

  bool operator==(const Encoder&) const = default;

 private:
  EncoderConfig cfg_;
  std::size_t nodes_ = 0;
  std::vector<RnnCellParams> cells_;
};

/// Mean of d-vectors summed in lexicographic order of their contents, so the
/// result is bitwise independent of which parent holds which vector.
inline void pooled_mean(std::vector<const double*> rows, Eigen::Index d, double* out) {
  std::fill(out, out + d, 0.0);
  if (rows.empty()) return;
  if (rows.size() > 2)
    std::sort(rows.begin(), rows.end(), [d](const double* a, const double* b) {
      return std::lexicographical_compare(a, a + d, b, b + d);
    });
  for (const double* r : rows)
    for (Eigen::Index j = 0; j < d; ++j) out[j] += r[j];
  for (Eigen::Index j = 0; j < d; ++j) out[j] /= static_cast<double>(rows.size());
}

/// A node's own state together with its parents' states.
struct HiddenState {
  Eigen::VectorXd own;
  std::map<std::size_t, Eigen::VectorXd> parents;

  /// own || mean of the parent states; roots get a zero vector.
  [[nodiscard]] Eigen::RowVectorXd conditioning() const {
    const auto d = own.size();
    Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(2 * d);
    c.head(d) = own.transpose();
    std::vector<const double*> rows;
    for (const auto& [_, v] : parents) rows.push_back(v.data());
    pooled_mean(rows, d, c.data() + d);
    return c;
  }
};

/// Recurrent states of every node for R independent lanes.
class StateBank {
 public:
  StateBank() = default;
  StateBank(std::size_t lanes, std::size_t nodes, std::size_t hidden_dim)
      : own_(nodes, Tensor2::Zero(static_cast<Eigen::Index>(lanes), static_cast<Eigen::Index>(hidden_dim))),
        lanes_(lanes) {}

  [[nodiscard]] std::size_t lanes() const noexcept { return lanes_; }
  [[nodiscard]] std::size_t nodes() const noexcept { return own_.size(); }
  [[nodiscard]] Tensor2& own(std::size_t node) { return own_.at(node); }
  [[nodiscard]] const Tensor2& own(std::size_t node) const { return own_.at(node); }

  [[nodiscard]] HiddenState hidden(const CausalDag& dag, std::size_t lane, std::size_t node) const {
    HiddenState h;
    const auto l = static_cast<Eigen::Index>(lane);
    h.own = own(node).row(l).transpose();
    for (auto p : dag.parents_of(node)) h.parents.emplace(p, own(p).row(l).transpose());
    return h;
  }

  /// lanes x 2d conditioning rows for `node`.
  [[nodiscard]] Tensor2 conditioning(const CausalDag& dag, std::size_t node) const {
    const auto& o = own(node);
    const auto d = o.cols();
    Tensor2 c = Tensor2::Zero(o.rows(), 2 * d);
    c.leftCols(d) = o;
    const auto& pa = dag.parents_of(node);
    if (pa.empty()) return c;
    if (pa.size() <= 2) {
      // Two-term sums commute exactly, so no reordering is needed.
      Tensor2 sum = Tensor2::Zero(o.rows(), d);
      for (auto p : pa) sum += own(p);
      c.rightCols(d) = sum / static_cast<double>(pa.size());
      return c;
    }
    std::vector<const double*> rows(pa.size());
    for (Eigen::Index l = 0; l < o.rows(); ++l) {
      for (std::size_t j = 0; j < pa.size(); ++j) rows[j] = own(pa[j]).row(l).data();
      pooled_mean(rows, d, c.row(l).data() + d);
    }
    return c;
  }

  bool operator==(const StateBank&) const = default;

 private:
  std::vector<Tensor2> own_;
  std::size_t lanes_ = 0;
};

/// Steps every node once. `values` is lanes x K in standardised units;
/// `covariates`, when given, holds one lanes x covariate_dim block per node.
inline StateBank advance_all(const Encoder& enc, const CausalDag& dag, const StateBank& states,
                             const Tensor2& values, const std::vector<Tensor2>* covariates = nullptr) {
  const auto K = dag.node_count();
  require(states.nodes() == K && enc.nodes() == K, ErrorCode::ModelDagMismatch, "state bank and graph disagree");
  require(values.cols() == static_cast<Eigen::Index>(K), ErrorCode::MissingNodeValue,
          "expected one value per node, got " + std::to_string(values.cols()));
  require(values.rows() == static_cast<Eigen::Index>(states.lanes()), ErrorCode::ShapeMismatch,
          "value rows must match the lane count");
  const auto cov_dim = static_cast<Eigen::Index>(enc.config().covariate_dim);
  require(cov_dim == 0 || (covariates && covariates->size() == K), ErrorCode::MissingNodeValue,
          "covariates required for every node");
  StateBank next = states;
  Tensor2 in(values.rows(), 1 + cov_dim);
  for (std::size_t k = 0; k < K; ++k) {
    in.col(0) = values.col(static_cast<Eigen::Index>(k));
    if (cov_dim > 0) in.rightCols(cov_dim) = (*covariates)[k];
    next.own(k) = cell_step(enc.cell_for(k), in, states.own(k));
  }
  return next;
}

/// Single-lane form; `values` holds one entry per node.
inline StateBank advance_all(const Encoder& enc, const CausalDag& dag, const StateBank& states,
                             std::span<const double> values) {
  require(values.size() == dag.node_count(), ErrorCode::MissingNodeValue,
          "expected one value per node, got " + std::to_string(values.size()));
  require(states.lanes() == 1, ErrorCode::ShapeMismatch, "span form takes a single lane");
  Tensor2 v(1, static_cast<Eigen::Index>(values.size()));
  for (std::size_t k = 0; k < values.size(); ++k) v(0, static_cast<Eigen::Index>(k)) = values[k];
  return advance_all(enc, dag, states, v);
}

/// Standardised values of every node at window step t, lanes x K.
inline Tensor2 standardized_step(const SeriesBatch& batch, std::size_t t) {
  Tensor2 v(static_cast<Eigen::Index>(batch.batch()), static_cast<Eigen::Index>(batch.nodes()));
  for (std::size_t b = 0; b < batch.batch(); ++b)
    for (std::size_t k = 0; k < batch.nodes(); ++k)
      v(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(k)) =
          batch.stats(b, k).standardize(batch.at(b, k, t));
  return v;
}

/// Rolls the cells over the standardised context; the result conditions the
/// first forecast step.
inline StateBank init_from_context(const Encoder& enc, const CausalDag& dag, const SeriesBatch& context) {
  require(context.context_len() >= 1, ErrorCode::EmptyContext, "context must hold at least one step");
  require(context.nodes() == dag.node_count(), ErrorCode::ModelDagMismatch, "series and graph node counts differ");
  StateBank s(context.batch(), dag.node_count(), enc.hidden_dim());
  for (std::size_t t = 0; t < context.context_len(); ++t) s = advance_all(enc, dag, s, standardized_step(context, t));
  return s;
}

}  // namespace causalflow
