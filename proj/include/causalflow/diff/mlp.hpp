// Copyright (c) 2026 The causalflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "causalflow/diff/tape.hpp"
#include "causalflow/rng.hpp"

namespace causalflow::diff {

/// Dense feed-forward net with tanh between layers and a linear output.
/// weights[l] is (in x out), biases[l] is (1 x out).
struct Mlp {
  std::vector<Tensor2> weights;
  std::vector<Tensor2> biases;

  [[nodiscard]] std::size_t layers() const noexcept { return weights.size(); }
  [[nodiscard]] Eigen::Index in_dim() const { return weights.front().rows(); }
  [[nodiscard]] Eigen::Index out_dim() const { return weights.back().cols(); }
};

/// sizes = {in, hidden..., out}; entries uniform in +-1/sqrt(fan_in).
inline Mlp make_mlp(std::span<const std::size_t> sizes, rng::Stream& rng) {
  require(sizes.size() >= 2, ErrorCode::ShapeMismatch, "an MLP needs at least input and output sizes");
  Mlp m;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(sizes[l]);
    const auto out = static_cast<Eigen::Index>(sizes[l + 1]);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Tensor2 w(in, out), b(1, out);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-bound, bound);
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.uniform(-bound, bound);
    m.weights.push_back(std::move(w));
    m.biases.push_back(std::move(b));
  }
  return m;
}

inline void check_chain(const Mlp& m, Eigen::Index input_cols) {
  Eigen::Index width = input_cols;
  for (std::size_t l = 0; l < m.layers(); ++l) {
    require(m.weights[l].rows() == width, ErrorCode::ShapeMismatch, "MLP layer shapes do not chain");
    require(m.biases[l].rows() == 1 && m.biases[l].cols() == m.weights[l].cols(), ErrorCode::ShapeMismatch,
            "MLP bias shape");
    width = m.weights[l].cols();
  }
}

/// Plain evaluation, one row per input.
inline Tensor2 forward_mlp(const Mlp& m, const Tensor2& input) {
  check_chain(m, input.cols());
  Tensor2 a = input;
  for (std::size_t l = 0; l < m.layers(); ++l) {
    Tensor2 z = (a * m.weights[l]).rowwise() + m.biases[l].row(0);
    if (l + 1 < m.layers()) z = tanh_array(z.array());
    a = std::move(z);
  }
  check_finite(a, "forward_mlp");
  return a;
}

/// Tape handles of an MLP's parameters.
struct MlpVars {
  std::vector<Var> weights;
  std::vector<Var> biases;
};

inline MlpVars record_params(Tape& tape, const Mlp& m, bool requires_grad = true) {
  MlpVars v;
  for (std::size_t l = 0; l < m.layers(); ++l) {
    v.weights.push_back(tape.leaf(m.weights[l], requires_grad));
    v.biases.push_back(tape.leaf(m.biases[l], requires_grad));
  }
  return v;
}

/// Traced evaluation; same arithmetic as the plain path.
inline Var forward_mlp(Tape& tape, const MlpVars& params, Var input) {
  Var a = input;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    Var z = tape.add(tape.matmul(a, params.weights[l]), params.biases[l]);
    a = l + 1 < params.weights.size() ? tape.tanh(z) : z;
  }
  return a;
}

}  // namespace causalflow::diff
