// Copyright (c) 2026 The causalflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "causalflow/diff/tape.hpp"

namespace causalflow::diff {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adaptive moment estimation with bias correction.
class Adam {
 public:
  Adam() = default;
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

  void update(std::span<Tensor2* const> params, std::span<const Tensor2> grads) {
    require(params.size() == grads.size(), ErrorCode::ShapeMismatch, "one gradient per parameter");
    if (m_.empty()) {
      for (auto* p : params) {
        m_.push_back(Tensor2::Zero(p->rows(), p->cols()));
        v_.push_back(Tensor2::Zero(p->rows(), p->cols()));
      }
    }
    require(m_.size() == params.size(), ErrorCode::ShapeMismatch, "parameter set changed between steps");
    ++step_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      const auto& g = grads[k];
      require(g.rows() == params[k]->rows() && g.cols() == params[k]->cols(), ErrorCode::ShapeMismatch,
              "gradient shape");
      m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * g;
      v_[k] = cfg_.beta2 * v_[k] + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
      params[k]->array() -=
          cfg_.learning_rate * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + cfg_.epsilon);
    }
  }

  [[nodiscard]] std::int64_t step() const noexcept { return step_; }
  [[nodiscard]] const AdamConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] std::vector<Tensor2>& first_moments() noexcept { return m_; }
  [[nodiscard]] std::vector<Tensor2>& second_moments() noexcept { return v_; }
  [[nodiscard]] const std::vector<Tensor2>& first_moments() const noexcept { return m_; }
  [[nodiscard]] const std::vector<Tensor2>& second_moments() const noexcept { return v_; }

  void restore(std::int64_t step, std::vector<Tensor2> m, std::vector<Tensor2> v) {
    step_ = step;
    m_ = std::move(m);
    v_ = std::move(v);
  }

 private:
  AdamConfig cfg_;
  std::int64_t step_ = 0;
  std::vector<Tensor2> m_, v_;
};

}  // namespace causalflow::diff
