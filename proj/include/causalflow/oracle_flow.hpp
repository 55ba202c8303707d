// Copyright (c) 2026 The causalflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Exact conditional flow of an additive SCM: the latent of x is its
// exogenous noise, z = (x - f*(past)) / scale. Plugs into the rollout
// algorithms in place of a learned model and serves as a reference for them.

#pragma once

#include "causalflow/flow.hpp"
#include "causalflow/scm.hpp"

namespace causalflow {

class AdditiveOracleFlow {
 public:
  explicit AdditiveOracleFlow(ScmSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    for (std::size_t k = 0; k < spec_.nodes(); ++k)
      require(spec_.dag.is_root(k) || spec_.mechanism == Mechanism::Additive, ErrorCode::InvalidConfig,
              "the closed-form flow needs additive mechanisms");
  }

  /// Previous values (lanes x K) and the absolute time of the next step per lane.
  struct State {
    Tensor2 last;
    std::vector<std::int64_t> abs_t;
  };

  [[nodiscard]] const CausalDag& dag() const noexcept { return spec_.dag; }
  [[nodiscard]] const ScmSpec& spec() const noexcept { return spec_; }

  [[nodiscard]] State init(const SeriesBatch& context) const {
    require(context.context_len() >= 1, ErrorCode::EmptyContext, "context window is empty");
    const auto K = spec_.nodes(), tau = context.context_len();
    State s{Tensor2(static_cast<Eigen::Index>(context.batch()), static_cast<Eigen::Index>(K)), {}};
    for (std::size_t b = 0; b < context.batch(); ++b) {
      for (std::size_t k = 0; k < K; ++k)
        s.last(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(k)) = context.at(b, k, tau - 1);
      s.abs_t.push_back(context.origin(b) + static_cast<std::int64_t>(tau));
    }
    return s;
  }

  [[nodiscard]] Eigen::ArrayXd encode(const State& s, std::size_t k, const Eigen::ArrayXd& x) const {
    Eigen::ArrayXd z(x.size());
    for (Eigen::Index l = 0; l < x.size(); ++l) z(l) = (x(l) - mean(s, k, l)) / additive_scale(spec_, k);
    return z;
  }

  [[nodiscard]] Eigen::ArrayXd decode(const State& s, std::size_t k, const Eigen::ArrayXd& z) const {
    Eigen::ArrayXd x(z.size());
    for (Eigen::Index l = 0; l < z.size(); ++l) x(l) = mean(s, k, l) + additive_scale(spec_, k) * z(l);
    return x;
  }

  /// Log-density in original units.
  [[nodiscard]] Density log_density(const State& s, std::size_t k, const Eigen::ArrayXd& x) const {
    Density d{Eigen::ArrayXd(x.size()), encode(s, k, x)};
    const double log_scale = std::log(additive_scale(spec_, k));
    for (Eigen::Index l = 0; l < x.size(); ++l) d.logp(l) = standard_normal_logpdf(d.z(l)) - log_scale;
    return d;
  }

  [[nodiscard]] State advance(const State& s, const Tensor2& values) const {
    State out{values, s.abs_t};
    for (auto& t : out.abs_t) ++t;
    return out;
  }

 private:
  double mean(const State& s, std::size_t k, Eigen::Index lane) const {
    return additive_mean(spec_, k, s.abs_t[static_cast<std::size_t>(lane)],
                         [&](std::size_t j) { return s.last(lane, static_cast<Eigen::Index>(j)); });
  }

  ScmSpec spec_;
};

}  // namespace causalflow
