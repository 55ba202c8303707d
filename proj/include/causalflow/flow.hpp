// Copyright (c) 2026 The causalflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Per-node conditional flow. Flow time s = 0 is the data side, s = 1 the
// standard-normal latent side.

#pragma once

#include <cmath>
#include <numbers>
#include <utility>

#include "causalflow/diff/mlp.hpp"
#include "causalflow/encoder.hpp"

namespace causalflow {

enum class Integrator { Euler, RK4 };
enum class DivergenceMode { ExactAutodiff, CentralDifference };

struct FlowConfig {
  Integrator integrator = Integrator::RK4;
  std::size_t steps = 64;
  DivergenceMode divergence = DivergenceMode::ExactAutodiff;
  double fd_step = 1e-4;

  void validate() const {
    require(steps >= 1, ErrorCode::InvalidConfig, "flow steps must be >= 1");
    require(divergence != DivergenceMode::CentralDifference || fd_step > 0.0, ErrorCode::InvalidConfig,
            "finite-difference step must be positive");
  }
  bool operator==(const FlowConfig&) const = default;
};

struct VelocityNetConfig {
  std::size_t width = 64;
  std::size_t layers = 3;
  bool operator==(const VelocityNetConfig&) const = default;
};

/// A velocity field bound to fixed conditioning for R lanes.
class BoundField;

/// MLP v(x, s; H). Input columns: [x, s, sin 2 pi s, own (d), parent mean (d)].
class VelocityNet {
 public:
  static constexpr Eigen::Index kTimeFeatures = 3;

  VelocityNet() = default;
  explicit VelocityNet(diff::Mlp mlp) : mlp_(std::move(mlp)) {
    require(mlp_.layers() >= 1 && mlp_.in_dim() > kTimeFeatures && mlp_.out_dim() == 1, ErrorCode::ShapeMismatch,
            "velocity net must map [x, s, sin, H] to one output");
    diff::check_chain(mlp_, mlp_.in_dim());
  }

  VelocityNet(std::size_t hidden_dim, const VelocityNetConfig& cfg, rng::Stream& rng) {
    require(cfg.layers >= 1 && cfg.width >= 1, ErrorCode::InvalidConfig, "velocity net needs layers and width");
    std::vector<std::size_t> sizes{static_cast<std::size_t>(kTimeFeatures) + 2 * hidden_dim};
    for (std::size_t l = 0; l + 1 < cfg.layers; ++l) sizes.push_back(cfg.width);
    sizes.push_back(1);
    mlp_ = diff::make_mlp(sizes, rng);
  }

  [[nodiscard]] const diff::Mlp& mlp() const noexcept { return mlp_; }
  [[nodiscard]] diff::Mlp& mlp() noexcept { return mlp_; }
  [[nodiscard]] Eigen::Index conditioning_dim() const { return mlp_.in_dim() - kTimeFeatures; }

  /// Binds conditioning rows (R x 2d); see BoundField.
  [[nodiscard]] BoundField bind(const Tensor2& conditioning) const;

  /// Single-point velocity through the plain MLP path.
  [[nodiscard]] double velocity(double x, double s, const Eigen::RowVectorXd& conditioning) const {
    Tensor2 in(1, mlp_.in_dim());
    in(0, 0) = x;
    in(0, 1) = s;
    in(0, 2) = std::sin(2.0 * std::numbers::pi * s);
    in.rightCols(conditioning_dim()) = conditioning;
    return diff::forward_mlp(mlp_, in)(0, 0);
  }

  /// Traced velocity for inputs [x, s, sin 2 pi s] (R x 3) and conditioning
  /// (R x 2d). The first layer is split by input block, which is the same
  /// linear map as acting on their concatenation.
  [[nodiscard]] diff::Var trace(diff::Tape& t, const diff::MlpVars& p, diff::Var xs, diff::Var cond) const {
    const auto cd = conditioning_dim();
    auto w_time = t.slice(p.weights[0], 0, 0, kTimeFeatures);
    auto w_cond = t.slice(p.weights[0], 0, kTimeFeatures, cd);
    diff::Var a = t.add(t.add(t.matmul(xs, w_time), t.matmul(cond, w_cond)), p.biases[0]);
    for (std::size_t l = 1; l < p.weights.size(); ++l) {
      a = t.tanh(a);
      a = t.add(t.matmul(a, p.weights[l]), p.biases[l]);
    }
    return a;
  }

  bool operator==(const VelocityNet& o) const { return mlp_.weights == o.mlp_.weights && mlp_.biases == o.mlp_.biases; }

 private:
  diff::Mlp mlp_;
};

/// Velocity of one net over R lanes with the conditioning projection cached,
/// so each evaluation only pays for the x/s columns of the first layer.
class BoundField {
 public:
  BoundField(const diff::Mlp& mlp, const Tensor2& conditioning) : mlp_(&mlp) {
    const auto k = VelocityNet::kTimeFeatures;
    require(conditioning.cols() == mlp.in_dim() - k, ErrorCode::ShapeMismatch, "conditioning width");
    diff::check_finite(conditioning, "conditioning");
    proj_ = (conditioning * mlp.weights[0].bottomRows(mlp.in_dim() - k)).rowwise() + mlp.biases[0].row(0);
  }

  [[nodiscard]] Eigen::Index lanes() const noexcept { return proj_.rows(); }

  /// v for every lane at flow time s.
  void operator()(double s, const Eigen::ArrayXd& x, Eigen::ArrayXd& v) const { eval(s, x, v, nullptr); }

  /// v and its exact derivative in x, by forward tangent propagation.
  void with_divergence(double s, const Eigen::ArrayXd& x, Eigen::ArrayXd& v, Eigen::ArrayXd& dv) const {
    eval(s, x, v, &dv);
  }

 private:
  void eval(double s, const Eigen::ArrayXd& x, Eigen::ArrayXd& v, Eigen::ArrayXd* dv) const {
    const auto& W = mlp_->weights;
    const auto& B = mlp_->biases;
    const double sn = std::sin(2.0 * std::numbers::pi * s);
    const Eigen::RowVectorXd w0 = W[0].row(0);
    const Eigen::RowVectorXd shift = s * W[0].row(1) + sn * W[0].row(2);
    Tensor2 pre = (proj_ + x.matrix() * w0).rowwise() + shift;
    if (W.size() == 1) {
      v = pre.col(0).array();
      if (dv) *dv = Eigen::ArrayXd::Constant(x.size(), w0(0));
      return;
    }
    Tensor2 tan;
    for (std::size_t l = 1; l < W.size(); ++l) {
      const Eigen::ArrayXXd a = diff::tanh_array(pre.array());
      if (dv) {
        const Eigen::ArrayXXd slope = 1.0 - a.square();
        tan = l == 1 ? Tensor2((slope.rowwise() * w0.array()).matrix()) : Tensor2((slope * tan.array()).matrix());
        tan = tan * W[l];
      }
      pre = (a.matrix() * W[l]).rowwise() + B[l].row(0);
    }
    v = pre.col(0).array();
    if (dv) *dv = tan.col(0).array();
  }

  const diff::Mlp* mlp_;
  Tensor2 proj_;
};

inline BoundField VelocityNet::bind(const Tensor2& conditioning) const { return BoundField(mlp_, conditioning); }

namespace detail {

inline void check_trajectory(const Eigen::ArrayXd& x, double s) {
  if (!x.allFinite())
    fail(ErrorCode::NonFiniteTrajectory, "flow trajectory left the finite range at s=" + std::to_string(s));
}

template <class Field>
void divergence(const Field& f, const FlowConfig& cfg, double s, const Eigen::ArrayXd& x, Eigen::ArrayXd& v,
                Eigen::ArrayXd& dv) {
  if (cfg.divergence == DivergenceMode::ExactAutodiff) {
    f.with_divergence(s, x, v, dv);
    return;
  }
  Eigen::ArrayXd up, down;
  f(s, x, v);
  f(s, x + cfg.fd_step, up);
  f(s, x - cfg.fd_step, down);
  dv = (up - down) / (2.0 * cfg.fd_step);
}

}  // namespace detail

/// Fixed-step solve of dx/ds = v(x, s) from s0 to s1 for every lane.
template <class Field>
Eigen::ArrayXd integrate(const Field& f, const FlowConfig& cfg, Eigen::ArrayXd x, double s0, double s1) {
  cfg.validate();
  detail::check_trajectory(x, s0);
  const double h = (s1 - s0) / static_cast<double>(cfg.steps);
  Eigen::ArrayXd k1, k2, k3, k4;
  for (std::size_t n = 0; n < cfg.steps; ++n) {
    const double s = s0 + static_cast<double>(n) * h;
    if (cfg.integrator == Integrator::Euler) {
      f(s, x, k1);
      x += h * k1;
    } else {
      f(s, x, k1);
      f(s + 0.5 * h, x + 0.5 * h * k1, k2);
      f(s + 0.5 * h, x + 0.5 * h * k2, k3);
      f(s + h, x + h * k3, k4);
      x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    detail::check_trajectory(x, s + h);
  }
  return x;
}

/// Data to latent: z = x + integral of v over s in [0, 1].
template <class Field>
Eigen::ArrayXd encode(const Field& f, const FlowConfig& cfg, const Eigen::ArrayXd& x) {
  return integrate(f, cfg, x, 0.0, 1.0);
}

/// Latent to data: the same ODE solved backward from x(1) = z.
template <class Field>
Eigen::ArrayXd decode(const Field& f, const FlowConfig& cfg, const Eigen::ArrayXd& z) {
  return integrate(f, cfg, z, 1.0, 0.0);
}

inline double standard_normal_logpdf(double z) noexcept {
  return -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi);
}

struct Density {
  Eigen::ArrayXd logp;
  Eigen::ArrayXd z;
};

/// log q(z) + integral of dv/dx along the encode path, integrated jointly
/// with x by the configured scheme.
template <class Field>
Density log_density(const Field& f, const FlowConfig& cfg, const Eigen::ArrayXd& x0) {
  cfg.validate();
  detail::check_trajectory(x0, 0.0);
  const double h = 1.0 / static_cast<double>(cfg.steps);
  Eigen::ArrayXd x = x0, acc = Eigen::ArrayXd::Zero(x0.size());
  Eigen::ArrayXd k1, k2, k3, k4, d1, d2, d3, d4;
  for (std::size_t n = 0; n < cfg.steps; ++n) {
    const double s = static_cast<double>(n) * h;
    detail::divergence(f, cfg, s, x, k1, d1);
    if (cfg.integrator == Integrator::Euler) {
      x += h * k1;
      acc += h * d1;
    } else {
      detail::divergence(f, cfg, s + 0.5 * h, x + 0.5 * h * k1, k2, d2);
      detail::divergence(f, cfg, s + 0.5 * h, x + 0.5 * h * k2, k3, d3);
      detail::divergence(f, cfg, s + h, x + h * k3, k4, d4);
      x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      acc += (h / 6.0) * (d1 + 2.0 * d2 + 2.0 * d3 + d4);
    }
    detail::check_trajectory(x, s + h);
    detail::check_trajectory(acc, s + h);
  }
  Density out{Eigen::ArrayXd(x.size()), x};
  for (Eigen::Index i = 0; i < x.size(); ++i) out.logp(i) = standard_normal_logpdf(x(i)) + acc(i);
  return out;
}

/// Analytic field v(x, s) and its x-derivative, for oracles and tests.
template <class V, class D>
class FunctionField {
 public:
  FunctionField(V v, D dv) : v_(std::move(v)), dv_(std::move(dv)) {}
  void operator()(double s, const Eigen::ArrayXd& x, Eigen::ArrayXd& v) const { v = x.unaryExpr([&](double xi) { return v_(xi, s); }); }
  void with_divergence(double s, const Eigen::ArrayXd& x, Eigen::ArrayXd& v, Eigen::ArrayXd& dv) const {
    (*this)(s, x, v);
    dv = x.unaryExpr([&](double xi) { return dv_(xi, s); });
  }

 private:
  V v_;
  D dv_;
};

// Scalar conveniences over a single HiddenState.

inline double encode(const VelocityNet& net, const FlowConfig& cfg, double x, const HiddenState& h) {
  return encode(net.bind(Tensor2(h.conditioning())), cfg, Eigen::ArrayXd::Constant(1, x))(0);
}

inline double decode(const VelocityNet& net, const FlowConfig& cfg, double z, const HiddenState& h) {
  return decode(net.bind(Tensor2(h.conditioning())), cfg, Eigen::ArrayXd::Constant(1, z))(0);
}

inline std::pair<double, double> log_density(const VelocityNet& net, const FlowConfig& cfg, double x,
                                             const HiddenState& h) {
  auto d = log_density(net.bind(Tensor2(h.conditioning())), cfg, Eigen::ArrayXd::Constant(1, x));
  return {d.logp(0), d.z(0)};
}

}  // namespace causalflow
