// Copyright (c) 2026 The causalflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <functional>

#include "causalflow/diff/mlp.hpp"
#include "causalflow/diff/tape.hpp"
#include "causalflow/rng.hpp"

using namespace causalflow;
using namespace causalflow::diff;

namespace {

using Builder = std::function<Var(Tape&, const std::vector<Var>&)>;

Tensor2 random_matrix(rng::Stream& s, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  Tensor2 m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * s.normal();
  return m;
}

double eval_loss(const Builder& f, const std::vector<Tensor2>& inputs) {
  Tape t;
  std::vector<Var> vs;
  for (const auto& x : inputs) vs.push_back(t.leaf(x, true));
  return t.value(f(t, vs))(0, 0);
}

// Central differences, step 1e-5, against the tape's gradient of every input.
void expect_matches_finite_differences(const Builder& f, std::vector<Tensor2> inputs, double tol = 1e-4) {
  Tape t;
  std::vector<Var> vs;
  for (const auto& x : inputs) vs.push_back(t.leaf(x, true));
  const auto grads = t.backward(f(t, vs));
  const double h = 1e-5;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    // Inputs the loss never touches carry no gradient, i.e. zero.
    const Tensor2 g = grads.has(vs[k]) ? grads.of(vs[k]) : Tensor2::Zero(inputs[k].rows(), inputs[k].cols());
    ASSERT_EQ(g.rows(), inputs[k].rows());
    ASSERT_EQ(g.cols(), inputs[k].cols());
    for (Eigen::Index i = 0; i < inputs[k].size(); ++i) {
      const double x0 = inputs[k].data()[i];
      inputs[k].data()[i] = x0 + h;
      const double up = eval_loss(f, inputs);
      inputs[k].data()[i] = x0 - h;
      const double down = eval_loss(f, inputs);
      inputs[k].data()[i] = x0;
      const double fd = (up - down) / (2 * h);
      const double an = g.data()[i];
      EXPECT_LE(std::abs(fd - an), tol * std::max(1.0, std::abs(fd))) << "input " << k << " entry " << i;
    }
  }
}

}  // namespace

TEST(Tape, SumSquaresOfZeroHasZeroGradient) {
  Tape t;
  auto x = t.leaf(Tensor2::Zero(2, 3), true);
  auto g = t.backward(t.sum_squares(x));
  EXPECT_EQ(g.of(x), Tensor2::Zero(2, 3));
}

TEST(Tape, LinearFormGradientIsTheOtherOperand) {
  Tape t;
  Tensor2 xv(3, 1);
  xv << 1.5, -2.0, 0.25;
  auto w = t.leaf(Tensor2::Constant(1, 3, 0.7), true);
  auto x = t.leaf(xv);
  auto g = t.backward(t.matmul(w, x));
  EXPECT_EQ(g.of(w), xv.transpose());
  EXPECT_FALSE(g.has(x));
}

TEST(Tape, MatMulMatchesFiniteDifferences) {
  rng::Stream s(1);
  expect_matches_finite_differences(
      [](Tape& t, const std::vector<Var>& v) { return t.sum_squares(t.matmul(v[0], v[1])); },
      {random_matrix(s, 3, 4), random_matrix(s, 4, 2)});
}

TEST(Tape, AddWithRowBroadcastMatchesFiniteDifferences) {
  rng::Stream s(2);
  expect_matches_finite_differences(
      [](Tape& t, const std::vector<Var>& v) { return t.sum_squares(t.add(v[0], v[1])); },
      {random_matrix(s, 4, 3), random_matrix(s, 1, 3)});
  expect_matches_finite_differences(
      [](Tape& t, const std::vector<Var>& v) { return t.sum_squares(t.add(v[0], v[1])); },
      {random_matrix(s, 2, 3), random_matrix(s, 2, 3)});
}

TEST(Tape, UnaryOpsMatchFiniteDifferences) {
  rng::Stream s(3);
  for (auto kind : {Unary::Tanh, Unary::Sigmoid, Unary::Softplus}) {
    expect_matches_finite_differences(
        [kind](Tape& t, const std::vector<Var>& v) { return t.sum_squares(t.unary(kind, v[0])); },
        {random_matrix(s, 3, 3, 2.0)});
  }
}

TEST(Tape, ConcatAndSliceMatchFiniteDifferences) {
  rng::Stream s(4);
  expect_matches_finite_differences(
      [](Tape& t, const std::vector<Var>& v) {
        auto c = t.concat_cols({v[0], v[1]});
        return t.sum_squares(t.tanh(t.slice(c, 1, 1, 3)));
      },
      {random_matrix(s, 2, 2), random_matrix(s, 2, 3)});
  expect_matches_finite_differences(
      [](Tape& t, const std::vector<Var>& v) {
        std::vector<Var> parts{v[0], v[1]};
        auto c = t.concat(parts, 0);
        return t.sum_squares(t.sigmoid(t.slice(c, 0, 1, 2)));
      },
      {random_matrix(s, 2, 3), random_matrix(s, 1, 3)});
}

TEST(Tape, ScaleAndHadamardMatchFiniteDifferences) {
  rng::Stream s(5);
  expect_matches_finite_differences(
      [](Tape& t, const std::vector<Var>& v) { return t.sum_squares(t.hadamard(t.scale(v[0], -1.7), v[1])); },
      {random_matrix(s, 3, 2), random_matrix(s, 3, 2)});
  // A node used twice accumulates both contributions.
  expect_matches_finite_differences(
      [](Tape& t, const std::vector<Var>& v) { return t.sum_squares(t.hadamard(v[0], v[0])); },
      {random_matrix(s, 2, 2)});
}

TEST(Tape, RandomComposedGraphsMatchFiniteDifferences) {
  rng::Stream s(6);
  for (int trial = 0; trial < 25; ++trial) {
    const std::uint64_t seed = s.next();
    const Builder f = [seed](Tape& t, const std::vector<Var>& v) {
      rng::Stream r(seed);
      Var a = v[0];  // 3 x 3
      const auto depth = 1 + r.below(6);
      for (std::size_t d = 0; d < depth; ++d) {
        switch (r.below(7)) {
          case 0: a = t.matmul(a, v[1]); break;
          case 1: a = t.add(a, v[2]); break;
          case 2: a = t.unary(static_cast<Unary>(r.below(3)), a); break;
          case 3: a = t.scale(a, r.uniform(-2, 2)); break;
          case 4: a = t.hadamard(a, v[1]); break;
          case 5: a = t.slice(t.concat_cols({a, v[1]}), 1, r.below(4), 3); break;
          default: a = t.add(a, t.tanh(a)); break;
        }
      }
      return t.scale(t.sum_squares(a), 0.5);
    };
    expect_matches_finite_differences(f, {random_matrix(s, 3, 3, 0.8), random_matrix(s, 3, 3, 0.8),
                                          random_matrix(s, 1, 3, 0.8)});
  }
}

TEST(Tape, GruStyleStepWithMlpAndL2MatchesFiniteDifferences) {
  rng::Stream s(7);
  const Builder f = [](Tape& t, const std::vector<Var>& v) {
    // v: x(4x2) h(4x3) Wz(5x3) Wn(5x3) W1(3x4) b1(1x4) W2(4x1) b2(1x1)
    auto xh = t.concat_cols({v[0], v[1]});
    auto z = t.sigmoid(t.matmul(xh, v[2]));
    auto n = t.tanh(t.matmul(xh, v[3]));
    auto one_minus_z = t.add(t.scale(z, -1.0), t.leaf(Tensor2::Ones(1, 3)));
    auto h = t.add(t.hadamard(one_minus_z, n), t.hadamard(z, v[1]));
    MlpVars p{{v[4], v[6]}, {v[5], v[7]}};
    auto out = forward_mlp(t, p, h);
    return t.add(t.sum_squares(out), t.scale(t.sum_squares(v[4]), 1e-2));
  };
  expect_matches_finite_differences(
      f, {random_matrix(s, 4, 2), random_matrix(s, 4, 3), random_matrix(s, 5, 3, 0.5), random_matrix(s, 5, 3, 0.5),
          random_matrix(s, 3, 4, 0.5), random_matrix(s, 1, 4, 0.5), random_matrix(s, 4, 1, 0.5),
          random_matrix(s, 1, 1, 0.5)});
}

TEST(Tape, BackwardReplayIsIdempotent) {
  rng::Stream s(8);
  Tape t;
  auto a = t.leaf(random_matrix(s, 3, 3), true);
  auto loss = t.sum_squares(t.tanh(t.matmul(a, a)));
  const auto g1 = t.backward(loss);
  const auto g2 = t.backward(loss);
  EXPECT_EQ(g1.of(a), g2.of(a));
}

TEST(Tape, ErrorPaths) {
  Tape t;
  auto a = t.leaf(Tensor2::Ones(2, 3), true);
  auto b = t.leaf(Tensor2::Ones(2, 3), true);
  try {
    (void)t.backward(a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonScalarLoss);
  }
  try {
    (void)t.matmul(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
  try {
    (void)t.leaf(Tensor2::Constant(1, 1, std::numeric_limits<double>::quiet_NaN()));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteValue);
  }
  auto big = t.leaf(Tensor2::Constant(1, 1, 1e200));
  EXPECT_THROW((void)t.sum_squares(big), Error);
}

TEST(Mlp, ZeroWeightsGiveBiasAndPlainMatchesTraced) {
  rng::Stream s(9);
  const std::size_t sizes[] = {3, 5, 2};
  auto m = make_mlp(sizes, s);
  Tensor2 x = random_matrix(s, 4, 3);

  Tape t;
  auto traced = t.value(forward_mlp(t, record_params(t, m, false), t.leaf(x)));
  EXPECT_LE((traced - forward_mlp(m, x)).cwiseAbs().maxCoeff(), 1e-14);

  auto z = m;
  for (auto& w : z.weights) w.setZero();
  auto out = forward_mlp(z, x);
  for (Eigen::Index r = 0; r < 4; ++r)
    for (Eigen::Index c = 0; c < 2; ++c) EXPECT_EQ(out(r, c), z.biases[1](0, c));
}

TEST(Mlp, SingleLayerIdentityAndScalarRecompute) {
  Mlp id;
  id.weights.push_back(Tensor2::Identity(3, 3));
  id.biases.push_back(Tensor2::Zero(1, 3));
  rng::Stream s(10);
  Tensor2 x = random_matrix(s, 2, 3);
  EXPECT_EQ(forward_mlp(id, x), x);

  const std::size_t sizes[] = {2, 4, 1};
  auto m = make_mlp(sizes, s);
  Tensor2 in(1, 2);
  in << 0.3, -1.1;
  double y = m.biases[1](0, 0);
  for (int j = 0; j < 4; ++j) {
    double pre = m.biases[0](0, j);
    for (int i = 0; i < 2; ++i) pre += in(0, i) * m.weights[0](i, j);
    y += std::tanh(pre) * m.weights[1](j, 0);
  }
  EXPECT_NEAR(forward_mlp(m, in)(0, 0), y, 1e-12);
}
