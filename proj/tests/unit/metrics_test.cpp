// Copyright (c) 2026 The causalflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "causalflow/metrics.hpp"

using namespace causalflow;

namespace {

Tensor2 normal_rows(rng::Stream& s, Eigen::Index n, Eigen::Index d, double shift = 0.0) {
  Tensor2 x(n, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = s.normal() + shift;
  return x;
}

// Plain transcriptions used as references.

double brute_median(const Tensor2& a, const Tensor2& b) {
  std::vector<Eigen::VectorXd> pts;
  for (Eigen::Index i = 0; i < a.rows(); ++i) pts.push_back(a.row(i).transpose());
  for (Eigen::Index i = 0; i < b.rows(); ++i) pts.push_back(b.row(i).transpose());
  std::vector<double> d;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      double s = 0;
      for (Eigen::Index c = 0; c < pts[i].size(); ++c) s += (pts[i](c) - pts[j](c)) * (pts[i](c) - pts[j](c));
      d.push_back(std::sqrt(s));
    }
  std::sort(d.begin(), d.end());
  const auto m = d.size();
  return m % 2 ? d[m / 2] : 0.5 * (d[m / 2 - 1] + d[m / 2]);
}

double brute_k(const Tensor2& x, Eigen::Index i, const Tensor2& y, Eigen::Index j, double sigma) {
  double s = 0;
  for (Eigen::Index c = 0; c < x.cols(); ++c) s += (x(i, c) - y(j, c)) * (x(i, c) - y(j, c));
  return std::exp(-s / (2 * sigma * sigma));
}

double brute_mmd(const Tensor2& x, const Tensor2& y, double sigma, bool full) {
  const double n = static_cast<double>(x.rows()), m = static_cast<double>(y.rows());
  double sxx = 0, syy = 0, sxy = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.rows(); ++j)
      if (i != j) sxx += brute_k(x, i, x, j, sigma);
  for (Eigen::Index i = 0; i < y.rows(); ++i)
    for (Eigen::Index j = 0; j < y.rows(); ++j)
      if (i != j) syy += brute_k(y, i, y, j, sigma);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < y.rows(); ++j)
      if (full || i != j) sxy += brute_k(x, i, y, j, sigma);
  const double cross = full ? 2 * sxy / (n * m) : 2 * sxy / (n * (n - 1));
  return sxx / (n * (n - 1)) + syy / (m * (m - 1)) - cross;
}

template <class E>
ErrorCode code_of(E&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::IoError;
}

}  // namespace

TEST(Rmse, ZeroAndUnitOffset) {
  std::vector<ContextStats> st{{1.0, 2.0}, {-3.0, 0.5}};
  std::vector<double> truth{1, 2, 3, 4, 5, 6};
  EXPECT_EQ(rmse(truth, truth, st), 0.0);
  std::vector<double> pred = truth;
  for (std::size_t h = 0; h < 3; ++h) {
    pred[h] += 2.0;
    pred[3 + h] -= 0.5;
  }
  EXPECT_NEAR(rmse(pred, truth, st), 1.0, 1e-15);
}

TEST(Rmse, MatchesDirectTranscription) {
  rng::Stream s(1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ContextStats> st{{s.normal(), 0.1 + s.uniform()}, {s.normal(), 0.1 + s.uniform()}};
    std::vector<double> p(6), x(6);
    for (auto& v : p) v = 3 * s.normal();
    for (auto& v : x) v = 3 * s.normal();
    double sum = 0;
    for (int b = 0; b < 2; ++b)
      for (int h = 0; h < 3; ++h) {
        const double ps = (p[b * 3 + h] - st[b].mean) / st[b].std;
        const double xs = (x[b * 3 + h] - st[b].mean) / st[b].std;
        sum += (ps - xs) * (ps - xs);
      }
    EXPECT_NEAR(rmse(p, x, st), std::sqrt(sum / 6.0), 1e-12);
  }
}

TEST(Rmse, InvariantToCommonAffineMap) {
  rng::Stream s(2);
  std::vector<ContextStats> st{{0.3, 1.4}, {-1.0, 0.7}, {2.0, 2.5}};
  std::vector<double> p(12), x(12);
  for (auto& v : p) v = s.normal();
  for (auto& v : x) v = s.normal();
  const double a = 3.5, c = -7.0;
  auto p2 = p, x2 = x;
  auto st2 = st;
  for (auto& v : p2) v = a * v + c;
  for (auto& v : x2) v = a * v + c;
  for (auto& e : st2) e = {a * e.mean + c, a * e.std};
  EXPECT_NEAR(rmse(p, x, st), rmse(p2, x2, st2), 1e-13);
}

TEST(Rmse, Errors) {
  std::vector<ContextStats> st{{0.0, 0.0}};
  std::vector<double> v{1, 2};
  EXPECT_EQ(code_of([&] { (void)rmse(v, v, st); }), ErrorCode::ZeroContextStd);
  std::vector<double> w{1, 2, 3};
  std::vector<ContextStats> ok{{0.0, 1.0}};
  EXPECT_EQ(code_of([&] { (void)rmse(v, w, ok); }), ErrorCode::ShapeMismatch);
}

TEST(Rmse, NodeAveragingAndSubsets) {
  // Two windows, two nodes, context 2, horizon 2.
  SeriesBatch truth(2, 2, 4, 2);
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t k = 0; k < 2; ++k) {
      truth.at(b, k, 0) = 0.0;
      truth.at(b, k, 1) = 2.0;  // context std 1, mean 1
    }
  truth.refresh_stats();
  auto pred = [](std::size_t, std::size_t k, std::size_t) { return k == 0 ? 1.0 : 3.0; };
  // Truth forecast values are 0: node 0 error 1, node 1 error 3.
  EXPECT_NEAR(node_mean_rmse(pred, truth), 2.0, 1e-15);
  const std::size_t only1[] = {1};
  EXPECT_NEAR(node_mean_rmse(pred, truth, only1), 3.0, 1e-15);
}

TEST(Summary, MeanAndSampleStd) {
  const double v[] = {1.0, 2.0, 3.0, 4.0};
  auto s = summarize_runs(v);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.std, std::sqrt(5.0 / 3.0));
  EXPECT_EQ(s.runs, 4u);
}

TEST(Mmd, FullCrossHandCaseIsZero) {
  Tensor2 a = Tensor2::Constant(2, 3, 0.7), b = a;
  MmdConfig cfg;
  cfg.bandwidth = Bandwidth::Fixed;
  cfg.sigma = 1.3;
  EXPECT_EQ(trajectory_mmd(a, b, cfg), 0.0);
}

TEST(Mmd, ThreePointHandValue) {
  // 1-D points {0, 1, 2} vs {0, 0, 1} with sigma = 1; k(d) = exp(-d^2 / 2).
  Tensor2 a(3, 1), b(3, 1);
  a << 0, 1, 2;
  b << 0, 0, 1;
  const double k1 = std::exp(-0.5), k2 = std::exp(-2.0);
  const double aa = 2 * (k1 + k2 + k1) / 6.0;
  const double bb = 2 * (1.0 + k1 + k1) / 6.0;
  // Cross pairs: a=0:(1,1,k1) a=1:(k1,k1,1) a=2:(k2,k2,k1)
  const double ab = (1 + 1 + k1 + k1 + k1 + 1 + k2 + k2 + k1) / 9.0;
  MmdConfig cfg;
  cfg.bandwidth = Bandwidth::Fixed;
  EXPECT_NEAR(trajectory_mmd(a, b, cfg), aa + bb - 2 * ab, 1e-15);
}

TEST(Mmd, MatchesBruteForceDoubleLoop) {
  rng::Stream s(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = static_cast<Eigen::Index>(2 + s.below(8));
    const auto m = static_cast<Eigen::Index>(2 + s.below(8));
    const auto d = static_cast<Eigen::Index>(1 + s.below(5));
    auto a = normal_rows(s, n, d), b = normal_rows(s, m, d, 0.5);
    const double med = brute_median(a, b);
    EXPECT_NEAR(pooled_median_distance(a, b), med, 1e-12);
    MmdConfig full;
    EXPECT_NEAR(trajectory_mmd(a, b, full), brute_mmd(a, b, med, true), 1e-12);
    full.bandwidth = Bandwidth::HalfPooledMedian;
    EXPECT_NEAR(trajectory_mmd(a, b, full), brute_mmd(a, b, 0.5 * med, true), 1e-12);
    full.bandwidth = Bandwidth::Fixed;
    full.sigma = 0.8;
    EXPECT_NEAR(trajectory_mmd(a, b, full), brute_mmd(a, b, 0.8, true), 1e-12);
    auto b2 = normal_rows(s, n, d, -0.3);
    MmdConfig paired;
    paired.estimator = MmdEstimator::PairedUnbiased;
    EXPECT_NEAR(trajectory_mmd(a, b2, paired), brute_mmd(a, b2, brute_median(a, b2), false), 1e-12);
  }
}

TEST(Mmd, SymmetricInItsArguments) {
  rng::Stream s(4);
  auto a = normal_rows(s, 7, 3), b = normal_rows(s, 9, 3, 1.0), c = normal_rows(s, 7, 3, 1.0);
  EXPECT_NEAR(trajectory_mmd(a, b), trajectory_mmd(b, a), 1e-14);
  MmdConfig paired;
  paired.estimator = MmdEstimator::PairedUnbiased;
  EXPECT_NEAR(trajectory_mmd(a, c, paired), trajectory_mmd(c, a, paired), 1e-14);
}

TEST(Mmd, SeparatesShiftedSamples) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    rng::Stream s(1000 + seed);
    auto a = normal_rows(s, 500, 2), same = normal_rows(s, 500, 2), shifted = normal_rows(s, 500, 2, 2.0);
    const double shift_mmd = trajectory_mmd(a, shifted);
    ASSERT_GT(shift_mmd, 0.0);
    ASSERT_GT(shift_mmd, trajectory_mmd(a, same)) << "seed " << seed;
  }
}

TEST(Mmd, Errors) {
  Tensor2 same = Tensor2::Constant(4, 2, 1.0);
  EXPECT_EQ(code_of([&] { (void)trajectory_mmd(same, same); }), ErrorCode::DegenerateSample);
  Tensor2 one = Tensor2::Zero(1, 2), two(2, 2);
  two << 0, 1, 1, 0;
  EXPECT_EQ(code_of([&] { (void)trajectory_mmd(one, two); }), ErrorCode::DegenerateSample);
  Tensor2 three = Tensor2::Random(3, 2);
  MmdConfig paired;
  paired.estimator = MmdEstimator::PairedUnbiased;
  EXPECT_EQ(code_of([&] { (void)trajectory_mmd(two, three, paired); }), ErrorCode::ShapeMismatch);
  MmdConfig bad;
  bad.bandwidth = Bandwidth::Fixed;
  bad.sigma = 0.0;
  EXPECT_EQ(code_of([&] { (void)trajectory_mmd(two, two, bad); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([&] { (void)trajectory_mmd(two, Tensor2::Zero(2, 3)); }), ErrorCode::ShapeMismatch);
}

TEST(IndependenceMmd, MatchesProductKernelTranscription) {
  rng::Stream s(5);
  const Eigen::Index n = 12;
  auto h = normal_rows(s, n, 3);
  std::vector<double> z(n);
  for (auto& v : z) v = s.normal();
  const auto res = a3_independence_mmd(z, h, 6);
  Tensor2 zo(n, 1), z1(n, 1), z2(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    zo(i, 0) = z[static_cast<std::size_t>(i)];
    z1(i, 0) = rng::normal_at({6, 1, static_cast<std::uint64_t>(i)});
    z2(i, 0) = rng::normal_at({6, 2, static_cast<std::uint64_t>(i)});
  }
  const double sh = 0.5 * brute_median(h, Tensor2(0, 3));
  auto joint = [&](const Tensor2& x, const Tensor2& y) {
    const double sz = 0.5 * brute_median(x, y);
    auto k = [&](const Tensor2& p, Eigen::Index i, const Tensor2& q, Eigen::Index j) {
      return brute_k(p, i, q, j, sz) * brute_k(h, i, h, j, sh);
    };
    double sxx = 0, syy = 0, sxy = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (i != j) {
          sxx += k(x, i, x, j);
          syy += k(y, i, y, j);
          sxy += k(x, i, y, j);
        }
    const double norm = static_cast<double>(n * (n - 1));
    return sxx / norm + syy / norm - 2 * sxy / norm;
  };
  EXPECT_NEAR(res.model, joint(zo, z1), 1e-12);
  EXPECT_NEAR(res.baseline, joint(z1, z2), 1e-12);
}

TEST(IndependenceMmd, NullCaseIsLikeTheBaseline) {
  // Spread of the baseline statistic across reseeds sets the scale.
  rng::Stream s(7);
  auto h = normal_rows(s, 300, 4);
  std::vector<double> z(300);
  for (auto& v : z) v = s.normal();
  std::vector<double> base;
  double model = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto r = a3_independence_mmd(z, h, 100 + seed);
    base.push_back(r.baseline);
    if (seed == 0) model = r.model;
  }
  const auto sb = summarize_runs(base);
  EXPECT_LE(std::abs(model - sb.mean), 3 * sb.std) << model << " vs " << sb.mean << " +- " << sb.std;
}

TEST(IndependenceMmd, DetectsInjectedDependence) {
  double model = 0, base = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    rng::Stream s(200 + seed);
    auto h = normal_rows(s, 300, 4);
    std::vector<double> z(300);
    for (Eigen::Index i = 0; i < 300; ++i) z[static_cast<std::size_t>(i)] = h(i, 0);
    auto r = a3_independence_mmd(z, h, 300 + seed);
    model += r.model;
    base += std::abs(r.baseline);
  }
  EXPECT_GT(model, 5 * base) << model / 20 << " vs " << base / 20;
}

TEST(IndependenceMmd, SampleTooSmall) {
  std::vector<double> z(9, 0.0);
  EXPECT_EQ(code_of([&] { (void)a3_independence_mmd(z, Tensor2::Random(9, 2), 1); }), ErrorCode::SampleTooSmall);
}
