// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "fdnas/error.hpp"
#include "fdnas/nn/loss.hpp"
#include "fdnas/nn/ops.hpp"
#include "fdnas/nn/optim.hpp"
#include "fdnas/rng.hpp"
#include "selftest/gradcheck.hpp"

namespace fdnas {
namespace {

Tensor random_tensor(const Shape& shape, Rng& rng) {
  Tensor t(shape);
  for (double& v : t.values()) v = rng.normal();
  return t;
}

// Direct same-padded convolution of one example [c, h, w].
std::vector<double> conv_oracle(const Tensor& x, std::size_t b, const Tensor& w, const Tensor& bias, bool relu) {
  const std::size_t cin = x.dim(1), h = x.dim(2), wd = x.dim(3), cout = w.dim(0), k = w.dim(2);
  const long p = static_cast<long>(k / 2);
  std::vector<double> y(cout * h * wd);
  for (std::size_t o = 0; o < cout; ++o) {
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < wd; ++j) {
        double s = bias[o];
        for (std::size_t c = 0; c < cin; ++c) {
          for (std::size_t ky = 0; ky < k; ++ky) {
            for (std::size_t kx = 0; kx < k; ++kx) {
              const long yy = static_cast<long>(i + ky) - p, xx = static_cast<long>(j + kx) - p;
              if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) || xx >= static_cast<long>(wd)) continue;
              s += w[((o * cin + c) * k + ky) * k + kx] * x[((b * cin + c) * h + yy) * wd + xx];
            }
          }
        }
        y[(o * h + i) * wd + j] = relu ? std::max(0.0, s) : s;
      }
    }
  }
  return y;
}

// Per-example helpers on [c, h, w] vectors.
std::vector<double> pointwise(const std::vector<double>& x, std::size_t cin, std::size_t hw, const Tensor& w,
                              const Tensor& b, bool relu) {
  const std::size_t cout = w.dim(0);
  std::vector<double> y(cout * hw);
  for (std::size_t o = 0; o < cout; ++o) {
    for (std::size_t s = 0; s < hw; ++s) {
      double v = b[o];
      for (std::size_t c = 0; c < cin; ++c) v += w[o * cin + c] * x[c * hw + s];
      y[o * hw + s] = relu ? std::max(0.0, v) : v;
    }
  }
  return y;
}

std::vector<double> depthwise(const std::vector<double>& x, std::size_t ch, std::size_t h, std::size_t wd,
                              const Tensor& w, const Tensor& b) {
  const std::size_t k = w.dim(1);
  const long p = static_cast<long>(k / 2);
  std::vector<double> y(ch * h * wd);
  for (std::size_t c = 0; c < ch; ++c) {
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < wd; ++j) {
        double s = b[c];
        for (std::size_t ky = 0; ky < k; ++ky) {
          for (std::size_t kx = 0; kx < k; ++kx) {
            const long yy = static_cast<long>(i + ky) - p, xx = static_cast<long>(j + kx) - p;
            if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) || xx >= static_cast<long>(wd)) continue;
            s += w[(c * k + ky) * k + kx] * x[(c * h + yy) * wd + xx];
          }
        }
        y[(c * h + i) * wd + j] = std::max(0.0, s);
      }
    }
  }
  return y;
}

void expect_near_all(std::span<const double> got, std::span<const double> want, double tol) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], tol) << "index " << i;
}

TEST(Ops, ConvMatchesDirectLoops) {
  Rng rng(1);
  for (bool relu : {true, false}) {
    const Conv op{3, 4, relu};
    const Tensor x = random_tensor({2, 3, 5, 6}, rng);
    std::vector<Tensor> params{random_tensor({4, 3, 3, 3}, rng), random_tensor({4}, rng)};
    const OpForward f = op_forward(op, params, x);
    ASSERT_EQ(f.output.shape(), (Shape{2, 4, 5, 6}));
    for (std::size_t b = 0; b < 2; ++b) {
      const auto want = conv_oracle(x, b, params[0], params[1], relu);
      expect_near_all(std::span(f.output.data() + b * want.size(), want.size()), want, 1e-12);
    }
  }
}

TEST(Ops, DepthwiseSeparableMatchesComposition) {
  Rng rng(2);
  for (const auto& [cin, op] : std::vector<std::pair<std::size_t, DepthwiseSepConv>>{
           {3, {3, 3, 1}}, {3, {3, 3, 3}}, {3, {5, 3, 3}}, {2, {3, 4, 3}}}) {
    const std::size_t h = 5, w = 4, hw = h * w;
    const Shape ex{cin, h, w};
    std::vector<Tensor> params;
    for (const Shape& s : op_param_shapes(op, ex)) params.push_back(random_tensor(s, rng));
    const Tensor x = random_tensor(with_batch(2, ex), rng);
    const OpForward f = op_forward(op, params, x);
    for (std::size_t b = 0; b < 2; ++b) {
      std::vector<double> xb(x.data() + b * cin * hw, x.data() + (b + 1) * cin * hw);
      std::vector<double> y;
      if (op.expansion == 1) {
        y = depthwise(xb, cin, h, w, params[0], params[1]);
        y = pointwise(y, cin, hw, params[2], params[3], false);
      } else {
        const std::size_t mid = cin * op.expansion;
        y = pointwise(xb, cin, hw, params[0], params[1], true);
        y = depthwise(y, mid, h, w, params[2], params[3]);
        y = pointwise(y, mid, hw, params[4], params[5], false);
      }
      if (cin == op.channels) {
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += xb[i];
      }
      expect_near_all(std::span(f.output.data() + b * y.size(), y.size()), y, 1e-12);
    }
  }
}

TEST(Ops, DenseAndPooling) {
  Rng rng(3);
  const Tensor x = random_tensor({1, 2, 4, 4}, rng);
  std::vector<Tensor> dp{random_tensor({3, 32}, rng), random_tensor({3}, rng)};
  const OpForward d = op_forward(Dense{3}, dp, x);
  for (std::size_t o = 0; o < 3; ++o) {
    double s = dp[1][o];
    for (std::size_t i = 0; i < 32; ++i) s += dp[0][o * 32 + i] * x[i];
    EXPECT_NEAR(d.output[o], s, 1e-12);
  }
  const OpForward p2 = op_forward(AvgPool{2, 2}, {}, x);
  ASSERT_EQ(p2.output.shape(), (Shape{1, 2, 2, 2}));
  EXPECT_NEAR(p2.output[0], (x[0] + x[1] + x[4] + x[5]) / 4.0, 1e-15);
  const OpForward p3 = op_forward(AvgPool{3, 1}, {}, x);
  ASSERT_EQ(p3.output.shape(), x.shape());
  // Corner: zero padding counted in the divisor.
  EXPECT_NEAR(p3.output[0], (x[0] + x[1] + x[4] + x[5]) / 9.0, 1e-15);
}

TEST(Ops, IdentityAndZero) {
  Rng rng(4);
  const Tensor x = random_tensor({2, 3, 4, 4}, rng);
  EXPECT_EQ(op_forward(Identity{}, {}, x).output, x);
  const OpForward z = op_forward(Zero{}, {}, x);
  EXPECT_EQ(z.output, Tensor(x.shape()));
  const OpBackward zb = op_backward(Zero{}, {}, z.cache, random_tensor(x.shape(), rng));
  EXPECT_EQ(zb.grad_input, Tensor(x.shape()));
}

TEST(Ops, GradientsMatchCentralDifferences) {
  Rng rng(5);
  const std::vector<std::pair<OpKind, Shape>> cases{
      {Identity{}, {3, 4, 4}},         {Zero{}, {3, 4, 4}},           {Conv{3, 3, true}, {2, 5, 5}},
      {Conv{5, 2, false}, {2, 6, 6}},  {Dense{4}, {2, 3, 3}},         {AvgPool{2, 2}, {2, 6, 6}},
      {AvgPool{3, 1}, {2, 5, 5}},      {DepthwiseSepConv{3, 3, 1}, {3, 5, 5}},
      {DepthwiseSepConv{3, 3, 3}, {3, 4, 4}}, {DepthwiseSepConv{5, 3, 3}, {3, 6, 6}},
      {DepthwiseSepConv{3, 4, 6}, {2, 4, 4}}};
  for (const auto& [op, shape] : cases) {
    for (int rep = 0; rep < 3; ++rep) {
      const auto gc = selftest::check_op(op, shape, rng);
      EXPECT_FALSE(gc.analytic.empty()) << op_name(op);
      EXPECT_LE(selftest::relative_error(gc.analytic, gc.numeric), 1e-6) << op_name(op);
    }
  }
}

TEST(Ops, ParamsOnlySkipsInputGradient) {
  Rng rng(6);
  const Conv op{3, 2, true};
  const Tensor x = random_tensor({1, 2, 4, 4}, rng);
  std::vector<Tensor> params{random_tensor({2, 2, 3, 3}, rng), random_tensor({2}, rng)};
  const OpForward f = op_forward(op, params, x);
  const Tensor g = random_tensor(f.output.shape(), rng);
  const OpBackward full = op_backward(op, params, f.cache, g);
  const OpBackward po = op_backward(op, params, f.cache, g, GradRequest::kParamsOnly);
  EXPECT_TRUE(po.grad_input.empty());
  EXPECT_EQ(po.grad_params, full.grad_params);
}

TEST(OpKinds, HandCountedParamsAndMacs) {
  // dwsep3x3_e3, 4 -> 4 channels on 8x8: expand 4*12+12, depthwise 12*9+12, project 12*4+4.
  const DepthwiseSepConv e3{3, 4, 3};
  EXPECT_EQ(op_param_count(e3, {4, 8, 8}), 60u + 120u + 52u);
  EXPECT_EQ(op_macs(e3, {4, 8, 8}), 4u * 12 * 64 + 9u * 12 * 64 + 12u * 4 * 64);
  // dwsep3x3_e1: depthwise 4*9+4, project 4*4+4.
  EXPECT_EQ(op_param_count(DepthwiseSepConv{3, 4, 1}, {4, 8, 8}), 40u + 20u);
  EXPECT_EQ(op_param_count(Conv{3, 4, true}, {1, 8, 8}), 36u + 4u);
  EXPECT_EQ(op_macs(Conv{3, 4, true}, {1, 8, 8}), 9u * 4 * 64);
  EXPECT_EQ(op_macs(Dense{6}, {4, 4, 4}), 384u);
  EXPECT_EQ(op_macs(Identity{}, {4, 4, 4}), 0u);
}

TEST(OpKinds, NamesRoundTripAndRejectBadShapes) {
  for (const char* name : {"zero", "identity", "dwsep3x3_e1", "dwsep3x3_e3", "dwsep5x5_e3"}) {
    EXPECT_EQ(op_name(parse_op(name, 4)), name);
  }
  EXPECT_THROW(parse_op("maxpool", 4), ArgumentError);
  EXPECT_THROW(op_output_shape(Conv{2, 4, true}, {1, 8, 8}), ShapeError);
  EXPECT_THROW(op_output_shape(AvgPool{3, 2}, {1, 2, 2}), ShapeError);
}

TEST(Loss, CrossEntropyMatchesLogSumExp) {
  const Tensor logits({2, 3}, {1.0, 2.0, 3.0, -1.0, 0.5, 0.0});
  const std::vector<Label> y{2, 0};
  const LossResult r = cross_entropy(logits, y);
  const double l0 = std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0)) - 3.0;
  const double l1 = std::log(std::exp(-1.0) + std::exp(0.5) + std::exp(0.0)) + 1.0;
  EXPECT_NEAR(r.loss, 0.5 * (l0 + l1), 1e-14);
  const double z0 = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  EXPECT_NEAR(r.grad[0], 0.5 * std::exp(1.0) / z0, 1e-14);
  EXPECT_NEAR(r.grad[2], 0.5 * (std::exp(3.0) / z0 - 1.0), 1e-14);
  EXPECT_EQ(predict(logits), (std::vector<Label>{2, 1}));
  EXPECT_EQ(count_correct(logits, y), 1u);
}

TEST(Loss, LargeLogitsStayFinite) {
  const Tensor logits({1, 2}, {1000.0, -1000.0});
  const LossResult r = cross_entropy(logits, std::vector<Label>{1});
  EXPECT_NEAR(r.loss, 2000.0, 1e-9);
  EXPECT_TRUE(r.grad.all_finite());
}

TEST(Optim, SgdMomentumMatchesRecurrence) {
  std::vector<Tensor> w{Tensor({2}, {1.0, -2.0}), Tensor({1}, {5.0})};
  OptimizerState st = OptimizerState::make_sgd({0.9, 0.01});
  const std::vector<std::vector<double>> gs{{0.5, -1.0}, {0.25, 2.0}};
  double w0 = 1.0, w1 = -2.0, v0 = 0.0, v1 = 0.0;
  for (const auto& g : gs) {
    GradSet grads{Tensor({2}, g), std::nullopt};
    sgd_momentum_step(w, grads, st, 0.1);
    v0 = 0.9 * v0 + g[0] + 0.01 * w0;
    v1 = 0.9 * v1 + g[1] + 0.01 * w1;
    w0 -= 0.1 * v0;
    w1 -= 0.1 * v1;
  }
  EXPECT_NEAR(w[0][0], w0, 1e-15);
  EXPECT_NEAR(w[0][1], w1, 1e-15);
  EXPECT_EQ(w[1][0], 5.0);
}

TEST(Optim, AdamMatchesStraightLineUpdate) {
  std::vector<Tensor> w{Tensor({1}, {0.3})};
  OptimizerState st = OptimizerState::make_adam({0.9, 0.999, 1e-8});
  adam_step(w, GradSet{Tensor({1}, {0.2})}, st, 0.01);
  adam_step(w, GradSet{Tensor({1}, {-0.1})}, st, 0.01);
  double m = 0.1 * 0.2, v = 0.001 * 0.04, x = 0.3;
  x -= 0.01 * (m / 0.1) / (std::sqrt(v / 0.001) + 1e-8);
  m = 0.9 * m + 0.1 * -0.1;
  v = 0.999 * v + 0.001 * 0.01;
  x -= 0.01 * (m / (1 - 0.81)) / (std::sqrt(v / (1 - 0.999 * 0.999)) + 1e-8);
  EXPECT_NEAR(w[0][0], x, 1e-15);
  EXPECT_EQ(st.steps[0], 2u);
}

TEST(Optim, CosineScheduleEndpoints) {
  EXPECT_DOUBLE_EQ(cosine_lr(0, 40, 0.05), 0.05);
  EXPECT_NEAR(cosine_lr(20, 40, 0.05), 0.025, 1e-15);
  EXPECT_NEAR(cosine_lr(40, 40, 0.05), 0.0, 1e-15);
  EXPECT_THROW(cosine_lr(1, 0, 0.05), ArgumentError);
}

TEST(Optim, NonFiniteUpdateIsReported) {
  std::vector<Tensor> w{Tensor({1}, {1.0})};
  OptimizerState st = OptimizerState::make_sgd({});
  EXPECT_THROW(sgd_momentum_step(w, GradSet{Tensor({1}, {std::nan("")})}, st, 0.1), NumericError);
}

TEST(Rng, DerivedSeedsAreStableAndDistinct) {
  EXPECT_EQ(derive_seed(7, {1, 2}), derive_seed(7, {1, 2}));
  EXPECT_NE(derive_seed(7, {1, 2}), derive_seed(7, {2, 1}));
  EXPECT_NE(derive_seed(7, {1}), derive_seed(8, {1}));
  Rng a(9), b(9);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.next(), b.next());
}

}  // namespace
}  // namespace fdnas
