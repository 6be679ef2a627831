#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "predfilt/net.hpp"

using namespace predfilt;

namespace {

NetworkSpec small_net() { return NetworkSpec{2, {16, 16}, 1, Activation::kElu}; }

Vector random_x(int n, Philox& rng) { return oracle::random_matrix(n, 1, rng); }

}  // namespace

TEST(Elu, Values) {
  EXPECT_EQ(elu(0.0), 0.0);
  EXPECT_EQ(elu(1.0), 1.0);
  EXPECT_NEAR(elu(-1.0), -0.6321205588285577, 1e-15);
  // C¹ at zero: the one-sided slopes agree.
  const double h = 1e-7;
  EXPECT_NEAR((elu(h) - elu(0)) / h, (elu(0) - elu(-h)) / h, 1e-6);
}

TEST(Init, Deterministic) {
  const NetworkSpec spec = small_net();
  EXPECT_EQ(init_params(spec, 5).theta, init_params(spec, 5).theta);
  EXPECT_NE(init_params(spec, 5).theta, init_params(spec, 6).theta);
}

TEST(Init, LinearModelCounts) {
  const NetworkSpec spec{3, {}, 2, Activation::kElu};
  const FlatParams p = init_params(spec, 1);
  EXPECT_EQ(p.size(), (3 + 1) * 2);
  EXPECT_EQ(p.split, 0);
}

TEST(Init, LayerVarianceMatchesFanIn) {
  const NetworkSpec spec{100, {100}, 1, Activation::kElu};
  const auto layers = unflatten(spec, init_params(spec, 3));
  const Matrix& w = layers[0].weight;  // 10⁴ entries
  const double mean = w.mean();
  const double var = (w.array() - mean).square().sum() / (w.size() - 1);
  EXPECT_NEAR(var, 1.0 / 100, 0.2 / 100);
  EXPECT_EQ(layers[0].bias.norm(), 0.0);
}

TEST(Forward, LinearReadout) {
  const NetworkSpec spec{3, {}, 1, Activation::kElu};
  FlatParams p{Vector::Zero(4), 0};
  p.theta(0) = 1.0;
  const Vector x = (Vector(3) << 0.3, -2.0, 7.0).finished();
  EXPECT_EQ(forward(spec, p, x)(0), 0.3);
}

TEST(Forward, ZeroLastLayerGivesZero) {
  const NetworkSpec spec = small_net();
  FlatParams p = init_params(spec, 4);
  p.theta.tail(p.size() - p.split).setZero();
  Philox rng(1, Stream::kTest);
  EXPECT_EQ(forward(spec, p, random_x(2, rng))(0), 0.0);
}

TEST(Forward, MatchesLoopOracle) {
  Philox rng(2, Stream::kTest);
  for (Activation act : {Activation::kElu, Activation::kTanh, Activation::kRelu}) {
    const NetworkSpec spec{4, {7, 5}, 3, act};
    FlatParams p = init_params(spec, 9);
    p.theta += 0.1 * oracle::random_matrix(static_cast<int>(p.size()), 1, rng);
    const Vector x = random_x(4, rng);
    EXPECT_LE((forward(spec, p, x) - oracle::forward_loops(spec, unflatten(spec, p), x)).norm(), 1e-12);
  }
}

TEST(Forward, BatchMatchesSingle) {
  Philox rng(3, Stream::kTest);
  const NetworkSpec spec{3, {8}, 2, Activation::kTanh};
  const FlatParams p = init_params(spec, 1);
  const Matrix xs = oracle::random_matrix(3, 5, rng);
  const Matrix out = forward_batch(spec, p, xs);
  for (int j = 0; j < 5; ++j) EXPECT_LE((out.col(j) - forward(spec, p, xs.col(j))).norm(), 1e-14);
}

TEST(Forward, WrongInputSizeThrows) {
  const NetworkSpec spec = small_net();
  EXPECT_THROW(forward(spec, init_params(spec, 1), Vector::Zero(3)), std::invalid_argument);
}

TEST(Jacobian, LinearModel) {
  const NetworkSpec spec{3, {}, 1, Activation::kElu};
  const FlatParams p = init_params(spec, 1);
  const Vector x = (Vector(3) << 1.5, -2.0, 0.5).finished();
  const JacobianPair jp = jacobians(spec, p, x);
  EXPECT_EQ(jp.h_tilde.cols(), 0);
  const Vector want = (Vector(4) << 1.5, -2.0, 0.5, 1.0).finished();
  EXPECT_EQ(Vector(jp.l_tilde.row(0).transpose()), want);
}

TEST(Jacobian, FiniteDifferenceOracle) {
  Philox rng(4, Stream::kTest);
  const NetworkSpec spec = small_net();
  const FlatParams p = init_params(spec, 8);
  const Vector x = random_x(2, rng);
  const JacobianPair jp = jacobians(spec, p, x);
  Matrix j(1, p.size());
  j << jp.h_tilde, jp.l_tilde;
  const Matrix fd = oracle::fd_jacobian(spec, p, x);
  EXPECT_LE((j - fd).norm() / fd.norm(), 1e-4);
}

TEST(Jacobian, MultiOutputFiniteDifference) {
  Philox rng(5, Stream::kTest);
  const NetworkSpec spec{3, {6, 4}, 3, Activation::kTanh};
  const FlatParams p = init_params(spec, 2);
  const Vector x = random_x(3, rng);
  const JacobianPair jp = jacobians(spec, p, x);
  Matrix j(3, p.size());
  j << jp.h_tilde, jp.l_tilde;
  const Matrix fd = oracle::fd_jacobian(spec, p, x);
  EXPECT_LE((j - fd).norm() / fd.norm(), 1e-6);
}

TEST(Jacobian, Deterministic) {
  const NetworkSpec spec = small_net();
  const FlatParams p = init_params(spec, 8);
  const Vector x = Vector::Constant(2, 0.3);
  const JacobianPair a = jacobians(spec, p, x), b = jacobians(spec, p, x);
  EXPECT_EQ(a.l_tilde, b.l_tilde);
  EXPECT_EQ(a.h_tilde, b.h_tilde);
}

TEST(Jacobian, LastLayerJacobianIndependentOfEta) {
  Philox rng(6, Stream::kTest);
  const NetworkSpec spec = small_net();
  FlatParams p = init_params(spec, 8);
  const Vector x = random_x(2, rng);
  const Matrix before = jacobians(spec, p, x).l_tilde;
  p.theta.tail(p.size() - p.split) += oracle::random_matrix(static_cast<int>(p.size() - p.split), 1, rng);
  EXPECT_EQ(jacobians(spec, p, x).l_tilde, before);
}

TEST(Jacobian, SecondOrderConsistency) {
  Philox rng(7, Stream::kTest);
  const NetworkSpec spec{2, {8, 8}, 1, Activation::kElu};
  for (int trial = 0; trial < 10; ++trial) {
    const FlatParams p = init_params(spec, 20 + trial);
    const Vector x = random_x(2, rng);
    const JacobianPair jp = jacobians(spec, p, x);
    Matrix j(1, p.size());
    j << jp.h_tilde, jp.l_tilde;
    const Vector dir = oracle::random_matrix(static_cast<int>(p.size()), 1, rng);
    auto err = [&](double scale) {
      FlatParams q = p;
      q.theta += scale * dir;
      return std::abs((j * (scale * dir))(0) - (forward(spec, q, x) - forward(spec, p, x))(0));
    };
    const double e1 = err(1e-3), e2 = err(5e-4);
    if (e1 < 1e-11) continue;
    EXPECT_GE(e1 / e2, 3.5) << "trial " << trial;
  }
}

TEST(Jvp, MatchesJacobianProduct) {
  Philox rng(8, Stream::kTest);
  const NetworkSpec spec{3, {5, 5}, 2, Activation::kElu};
  const FlatParams p = init_params(spec, 3);
  const Vector delta = oracle::random_matrix(static_cast<int>(p.size()), 1, rng);
  const Matrix xs = oracle::random_matrix(3, 4, rng);
  const Matrix jv = jvp_batch(spec, p, delta, xs);
  for (int c = 0; c < 4; ++c) {
    const JacobianPair jp = jacobians(spec, p, xs.col(c));
    Matrix j(2, p.size());
    j << jp.h_tilde, jp.l_tilde;
    EXPECT_LE((jv.col(c) - j * delta).norm(), 1e-12);
  }
}

TEST(InputGradient, MatchesFiniteDifference) {
  Philox rng(9, Stream::kTest);
  for (Activation act : {Activation::kElu, Activation::kTanh}) {
    const NetworkSpec spec{3, {6, 6}, 2, act};
    const FlatParams p = init_params(spec, 4);
    const Vector delta = 0.3 * oracle::random_matrix(static_cast<int>(p.size()), 1, rng);
    const Vector x = random_x(3, rng);
    for (int head = 0; head < 2; ++head) {
      auto g = [&](const Vector& z) {
        return (forward(spec, p, z) + jvp_batch(spec, p, delta, z))(head);
      };
      Vector fd(3);
      for (int i = 0; i < 3; ++i) {
        Vector a = x, b = x;
        a(i) += 1e-6;
        b(i) -= 1e-6;
        fd(i) = (g(a) - g(b)) / 2e-6;
      }
      EXPECT_LE((input_gradient(spec, p, delta, x, head) - fd).norm(), 1e-6 * std::max(1.0, fd.norm()));
    }
  }
}

TEST(Params, RoundTrip) {
  const NetworkSpec spec{3, {4}, 2, Activation::kElu};
  const FlatParams p = init_params(spec, 1);
  EXPECT_EQ(flatten(spec, unflatten(spec, p)).theta, p.theta);
  const auto layers = unflatten(spec, p);
  const auto again = unflatten(spec, flatten(spec, layers));
  for (std::size_t l = 0; l < layers.size(); ++l) {
    EXPECT_EQ(layers[l].weight, again[l].weight);
    EXPECT_EQ(layers[l].bias, again[l].bias);
  }
}

TEST(Params, HashDistinguishesArchitectures) {
  EXPECT_NE((NetworkSpec{2, {8}, 1}).hash(), (NetworkSpec{2, {8, 8}, 1}).hash());
  EXPECT_EQ((NetworkSpec{2, {8}, 1}).hash(), (NetworkSpec{2, {8}, 1}).hash());
}

TEST(Params, ValidateRejectsZeroWidth) {
  EXPECT_THROW((NetworkSpec{2, {0}, 1}).validate(), std::invalid_argument);
  EXPECT_THROW((NetworkSpec{2, {}, 0}).validate(), std::invalid_argument);
  EXPECT_THROW(parse_activation("swish"), std::invalid_argument);
}

TEST(Jvp, RowsMatchExplicitJacobian) {
  const NetworkSpec spec{2, {5, 4}, 3, Activation::kElu};
  const FlatParams p = init_params(spec, 8);
  Philox rng(9, Stream::kTest);
  const Vector x = oracle::random_matrix(2, 1, rng);
  const JacobianPair jp = jacobians(spec, p, x);
  const Eigen::Index dw = spec.hidden_param_count();
  const Matrix hidden = oracle::random_matrix(6, dw, rng);
  const Matrix last = oracle::random_matrix(4, spec.last_param_count(), rng);
  EXPECT_LE((jvp_rows(spec, p, x, hidden, 0) - jp.h_tilde * hidden.transpose()).norm(), 1e-12);
  EXPECT_LE((jvp_rows(spec, p, x, last, dw) - jp.l_tilde * last.transpose()).norm(), 1e-12);
  // First hidden layer only.
  const Eigen::Index first = 5 * 3;
  const Matrix part = oracle::random_matrix(3, first, rng);
  EXPECT_LE((jvp_rows(spec, p, x, part, 0) - jp.h_tilde.leftCols(first) * part.transpose()).norm(), 1e-12);
  EXPECT_THROW(jvp_rows(spec, p, x, Matrix::Zero(1, first - 1), 0), std::invalid_argument);
}
