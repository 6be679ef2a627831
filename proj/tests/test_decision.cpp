#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "predfilt/decision.hpp"

using namespace predfilt;

namespace {

// Linear reward model y = w·x + b with a given dense covariance.
const NetworkSpec kLinear2{2, {}, 1, Activation::kElu};

DenseBelief linear_belief(const Vector& mean, const Matrix& cov) { return DenseBelief{mean, cov}; }

// Multi-head model whose outputs are the biases alone (zero weights).
DenseBelief head_belief(const Vector& biases, double var, int ctx = 1) {
  const int k = static_cast<int>(biases.size());
  const int n = k * ctx + k;
  Vector mean = Vector::Zero(n);
  mean.tail(k) = biases;
  Matrix cov = Matrix::Zero(n, n);
  cov.bottomRightCorner(k, k) = var * Matrix::Identity(k, k);
  return DenseBelief{mean, cov};
}

double three_sigma(double p, int n) { return 3.0 * std::sqrt(p * (1 - p) / n); }

}  // namespace

TEST(PredictiveSampling, ZeroVarianceIsArgmax) {
  const NetworkSpec spec{1, {}, 2, Activation::kElu};
  const Belief b = head_belief(Vector{{1.0, 0.0}}, 0.0);
  Philox rng(1, Stream::kAgent);
  for (int i = 0; i < 20; ++i) {
    EXPECT_EQ(predictive_sample_action(b, spec, Vector::Zero(1), DiscreteActions::output_heads(2),
                                       NoiseConfig::isotropic(1, 0.0), rng)
                  .action,
              0);
  }
}

TEST(PredictiveSampling, SingleAction) {
  const NetworkSpec spec{1, {}, 1, Activation::kElu};
  Philox rng(1, Stream::kAgent);
  EXPECT_EQ(predictive_sample_action(head_belief(Vector{{0.3}}, 1.0), spec, Vector::Zero(1),
                                     DiscreteActions::output_heads(1), NoiseConfig::isotropic(1, 1.0), rng)
                .action,
            0);
}

TEST(PredictiveSampling, EmptySetThrows) {
  Philox rng(1, Stream::kAgent);
  EXPECT_THROW(predictive_sample_action(linear_belief(Vector::Zero(3), Matrix::Identity(3, 3)), kLinear2,
                                        Vector::Zero(1), DiscreteActions::concatenate({}),
                                        NoiseConfig::isotropic(1, 0.1), rng),
               std::invalid_argument);
  EXPECT_THROW(thompson_sample_action(linear_belief(Vector::Zero(3), Matrix::Identity(3, 3)), kLinear2,
                                      Vector::Zero(1), DiscreteActions::concatenate({}), rng),
               std::invalid_argument);
}

TEST(PredictiveSampling, UniformOverIdenticalActions) {
  const int k = 4, n = 10000;
  const NetworkSpec spec{1, {}, k, Activation::kElu};
  const Belief b = head_belief(Vector::Zero(k), 1.0);
  Philox rng(2, Stream::kAgent);
  std::vector<int> counts(k, 0);
  for (int i = 0; i < n; ++i) {
    ++counts[predictive_sample_action(b, spec, Vector::Zero(1), DiscreteActions::output_heads(k),
                                      NoiseConfig::isotropic(1, 0.5), rng)
                 .action];
  }
  for (int c : counts) EXPECT_NEAR(c / double(n), 1.0 / k, three_sigma(1.0 / k, n));
}

TEST(PredictiveSampling, ConcatenatedFeaturesUseOutputZero) {
  // Reward = w·(context, a); with zero covariance the larger feature wins.
  const Belief b = linear_belief(Vector{{0.0, 1.0, 0.0}}, Matrix::Zero(3, 3));
  const DiscreteActions acts = DiscreteActions::concatenate({Vector{{-1.0}}, Vector{{2.0}}, Vector{{0.5}}});
  Philox rng(3, Stream::kAgent);
  EXPECT_EQ(predictive_sample_action(b, kLinear2, Vector{{0.3}}, acts, NoiseConfig::isotropic(1, 0.0), rng).action,
            1);
  EXPECT_EQ(thompson_sample_action(b, kLinear2, Vector{{0.3}}, acts, rng).action, 1);
  EXPECT_EQ(epsilon_greedy_action(b, kLinear2, Vector{{0.3}}, acts, 0.0, rng), 1);
}

TEST(PredictiveSampling, AffineInvarianceOfChoice) {
  const int k = 5;
  const NetworkSpec spec{1, {}, k, Activation::kElu};
  const Belief b = head_belief(Vector{{0.1, 0.3, -0.2, 0.0, 0.25}}, 0.2);
  const NoiseConfig noise = NoiseConfig::isotropic(1, 0.1);
  Philox rng(4, Stream::kAgent);
  for (int i = 0; i < 200; ++i) {
    const SampledChoice c = predictive_sample_action(b, spec, Vector::Zero(1), DiscreteActions::output_heads(k), noise, rng);
    EXPECT_EQ(argmax_first((3.0 * c.sampled).array() - 7.0), c.action);
  }
}

TEST(PredictiveSampling, Deterministic) {
  const int k = 3;
  const NetworkSpec spec{1, {}, k, Activation::kElu};
  const Belief b = head_belief(Vector::Zero(k), 1.0);
  Philox a(9, Stream::kAgent), c(9, Stream::kAgent);
  for (int i = 0; i < 50; ++i) {
    const auto x = predictive_sample_action(b, spec, Vector::Zero(1), DiscreteActions::output_heads(k),
                                            NoiseConfig::isotropic(1, 0.5), a);
    const auto y = predictive_sample_action(b, spec, Vector::Zero(1), DiscreteActions::output_heads(k),
                                            NoiseConfig::isotropic(1, 0.5), c);
    ASSERT_EQ(x.sampled, y.sampled);
  }
}

TEST(Thompson, ZeroCovarianceIsGreedy) {
  const int k = 3;
  const NetworkSpec spec{1, {}, k, Activation::kElu};
  Philox rng(5, Stream::kAgent);
  EXPECT_EQ(thompson_sample_action(head_belief(Vector{{0.0, 0.5, 0.2}}, 0.0), spec, Vector::Zero(1),
                                   DiscreteActions::output_heads(k), rng)
                .action,
            1);
}

TEST(Thompson, UniformOverIdenticalActions) {
  const int k = 4, n = 10000;
  const NetworkSpec spec{1, {}, k, Activation::kElu};
  const Belief b = head_belief(Vector::Zero(k), 1.0);
  Philox rng(6, Stream::kAgent);
  std::vector<int> counts(k, 0);
  for (int i = 0; i < n; ++i) {
    ++counts[thompson_sample_action(b, spec, Vector::Zero(1), DiscreteActions::output_heads(k), rng).action];
  }
  for (int c : counts) EXPECT_NEAR(c / double(n), 1.0 / k, three_sigma(1.0 / k, n));
}

TEST(Thompson, MatchesPredictiveSamplingForOrthogonalJacobians) {
  // Two heads with independent biases and R = 0: both policies pick arm 0
  // with probability P(N(0.2, 1) > N(0, 1)) = Φ(0.2/√2).
  const NetworkSpec spec{1, {}, 2, Activation::kElu};
  const Belief b = head_belief(Vector{{0.2, 0.0}}, 1.0);
  const double want = 0.5 * std::erfc(-(0.2 / std::sqrt(2.0)) / std::sqrt(2.0));
  const int n = 20000;
  Philox r1(7, Stream::kAgent), r2(8, Stream::kAgent);
  int ts = 0, ps = 0;
  for (int i = 0; i < n; ++i) {
    ts += thompson_sample_action(b, spec, Vector::Zero(1), DiscreteActions::output_heads(2), r1).action == 0;
    ps += predictive_sample_action(b, spec, Vector::Zero(1), DiscreteActions::output_heads(2),
                                   NoiseConfig::isotropic(1, 0.0), r2)
              .action == 0;
  }
  EXPECT_NEAR(ts / double(n), want, three_sigma(want, n));
  EXPECT_NEAR(ps / double(n), want, three_sigma(want, n));
}

TEST(EpsilonGreedy, Limits) {
  const int k = 4;
  const NetworkSpec spec{1, {}, k, Activation::kElu};
  const Belief b = head_belief(Vector{{0.0, 0.0, 1.0, 0.0}}, 0.5);
  Philox rng(10, Stream::kAgent);
  for (int i = 0; i < 50; ++i) {
    EXPECT_EQ(epsilon_greedy_action(b, spec, Vector::Zero(1), DiscreteActions::output_heads(k), 0.0, rng), 2);
  }
  std::vector<int> counts(k, 0);
  const int n = 10000;
  for (int i = 0; i < n; ++i) ++counts[epsilon_greedy_action(b, spec, Vector::Zero(1), DiscreteActions::output_heads(k), 1.0, rng)];
  for (int c : counts) EXPECT_NEAR(c / double(n), 0.25, three_sigma(0.25, n));
  EXPECT_THROW(epsilon_greedy_action(b, spec, Vector::Zero(1), DiscreteActions::output_heads(k), 1.5, rng),
               std::invalid_argument);
}

TEST(EpsilonGreedy, NonGreedyFraction) {
  const int k = 5, n = 10000;
  const NetworkSpec spec{1, {}, k, Activation::kElu};
  const Belief b = head_belief(Vector{{0.0, 1.0, 0.0, 0.0, 0.0}}, 0.5);
  Philox rng(11, Stream::kAgent);
  int off = 0;
  for (int i = 0; i < n; ++i) {
    off += epsilon_greedy_action(b, spec, Vector::Zero(1), DiscreteActions::output_heads(k), 0.05, rng) != 1;
  }
  const double p = 0.05 * (k - 1) / k;
  EXPECT_NEAR(off / double(n), p, three_sigma(p, n));
}

TEST(ExpectedImprovement, ClosedFormValues) {
  EXPECT_EQ(expected_improvement(1.0, 0.0, 1.0), 0.0);
  EXPECT_NEAR(expected_improvement(1.0, 1.0, 1.0), 0.3989422804014327, 1e-15);
  EXPECT_EQ(expected_improvement(2.0, 0.0, 1.5), 0.5);
  EXPECT_EQ(expected_improvement(1.0, 0.0, 1.5), 0.0);
}

TEST(ExpectedImprovement, MonotoneInSigmaBelowIncumbent) {
  double prev = 0.0;
  for (double s = 0.0; s < 5.0; s += 0.1) {
    const double ei = expected_improvement(-0.5, s, 0.0);
    EXPECT_GE(ei, prev);
    prev = ei;
  }
}

TEST(ExpectedImprovement, MonteCarlo) {
  const double mu = 0.3, sigma = 0.8, best = 0.5;
  std::mt19937_64 gen(12);
  std::normal_distribution<double> normal(mu, sigma);
  double acc = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) acc += std::max(normal(gen) - best, 0.0);
  const double want = expected_improvement(mu, sigma, best);
  EXPECT_NEAR(acc / n, want, 0.01 * want);
  GaussianPredictive pred{Vector{{mu}}, Matrix::Constant(1, 1, sigma * sigma), Matrix::Zero(1, 1)};
  EXPECT_NEAR(expected_improvement(pred, best), want, 1e-15);
}

TEST(Halton, FirstPointsBase2) {
  const Matrix pts = lowdisc_candidates(BoxDomain::unit(1), 4, 0);
  EXPECT_EQ(pts(0, 0), 0.5);
  EXPECT_EQ(pts(0, 1), 0.25);
  EXPECT_EQ(pts(0, 2), 0.75);
  EXPECT_EQ(pts(0, 3), 0.125);
  EXPECT_EQ(radical_inverse(5, 3), 1.0 / 3 * 2 + 1.0 / 9 * 1);
}

TEST(Halton, MaxGapIn1D) {
  const Matrix pts = lowdisc_candidates(BoxDomain::unit(1), 256, 0);
  std::vector<double> v(pts.data(), pts.data() + pts.size());
  v.push_back(0.0);
  v.push_back(1.0);
  std::sort(v.begin(), v.end());
  double gap = 0.0;
  for (size_t i = 1; i < v.size(); ++i) gap = std::max(gap, v[i] - v[i - 1]);
  EXPECT_LE(gap, 2.0 / 256 * 4);
}

TEST(Halton, ContainmentAndDeterminism) {
  Philox rng(13, Stream::kTest);
  for (int trial = 0; trial < 1000; ++trial) {
    const int dim = 1 + static_cast<int>(rng() % 6);
    BoxDomain box{Vector(dim), Vector(dim), 32};
    for (int d = 0; d < dim; ++d) {
      box.lower(d) = 10.0 * (rng.uniform() - 0.5);
      box.upper(d) = box.lower(d) + 1e-3 + 5.0 * rng.uniform();
    }
    const Matrix pts = lowdisc_candidates(box, 32, trial);
    for (Eigen::Index j = 0; j < pts.cols(); ++j) {
      ASSERT_TRUE(((pts.col(j) - box.lower).array() >= 0).all() && ((box.upper - pts.col(j)).array() >= 0).all());
    }
    ASSERT_EQ(pts, lowdisc_candidates(box, 32, trial));
  }
}

TEST(Halton, DimensionLimit) {
  EXPECT_NO_THROW(lowdisc_candidates(BoxDomain::unit(64), 2, 0));
  EXPECT_THROW(lowdisc_candidates(BoxDomain::unit(65), 2, 0), UnsupportedDimensionError);
  EXPECT_THROW(lowdisc_candidates(BoxDomain::unit(2), 0, 0), std::invalid_argument);
}

TEST(Box, Validation) {
  EXPECT_THROW((BoxDomain{Vector{{0.0}}, Vector{{0.0}}, 4}).validate(), std::invalid_argument);
  EXPECT_THROW((BoxDomain{Vector{{0.0}}, Vector{{INFINITY}}, 4}).validate(), std::invalid_argument);
}

TEST(BoPropose, FindsOptimumInCandidatesWithExactMean) {
  // f(x) = x0 - x1, maximised at (1, 0).
  const Belief b = linear_belief(Vector{{1.0, -1.0, 0.0}}, Matrix::Zero(3, 3));
  const BoxDomain box = BoxDomain::unit(2);
  Matrix cands(2, 3);
  cands << 0.5, 1.0, 0.2, 0.5, 0.0, 0.9;
  Philox rng(14, Stream::kAgent);
  const NoiseConfig noise = NoiseConfig::isotropic(1, 0.1);
  EXPECT_EQ(bo_propose_from(b, kLinear2, box, cands, BoStrategy::kTs, noise, rng, {}), cands.col(1));
  BoProposeOptions ei;
  ei.best_so_far = 0.0;
  EXPECT_EQ(bo_propose_from(b, kLinear2, box, cands, BoStrategy::kEi, noise, rng, ei), cands.col(1));
}

TEST(BoPropose, RefinementClimbsAndStaysInBox) {
  const Belief b = linear_belief(Vector{{1.0, -1.0, 0.0}}, Matrix::Zero(3, 3));
  const BoxDomain box = BoxDomain::unit(2);
  Matrix cands(2, 1);
  cands << 0.5, 0.5;
  Philox rng(15, Stream::kAgent);
  BoProposeOptions o;
  o.refine_steps = 100;
  o.step_size = 0.01;
  const Vector x = bo_propose_from(b, kLinear2, box, cands, BoStrategy::kTs, NoiseConfig::isotropic(1, 0.1), rng, o);
  EXPECT_NEAR(x(0), 1.0, 1e-12);
  EXPECT_NEAR(x(1), 0.0, 1e-12);
}

TEST(BoPropose, CandidatesInsideBox) {
  const NetworkSpec spec{3, {8}, 1, Activation::kElu};
  const Belief b = init_belief(spec, init_params(spec, 1), FilterOptions{});
  BoxDomain box{Vector{{-1.0, 0.0, 2.0}}, Vector{{1.0, 0.5, 3.0}}, 64};
  Philox rng(16, Stream::kAgent);
  for (int i = 0; i < 20; ++i) {
    BoProposeOptions o;
    o.candidate_seed = i;
    o.refine_steps = 10;
    o.step_size = 0.1;
    const Vector x = bo_propose(b, spec, box, BoStrategy::kTs, NoiseConfig::isotropic(1, 0.1), rng, o);
    EXPECT_TRUE(((x - box.lower).array() >= 0).all() && ((box.upper - x).array() >= 0).all());
  }
}
