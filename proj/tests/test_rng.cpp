#include <gtest/gtest.h>

#include <random>

#include "predfilt/rng.hpp"

using predfilt::Philox;
using predfilt::Stream;

TEST(Philox, KnownAnswerZero) {
  // Philox4x32-10 with zero key and zero counter.
  Philox g(0, Stream::kInit);
  EXPECT_EQ(g(), 0x6627e8d5u);
  EXPECT_EQ(g(), 0xe169c58du);
  EXPECT_EQ(g(), 0xbc57ac4cu);
  EXPECT_EQ(g(), 0x9b00dbd8u);
}

TEST(Philox, StreamsDiffer) {
  Philox a(7, Stream::kAgent), b(7, Stream::kEnv);
  int same = 0;
  for (int i = 0; i < 100; ++i) same += a() == b();
  EXPECT_LT(same, 3);
}

TEST(Philox, Reproducible) {
  Philox a(99, Stream::kData), b(99, Stream::kData);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
}

TEST(Philox, UniformMoments) {
  Philox g(3, Stream::kTest);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = g.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
    s2 += u * u;
  }
  EXPECT_NEAR(s / n, 0.5, 0.005);
  EXPECT_NEAR(s2 / n - (s / n) * (s / n), 1.0 / 12, 0.002);
}

TEST(Philox, WorksWithStdDistributions) {
  Philox g(4, Stream::kTest);
  std::normal_distribution<double> normal(0.0, 1.0);
  double s = 0;
  for (int i = 0; i < 100000; ++i) s += normal(g);
  EXPECT_NEAR(s / 100000, 0.0, 0.02);
}

TEST(Philox, ForkIsIndependentOfParent) {
  Philox a(5, Stream::kAgent);
  Philox child = a.fork(1);
  Philox a2(5, Stream::kAgent);
  EXPECT_EQ(a(), a2());
  int same = 0;
  Philox c2 = a2.fork(2);
  for (int i = 0; i < 100; ++i) same += child() == c2();
  EXPECT_LT(same, 3);
}
