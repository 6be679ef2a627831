#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "predfilt/linalg.hpp"

using namespace predfilt;

namespace {

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace

TEST(QrStack, ThreeFourFive) {
  const UpperTri r = qr_stack({Matrix::Constant(1, 1, 3.0), Matrix::Constant(1, 1, 4.0)});
  EXPECT_NEAR(r.matrix()(0, 0), 5.0, 1e-14);
}

TEST(QrStack, Identity) {
  const UpperTri r = qr_stack({Matrix::Identity(2, 2)});
  EXPECT_LE((r.matrix() - Matrix::Identity(2, 2)).norm(), 1e-15);
}

TEST(QrStack, ThreeRandomUpperFactors) {
  Philox rng(11, Stream::kTest);
  std::vector<Matrix> blocks;
  for (int k = 0; k < 3; ++k) blocks.push_back(oracle::random_matrix(4, 4, rng).triangularView<Eigen::Upper>());
  const UpperTri r = qr_stack(blocks);
  const Matrix want = oracle::gram_sum(blocks);
  EXPECT_LE((r.gram() - want).norm(), 1e-10 * want.norm());
  // Dense Cholesky of the sum gives the same canonical factor.
  const Matrix chol = want.llt().matrixU();
  EXPECT_LE((r.matrix() - chol).norm(), 1e-9 * chol.norm());
}

TEST(QrStack, CanonicalForm) {
  Philox rng(12, Stream::kTest);
  const UpperTri r = qr_stack({oracle::random_matrix(7, 5, rng), oracle::random_matrix(2, 5, rng)});
  const Matrix& m = r.matrix();
  for (int i = 0; i < 5; ++i) {
    EXPECT_GE(m(i, i), 0.0);
    for (int j = 0; j < i; ++j) EXPECT_EQ(m(i, j), 0.0);
  }
}

TEST(QrStack, RectangularAndEmptyBlocks) {
  Philox rng(13, Stream::kTest);
  std::vector<Matrix> blocks = {oracle::random_matrix(2, 6, rng), Matrix(0, 6), oracle::random_matrix(9, 6, rng)};
  const UpperTri r = qr_stack(blocks);
  const Matrix want = oracle::gram_sum({blocks[0], blocks[2]});
  EXPECT_LE((r.gram() - want).norm(), 1e-10 * want.norm());
}

TEST(QrStack, FewerRowsThanColumns) {
  Philox rng(14, Stream::kTest);
  const Matrix b = oracle::random_matrix(2, 5, rng);
  const UpperTri r = qr_stack({b});
  EXPECT_LE((r.gram() - b.transpose() * b).norm(), 1e-12 * b.squaredNorm());
}

TEST(QrStack, OrderIndependent) {
  Philox rng(15, Stream::kTest);
  const Matrix a = oracle::random_matrix(3, 4, rng), b = oracle::random_matrix(5, 4, rng);
  EXPECT_LE((qr_stack({a, b}).matrix() - qr_stack({b, a}).matrix()).norm(), 1e-12);
}

TEST(QrStack, DimensionMismatchThrows) {
  EXPECT_THROW(qr_stack({Matrix::Zero(2, 3), Matrix::Zero(2, 4)}), std::invalid_argument);
}

TEST(QrStack, PropertyRandom) {
  Philox rng(16, Stream::kTest);
  std::uniform_int_distribution<int> dim(1, 32), nblocks(1, 4), rows(0, 12);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = dim(rng);
    std::vector<Matrix> blocks;
    const int k = nblocks(rng);
    for (int i = 0; i < k; ++i) blocks.push_back(oracle::random_matrix(rows(rng), d, rng));
    blocks.push_back(oracle::random_matrix(1, d, rng));
    const UpperTri r = qr_stack(blocks);
    const Matrix want = oracle::gram_sum(blocks);
    ASSERT_LE((r.gram() - want).norm(), 1e-9 * want.norm()) << "trial " << trial;
    ASSERT_TRUE(all_finite(r.matrix()));
  }
}

TEST(LowRank, DominantEigenpair) {
  const Matrix b = (Matrix(2, 2) << 2, 0, 0, 1).finished();
  const LowRankFactor j = lowrank_project(std::vector<Matrix>{b}, 1);
  ASSERT_EQ(j.rank(), 1);
  EXPECT_NEAR(j.matrix()(0, 0), 2.0, 1e-12);
  EXPECT_NEAR(j.matrix()(0, 1), 0.0, 1e-12);
}

TEST(LowRank, FullRankIdentity) {
  const LowRankFactor j = lowrank_project(std::vector<Matrix>{Matrix::Identity(3, 3)}, 3);
  EXPECT_LE((j.gram() - Matrix::Identity(3, 3)).norm(), 1e-12);
}

TEST(LowRank, TwoRandomBlocksMatchDenseEigen) {
  Philox rng(21, Stream::kTest);
  std::vector<Matrix> blocks = {oracle::random_matrix(5, 8, rng), oracle::random_matrix(3, 8, rng)};
  const LowRankFactor j = lowrank_project(blocks, 2);
  EXPECT_LE((j.gram() - oracle::best_rank(oracle::gram_sum(blocks), 2)).norm(), 1e-8);
}

TEST(LowRank, InflatedScalar) {
  const LowRankFactor j = lowrank_project_inflated(std::vector<Matrix>{(Matrix(1, 2) << 1, 0).finished()}, 1, 3.0);
  EXPECT_NEAR(j.matrix()(0, 0), 2.0, 1e-12);
  EXPECT_NEAR(j.matrix()(0, 1), 0.0, 1e-12);
}

TEST(LowRank, InflatedAgainstDenseOracle) {
  Philox rng(22, Stream::kTest);
  std::vector<Matrix> blocks = {oracle::random_matrix(4, 9, rng), oracle::random_matrix(2, 9, rng)};
  const double a = 0.7;
  const LowRankFactor j = lowrank_project_inflated(blocks, 3, a);
  const Matrix m = oracle::gram_sum(blocks) + a * Matrix::Identity(9, 9);
  EXPECT_LE((j.gram() - oracle::best_rank(m, 3)).norm(), 1e-8);
}

TEST(LowRank, ZeroInflationIsPlainProjection) {
  Philox rng(23, Stream::kTest);
  std::vector<Matrix> blocks = {oracle::random_matrix(6, 10, rng)};
  const LowRankFactor a = lowrank_project(blocks, 4);
  const LowRankFactor b = lowrank_project_inflated(blocks, 4, 0.0);
  EXPECT_EQ(a.matrix(), b.matrix());
}

TEST(LowRank, DegenerateZeroBlock) {
  const double q = 0.25;
  const LowRankFactor j = lowrank_project_inflated(std::vector<Matrix>{Matrix::Zero(1, 4)}, 1, q);
  EXPECT_NEAR(j.matrix().norm(), std::sqrt(q), 1e-15);
  EXPECT_NEAR(j.matrix()(0, 0), std::sqrt(q), 1e-15);  // first canonical direction
}

TEST(LowRank, DegenerateFillsOrthogonalDirections) {
  // One informative direction, rank 3: the two extra rows are orthogonal.
  const Matrix b = (Matrix(1, 4) << 0, 3, 0, 0).finished();
  const LowRankFactor j = lowrank_project_inflated(std::vector<Matrix>{b}, 3, 1.0);
  const Matrix m = b.transpose() * b + Matrix::Identity(4, 4);
  // The unit eigenspace is degenerate, so compare spectra, not matrices.
  Eigen::SelfAdjointEigenSolver<Matrix> kept(j.gram()), rest(m - j.gram());
  EXPECT_LE((kept.eigenvalues() - Vector{{0.0, 1.0, 1.0, 10.0}}).norm(), 1e-12);
  EXPECT_LE((rest.eigenvalues() - Vector{{0.0, 0.0, 0.0, 1.0}}).norm(), 1e-12);
}

TEST(LowRank, WideStackedUsesSmallGram) {
  Philox rng(24, Stream::kTest);
  std::vector<Matrix> blocks = {oracle::random_matrix(3, 200, rng)};
  const LowRankFactor j = lowrank_project(blocks, 3);
  const Matrix m = oracle::gram_sum(blocks);
  EXPECT_LE((j.gram() - m).norm(), 1e-9 * m.norm());
}

TEST(LowRank, RankTooLargeThrows) {
  EXPECT_THROW(lowrank_project(std::vector<Matrix>{Matrix::Identity(2, 2)}, 3), std::invalid_argument);
  EXPECT_THROW(lowrank_project(std::vector<Matrix>{Matrix::Identity(2, 2)}, 0), std::invalid_argument);
  EXPECT_THROW(lowrank_project_inflated(std::vector<Matrix>{Matrix::Identity(2, 2)}, 1, -1.0),
               std::invalid_argument);
}

TEST(LowRank, EckartYoungProperty) {
  Philox rng(25, Stream::kTest);
  std::uniform_int_distribution<int> dim(2, 32), rows(1, 40);
  for (int trial = 0; trial < 200; ++trial) {
    const int d_amb = dim(rng);
    std::vector<Matrix> blocks = {oracle::random_matrix(rows(rng), d_amb, rng),
                                  oracle::random_matrix(rows(rng), d_amb, rng)};
    const int d = std::uniform_int_distribution<int>(1, d_amb)(rng);
    const Matrix m = oracle::gram_sum(blocks);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
    const Vector ev = eig.eigenvalues().reverse();
    const double want = ev.tail(d_amb - d).norm();
    const LowRankFactor j = lowrank_project(blocks, d);
    ASSERT_NEAR((m - j.gram()).norm(), want, 1e-7 * std::max(1.0, m.norm())) << "trial " << trial;
    ASSERT_TRUE(all_finite(j.matrix()));
  }
}

TEST(TriSolve, Scalar) {
  const Matrix x = tri_solve_gram(UpperTri(Matrix::Constant(1, 1, 2.0)), Matrix::Constant(1, 1, 8.0));
  EXPECT_NEAR(x(0, 0), 2.0, 1e-15);
}

TEST(TriSolve, Identity) {
  Philox rng(31, Stream::kTest);
  const Matrix m = oracle::random_matrix(3, 4, rng);
  EXPECT_EQ(tri_solve_gram(UpperTri::identity(3), m), m);
}

TEST(TriSolve, MatchesDenseInverse) {
  Philox rng(32, Stream::kTest);
  const Matrix spd = oracle::random_spd(6, rng);
  const UpperTri s(Matrix(spd.llt().matrixU()));
  const Matrix rhs = oracle::random_matrix(6, 3, rng);
  EXPECT_LE((tri_solve_gram(s, rhs) - spd.inverse() * rhs).norm(), 1e-9);
}

TEST(TriSolve, ZeroDiagonalThrows) {
  Matrix m = Matrix::Identity(3, 3);
  m(1, 1) = 0.0;
  EXPECT_THROW(tri_solve_gram(UpperTri(m), Matrix::Ones(3, 1)), SingularMatrixError);
}

TEST(UpperTriType, CanonicalisesInput) {
  Matrix m(2, 2);
  m << -2, 1, 5, 3;
  const UpperTri r(m);
  EXPECT_EQ(r.matrix()(1, 0), 0.0);
  EXPECT_EQ(r.matrix()(0, 0), 2.0);
  EXPECT_EQ(r.matrix()(0, 1), -1.0);
}
