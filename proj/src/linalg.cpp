#include "predfilt/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace predfilt {

namespace {

Eigen::Index common_cols(std::span<const Matrix> blocks) {
  if (blocks.empty()) {
    throw std::invalid_argument("expected at least one block");
  }
  const Eigen::Index cols = blocks.front().cols();
  for (const auto& b : blocks) {
    if (b.cols() != cols) {
      throw std::invalid_argument("block column mismatch: " + std::to_string(b.cols()) + " vs " +
                                  std::to_string(cols));
    }
  }
  return cols;
}

// Flips each row so that its largest-magnitude entry is positive (ties go to
// the lowest index).
void canonicalise_rows(Matrix& rows) {
  const Eigen::Index n = rows.rows();
  if (n == 0 || rows.cols() == 0) return;
  // Column sweep: the storage is column-major.
  Vector best = Vector::Constant(n, -1.0);
  Vector sign = Vector::Ones(n);
  for (Eigen::Index j = 0; j < rows.cols(); ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = rows(i, j);
      if (std::abs(v) > best(i)) {
        best(i) = std::abs(v);
        sign(i) = v < 0.0 ? -1.0 : 1.0;
      }
    }
  }
  rows = sign.asDiagonal() * rows;
}

// Directions whose singular value is lost in rounding are dropped.
Eigen::Index count_kept(const Vector& sigma) {
  const double sigma_max = sigma.size() > 0 ? sigma(0) : 0.0;
  const double tol = std::max(sigma_max * 1e-7, 1e-150);
  Eigen::Index kept = 0;
  while (kept < sigma.size() && sigma(kept) > tol) ++kept;
  return kept;
}

// With a > 0 the dropped rows are replaced by canonical vectors orthogonal
// to the kept ones (whose norms are already sqrt(σ² + a)).
void fill_and_canonicalise(Matrix& out, const Vector& sigma, Eigen::Index kept, double a) {
  const Eigen::Index d = out.rows();
  const Eigen::Index dim = out.cols();
  if (kept < d && a > 0.0) {
    // Fill in order of least leverage on the kept rows (lowest index on
    // ties), so the first pick is almost always accepted.
    const double root_a = std::sqrt(a);
    Vector inv = Vector::Zero(d);
    for (Eigen::Index k = 0; k < kept; ++k) inv(k) = 1.0 / std::sqrt(sigma(k) * sigma(k) + a);
    Matrix unit = inv.head(kept).asDiagonal() * out.topRows(kept);
    unit.conservativeResize(d, Eigen::NoChange);
    Vector leverage = unit.topRows(kept).colwise().squaredNorm().transpose();
    Eigen::Index next = kept;
    while (next < d) {
      Eigen::Index j = 0;
      leverage.minCoeff(&j);
      Vector e = Vector::Unit(dim, j);
      for (int pass = 0; pass < 2; ++pass) {
        const Vector coef = unit.topRows(next) * e;
        e.noalias() -= unit.topRows(next).transpose() * coef;
      }
      const double n = e.norm();
      leverage(j) = std::numeric_limits<double>::infinity();
      if (n < 0.5) continue;
      unit.row(next) = e.transpose() / n;
      leverage += unit.row(next).transpose().cwiseAbs2();
      out.row(next) = root_a * unit.row(next);
      ++next;
    }
  }
  canonicalise_rows(out);
}

}  // namespace

UpperTri::UpperTri(Matrix data) : data_(std::move(data)) {
  if (data_.rows() != data_.cols()) {
    throw std::invalid_argument("UpperTri requires a square matrix");
  }
  data_.triangularView<Eigen::StrictlyLower>().setZero();
  for (Eigen::Index i = 0; i < data_.rows(); ++i) {
    if (data_(i, i) < 0.0) data_.row(i) *= -1.0;
  }
}

UpperTri UpperTri::identity(Eigen::Index n, double scale) {
  return UpperTri(Matrix::Identity(n, n) * scale);
}

UpperTri UpperTri::zero(Eigen::Index n) { return UpperTri(Matrix::Zero(n, n)); }

Matrix UpperTri::gram() const {
  Matrix g = data_.transpose() * data_;
  return g;
}

LowRankFactor LowRankFactor::truncated_identity(Eigen::Index d, Eigen::Index ambient, double scale) {
  if (d > ambient) throw std::invalid_argument("rank exceeds ambient dimension");
  return LowRankFactor(Matrix::Identity(d, ambient) * scale);
}

Matrix vstack(std::span<const Matrix> blocks) {
  const Eigen::Index cols = common_cols(blocks);
  Eigen::Index rows = 0;
  for (const auto& b : blocks) rows += b.rows();
  Matrix out(rows, cols);
  Eigen::Index r = 0;
  for (const auto& b : blocks) {
    out.middleRows(r, b.rows()) = b;
    r += b.rows();
  }
  return out;
}

UpperTri qr_stack(std::span<const Matrix> blocks) {
  const Eigen::Index cols = common_cols(blocks);
  Matrix stacked = vstack(blocks);
  if (stacked.rows() == 0) {
    throw std::invalid_argument("qr_stack: stacked matrix has no rows");
  }
  Matrix r = Matrix::Zero(cols, cols);
  Eigen::HouseholderQR<Eigen::Ref<Matrix>> qr(stacked);
  const Eigen::Index k = std::min(stacked.rows(), cols);
  r.topRows(k) = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  return UpperTri(std::move(r));
}

UpperTri qr_stack(std::initializer_list<Matrix> blocks) {
  return qr_stack(std::span<const Matrix>(blocks.begin(), blocks.size()));
}

LowRankFactor lowrank_project(std::span<const Matrix> blocks, Eigen::Index d) {
  return lowrank_project_inflated(blocks, d, 0.0);
}

LowRankFactor lowrank_project_inflated(std::span<const Matrix> blocks, Eigen::Index d, double a) {
  const Eigen::Index dim = common_cols(blocks);
  if (d < 1 || d > dim) {
    throw std::invalid_argument("lowrank_project: rank " + std::to_string(d) + " not in [1, " +
                                std::to_string(dim) + "]");
  }
  if (!(a >= 0.0) || !std::isfinite(a)) {
    throw std::invalid_argument("lowrank_project: inflation must be finite and >= 0");
  }
  const Matrix stacked = vstack(blocks);
  const Eigen::Index m = stacked.rows();

  // Singular values (descending); rows of `out` start as σ_k v_k^T.
  Vector sigma = Vector::Zero(d);
  Matrix out = Matrix::Zero(d, dim);
  if (m > 0 && m < dim) {
    // Small (m×m) Gram route: N N^T = U Λ U^T, so u_k^T N = σ_k v_k^T.
    Matrix gram = Matrix::Zero(m, m);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(stacked);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram.selfadjointView<Eigen::Lower>());
    const Eigen::Index take = std::min(d, m);
    for (Eigen::Index k = 0; k < take; ++k) sigma(k) = std::sqrt(std::max(eig.eigenvalues()(m - 1 - k), 0.0));
    out.topRows(take).noalias() = eig.eigenvectors().rightCols(take).rowwise().reverse().transpose() * stacked;
  } else if (m > 0) {
    Matrix gram = Matrix::Zero(dim, dim);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(stacked.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram.selfadjointView<Eigen::Lower>());
    for (Eigen::Index k = 0; k < d; ++k) {
      const Eigen::Index src = dim - 1 - k;
      sigma(k) = std::sqrt(std::max(eig.eigenvalues()(src), 0.0));
      out.row(k) = sigma(k) * eig.eigenvectors().col(src).transpose();
    }
  }

  const Eigen::Index kept = count_kept(sigma);
  out.bottomRows(d - kept).setZero();
  Vector scale = Vector::Zero(d);
  const Vector norms = out.topRows(kept).rowwise().norm();
  for (Eigen::Index k = 0; k < kept; ++k) scale(k) = std::sqrt(sigma(k) * sigma(k) + a) / norms(k);
  out = scale.asDiagonal() * out;  // rows now unit vectors times sqrt(σ² + a)
  fill_and_canonicalise(out, sigma, kept, a);
  return LowRankFactor(std::move(out));
}

LowRankFactor lowrank_project_span(const Matrix& coef, const MatrixRefs& basis, Eigen::Index d, double a) {
  if (basis.empty()) throw std::invalid_argument("lowrank_project_span: empty basis");
  const Eigen::Index dim = basis.front().get().cols();
  Eigen::Index nb = 0;
  for (const Matrix& b : basis) {
    if (b.cols() != dim) throw std::invalid_argument("lowrank_project_span: basis column mismatch");
    nb += b.rows();
  }
  if (coef.cols() != nb) {
    throw std::invalid_argument("lowrank_project_span: coefficient has " + std::to_string(coef.cols()) +
                                " columns, basis has " + std::to_string(nb) + " rows");
  }
  if (d < 1 || d > dim) {
    throw std::invalid_argument("lowrank_project_span: rank " + std::to_string(d) + " not in [1, " +
                                std::to_string(dim) + "]");
  }
  if (!(a >= 0.0) || !std::isfinite(a)) {
    throw std::invalid_argument("lowrank_project_span: inflation must be finite and >= 0");
  }

  // Basis Gram, block by block, so the basis is never copied.
  std::vector<Eigen::Index> offset(basis.size() + 1, 0);
  for (std::size_t i = 0; i < basis.size(); ++i) offset[i + 1] = offset[i] + basis[i].get().rows();
  Matrix basis_gram(nb, nb);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const Matrix& bi = basis[i];
    auto diag = basis_gram.block(offset[i], offset[i], bi.rows(), bi.rows());
    diag.setZero();
    diag.selfadjointView<Eigen::Lower>().rankUpdate(bi);
    diag = diag.selfadjointView<Eigen::Lower>();
    for (std::size_t j = i + 1; j < basis.size(); ++j) {
      const Matrix& bj = basis[j];
      basis_gram.block(offset[j], offset[i], bj.rows(), bi.rows()).noalias() = bj * bi.transpose();
      basis_gram.block(offset[i], offset[j], bi.rows(), bj.rows()) =
          basis_gram.block(offset[j], offset[i], bj.rows(), bi.rows()).transpose();
    }
  }

  const Eigen::Index m = coef.rows();
  Vector sigma = Vector::Zero(d);
  Matrix dirs = Matrix::Zero(d, nb);  // row k: coefficients of σ_k v_k^T
  if (m > 0) {
    const Matrix gram = coef * basis_gram * coef.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (gram + gram.transpose()));
    const Eigen::Index take = std::min(d, m);
    for (Eigen::Index k = 0; k < take; ++k) sigma(k) = std::sqrt(std::max(eig.eigenvalues()(m - 1 - k), 0.0));
    dirs.topRows(take).noalias() = eig.eigenvectors().rightCols(take).rowwise().reverse().transpose() * coef;
  }
  const Eigen::Index kept = count_kept(sigma);
  dirs.bottomRows(d - kept).setZero();
  const Vector norms = (dirs * basis_gram).cwiseProduct(dirs).rowwise().sum().cwiseMax(0.0).cwiseSqrt();
  for (Eigen::Index k = 0; k < kept; ++k) dirs.row(k) *= std::sqrt(sigma(k) * sigma(k) + a) / norms(k);

  Matrix out(d, dim);
  out.noalias() = dirs.leftCols(offset[1]) * basis[0].get();
  for (std::size_t i = 1; i < basis.size(); ++i) {
    out.noalias() += dirs.middleCols(offset[i], offset[i + 1] - offset[i]) * basis[i].get();
  }
  fill_and_canonicalise(out, sigma, kept, a);
  return LowRankFactor(std::move(out));
}

Matrix tri_solve_gram(const UpperTri& s_half, const Matrix& rhs) {
  const Matrix& s = s_half.matrix();
  if (rhs.rows() != s.rows()) {
    throw std::invalid_argument("tri_solve_gram: rhs has " + std::to_string(rhs.rows()) + " rows, factor is " +
                                std::to_string(s.rows()));
  }
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    if (!(s(i, i) > 0.0)) {
      throw SingularMatrixError("tri_solve_gram: zero diagonal at index " + std::to_string(i));
    }
  }
  Matrix y = s.transpose().triangularView<Eigen::Lower>().solve(rhs);
  s.triangularView<Eigen::Upper>().solveInPlace(y);
  return y;
}

}  // namespace predfilt
