#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace predfilt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Square upper-triangular factor with a nonnegative diagonal.
///
/// Construction canonicalises the input: strictly-lower entries are zeroed and
/// rows with a negative diagonal are negated (R and diag(±1)·R have the same
/// Gram matrix, so this does not change the represented PSD matrix).
class UpperTri {
 public:
  UpperTri() = default;
  explicit UpperTri(Matrix data);

  static UpperTri identity(Eigen::Index n, double scale = 1.0);
  static UpperTri zero(Eigen::Index n);

  const Matrix& matrix() const { return data_; }
  Eigen::Index dim() const { return data_.rows(); }

  /// R^T R.
  Matrix gram() const;

 private:
  Matrix data_;
};

/// d×D factor C representing the PSD matrix C^T C (rank ≤ d).
class LowRankFactor {
 public:
  LowRankFactor() = default;
  explicit LowRankFactor(Matrix data) : data_(std::move(data)) {}

  /// scale·(first d rows of I_D).
  static LowRankFactor truncated_identity(Eigen::Index d, Eigen::Index ambient, double scale);

  const Matrix& matrix() const { return data_; }
  Eigen::Index rank() const { return data_.rows(); }
  Eigen::Index ambient_dim() const { return data_.cols(); }

  Matrix gram() const { return data_.transpose() * data_; }

 private:
  Matrix data_;
};

/// Upper-triangular R with R^T R = Σ_k B_k^T B_k, computed from the QR
/// decomposition of the row-stacked blocks. Blocks may have any row count
/// (including zero) but must share the column count.
UpperTri qr_stack(std::span<const Matrix> blocks);
UpperTri qr_stack(std::initializer_list<Matrix> blocks);

/// Best rank-d factor J (J^T J ≈ Σ_k A_k^T A_k in Frobenius norm).
LowRankFactor lowrank_project(std::span<const Matrix> blocks, Eigen::Index d);

/// Best rank-d factor of Σ_k A_k^T A_k + a·I: singular directions of the
/// stacked blocks with singular values sqrt(σ_k² + a). When every retained
/// σ_k vanishes the missing directions are filled with canonical basis
/// vectors orthogonal to the directions already chosen.
LowRankFactor lowrank_project_inflated(std::span<const Matrix> blocks, Eigen::Index d, double a);

/// Same as lowrank_project_inflated on the rows of coef · vstack(basis),
/// without forming them. Cheaper when the basis is short and wide.
using MatrixRefs = std::vector<std::reference_wrapper<const Matrix>>;
LowRankFactor lowrank_project_span(const Matrix& coef, const MatrixRefs& basis, Eigen::Index d, double a);

/// Solves (S^T S) X = rhs for upper-triangular S with a positive diagonal.
Matrix tri_solve_gram(const UpperTri& s_half, const Matrix& rhs);

/// Stacks blocks vertically; all must have `cols` columns.
Matrix vstack(std::span<const Matrix> blocks);

}  // namespace predfilt
