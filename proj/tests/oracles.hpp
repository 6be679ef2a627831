#pragma once

// Independent reference computations used by the unit tests. They take the
// slow, obvious route (dense matrices, explicit loops) on purpose.

#include <vector>

#include "predfilt/linalg.hpp"
#include "predfilt/net.hpp"
#include "predfilt/rng.hpp"

namespace oracle {

using predfilt::Matrix;
using predfilt::Vector;

Matrix random_matrix(int rows, int cols, predfilt::Philox& rng);
Matrix random_spd(int n, predfilt::Philox& rng, double jitter = 1e-1);

/// Sum of B^T B over blocks.
Matrix gram_sum(const std::vector<Matrix>& blocks);

/// Best rank-d approximation of a symmetric PSD matrix from a dense
/// eigendecomposition.
Matrix best_rank(const Matrix& m, int d);

/// Forward pass written with plain loops over structured layers.
Vector forward_loops(const predfilt::NetworkSpec& spec, const std::vector<predfilt::Layer>& layers, const Vector& x);

/// Central finite-difference Jacobian of the forward pass w.r.t. θ.
Matrix fd_jacobian(const predfilt::NetworkSpec& spec, const predfilt::FlatParams& params, const Vector& x,
                   double h = 1e-5);

/// Textbook covariance-form Kalman step for y = J θ + e with prior (m, P) and
/// noise covariance R (no dynamics). Returns {mean, cov}.
std::pair<Vector, Matrix> kalman_step(const Vector& m, const Matrix& p, const Matrix& j, const Vector& y_minus_pred,
                                      const Matrix& r);

}  // namespace oracle
