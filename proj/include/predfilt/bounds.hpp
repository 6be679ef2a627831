#pragma once

#include <algorithm>

#include "predfilt/filters.hpp"

namespace predfilt {

struct HiLoFiBoundTerms {
  double hidden_surrogate = 0.0;  // q_ω (2‖K_ω H̃‖ + ‖K_ω H̃‖²)
  double last_surrogate = 0.0;    // q_η ‖(I - K_η L̃)(I - K_η L̃)^T‖
  double projection = 0.0;        // sqrt(Σ λ_k²)
  double cross = 0.0;             // ‖K_η R K_ω^T‖

  /// As printed: the cross term enters as 2‖·‖².
  double total() const { return hidden_surrogate + last_surrogate + projection + 2.0 * cross * cross; }
  /// With the unsquared cross term the triangle inequality gives.
  double total_unsquared() const { return hidden_surrogate + last_surrogate + projection + 2.0 * cross; }
  double looser() const { return std::max(total(), total_unsquared()); }
};

/// Per-step HiLoFi covariance error bound. Gains are K_η (D_η×D_y) and
/// K_ω (D_ω×D_y); `residual_eigs` are the discarded eigenvalues of the
/// surrogate hidden covariance.
HiLoFiBoundTerms hilofi_bound_terms(const Matrix& k_last, const Matrix& k_hidden, const Matrix& l_tilde,
                                    const Matrix& h_tilde, const Matrix& r, double q_last, double q_hidden,
                                    const Vector& residual_eigs);

double hilofi_cov_bound(const Matrix& k_last, const Matrix& k_hidden, const Matrix& l_tilde, const Matrix& h_tilde,
                        const Matrix& r, double q_last, double q_hidden, const Vector& residual_eigs);

double hilofi_cov_bound_unsquared(const Matrix& k_last, const Matrix& k_hidden, const Matrix& l_tilde,
                                  const Matrix& h_tilde, const Matrix& r, double q_last, double q_hidden,
                                  const Vector& residual_eigs);

/// q (2‖K H‖ + ‖K H‖²) + sqrt(Σ λ_k²).
double lrkf_cov_bound(const Matrix& k, const Matrix& h, double q, const Vector& residual_eigs);

/// One-step gap between the dense BLUP and the rank-d update on a scalar
/// linear model with prior EVC `sigma_prev`:
///   |ε| σ_{d+1} ‖x‖ (1/γ + σ₁ ‖x‖² / γ²),
///   γ = min(x^T Σ x, x^T Σ̂ x) + r²,
/// with Σ̂ the best rank-d approximation of Σ. Throws std::domain_error when
/// γ = 0.
double lrkf_blup_gap_bound(double eps, const Matrix& sigma_prev, const Vector& x, double r2, Eigen::Index d);

/// Eigenvalues of a symmetric matrix, descending.
Vector sorted_eigenvalues(const Matrix& sym);

/// The smallest (n - d) eigenvalues of a symmetric n×n matrix.
Vector residual_eigenvalues(const Matrix& sym, Eigen::Index d);

/// Bound for one HiLoFi update from the prior belief and the update's gains.
/// The projection term uses the spectrum of the stacked hidden factor, so no
/// D_ω × D_ω matrix is formed.
HiLoFiBoundTerms hilofi_step_bound(const HiLoFiBelief& prior, const Linearization& lin, const NoiseConfig& noise,
                                   const UpdateInfo& info);

/// Same for an LRKF update (q = q_hidden on every parameter).
double lrkf_step_bound(const LrkfBelief& prior, const Linearization& lin, const NoiseConfig& noise,
                       const UpdateInfo& info);

}  // namespace predfilt
