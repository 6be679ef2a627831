#pragma once

#include <utility>
#include <variant>

#include "predfilt/linalg.hpp"
#include "predfilt/net.hpp"
#include "predfilt/rng.hpp"

namespace predfilt {

class SingularInnovationError : public SingularMatrixError {
 public:
  using SingularMatrixError::SingularMatrixError;
};

struct NoiseConfig {
  UpperTri r_half;  // Cholesky factor of R (zero allowed)
  double q_last = 0.0;
  double q_hidden = 0.0;

  /// R = r²·I_dy.
  static NoiseConfig isotropic(int dy, double r, double q_last = 0.0, double q_hidden = 0.0);
  Matrix r() const { return r_half.gram(); }
  void validate(int dy) const;
};

struct DenseBelief {
  Vector mean;  // θ = [ω; η]
  Matrix cov;
};

struct LrkfBelief {
  Vector mean;
  LowRankFactor w;
};

struct HiLoFiBelief {
  Vector mean_last;
  Vector mean_hidden;
  UpperTri sigma_last_half;
  LowRankFactor c_hidden;
};

struct LoLoFiBelief {
  Vector mean_last;
  Vector mean_hidden;
  LowRankFactor c_last;
  LowRankFactor c_hidden;
};

using Belief = std::variant<DenseBelief, LrkfBelief, HiLoFiBelief, LoLoFiBelief>;

enum class FilterKind { kDense, kLrkf, kHiLoFi, kLoLoFi };

FilterKind parse_filter(const std::string& name);
std::string to_string(FilterKind kind);

struct FilterOptions {
  FilterKind kind = FilterKind::kHiLoFi;
  Eigen::Index rank = 50;         // LRKF
  Eigen::Index rank_hidden = 50;  // HiLoFi / LoLoFi
  Eigen::Index rank_last = 50;    // LoLoFi
  double prior_var_last = 0.1;
  double prior_var_hidden = 0.1;
};

/// Prior belief around `init`. Factors are sqrt(variance) times (truncated)
/// identities; ranks larger than the block size are clipped to it.
Belief init_belief(const NetworkSpec& spec, const FlatParams& init, const FilterOptions& opts);

FlatParams mean_params(const Belief& belief, const NetworkSpec& spec);

/// Dense covariance over θ = [ω; η] represented by the belief (tests only).
Matrix dense_cov(const Belief& belief, const NetworkSpec& spec);

/// Output of the network and its Jacobians at the linearisation point.
struct Linearization {
  Vector prediction;
  Matrix l_tilde;
  Matrix h_tilde;

  Matrix jacobian() const;  // [H̃, L̃] in θ order
};

Linearization linearize(const NetworkSpec& spec, const FlatParams& params, const Vector& x);

/// Keeps one output (e.g. the reward head of the chosen arm).
Linearization select_output(const Linearization& lin, int head);

/// Pushes a logit linearisation through softmax: prediction = softmax(f) and
/// Jacobians premultiplied by diag(m) - m m^T.
Linearization softmax_linearization(const Linearization& logits);

struct UpdateOptions {
  bool inflate = true;        // LRKF: P_{d,+q} (true) or plain P_d
  bool reverse_stack = false;  // stack the innovation blocks in reverse order
};

/// Gains and innovation from the last update, for diagnostics and bounds.
struct UpdateInfo {
  Vector innovation;
  UpperTri s_half;
  Matrix k_last;    // D_η × D_y (HiLoFi / LoLoFi)
  Matrix k_hidden;  // D_ω × D_y
  Matrix k;         // D_θ × D_y (dense / LRKF)
};

DenseBelief dense_update(const DenseBelief& b, const Linearization& lin, const Vector& y, const NoiseConfig& noise,
                         UpdateInfo* info = nullptr);
LrkfBelief lrkf_update(const LrkfBelief& b, const Linearization& lin, const Vector& y, const NoiseConfig& noise,
                       const UpdateOptions& opts = {}, UpdateInfo* info = nullptr);
HiLoFiBelief hilofi_update(const HiLoFiBelief& b, const Linearization& lin, const Vector& y,
                           const NoiseConfig& noise, const UpdateOptions& opts = {}, UpdateInfo* info = nullptr);
LoLoFiBelief lolofi_update(const LoLoFiBelief& b, const Linearization& lin, const Vector& y,
                           const NoiseConfig& noise, const UpdateOptions& opts = {}, UpdateInfo* info = nullptr);

Belief update(const Belief& b, const Linearization& lin, const Vector& y, const NoiseConfig& noise,
              const UpdateOptions& opts = {}, UpdateInfo* info = nullptr);

// Linearise at the current mean, then update.
DenseBelief dense_predict_update(const DenseBelief& b, const NetworkSpec& spec, const Vector& x, const Vector& y,
                                 const NoiseConfig& noise);
LrkfBelief lrkf_step(const LrkfBelief& b, const NetworkSpec& spec, const Vector& x, const Vector& y,
                     const NoiseConfig& noise, const UpdateOptions& opts = {});
HiLoFiBelief hilofi_step(const HiLoFiBelief& b, const NetworkSpec& spec, const Vector& x, const Vector& y,
                         const NoiseConfig& noise, const UpdateOptions& opts = {});
LoLoFiBelief lolofi_step(const LoLoFiBelief& b, const NetworkSpec& spec, const Vector& x, const Vector& y,
                         const NoiseConfig& noise, const UpdateOptions& opts = {});
Belief step(const Belief& b, const NetworkSpec& spec, const Vector& x, const Vector& y, const NoiseConfig& noise,
            const UpdateOptions& opts = {});

struct GaussianPredictive {
  Vector mean;
  Matrix cov;        // epistemic + aleatoric
  Matrix epistemic;
};

GaussianPredictive predictive(const Belief& b, const NetworkSpec& spec, const Vector& x, const NoiseConfig& noise);

/// Predictive from an existing linearisation at the belief mean.
GaussianPredictive predictive_from(const Belief& b, const Linearization& lin, const Matrix& r);

/// Epistemic variance of a single output row (no D_y × D_y intermediates).
double epistemic_variance(const Belief& b, const Linearization& lin, int head);

/// Diagonal of the epistemic covariance, all outputs at once (one product
/// per factor instead of one per output).
Vector epistemic_variances(const Belief& b, const Linearization& lin);

/// Same diagonal at input x, pushing the factor rows through the network in
/// forward mode instead of forming the Jacobian. `params` is the belief mean.
Vector epistemic_variances(const Belief& b, const NetworkSpec& spec, const FlatParams& params, const Vector& x);

/// One draw from N(mean, cov); zero covariance returns the mean.
Vector sample_predictive(const GaussianPredictive& pred, Philox& rng);

/// Parameter perturbation δ (θ order) whose linearised function
/// x ↦ f(mean, x) + J(x)δ has the belief's epistemic covariance.
Vector sample_function(const Belief& b, const NetworkSpec& spec, Philox& rng);

/// Pseudo-observation for classification: softmax mean and the multinomial
/// covariance diag(m) - m m^T + eps·I. `literal_plus` uses +m m^T instead.
std::pair<Vector, Matrix> moment_matched_obs(const Vector& logits, double eps, bool literal_plus = false);

Vector softmax(const Vector& logits);

}  // namespace predfilt
