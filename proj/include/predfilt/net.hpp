#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "predfilt/linalg.hpp"

namespace predfilt {

enum class Activation { kElu, kTanh, kRelu };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

double elu(double z);

/// Fully connected network: input -> hidden_widths... -> output (linear head).
struct NetworkSpec {
  int input_dim = 1;
  std::vector<int> hidden_widths;
  int output_dim = 1;
  Activation activation = Activation::kElu;

  /// Throws std::invalid_argument when a width is < 1.
  void validate() const;

  /// Parameter counts. The hidden block ω holds every layer except the last;
  /// the last-layer block η holds the output weights and biases.
  Eigen::Index hidden_param_count() const;
  Eigen::Index last_param_count() const;
  Eigen::Index param_count() const { return hidden_param_count() + last_param_count(); }

  /// Width of the feature vector feeding the last layer.
  int feature_dim() const { return hidden_widths.empty() ? input_dim : hidden_widths.back(); }

  /// Stable 64-bit FNV-1a digest of the architecture.
  std::uint64_t hash() const;

  bool operator==(const NetworkSpec&) const = default;
};

/// Flattened parameters θ = [ω ; η].
///
/// Layout: layer-major; within a layer the row-major (out × in) weight matrix
/// comes first, then the bias. theta[0, split) is the hidden block ω and
/// theta[split, size) the last-layer block η.
struct FlatParams {
  Vector theta;
  Eigen::Index split = 0;

  Eigen::Index size() const { return theta.size(); }
  auto hidden() const { return theta.head(split); }
  auto last() const { return theta.tail(theta.size() - split); }

  static FlatParams join(const NetworkSpec& spec, const Vector& hidden, const Vector& last);
};

struct JacobianPair {
  Matrix l_tilde;  // D_y × D_η
  Matrix h_tilde;  // D_y × D_ω
};

/// Structured view of one dense layer.
struct Layer {
  Matrix weight;  // out × in
  Vector bias;
};

std::vector<Layer> unflatten(const NetworkSpec& spec, const FlatParams& params);
FlatParams flatten(const NetworkSpec& spec, const std::vector<Layer>& layers);

/// N(0, 1/fan_in) weights, zero biases; deterministic in seed.
FlatParams init_params(const NetworkSpec& spec, std::uint64_t seed);

Vector forward(const NetworkSpec& spec, const FlatParams& params, const Vector& x);

/// Forward pass over the columns of `xs` (input_dim × n). Returns D_y × n.
Matrix forward_batch(const NetworkSpec& spec, const FlatParams& params, const Matrix& xs);

/// Exact Jacobians of the output with respect to η and ω, one backward pass
/// per output dimension (all outputs are propagated together).
JacobianPair jacobians(const NetworkSpec& spec, const FlatParams& params, const Vector& x);

/// Directional derivative J(x)·δ for every column of `xs` (forward-mode),
/// with δ laid out like FlatParams::theta. Returns D_y × n.
Matrix jvp_batch(const NetworkSpec& spec, const FlatParams& params, const Vector& delta, const Matrix& xs);

/// J(x)·Vᵀ for many directions at one input, without forming J. Rows of
/// `dirs` are directions over θ[offset, offset + dirs.cols()), zero elsewhere;
/// the range must start and end on layer boundaries. Returns D_y × n.
Matrix jvp_rows(const NetworkSpec& spec, const FlatParams& params, const Vector& x, const Matrix& dirs,
                Eigen::Index offset = 0);

/// Gradient of output `head` of the linearised map x ↦ J(x)·δ + f(x) with
/// respect to the input x. Used by local refinement in Bayesian optimisation.
Vector input_gradient(const NetworkSpec& spec, const FlatParams& params, const Vector& delta, const Vector& x,
                      int head = 0);

}  // namespace predfilt
