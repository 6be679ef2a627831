#pragma once

#include <stdexcept>
#include <vector>

#include "predfilt/filters.hpp"

namespace predfilt {

class UnsupportedDimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A finite action set. With `heads > 0` the network has one output per
/// action and the input is the context alone; otherwise the network input is
/// (context, action features) and the reward is output 0.
struct DiscreteActions {
  std::vector<Vector> features;
  int heads = 0;

  static DiscreteActions concatenate(std::vector<Vector> features);
  static DiscreteActions output_heads(int k);
  int size() const { return heads > 0 ? heads : static_cast<int>(features.size()); }
  Vector input(const Vector& context, int action) const;
};

struct BoxDomain {
  Vector lower;
  Vector upper;
  int candidate_count = 512;

  static BoxDomain unit(int dim, int candidate_count = 512);
  int dim() const { return static_cast<int>(lower.size()); }
  void validate() const;
};

struct SampledChoice {
  int action = 0;
  Vector sampled;  // one sampled reward per action
};

/// Lowest index among the maxima.
int argmax_first(const Vector& v);

/// Draws one reward per action independently from its predictive and
/// returns the argmax.
SampledChoice predictive_sample_action(const Belief& b, const NetworkSpec& spec, const Vector& context,
                                       const DiscreteActions& actions, const NoiseConfig& noise, Philox& rng);

/// Multi-head form: one output per action, using an existing linearisation
/// at the belief mean (shared with the subsequent update).
SampledChoice predictive_sample_heads(const Belief& b, const Linearization& lin, const NoiseConfig& noise,
                                      Philox& rng);

/// One coherent function draw evaluated at every action.
SampledChoice thompson_sample_action(const Belief& b, const NetworkSpec& spec, const Vector& context,
                                     const DiscreteActions& actions, Philox& rng);

int epsilon_greedy_action(const Belief& b, const NetworkSpec& spec, const Vector& context,
                          const DiscreteActions& actions, double epsilon, Philox& rng);

/// Closed-form Gaussian EI for maximisation: (μ - y*) Φ(z) + σ φ(z).
double expected_improvement(double mu, double sigma, double best_so_far);
double expected_improvement(const GaussianPredictive& pred, double best_so_far);

/// Halton points (prime base per dimension) for indices seed+1 .. seed+n,
/// scaled to the box. Returns dim × n. Throws UnsupportedDimensionError for
/// more than 64 dimensions.
Matrix lowdisc_candidates(const BoxDomain& box, int n, std::uint64_t seed);

double radical_inverse(std::uint64_t index, unsigned base);

enum class BoStrategy { kTs, kEi };

struct BoProposeOptions {
  std::uint64_t candidate_seed = 0;
  double best_so_far = 0.0;  // EI incumbent
  int refine_steps = 0;      // projected gradient steps on the sampled function (TS)
  double step_size = 0.01;
};

/// Next query point in the box (network input = the point itself).
Vector bo_propose(const Belief& b, const NetworkSpec& spec, const BoxDomain& box, BoStrategy strategy,
                  const NoiseConfig& noise, Philox& rng, const BoProposeOptions& opts = {});

/// Same, with a precomputed candidate matrix (dim × n).
Vector bo_propose_from(const Belief& b, const NetworkSpec& spec, const BoxDomain& box, const Matrix& candidates,
                       BoStrategy strategy, const NoiseConfig& noise, Philox& rng, const BoProposeOptions& opts);

}  // namespace predfilt
