#include "predfilt/decision.hpp"

#include <array>
#include <cmath>
#include <random>
#include <string>

namespace predfilt {

namespace {

constexpr std::array<unsigned, 64> kPrimes = {
    2,   3,   5,   7,   11,  13,  17,  19,  23,  29,  31,  37,  41,  43,  47,  53,  59,  61,  67,  71,  73,  79,
    83,  89,  97,  101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193,
    197, 199, 211, 223, 227, 229, 233, 239, 241, 251, 257, 263, 269, 271, 277, 281, 283, 293, 307, 311};

void check_nonempty(const DiscreteActions& actions) {
  if (actions.size() < 1) throw std::invalid_argument("action set is empty");
}

double aleatoric(const NoiseConfig& noise, int head) {
  const Matrix r = noise.r();
  if (r.rows() == 1) return r(0, 0);
  return r(head, head);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }

// Mean function plus J(x)δ at every column of xs, output 0.
Vector sampled_values(const NetworkSpec& spec, const FlatParams& params, const Vector& delta, const Matrix& xs) {
  return (forward_batch(spec, params, xs) + jvp_batch(spec, params, delta, xs)).row(0).transpose();
}

Vector clip(const Vector& x, const BoxDomain& box) { return x.cwiseMax(box.lower).cwiseMin(box.upper); }

}  // namespace

DiscreteActions DiscreteActions::concatenate(std::vector<Vector> features) {
  return DiscreteActions{std::move(features), 0};
}

DiscreteActions DiscreteActions::output_heads(int k) {
  if (k < 1) throw std::invalid_argument("need at least one action");
  return DiscreteActions{{}, k};
}

Vector DiscreteActions::input(const Vector& context, int action) const {
  if (action < 0 || action >= size()) throw std::invalid_argument("action index out of range");
  if (heads > 0) return context;
  const Vector& a = features[action];
  Vector x(context.size() + a.size());
  x << context, a;
  return x;
}

BoxDomain BoxDomain::unit(int dim, int candidate_count) {
  return BoxDomain{Vector::Zero(dim), Vector::Ones(dim), candidate_count};
}

void BoxDomain::validate() const {
  if (lower.size() != upper.size() || lower.size() == 0) throw std::invalid_argument("box bounds mismatch");
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!std::isfinite(lower(i)) || !std::isfinite(upper(i)) || !(lower(i) < upper(i))) {
      throw std::invalid_argument("box bounds must be finite with lower < upper");
    }
  }
  if (candidate_count < 1) throw std::invalid_argument("candidate_count must be >= 1");
}

int argmax_first(const Vector& v) {
  if (v.size() == 0) throw std::invalid_argument("argmax of an empty vector");
  int best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = static_cast<int>(i);
  }
  return best;
}

namespace {

SampledChoice sample_heads(const Vector& mean, const Vector& epistemic, const NoiseConfig& noise, Philox& rng) {
  const int k = static_cast<int>(mean.size());
  if (k < 1) throw std::invalid_argument("action set is empty");
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector sampled(k);
  for (int a = 0; a < k; ++a) {
    const double var = epistemic(a) + aleatoric(noise, a);
    sampled(a) = mean(a) + std::sqrt(std::max(var, 0.0)) * normal(rng);
  }
  return SampledChoice{argmax_first(sampled), std::move(sampled)};
}

}  // namespace

SampledChoice predictive_sample_heads(const Belief& b, const Linearization& lin, const NoiseConfig& noise,
                                     Philox& rng) {
  return sample_heads(lin.prediction, epistemic_variances(b, lin), noise, rng);
}

SampledChoice predictive_sample_action(const Belief& b, const NetworkSpec& spec, const Vector& context,
                                       const DiscreteActions& actions, const NoiseConfig& noise, Philox& rng) {
  check_nonempty(actions);
  const FlatParams params = mean_params(b, spec);
  if (actions.heads > 0) {
    if (actions.heads != spec.output_dim) throw std::invalid_argument("one network output per action expected");
    return sample_heads(forward(spec, params, context), epistemic_variances(b, spec, params, context), noise, rng);
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  const int k = actions.size();
  Vector sampled(k);
  for (int a = 0; a < k; ++a) {
    const Linearization lin = linearize(spec, params, actions.input(context, a));
    const double var = epistemic_variance(b, lin, 0) + aleatoric(noise, 0);
    sampled(a) = lin.prediction(0) + std::sqrt(std::max(var, 0.0)) * normal(rng);
  }
  return SampledChoice{argmax_first(sampled), std::move(sampled)};
}

SampledChoice thompson_sample_action(const Belief& b, const NetworkSpec& spec, const Vector& context,
                                     const DiscreteActions& actions, Philox& rng) {
  check_nonempty(actions);
  const FlatParams params = mean_params(b, spec);
  const Vector delta = sample_function(b, spec, rng);
  Vector sampled;
  if (actions.heads > 0) {
    sampled = forward(spec, params, context) + jvp_batch(spec, params, delta, context);
  } else {
    Matrix xs(context.size() + (actions.features.empty() ? 0 : actions.features[0].size()), actions.size());
    for (int a = 0; a < actions.size(); ++a) xs.col(a) = actions.input(context, a);
    sampled = sampled_values(spec, params, delta, xs);
  }
  return SampledChoice{argmax_first(sampled), std::move(sampled)};
}

int epsilon_greedy_action(const Belief& b, const NetworkSpec& spec, const Vector& context,
                          const DiscreteActions& actions, double epsilon, Philox& rng) {
  check_nonempty(actions);
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must be in [0, 1]");
  const int k = actions.size();
  if (rng.uniform() < epsilon) return std::uniform_int_distribution<int>(0, k - 1)(rng);
  const FlatParams params = mean_params(b, spec);
  if (actions.heads > 0) return argmax_first(forward(spec, params, context));
  Matrix xs(context.size() + (actions.features.empty() ? 0 : actions.features[0].size()), k);
  for (int a = 0; a < k; ++a) xs.col(a) = actions.input(context, a);
  return argmax_first(forward_batch(spec, params, xs).row(0).transpose());
}

double expected_improvement(double mu, double sigma, double best_so_far) {
  const double gap = mu - best_so_far;
  if (!(sigma > 0.0)) return std::max(gap, 0.0);
  const double z = gap / sigma;
  return std::max(gap * normal_cdf(z) + sigma * normal_pdf(z), 0.0);
}

double expected_improvement(const GaussianPredictive& pred, double best_so_far) {
  if (pred.mean.size() != 1) throw std::invalid_argument("expected_improvement needs a scalar predictive");
  return expected_improvement(pred.mean(0), std::sqrt(std::max(pred.cov(0, 0), 0.0)), best_so_far);
}

double radical_inverse(std::uint64_t index, unsigned base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= base;
  }
  return result;
}

Matrix lowdisc_candidates(const BoxDomain& box, int n, std::uint64_t seed) {
  box.validate();
  if (n < 1) throw std::invalid_argument("need at least one candidate");
  if (box.dim() > static_cast<int>(kPrimes.size())) {
    throw UnsupportedDimensionError("low-discrepancy candidates support at most 64 dimensions, got " +
                                    std::to_string(box.dim()));
  }
  Matrix pts(box.dim(), n);
  for (int j = 0; j < n; ++j) {
    for (int d = 0; d < box.dim(); ++d) {
      const double u = radical_inverse(seed + static_cast<std::uint64_t>(j) + 1, kPrimes[d]);
      pts(d, j) = box.lower(d) + u * (box.upper(d) - box.lower(d));
    }
  }
  return pts;
}

Vector bo_propose(const Belief& b, const NetworkSpec& spec, const BoxDomain& box, BoStrategy strategy,
                  const NoiseConfig& noise, Philox& rng, const BoProposeOptions& opts) {
  return bo_propose_from(b, spec, box, lowdisc_candidates(box, box.candidate_count, opts.candidate_seed), strategy,
                         noise, rng, opts);
}

Vector bo_propose_from(const Belief& b, const NetworkSpec& spec, const BoxDomain& box, const Matrix& candidates,
                       BoStrategy strategy, const NoiseConfig& noise, Philox& rng, const BoProposeOptions& opts) {
  box.validate();
  if (candidates.rows() != box.dim() || candidates.cols() < 1) throw std::invalid_argument("bad candidate matrix");
  const FlatParams params = mean_params(b, spec);
  if (strategy == BoStrategy::kEi) {
    Vector ei(candidates.cols());
    const double r = aleatoric(noise, 0);
    for (Eigen::Index j = 0; j < candidates.cols(); ++j) {
      const Linearization lin = linearize(spec, params, candidates.col(j));
      const double var = epistemic_variance(b, lin, 0) + r;
      ei(j) = expected_improvement(lin.prediction(0), std::sqrt(std::max(var, 0.0)), opts.best_so_far);
    }
    return candidates.col(argmax_first(ei));
  }

  const Vector delta = sample_function(b, spec, rng);
  const Vector values = sampled_values(spec, params, delta, candidates);
  const int best = argmax_first(values);
  Vector x = candidates.col(best);
  Vector best_x = x;
  double best_value = values(best);
  for (int s = 0; s < opts.refine_steps; ++s) {
    const Vector g = input_gradient(spec, params, delta, x, 0);
    const double gn = g.norm();
    if (!(gn > 0.0) || !std::isfinite(gn)) break;
    // Steps are capped at step_size in Euclidean length.
    x = clip(x + opts.step_size * g / std::max(gn, 1.0), box);
    const double v = sampled_values(spec, params, delta, x)(0);
    if (v > best_value) {
      best_value = v;
      best_x = x;
    }
  }
  return best_x;
}

}  // namespace predfilt
