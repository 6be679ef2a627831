#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "predfilt/filters.hpp"

namespace predfilt {

enum class ExperimentKind { kInbetween, kBandit, kMnistBandit, kMnistClassify, kBo };
enum class PolicyKind { kPbayes, kTs, kEpsGreedy, kEi, kUniform };

ExperimentKind parse_experiment(const std::string& name);
std::string to_string(ExperimentKind kind);
PolicyKind parse_policy(const std::string& name);
std::string to_string(PolicyKind kind);

/// Invalid configuration; `keys` lists every offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::vector<std::string> keys)
      : std::runtime_error(what), keys(std::move(keys)) {}
  std::vector<std::string> keys;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kBandit;
  FilterKind filter = FilterKind::kHiLoFi;
  PolicyKind policy = PolicyKind::kPbayes;

  // ranks
  Eigen::Index rank = 50;         // LRKF d
  Eigen::Index rank_hidden = 50;  // d_ω
  Eigen::Index rank_last = 50;    // d_η (LoLoFi)

  // noise
  double q_last = 1e-6;
  double q_hidden = 1e-6;
  double r = 0.1;           // observation noise standard deviation
  double obs_eps = 1e-3;    // moment-matched jitter (classification)
  double epsilon = 0.05;    // ε-greedy
  double prior_var_last = 0.1;
  double prior_var_hidden = 0.1;

  // network; input/output sizes follow from the environment
  std::vector<int> hidden = {64, 64};
  Activation activation = Activation::kElu;

  int steps = 1000;
  std::vector<std::uint64_t> seeds = {0};
  int workers = 0;  // 0 = hardware concurrency
  bool diagnostics = false;

  // bandit
  int arms = 5;
  int context_dim = 2;
  double bandit_noise = 0.1;
  double drift_var = 0.0;

  // bo
  std::string function = "branin";
  int function_dim = 2;
  int candidate_count = 512;
  int init_points = 10;
  int refine_steps = 0;
  double refine_step_size = 0.01;

  std::string data_dir;  // MNIST root; falls back to PREDFILT_DATA_DIR

  /// Throws ConfigError naming every invalid key.
  void validate() const;
};

/// Parses TOML text. Unknown keys and wrong types are ConfigError.
ExperimentConfig parse_config(const std::string& toml_text);
ExperimentConfig load_config(const std::string& path);

}  // namespace predfilt
