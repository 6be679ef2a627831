#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "predfilt/config.hpp"
#include "predfilt/environments.hpp"

namespace predfilt {

/// Dataset required by the experiment is not available.
class MissingDatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StepRecord {
  std::int64_t t = 0;              // 1-based
  int action = -1;                 // discrete experiments
  std::vector<double> query;       // bo
  double reward = 0.0;
  double cumulative_reward = 0.0;
  double regret = 0.0;             // cumulative
  std::int64_t step_ns = 0;        // filter update + policy call only
  double pred_mean = 0.0;          // predictive at the chosen action / input
  double pred_std = 0.0;
  std::optional<double> bound;            // per-step covariance bound (diagnostics)
  std::optional<double> bound_unsquared;  // HiLoFi with the unsquared cross term
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<StepRecord> records;
  std::map<std::string, double> metrics;  // per-seed totals for the summary
};

/// Runs one seed in memory. `mnist` must be set for the MNIST experiments.
SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed, const MnistData* mnist = nullptr);

struct RunOptions {
  std::string out_dir = "predfilt_out";
  std::optional<std::uint64_t> seed_override;
  bool diagnostics = false;
};

struct RunResult {
  std::vector<SeedResult> seeds;
  std::string summary_path;
  std::vector<std::string> trace_paths;
};

/// Resolves the MNIST directory: the config value, else PREDFILT_DATA_DIR.
std::string resolve_data_dir(const ExperimentConfig& cfg);

/// Loads MNIST train files or throws MissingDatasetError.
MnistData load_mnist_for(const ExperimentConfig& cfg);

/// Runs every seed (in parallel workers), then writes one JSONL trace per
/// seed and a summary CSV (per-seed rows, then mean and std rows).
RunResult run(ExperimentConfig cfg, const RunOptions& opts);

std::string to_jsonl(const StepRecord& r);
std::string summary_csv(const std::vector<SeedResult>& seeds);

/// Throws std::logic_error if cumulative fields disagree with the per-step
/// rewards or t is not increasing.
void check_trace(const std::vector<StepRecord>& records);

}  // namespace predfilt
