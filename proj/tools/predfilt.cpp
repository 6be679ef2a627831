#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "predfilt/config.hpp"
#include "predfilt/environments.hpp"
#include "predfilt/experiment.hpp"
#include "predfilt/suites.hpp"

using namespace predfilt;

namespace {

constexpr int kInvalidConfig = 1;
constexpr int kMissingData = 2;

std::string data_dir_or_env(const std::string& given) {
  if (!given.empty()) return given;
  const char* env = std::getenv("PREDFILT_DATA_DIR");
  return env ? env : "";
}

int cmd_run(const std::string& config_path, const std::string& out, long long seed_override, bool diagnostics) {
  RunOptions opts;
  opts.out_dir = out;
  opts.diagnostics = diagnostics;
  if (seed_override >= 0) opts.seed_override = static_cast<std::uint64_t>(seed_override);
  try {
    const RunResult res = run(load_config(config_path), opts);
    for (const auto& p : res.trace_paths) std::cout << "trace " << p << "\n";
    std::cout << "summary " << res.summary_path << "\n";
  } catch (const ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    if (!e.keys.empty()) {
      std::cerr << "offending keys:";
      for (const auto& k : e.keys) std::cerr << " " << k;
      std::cerr << "\n";
    }
    return kInvalidConfig;
  } catch (const MissingDatasetError& e) {
    std::cerr << "missing dataset: " << e.what() << "\n";
    return kMissingData;
  } catch (const FormatError& e) {
    std::cerr << "invalid dataset: " << e.what() << "\n";
    return kMissingData;
  }
  return 0;
}

int cmd_verify(const std::string& suite, const std::string& data_dir, bool verbose) {
  SuiteOptions opts{data_dir, verbose};
  std::vector<std::string> names;
  if (suite == "all") {
    names = suite_names();
  } else {
    names = {suite};
  }
  bool failed = false;
  for (const auto& name : names) {
    for (const auto& r : run_suite(name, opts)) {
      std::cout << format_result(r) << std::endl;
      failed = failed || r.status == Status::kFail;
    }
  }
  return failed ? 1 : 0;
}

int cmd_mnist_check(const std::string& given) {
  const std::string dir = data_dir_or_env(given);
  if (dir.empty()) {
    std::cerr << "no data directory: pass --data-dir or set PREDFILT_DATA_DIR\n";
    return kMissingData;
  }
  int found = 0;
  for (const char* split : {"train", "test"}) {
    const auto files = find_mnist_files(dir, split);
    if (!files) {
      std::cout << split << ": not found in " << dir << "\n";
      continue;
    }
    try {
      const MnistData d = load_mnist_idx(files->first, files->second);
      std::cout << split << ": " << d.size() << " images of " << d.rows << "x" << d.cols << " ("
                << files->first << ")\n";
      ++found;
    } catch (const FormatError& e) {
      std::cerr << split << ": invalid IDX file: " << e.what() << "\n";
      return kMissingData;
    }
  }
  if (found == 0 || !find_mnist_files(dir, "train")) {
    std::cerr << "MNIST training files missing under " << dir << "\n";
    return kMissingData;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-rank Kalman filtering for online neural networks: experiments and checks"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "Run an experiment from a TOML config");
  std::string config_path, out_dir = "predfilt_out";
  long long seed_override = -1;
  bool diagnostics = false;
  run_cmd->add_option("--config", config_path, "TOML config file")->required();
  run_cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
  run_cmd->add_option("--seed-override", seed_override, "Run this single seed instead of the config's list")
      ->check(CLI::NonNegativeNumber);
  run_cmd->add_flag("--diagnostics", diagnostics, "Record per-step covariance bounds");

  auto* verify_cmd = app.add_subcommand("verify", "Run an acceptance suite");
  std::string suite, verify_data;
  bool verbose = false;
  std::vector<std::string> choices = suite_names();
  choices.push_back("all");
  verify_cmd->add_option("suite", suite, "Suite name")->required()->check(CLI::IsMember(choices));
  verify_cmd->add_option("--data-dir", verify_data, "MNIST directory (default: PREDFILT_DATA_DIR)");
  verify_cmd->add_flag("-v,--verbose", verbose, "Progress on stderr");

  auto* mnist_cmd = app.add_subcommand("mnist-fetch-check", "Validate local MNIST IDX files (never downloads)");
  std::string mnist_dir;
  mnist_cmd->add_option("--data-dir", mnist_dir, "Directory holding the IDX files (default: PREDFILT_DATA_DIR)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(config_path, out_dir, seed_override, diagnostics);
    if (*verify_cmd) return cmd_verify(suite, data_dir_or_env(verify_data), verbose);
    if (*mnist_cmd) return cmd_mnist_check(mnist_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
