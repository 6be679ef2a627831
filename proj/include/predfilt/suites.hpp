#pragma once

#include <string>
#include <vector>

namespace predfilt {

enum class Status { kPass, kFail, kSkip };

std::string to_string(Status s);

/// One acceptance criterion: measured values against thresholds.
struct CriterionResult {
  std::string name;
  Status status = Status::kFail;
  std::string detail;
  double seconds = 0.0;
};

struct SuiteOptions {
  std::string data_dir;  // MNIST root; falls back to PREDFILT_DATA_DIR
  bool verbose = false;  // progress lines on stderr
};

/// linalg, oracle, bounds, uncertainty, bandit, bo, timing, mnist, classify.
const std::vector<std::string>& suite_names();

/// Runs the named suite. Throws std::invalid_argument for an unknown name.
std::vector<CriterionResult> run_suite(const std::string& suite, const SuiteOptions& opts = {});

/// "[PASS] name: detail (1.2 s)".
std::string format_result(const CriterionResult& r);

}  // namespace predfilt
