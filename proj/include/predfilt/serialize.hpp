#pragma once

#include <string>

#include "predfilt/filters.hpp"

namespace predfilt {

inline constexpr int kBeliefFormatVersion = 1;

/// JSON checkpoint of a belief:
///   {"format": "predfilt-belief", "version": 1, "kind": "hilofi",
///    "spec_hash": "<16 hex digits>", "param_count": D,
///    "mean_hidden": [...], "mean_last": [...],          (hilofi / lolofi)
///    "mean": [...],                                      (dense / lrkf)
///    "factors": {"<name>": {"rows": r, "cols": c, "data": [row-major]}}}
/// Factor names: dense "cov"; lrkf "w"; hilofi "sigma_last_half", "c_hidden";
/// lolofi "c_last", "c_hidden". Doubles use the shortest round-trip form, so
/// save/load is exact.
std::string save_belief(const Belief& belief, const NetworkSpec& spec);

/// Throws std::runtime_error on a malformed document, unknown version or a
/// spec hash that does not match `spec`.
Belief load_belief(const std::string& text, const NetworkSpec& spec);

void save_belief_file(const std::string& path, const Belief& belief, const NetworkSpec& spec);
Belief load_belief_file(const std::string& path, const NetworkSpec& spec);

}  // namespace predfilt
