#include <gtest/gtest.h>

#include <filesystem>

#include "predfilt/serialize.hpp"

using namespace predfilt;

namespace {

const NetworkSpec kSpec{2, {5}, 1, Activation::kElu};

Belief trained(FilterKind kind) {
  FilterOptions o;
  o.kind = kind;
  o.rank = o.rank_hidden = o.rank_last = 3;
  Belief b = init_belief(kSpec, init_params(kSpec, 1), o);
  for (int t = 0; t < 5; ++t) {
    const Vector x{{0.3 * t, -0.1 * t}};
    b = step(b, kSpec, x, Vector{{std::sin(x(0))}}, NoiseConfig::isotropic(1, 0.1, 1e-4, 1e-4));
  }
  return b;
}

}  // namespace

TEST(Serialize, RoundTripIsExactForEveryFilter) {
  for (FilterKind k : {FilterKind::kDense, FilterKind::kLrkf, FilterKind::kHiLoFi, FilterKind::kLoLoFi}) {
    const Belief b = trained(k);
    const Belief r = load_belief(save_belief(b, kSpec), kSpec);
    ASSERT_EQ(r.index(), b.index());
    EXPECT_EQ(mean_params(r, kSpec).theta, mean_params(b, kSpec).theta) << to_string(k);
    EXPECT_EQ(dense_cov(r, kSpec), dense_cov(b, kSpec)) << to_string(k);
  }
}

TEST(Serialize, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "predfilt_belief.json";
  const Belief b = trained(FilterKind::kHiLoFi);
  save_belief_file(path.string(), b, kSpec);
  EXPECT_EQ(dense_cov(load_belief_file(path.string(), kSpec), kSpec), dense_cov(b, kSpec));
}

TEST(Serialize, RejectsMismatches) {
  const std::string text = save_belief(trained(FilterKind::kLrkf), kSpec);
  EXPECT_THROW(load_belief(text, NetworkSpec{2, {6}, 1, Activation::kElu}), std::runtime_error);
  std::string bad = text;
  bad.replace(bad.find("\"version\":1"), 11, "\"version\":9");
  EXPECT_THROW(load_belief(bad, kSpec), std::runtime_error);
  EXPECT_THROW(load_belief("{not json", kSpec), std::runtime_error);
}
