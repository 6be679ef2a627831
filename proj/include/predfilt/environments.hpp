#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "predfilt/net.hpp"
#include "predfilt/rng.hpp"

namespace predfilt {

struct BanditFeedback {
  double reward = 0.0;
  double expected = 0.0;       // noiseless reward of the chosen arm
  double best_expected = 0.0;  // noiseless reward of the best arm
  int best_action = 0;
};

/// Linear contextual bandit, reward = θ*^T (e_a ⊗ c) + N(0, σ²), contexts
/// N(0, I). With drift_var > 0, θ* takes a Gaussian random-walk step after
/// every pull (drawn from its own stream).
struct LinearBanditConfig {
  int arms = 5;
  int context_dim = 2;
  double noise_sd = 0.1;
  double drift_var = 0.0;
};

class LinearBandit {
 public:
  LinearBandit(const LinearBanditConfig& cfg, std::uint64_t seed);

  int arms() const { return cfg_.arms; }
  int context_dim() const { return cfg_.context_dim; }
  const Vector& theta() const { return theta_; }
  void set_theta(Vector theta);

  Vector context();
  BanditFeedback reward(const Vector& context, int action);
  double expected_reward(const Vector& context, int action) const;
  Vector features(const Vector& context, int action) const;

 private:
  LinearBanditConfig cfg_;
  Vector theta_;
  Philox ctx_rng_;
  Philox noise_rng_;
  Philox drift_rng_;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EndOfStream : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raw MNIST-style data. Pixels stay as bytes; image(i) scales to [0, 1].
struct MnistData {
  int rows = 28;
  int cols = 28;
  std::vector<std::uint8_t> pixels;  // count · rows · cols
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return labels.size(); }
  int pixel_count() const { return rows * cols; }
  Vector image(std::size_t i) const;
};

/// IDX reader: images magic 0x00000803 (count, rows, cols, bytes), labels
/// magic 0x00000801 (count, bytes). Throws FormatError naming the field.
MnistData load_mnist_idx(const std::string& images_path, const std::string& labels_path);
void write_mnist_idx(const std::string& images_path, const std::string& labels_path, const MnistData& data);

/// Image and label paths of a split under `dir` (uncompressed files named
/// train-images-idx3-ubyte or train-images.idx3-ubyte, etc.), or nullopt.
std::optional<std::pair<std::string, std::string>> find_mnist_files(const std::string& dir,
                                                                    const std::string& split = "train");

/// Classification bandit over a shuffled pass of the data: reward 1 for the
/// correct label, 0 otherwise.
class MnistBandit {
 public:
  MnistBandit(const MnistData* data, std::uint64_t seed);

  int arms() const { return 10; }
  bool exhausted() const { return cursor_ >= order_.size(); }
  /// Next image; throws EndOfStream once every item has been served.
  Vector context();
  int label() const { return current_label_; }
  BanditFeedback reward(int action) const;

 private:
  const MnistData* data_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  int current_label_ = -1;
};

/// Two clusters (uniform on [-3.2, -1.2] and [1.2, 3.2], 60 points each),
/// y = sin(2x) + 0.2x + N(0, 0.1²), in shuffled order.
std::pair<Vector, Vector> inbetween_dataset(std::uint64_t seed);
double inbetween_truth(double x);

enum class BoFunctionKind { kAckley, kBranin, kHartmann6, kDrawNN };

/// Test function on [0, 1]^D, maximisation convention (standard functions are
/// negated; DrawNN is a fixed random tanh network and is not).
class BoFunction {
 public:
  static BoFunction ackley(int dim);
  static BoFunction branin();
  static BoFunction hartmann6();
  static BoFunction draw_nn(int dim, std::uint64_t seed);
  static BoFunction parse(const std::string& name, int dim, std::uint64_t seed);

  BoFunctionKind kind() const { return kind_; }
  int dim() const { return dim_; }
  std::string name() const;
  /// Known global maximum (NaN when unknown).
  double optimum() const;

  double operator()(const Vector& u) const;

 private:
  BoFunction(BoFunctionKind kind, int dim) : kind_(kind), dim_(dim) {}

  BoFunctionKind kind_;
  int dim_;
  NetworkSpec net_;
  FlatParams params_;
};

double bo_eval(const BoFunction& f, const Vector& u);

}  // namespace predfilt
