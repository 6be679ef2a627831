#include "predfilt/environments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

namespace predfilt {

namespace {

Vector gaussian(Eigen::Index n, Philox& rng, double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

std::uint32_t read_u32(std::istream& in, const std::string& path, const char* field) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw FormatError(path + ": truncated header reading " + field);
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

void write_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                     static_cast<char>(v)};
  out.write(b, 4);
}

std::vector<std::uint8_t> read_bytes(std::istream& in, std::size_t n, const std::string& path, const char* field) {
  std::vector<std::uint8_t> buf(n);
  if (n > 0 && !in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n))) {
    throw FormatError(path + ": truncated " + field + " (expected " + std::to_string(n) + " bytes)");
  }
  return buf;
}

// Maps u in [0, 1] onto [lo, hi].
double scale(double u, double lo, double hi) { return lo + u * (hi - lo); }

}  // namespace

LinearBandit::LinearBandit(const LinearBanditConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      ctx_rng_(seed, Stream::kEnv, 0),
      noise_rng_(seed, Stream::kEnv, 1),
      drift_rng_(seed, Stream::kDrift) {
  if (cfg.arms < 1 || cfg.context_dim < 1) throw std::invalid_argument("bandit needs >= 1 arm and context dim");
  if (cfg.noise_sd < 0.0 || cfg.drift_var < 0.0) throw std::invalid_argument("bandit noise must be >= 0");
  Philox theta_rng(seed, Stream::kTarget);
  theta_ = gaussian(static_cast<Eigen::Index>(cfg.arms) * cfg.context_dim, theta_rng);
}

void LinearBandit::set_theta(Vector theta) {
  if (theta.size() != theta_.size()) throw std::invalid_argument("theta has the wrong size");
  theta_ = std::move(theta);
}

Vector LinearBandit::context() { return gaussian(cfg_.context_dim, ctx_rng_); }

Vector LinearBandit::features(const Vector& context, int action) const {
  if (action < 0 || action >= cfg_.arms) throw std::invalid_argument("action index out of range");
  Vector phi = Vector::Zero(theta_.size());
  phi.segment(static_cast<Eigen::Index>(action) * cfg_.context_dim, cfg_.context_dim) = context;
  return phi;
}

double LinearBandit::expected_reward(const Vector& context, int action) const {
  if (action < 0 || action >= cfg_.arms) throw std::invalid_argument("action index out of range");
  return theta_.segment(static_cast<Eigen::Index>(action) * cfg_.context_dim, cfg_.context_dim).dot(context);
}

BanditFeedback LinearBandit::reward(const Vector& context, int action) {
  if (context.size() != cfg_.context_dim) throw std::invalid_argument("context has the wrong size");
  BanditFeedback fb;
  fb.expected = expected_reward(context, action);
  fb.best_expected = expected_reward(context, 0);
  for (int a = 1; a < cfg_.arms; ++a) {
    const double v = expected_reward(context, a);
    if (v > fb.best_expected) {
      fb.best_expected = v;
      fb.best_action = a;
    }
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  fb.reward = fb.expected + cfg_.noise_sd * normal(noise_rng_);
  if (cfg_.drift_var > 0.0) theta_ += gaussian(theta_.size(), drift_rng_, std::sqrt(cfg_.drift_var));
  return fb;
}

Vector MnistData::image(std::size_t i) const {
  if (i >= size()) throw std::out_of_range("image index out of range");
  const int n = pixel_count();
  Vector v(n);
  const std::uint8_t* p = pixels.data() + i * static_cast<std::size_t>(n);
  for (int k = 0; k < n; ++k) v(k) = p[k] / 255.0;
  return v;
}

MnistData load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw FormatError("cannot open " + images_path);
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw FormatError("cannot open " + labels_path);

  MnistData d;
  const std::uint32_t img_magic = read_u32(img, images_path, "magic");
  if (img_magic != 0x00000803u) throw FormatError(images_path + ": bad magic (expected 0x00000803)");
  const std::uint32_t count = read_u32(img, images_path, "count");
  d.rows = static_cast<int>(read_u32(img, images_path, "rows"));
  d.cols = static_cast<int>(read_u32(img, images_path, "cols"));
  if (d.rows != 28 || d.cols != 28) throw FormatError(images_path + ": rows/cols must be 28");
  d.pixels = read_bytes(img, static_cast<std::size_t>(count) * 784, images_path, "pixel data");

  const std::uint32_t lab_magic = read_u32(lab, labels_path, "magic");
  if (lab_magic != 0x00000801u) throw FormatError(labels_path + ": bad magic (expected 0x00000801)");
  const std::uint32_t lcount = read_u32(lab, labels_path, "count");
  if (lcount != count) {
    throw FormatError(labels_path + ": count " + std::to_string(lcount) + " does not match image count " +
                      std::to_string(count));
  }
  d.labels = read_bytes(lab, lcount, labels_path, "label data");
  for (auto l : d.labels) {
    if (l > 9) throw FormatError(labels_path + ": label value " + std::to_string(l) + " out of range");
  }
  return d;
}

void write_mnist_idx(const std::string& images_path, const std::string& labels_path, const MnistData& data) {
  std::ofstream img(images_path, std::ios::binary);
  std::ofstream lab(labels_path, std::ios::binary);
  if (!img || !lab) throw std::runtime_error("cannot write IDX files");
  write_u32(img, 0x00000803u);
  write_u32(img, static_cast<std::uint32_t>(data.size()));
  write_u32(img, static_cast<std::uint32_t>(data.rows));
  write_u32(img, static_cast<std::uint32_t>(data.cols));
  img.write(reinterpret_cast<const char*>(data.pixels.data()), static_cast<std::streamsize>(data.pixels.size()));
  write_u32(lab, 0x00000801u);
  write_u32(lab, static_cast<std::uint32_t>(data.size()));
  lab.write(reinterpret_cast<const char*>(data.labels.data()), static_cast<std::streamsize>(data.labels.size()));
}

std::optional<std::pair<std::string, std::string>> find_mnist_files(const std::string& dir,
                                                                    const std::string& split) {
  namespace fs = std::filesystem;
  const std::string prefix = split == "test" ? "t10k" : "train";
  for (const char* sep : {"-", "."}) {
    const fs::path images = fs::path(dir) / (prefix + "-images" + sep + "idx3-ubyte");
    const fs::path labels = fs::path(dir) / (prefix + "-labels" + sep + "idx1-ubyte");
    if (fs::exists(images) && fs::exists(labels)) return std::make_pair(images.string(), labels.string());
  }
  return std::nullopt;
}

MnistBandit::MnistBandit(const MnistData* data, std::uint64_t seed) : data_(data), order_(data->size()) {
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  Philox rng(seed, Stream::kEnv);
  std::shuffle(order_.begin(), order_.end(), rng);
}

Vector MnistBandit::context() {
  if (exhausted()) throw EndOfStream("MNIST stream exhausted");
  const std::size_t i = order_[cursor_++];
  current_label_ = data_->labels[i];
  return data_->image(i);
}

BanditFeedback MnistBandit::reward(int action) const {
  if (action < 0 || action >= 10) throw std::invalid_argument("action index out of range");
  BanditFeedback fb;
  fb.reward = action == current_label_ ? 1.0 : 0.0;
  fb.expected = fb.reward;
  fb.best_expected = 1.0;
  fb.best_action = current_label_;
  return fb;
}

double inbetween_truth(double x) { return std::sin(2.0 * x) + 0.2 * x; }

std::pair<Vector, Vector> inbetween_dataset(std::uint64_t seed) {
  Philox rng(seed, Stream::kData);
  std::uniform_real_distribution<double> left(-3.2, -1.2), right(1.2, 3.2);
  std::normal_distribution<double> noise(0.0, 0.1);
  std::vector<double> xs;
  for (int i = 0; i < 60; ++i) xs.push_back(left(rng));
  for (int i = 0; i < 60; ++i) xs.push_back(right(rng));
  std::shuffle(xs.begin(), xs.end(), rng);
  Vector x(120), y(120);
  for (int i = 0; i < 120; ++i) {
    x(i) = xs[i];
    y(i) = inbetween_truth(xs[i]) + noise(rng);
  }
  return {x, y};
}

BoFunction BoFunction::ackley(int dim) {
  if (dim < 1) throw std::invalid_argument("Ackley needs dim >= 1");
  return BoFunction(BoFunctionKind::kAckley, dim);
}

BoFunction BoFunction::branin() { return BoFunction(BoFunctionKind::kBranin, 2); }

BoFunction BoFunction::hartmann6() { return BoFunction(BoFunctionKind::kHartmann6, 6); }

BoFunction BoFunction::draw_nn(int dim, std::uint64_t seed) {
  if (dim < 1) throw std::invalid_argument("DrawNN needs dim >= 1");
  BoFunction f(BoFunctionKind::kDrawNN, dim);
  f.net_ = NetworkSpec{dim, {64, 64}, 1, Activation::kTanh};
  std::vector<Layer> layers = unflatten(f.net_, init_params(f.net_, seed ^ 0xD2A3F00Dull));
  Philox rng(seed, Stream::kTarget);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& layer : layers) {
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = 0.5 * normal(rng);
  }
  f.params_ = flatten(f.net_, layers);
  return f;
}

BoFunction BoFunction::parse(const std::string& name, int dim, std::uint64_t seed) {
  if (name == "ackley") return ackley(dim);
  if (name == "branin") return branin();
  if (name == "hartmann6") return hartmann6();
  if (name == "drawnn") return draw_nn(dim, seed);
  throw std::invalid_argument("unknown BO function '" + name + "'");
}

std::string BoFunction::name() const {
  switch (kind_) {
    case BoFunctionKind::kAckley:
      return "ackley";
    case BoFunctionKind::kBranin:
      return "branin";
    case BoFunctionKind::kHartmann6:
      return "hartmann6";
    case BoFunctionKind::kDrawNN:
      return "drawnn";
  }
  return "?";
}

double BoFunction::optimum() const {
  switch (kind_) {
    case BoFunctionKind::kAckley:
      return 0.0;
    case BoFunctionKind::kBranin:
      return -0.39788735772973816;
    case BoFunctionKind::kHartmann6:
      return 3.32236801141551;
    case BoFunctionKind::kDrawNN:
      return std::nan("");
  }
  return std::nan("");
}

double BoFunction::operator()(const Vector& u) const {
  if (u.size() != dim_) throw std::invalid_argument("query has the wrong dimension");
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (!(u(i) >= 0.0 && u(i) <= 1.0)) throw std::invalid_argument("query outside the unit box");
  }
  switch (kind_) {
    case BoFunctionKind::kAckley: {
      const Vector x = u.unaryExpr([](double v) { return scale(v, -32.768, 32.768); });
      const double n = static_cast<double>(dim_);
      const double s1 = x.squaredNorm() / n;
      const double s2 = x.unaryExpr([](double v) { return std::cos(2.0 * M_PI * v); }).sum() / n;
      return -(-20.0 * std::exp(-0.2 * std::sqrt(s1)) - std::exp(s2) + 20.0 + std::exp(1.0));
    }
    case BoFunctionKind::kBranin: {
      const double x1 = scale(u(0), -5.0, 10.0);
      const double x2 = scale(u(1), 0.0, 15.0);
      const double b = 5.1 / (4.0 * M_PI * M_PI);
      const double c = 5.0 / M_PI;
      const double t = 1.0 / (8.0 * M_PI);
      const double a = x2 - b * x1 * x1 + c * x1 - 6.0;
      return -(a * a + 10.0 * (1.0 - t) * std::cos(x1) + 10.0);
    }
    case BoFunctionKind::kHartmann6: {
      static const double alpha[4] = {1.0, 1.2, 3.0, 3.2};
      static const double A[4][6] = {{10, 3, 17, 3.5, 1.7, 8},
                                     {0.05, 10, 17, 0.1, 8, 14},
                                     {3, 3.5, 1.7, 10, 17, 8},
                                     {17, 8, 0.05, 10, 0.1, 14}};
      static const double P[4][6] = {{0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886},
                                     {0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991},
                                     {0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650},
                                     {0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381}};
      double total = 0.0;
      for (int i = 0; i < 4; ++i) {
        double inner = 0.0;
        for (int j = 0; j < 6; ++j) inner += A[i][j] * (u(j) - P[i][j]) * (u(j) - P[i][j]);
        total += alpha[i] * std::exp(-inner);
      }
      return total;
    }
    case BoFunctionKind::kDrawNN:
      return forward(net_, params_, (2.0 * u.array() - 1.0).matrix())(0);
  }
  return 0.0;
}

double bo_eval(const BoFunction& f, const Vector& u) { return f(u); }

}  // namespace predfilt
