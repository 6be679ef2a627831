#include "predfilt/net.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "predfilt/rng.hpp"

namespace predfilt {

namespace {

double act(Activation a, double z) {
  switch (a) {
    case Activation::kElu:
      return elu(z);
    case Activation::kTanh:
      return std::tanh(z);
    case Activation::kRelu:
      return z > 0.0 ? z : 0.0;
  }
  return z;
}

double act_prime(Activation a, double z) {
  switch (a) {
    case Activation::kElu:
      return z >= 0.0 ? 1.0 : std::exp(z);
    case Activation::kTanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::kRelu:
      return z > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

double act_second(Activation a, double z) {
  switch (a) {
    case Activation::kElu:
      return z >= 0.0 ? 0.0 : std::exp(z);
    case Activation::kTanh: {
      const double t = std::tanh(z);
      return -2.0 * t * (1.0 - t * t);
    }
    case Activation::kRelu:
      return 0.0;
  }
  return 0.0;
}

std::vector<int> layer_sizes(const NetworkSpec& spec) {
  std::vector<int> sizes;
  sizes.reserve(spec.hidden_widths.size() + 2);
  sizes.push_back(spec.input_dim);
  sizes.insert(sizes.end(), spec.hidden_widths.begin(), spec.hidden_widths.end());
  sizes.push_back(spec.output_dim);
  return sizes;
}

// Maps a layer's weights/bias onto the flat vector without copying.
struct LayerMap {
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> weight;
  Eigen::Map<const Vector> bias;
};

std::vector<LayerMap> map_layers(const NetworkSpec& spec, const Vector& theta) {
  const auto sizes = layer_sizes(spec);
  std::vector<LayerMap> out;
  out.reserve(sizes.size() - 1);
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int in = sizes[l];
    const int o = sizes[l + 1];
    out.push_back(LayerMap{{theta.data() + offset, o, in}, {theta.data() + offset + static_cast<Eigen::Index>(o) * in, o}});
    offset += static_cast<Eigen::Index>(o) * (in + 1);
  }
  return out;
}

void check_input(const NetworkSpec& spec, const FlatParams& params, Eigen::Index rows) {
  if (rows != spec.input_dim) {
    throw std::invalid_argument("input has " + std::to_string(rows) + " entries, network expects " +
                                std::to_string(spec.input_dim));
  }
  if (params.size() != spec.param_count() || params.split != spec.hidden_param_count()) {
    throw std::invalid_argument("parameter vector does not match network spec");
  }
}

}  // namespace

double elu(double z) { return z >= 0.0 ? z : std::expm1(z); }

Activation parse_activation(const std::string& name) {
  if (name == "elu") return Activation::kElu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kElu:
      return "elu";
    case Activation::kTanh:
      return "tanh";
    case Activation::kRelu:
      return "relu";
  }
  return "?";
}

void NetworkSpec::validate() const {
  if (input_dim < 1) throw std::invalid_argument("input_dim must be >= 1");
  if (output_dim < 1) throw std::invalid_argument("output_dim must be >= 1");
  for (int w : hidden_widths) {
    if (w < 1) throw std::invalid_argument("hidden widths must be >= 1");
  }
}

Eigen::Index NetworkSpec::hidden_param_count() const {
  Eigen::Index n = 0;
  int in = input_dim;
  for (int w : hidden_widths) {
    n += static_cast<Eigen::Index>(w) * (in + 1);
    in = w;
  }
  return n;
}

Eigen::Index NetworkSpec::last_param_count() const {
  return static_cast<Eigen::Index>(output_dim) * (feature_dim() + 1);
}

std::uint64_t NetworkSpec::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xFFu;
      h *= 1099511628211ULL;
    }
  };
  mix(static_cast<std::uint64_t>(input_dim));
  mix(hidden_widths.size());
  for (int w : hidden_widths) mix(static_cast<std::uint64_t>(w));
  mix(static_cast<std::uint64_t>(output_dim));
  mix(static_cast<std::uint64_t>(activation));
  return h;
}

FlatParams FlatParams::join(const NetworkSpec& spec, const Vector& hidden, const Vector& last) {
  if (hidden.size() != spec.hidden_param_count() || last.size() != spec.last_param_count()) {
    throw std::invalid_argument("parameter blocks do not match network spec");
  }
  FlatParams p;
  p.theta.resize(hidden.size() + last.size());
  p.theta << hidden, last;
  p.split = hidden.size();
  return p;
}

std::vector<Layer> unflatten(const NetworkSpec& spec, const FlatParams& params) {
  if (params.size() != spec.param_count()) throw std::invalid_argument("parameter vector does not match network spec");
  std::vector<Layer> layers;
  for (const auto& m : map_layers(spec, params.theta)) layers.push_back(Layer{Matrix(m.weight), Vector(m.bias)});
  return layers;
}

FlatParams flatten(const NetworkSpec& spec, const std::vector<Layer>& layers) {
  const auto sizes = layer_sizes(spec);
  if (layers.size() + 1 != sizes.size()) throw std::invalid_argument("layer count does not match network spec");
  FlatParams p;
  p.theta.resize(spec.param_count());
  p.split = spec.hidden_param_count();
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.weight.rows() != sizes[l + 1] || layer.weight.cols() != sizes[l] || layer.bias.size() != sizes[l + 1]) {
      throw std::invalid_argument("layer " + std::to_string(l) + " has the wrong shape");
    }
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        p.theta.data() + offset, layer.weight.rows(), layer.weight.cols()) = layer.weight;
    offset += layer.weight.size();
    p.theta.segment(offset, layer.bias.size()) = layer.bias;
    offset += layer.bias.size();
  }
  return p;
}

FlatParams init_params(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  const auto sizes = layer_sizes(spec);
  Philox rng(seed, Stream::kInit);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Layer> layers;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const double sd = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
    Layer layer{Matrix(sizes[l + 1], sizes[l]), Vector::Zero(sizes[l + 1])};
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) layer.weight(i, j) = sd * normal(rng);
    }
    layers.push_back(std::move(layer));
  }
  return flatten(spec, layers);
}

Vector forward(const NetworkSpec& spec, const FlatParams& params, const Vector& x) {
  return forward_batch(spec, params, x);
}

Matrix forward_batch(const NetworkSpec& spec, const FlatParams& params, const Matrix& xs) {
  check_input(spec, params, xs.rows());
  const auto layers = map_layers(spec, params.theta);
  Matrix a = xs;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Matrix z = layers[l].weight * a;
    z.colwise() += layers[l].bias;
    if (l + 1 < layers.size()) z = z.unaryExpr([&](double v) { return act(spec.activation, v); });
    a = std::move(z);
  }
  return a;
}

JacobianPair jacobians(const NetworkSpec& spec, const FlatParams& params, const Vector& x) {
  check_input(spec, params, x.size());
  const auto layers = map_layers(spec, params.theta);
  const std::size_t n_layers = layers.size();
  std::vector<Vector> acts(n_layers);   // input to layer l
  std::vector<Vector> deriv(n_layers);  // σ'(z) for hidden layers
  Vector a = x;
  for (std::size_t l = 0; l < n_layers; ++l) {
    acts[l] = a;
    Vector z = layers[l].weight * a + layers[l].bias;
    if (l + 1 < n_layers) {
      deriv[l] = z.unaryExpr([&](double v) { return act_prime(spec.activation, v); });
      a = z.unaryExpr([&](double v) { return act(spec.activation, v); });
    } else {
      a = std::move(z);
    }
  }

  const Eigen::Index dy = spec.output_dim;
  JacobianPair jp;
  jp.l_tilde.setZero(dy, spec.last_param_count());
  jp.h_tilde.setZero(dy, spec.hidden_param_count());

  // Columns of `grad` are ∂f_i/∂z_l for each output i.
  Matrix grad = Matrix::Identity(dy, dy);
  Eigen::Index offset = spec.param_count();
  for (std::size_t li = n_layers; li-- > 0;) {
    const auto& in = acts[li];
    const Eigen::Index out_dim = layers[li].weight.rows();
    const Eigen::Index in_dim = layers[li].weight.cols();
    offset -= out_dim * (in_dim + 1);
    const bool last = li + 1 == n_layers;
    Matrix& target = last ? jp.l_tilde : jp.h_tilde;
    const Eigen::Index base = last ? 0 : offset;
    for (Eigen::Index i = 0; i < dy; ++i) {
      // Row-major weight gradient is the outer product grad_i · in^T.
      for (Eigen::Index r = 0; r < out_dim; ++r) {
        const double g = grad(r, i);
        if (g != 0.0) target.row(i).segment(base + r * in_dim, in_dim) = g * in.transpose();
      }
      target.row(i).segment(base + out_dim * in_dim, out_dim) = grad.col(i).transpose();
    }
    if (li > 0) {
      grad = layers[li].weight.transpose() * grad;
      grad.array().colwise() *= deriv[li - 1].array();
    }
  }
  return jp;
}

Matrix jvp_batch(const NetworkSpec& spec, const FlatParams& params, const Vector& delta, const Matrix& xs) {
  check_input(spec, params, xs.rows());
  if (delta.size() != params.size()) throw std::invalid_argument("jvp: direction has the wrong size");
  const auto layers = map_layers(spec, params.theta);
  const auto dirs = map_layers(spec, delta);
  Matrix a = xs;
  Matrix a_dot = Matrix::Zero(xs.rows(), xs.cols());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Matrix z = layers[l].weight * a;
    z.colwise() += layers[l].bias;
    Matrix z_dot = layers[l].weight * a_dot + dirs[l].weight * a;
    z_dot.colwise() += dirs[l].bias;
    if (l + 1 < layers.size()) {
      z_dot.array() *= z.unaryExpr([&](double v) { return act_prime(spec.activation, v); }).array();
      a = z.unaryExpr([&](double v) { return act(spec.activation, v); });
    } else {
      a = std::move(z);
    }
    a_dot = std::move(z_dot);
  }
  return a_dot;
}

Matrix jvp_rows(const NetworkSpec& spec, const FlatParams& params, const Vector& x, const Matrix& dirs,
                Eigen::Index offset) {
  check_input(spec, params, x.size());
  const Eigen::Index end = offset + dirs.cols();
  if (offset < 0 || end > params.size()) throw std::invalid_argument("jvp_rows: direction range out of bounds");
  const auto layers = map_layers(spec, params.theta);
  const Eigen::Index n = dirs.rows();
  Vector a = x;
  Matrix t;  // tangent of `a`, width × n; empty while still zero
  Eigen::Index start = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& w = layers[l].weight;
    const Eigen::Index out = w.rows(), in = w.cols();
    const Eigen::Index stop = start + out * (in + 1);
    const bool inside = start >= offset && stop <= end;
    if (!inside && start < end && stop > offset) throw std::invalid_argument("jvp_rows: range splits a layer");

    Vector z = w * a + layers[l].bias;
    Matrix z_dot;
    if (t.size() > 0) {
      z_dot.noalias() = w * t;
    } else {
      z_dot.setZero(out, n);
    }
    if (inside) {
      // Row-major weights: the block for output unit r is contiguous in θ.
      const Eigen::Index base = start - offset;
      for (Eigen::Index r = 0; r < out; ++r) {
        z_dot.row(r).noalias() += (dirs.middleCols(base + r * in, in) * a).transpose();
      }
      z_dot += dirs.middleCols(base + out * in, out).transpose();
    }
    if (l + 1 < layers.size()) {
      const Vector d1 = z.unaryExpr([&](double v) { return act_prime(spec.activation, v); });
      if (t.size() > 0 || inside) {
        z_dot.array().colwise() *= d1.array();
        t = std::move(z_dot);
      }
      a = z.unaryExpr([&](double v) { return act(spec.activation, v); });
    } else {
      t = std::move(z_dot);
    }
    start = stop;
  }
  return t;
}

Vector input_gradient(const NetworkSpec& spec, const FlatParams& params, const Vector& delta, const Vector& x,
                      int head) {
  check_input(spec, params, x.size());
  if (head < 0 || head >= spec.output_dim) throw std::invalid_argument("input_gradient: bad output head");
  const auto layers = map_layers(spec, params.theta);
  const auto dirs = map_layers(spec, delta);
  const std::size_t n_layers = layers.size();
  std::vector<Vector> a(n_layers + 1), a_dot(n_layers + 1), z(n_layers), z_dot(n_layers);
  a[0] = x;
  a_dot[0] = Vector::Zero(x.size());
  for (std::size_t l = 0; l < n_layers; ++l) {
    z[l] = layers[l].weight * a[l] + layers[l].bias;
    z_dot[l] = layers[l].weight * a_dot[l] + dirs[l].weight * a[l] + dirs[l].bias;
    if (l + 1 < n_layers) {
      const Vector d1 = z[l].unaryExpr([&](double v) { return act_prime(spec.activation, v); });
      a[l + 1] = z[l].unaryExpr([&](double v) { return act(spec.activation, v); });
      a_dot[l + 1] = d1.cwiseProduct(z_dot[l]);
    }
  }
  // Reverse sweep through both the primal and tangent graphs for g = z + ż.
  Vector z_bar = Vector::Unit(spec.output_dim, head);
  Vector z_dot_bar = z_bar;
  Vector a_bar, a_dot_bar;
  for (std::size_t li = n_layers; li-- > 0;) {
    a_bar = layers[li].weight.transpose() * z_bar + dirs[li].weight.transpose() * z_dot_bar;
    a_dot_bar = layers[li].weight.transpose() * z_dot_bar;
    if (li == 0) break;
    const Vector& zp = z[li - 1];
    const Vector d1 = zp.unaryExpr([&](double v) { return act_prime(spec.activation, v); });
    const Vector d2 = zp.unaryExpr([&](double v) { return act_second(spec.activation, v); });
    z_dot_bar = d1.cwiseProduct(a_dot_bar);
    z_bar = d1.cwiseProduct(a_bar) + d2.cwiseProduct(z_dot[li - 1]).cwiseProduct(a_dot_bar);
  }
  return a_bar;
}

}  // namespace predfilt
