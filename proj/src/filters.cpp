#include "predfilt/filters.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace predfilt {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_obs(const Linearization& lin, const Vector& y, const NoiseConfig& noise) {
  const auto dy = lin.prediction.size();
  if (y.size() != dy) {
    throw std::invalid_argument("observation has " + std::to_string(y.size()) + " entries, model predicts " +
                                std::to_string(dy));
  }
  noise.validate(static_cast<int>(dy));
}

UpperTri innovation_factor(std::vector<Matrix> blocks, bool reverse) {
  if (reverse) std::reverse(blocks.begin(), blocks.end());
  UpperTri s = qr_stack(blocks);
  for (Eigen::Index i = 0; i < s.dim(); ++i) {
    if (!(s.matrix()(i, i) > 0.0)) {
      throw SingularInnovationError("innovation covariance is singular (zero Jacobian and zero noise?)");
    }
  }
  return s;
}

Vector std_normal(Eigen::Index n, Philox& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
  return z;
}

// Symmetric square root via eigendecomposition; clips tiny negative
// eigenvalues from rounding.
Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()));
  const Vector s = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * s.asDiagonal() * eig.eigenvectors().transpose();
}

Eigen::Index clip_rank(Eigen::Index r, Eigen::Index dim) { return std::max<Eigen::Index>(1, std::min(r, dim)); }

// Gain with K^T = pc C + pj J, where C is the prior factor and J the
// Jacobian; K is never needed at full size except for diagnostics.
struct SplitGain {
  Matrix pc;
  Matrix pj;

  Matrix transpose(const Matrix& c, const Matrix& j) const { return pc * c + pj * j; }
  Vector apply(const Matrix& c, const Matrix& j, const Vector& eps) const {
    Vector out = c.transpose() * (pc.transpose() * eps);
    out.noalias() += j.transpose() * (pj.transpose() * eps);
    return out;
  }
};

// K^T = (S^T S)^{-1} J (C^T C + q I) with cj = C J^T.
SplitGain split_gain(const UpperTri& s_half, const Matrix& cj, double q) {
  const Matrix g = tri_solve_gram(s_half, Matrix::Identity(s_half.dim(), s_half.dim()));
  return SplitGain{g * cj.transpose(), q * g};
}

LowRankFactor project_block(const Matrix& c, const Matrix& j, const Matrix& cj, const SplitGain& gain,
                            const UpperTri& r_half, Eigen::Index rank, double q, bool inflate) {
  // Rows of [C (I - K J)^T; R^{1/2} K^T] in the basis [C; J].
  const Eigen::Index d = c.rows(), dy = j.rows();
  Matrix coef(d + dy, d + dy);
  coef.topLeftCorner(d, d) = Matrix::Identity(d, d) - cj * gain.pc;
  coef.topRightCorner(d, dy) = -cj * gain.pj;
  coef.bottomLeftCorner(dy, d) = r_half.matrix() * gain.pc;
  coef.bottomRightCorner(dy, dy) = r_half.matrix() * gain.pj;
  return lowrank_project_span(coef, {std::cref(c), std::cref(j)}, rank, inflate ? q : 0.0);
}

}  // namespace

NoiseConfig NoiseConfig::isotropic(int dy, double r, double q_last, double q_hidden) {
  return NoiseConfig{UpperTri::identity(dy, std::abs(r)), q_last, q_hidden};
}

void NoiseConfig::validate(int dy) const {
  if (r_half.dim() != dy) {
    throw std::invalid_argument("noise factor is " + std::to_string(r_half.dim()) + "x" +
                                std::to_string(r_half.dim()) + ", expected " + std::to_string(dy));
  }
  if (!(q_last >= 0.0) || !(q_hidden >= 0.0) || !std::isfinite(q_last) || !std::isfinite(q_hidden)) {
    throw std::invalid_argument("dynamics noise must be finite and >= 0");
  }
}

FilterKind parse_filter(const std::string& name) {
  if (name == "dense") return FilterKind::kDense;
  if (name == "lrkf") return FilterKind::kLrkf;
  if (name == "hilofi") return FilterKind::kHiLoFi;
  if (name == "lolofi") return FilterKind::kLoLoFi;
  throw std::invalid_argument("unknown filter '" + name + "'");
}

std::string to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::kDense:
      return "dense";
    case FilterKind::kLrkf:
      return "lrkf";
    case FilterKind::kHiLoFi:
      return "hilofi";
    case FilterKind::kLoLoFi:
      return "lolofi";
  }
  return "?";
}

Belief init_belief(const NetworkSpec& spec, const FlatParams& init, const FilterOptions& opts) {
  const Eigen::Index dw = spec.hidden_param_count();
  const Eigen::Index de = spec.last_param_count();
  if (init.size() != dw + de) throw std::invalid_argument("init params do not match network spec");
  if (opts.prior_var_last < 0.0 || opts.prior_var_hidden < 0.0) {
    throw std::invalid_argument("prior variances must be >= 0");
  }
  const double sl = std::sqrt(opts.prior_var_last);
  const double sh = std::sqrt(opts.prior_var_hidden);
  const Vector hidden = init.hidden();
  const Vector last = init.last();
  auto hidden_factor = [&](Eigen::Index r) {
    return dw == 0 ? LowRankFactor(Matrix(0, 0)) : LowRankFactor::truncated_identity(clip_rank(r, dw), dw, sh);
  };
  switch (opts.kind) {
    case FilterKind::kDense: {
      Vector diag(dw + de);
      diag << Vector::Constant(dw, opts.prior_var_hidden), Vector::Constant(de, opts.prior_var_last);
      return DenseBelief{init.theta, diag.asDiagonal()};
    }
    case FilterKind::kLrkf: {
      const Eigen::Index d = clip_rank(opts.rank, dw + de);
      Matrix w = Matrix::Zero(d, dw + de);
      for (Eigen::Index k = 0; k < d; ++k) w(k, k) = k < dw ? sh : sl;
      return LrkfBelief{init.theta, LowRankFactor(std::move(w))};
    }
    case FilterKind::kHiLoFi:
      return HiLoFiBelief{last, hidden, UpperTri::identity(de, sl), hidden_factor(opts.rank_hidden)};
    case FilterKind::kLoLoFi:
      return LoLoFiBelief{last, hidden, LowRankFactor::truncated_identity(clip_rank(opts.rank_last, de), de, sl),
                          hidden_factor(opts.rank_hidden)};
  }
  throw std::invalid_argument("unknown filter kind");
}

FlatParams mean_params(const Belief& belief, const NetworkSpec& spec) {
  return std::visit(Overloaded{
                        [&](const DenseBelief& b) { return FlatParams{b.mean, spec.hidden_param_count()}; },
                        [&](const LrkfBelief& b) { return FlatParams{b.mean, spec.hidden_param_count()}; },
                        [&](const HiLoFiBelief& b) { return FlatParams::join(spec, b.mean_hidden, b.mean_last); },
                        [&](const LoLoFiBelief& b) { return FlatParams::join(spec, b.mean_hidden, b.mean_last); },
                    },
                    belief);
}

Matrix dense_cov(const Belief& belief, const NetworkSpec& spec) {
  const Eigen::Index dw = spec.hidden_param_count();
  const Eigen::Index de = spec.last_param_count();
  auto block = [&](const Matrix& hidden, const Matrix& last) {
    Matrix out = Matrix::Zero(dw + de, dw + de);
    if (dw > 0) out.topLeftCorner(dw, dw) = hidden;
    out.bottomRightCorner(de, de) = last;
    return out;
  };
  auto hidden_gram = [&](const LowRankFactor& c) { return dw > 0 ? c.gram() : Matrix(0, 0); };
  return std::visit(Overloaded{
                        [&](const DenseBelief& b) { return b.cov; },
                        [&](const LrkfBelief& b) { return b.w.gram(); },
                        [&](const HiLoFiBelief& b) {
                          return block(hidden_gram(b.c_hidden), b.sigma_last_half.gram());
                        },
                        [&](const LoLoFiBelief& b) { return block(hidden_gram(b.c_hidden), b.c_last.gram()); },
                    },
                    belief);
}

Matrix Linearization::jacobian() const {
  Matrix j(prediction.size(), h_tilde.cols() + l_tilde.cols());
  j << h_tilde, l_tilde;
  return j;
}

Linearization linearize(const NetworkSpec& spec, const FlatParams& params, const Vector& x) {
  JacobianPair jp = jacobians(spec, params, x);
  return Linearization{forward(spec, params, x), std::move(jp.l_tilde), std::move(jp.h_tilde)};
}

Linearization select_output(const Linearization& lin, int head) {
  if (head < 0 || head >= lin.prediction.size()) throw std::invalid_argument("select_output: bad head");
  return Linearization{lin.prediction.segment(head, 1), lin.l_tilde.row(head), lin.h_tilde.row(head)};
}

Vector softmax(const Vector& logits) {
  const Vector e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

Linearization softmax_linearization(const Linearization& logits) {
  const Vector m = softmax(logits.prediction);
  const Matrix d = Matrix(m.asDiagonal()) - m * m.transpose();
  return Linearization{m, d * logits.l_tilde, d * logits.h_tilde};
}

std::pair<Vector, Matrix> moment_matched_obs(const Vector& logits, double eps, bool literal_plus) {
  if (!(eps > 0.0)) throw std::invalid_argument("moment_matched_obs: eps must be > 0");
  const Vector m = softmax(logits);
  Matrix cov = Matrix(m.asDiagonal());
  if (literal_plus) {
    cov += m * m.transpose();
  } else {
    cov -= m * m.transpose();
  }
  cov.diagonal().array() += eps;
  return {m, cov};
}

DenseBelief dense_update(const DenseBelief& b, const Linearization& lin, const Vector& y, const NoiseConfig& noise,
                         UpdateInfo* info) {
  check_obs(lin, y, noise);
  const Matrix j = lin.jacobian();
  const Eigen::Index dw = lin.h_tilde.cols();
  const Eigen::Index n = b.mean.size();
  if (j.cols() != n || b.cov.rows() != n) throw std::invalid_argument("dense_update: shape mismatch");

  Matrix prior = b.cov;
  prior.diagonal().head(dw).array() += noise.q_hidden;
  prior.diagonal().tail(n - dw).array() += noise.q_last;

  const Matrix r = noise.r();
  const Matrix pj = prior * j.transpose();
  Matrix s = j * pj + r;
  s = 0.5 * (s + s.transpose());
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().minCoeff() > 0.0)) {
    throw SingularInnovationError("innovation covariance is singular");
  }
  const Matrix k = llt.solve(pj.transpose()).transpose();
  const Vector eps = y - lin.prediction;

  Matrix a = Matrix::Identity(n, n) - k * j;
  Matrix cov = a * prior * a.transpose() + k * r * k.transpose();
  cov = 0.5 * (cov + cov.transpose());
  if (info) {
    info->innovation = eps;
    info->s_half = UpperTri(Matrix(llt.matrixU()));
    info->k = k;
  }
  return DenseBelief{b.mean + k * eps, std::move(cov)};
}

LrkfBelief lrkf_update(const LrkfBelief& b, const Linearization& lin, const Vector& y, const NoiseConfig& noise,
                       const UpdateOptions& opts, UpdateInfo* info) {
  check_obs(lin, y, noise);
  const Matrix j = lin.jacobian();
  const Matrix& w = b.w.matrix();
  if (j.cols() != b.mean.size() || w.cols() != b.mean.size()) throw std::invalid_argument("lrkf_update: shape mismatch");
  const double q = noise.q_hidden;

  const Matrix wj = w * j.transpose();
  const UpperTri s_half =
      innovation_factor({wj, std::sqrt(q) * j.transpose(), noise.r_half.matrix()}, opts.reverse_stack);
  const SplitGain gain = split_gain(s_half, wj, q);
  const Vector eps = y - lin.prediction;

  LowRankFactor w_new = project_block(w, j, wj, gain, noise.r_half, w.rows(), q, opts.inflate);
  if (info) {
    info->innovation = eps;
    info->s_half = s_half;
    info->k = gain.transpose(w, j).transpose();
  }
  return LrkfBelief{b.mean + gain.apply(w, j, eps), std::move(w_new)};
}

HiLoFiBelief hilofi_update(const HiLoFiBelief& b, const Linearization& lin, const Vector& y,
                           const NoiseConfig& noise, const UpdateOptions& opts, UpdateInfo* info) {
  check_obs(lin, y, noise);
  const Matrix& u = b.sigma_last_half.matrix();
  const Matrix& c = b.c_hidden.matrix();
  const Matrix& l = lin.l_tilde;
  const Matrix& h = lin.h_tilde;
  const bool has_hidden = h.cols() > 0;
  if (l.cols() != b.mean_last.size() || h.cols() != b.mean_hidden.size()) {
    throw std::invalid_argument("hilofi_update: Jacobian shapes do not match belief");
  }

  const Matrix ul = u * l.transpose();
  const Matrix ch = has_hidden ? Matrix(c * h.transpose()) : Matrix(0, l.rows());
  const UpperTri s_half = innovation_factor({ul, std::sqrt(noise.q_last) * l.transpose(), ch,
                                             std::sqrt(noise.q_hidden) * h.transpose(), noise.r_half.matrix()},
                                            opts.reverse_stack);

  const Matrix v_last = tri_solve_gram(s_half, l);
  const Matrix k_last_t = (v_last * u.transpose()) * u + noise.q_last * v_last;
  const Vector eps = y - lin.prediction;

  HiLoFiBelief out;
  out.mean_last = b.mean_last + k_last_t.transpose() * eps;
  out.sigma_last_half = qr_stack({u - ul * k_last_t, noise.r_half.matrix() * k_last_t});

  Matrix k_hidden_t(0, l.rows());
  if (has_hidden) {
    const SplitGain gain = split_gain(s_half, ch, noise.q_hidden);
    out.mean_hidden = b.mean_hidden + gain.apply(c, h, eps);
    out.c_hidden = project_block(c, h, ch, gain, noise.r_half, c.rows(), noise.q_hidden, true);
    if (info) k_hidden_t = gain.transpose(c, h);
  } else {
    out.mean_hidden = b.mean_hidden;
    out.c_hidden = b.c_hidden;
  }
  if (info) {
    info->innovation = eps;
    info->s_half = s_half;
    info->k_last = k_last_t.transpose();
    info->k_hidden = k_hidden_t.transpose();
  }
  return out;
}

LoLoFiBelief lolofi_update(const LoLoFiBelief& b, const Linearization& lin, const Vector& y,
                           const NoiseConfig& noise, const UpdateOptions& opts, UpdateInfo* info) {
  check_obs(lin, y, noise);
  const Matrix& ce = b.c_last.matrix();
  const Matrix& c = b.c_hidden.matrix();
  const Matrix& l = lin.l_tilde;
  const Matrix& h = lin.h_tilde;
  const bool has_hidden = h.cols() > 0;
  if (l.cols() != b.mean_last.size() || h.cols() != b.mean_hidden.size()) {
    throw std::invalid_argument("lolofi_update: Jacobian shapes do not match belief");
  }

  const Matrix cl = ce * l.transpose();
  const Matrix ch = has_hidden ? Matrix(c * h.transpose()) : Matrix(0, l.rows());
  const UpperTri s_half = innovation_factor({cl, std::sqrt(noise.q_last) * l.transpose(), ch,
                                             std::sqrt(noise.q_hidden) * h.transpose(), noise.r_half.matrix()},
                                            opts.reverse_stack);

  const SplitGain gain_last = split_gain(s_half, cl, noise.q_last);
  const Vector eps = y - lin.prediction;

  LoLoFiBelief out;
  out.mean_last = b.mean_last + gain_last.apply(ce, l, eps);
  out.c_last = project_block(ce, l, cl, gain_last, noise.r_half, ce.rows(), noise.q_last, true);

  Matrix k_hidden_t(0, l.rows());
  if (has_hidden) {
    const SplitGain gain = split_gain(s_half, ch, noise.q_hidden);
    out.mean_hidden = b.mean_hidden + gain.apply(c, h, eps);
    out.c_hidden = project_block(c, h, ch, gain, noise.r_half, c.rows(), noise.q_hidden, true);
    if (info) k_hidden_t = gain.transpose(c, h);
  } else {
    out.mean_hidden = b.mean_hidden;
    out.c_hidden = b.c_hidden;
  }
  if (info) {
    info->innovation = eps;
    info->s_half = s_half;
    info->k_last = gain_last.transpose(ce, l).transpose();
    info->k_hidden = k_hidden_t.transpose();
  }
  return out;
}

Belief update(const Belief& b, const Linearization& lin, const Vector& y, const NoiseConfig& noise,
              const UpdateOptions& opts, UpdateInfo* info) {
  return std::visit(Overloaded{
                        [&](const DenseBelief& d) -> Belief { return dense_update(d, lin, y, noise, info); },
                        [&](const LrkfBelief& d) -> Belief { return lrkf_update(d, lin, y, noise, opts, info); },
                        [&](const HiLoFiBelief& d) -> Belief { return hilofi_update(d, lin, y, noise, opts, info); },
                        [&](const LoLoFiBelief& d) -> Belief { return lolofi_update(d, lin, y, noise, opts, info); },
                    },
                    b);
}

DenseBelief dense_predict_update(const DenseBelief& b, const NetworkSpec& spec, const Vector& x, const Vector& y,
                                 const NoiseConfig& noise) {
  return dense_update(b, linearize(spec, FlatParams{b.mean, spec.hidden_param_count()}, x), y, noise);
}

LrkfBelief lrkf_step(const LrkfBelief& b, const NetworkSpec& spec, const Vector& x, const Vector& y,
                     const NoiseConfig& noise, const UpdateOptions& opts) {
  return lrkf_update(b, linearize(spec, FlatParams{b.mean, spec.hidden_param_count()}, x), y, noise, opts);
}

HiLoFiBelief hilofi_step(const HiLoFiBelief& b, const NetworkSpec& spec, const Vector& x, const Vector& y,
                         const NoiseConfig& noise, const UpdateOptions& opts) {
  return hilofi_update(b, linearize(spec, FlatParams::join(spec, b.mean_hidden, b.mean_last), x), y, noise, opts);
}

LoLoFiBelief lolofi_step(const LoLoFiBelief& b, const NetworkSpec& spec, const Vector& x, const Vector& y,
                         const NoiseConfig& noise, const UpdateOptions& opts) {
  return lolofi_update(b, linearize(spec, FlatParams::join(spec, b.mean_hidden, b.mean_last), x), y, noise, opts);
}

Belief step(const Belief& b, const NetworkSpec& spec, const Vector& x, const Vector& y, const NoiseConfig& noise,
            const UpdateOptions& opts) {
  return update(b, linearize(spec, mean_params(b, spec), x), y, noise, opts);
}

GaussianPredictive predictive_from(const Belief& b, const Linearization& lin, const Matrix& r) {
  const Eigen::Index dy = lin.prediction.size();
  Matrix epi = Matrix::Zero(dy, dy);
  auto add_gram = [&epi](const Matrix& factor_times_jt) {
    epi.selfadjointView<Eigen::Lower>().rankUpdate(factor_times_jt.transpose());
  };
  std::visit(Overloaded{
                 [&](const DenseBelief& d) {
                   const Matrix j = lin.jacobian();
                   epi = j * d.cov * j.transpose();
                 },
                 [&](const LrkfBelief& d) { add_gram(d.w.matrix() * lin.jacobian().transpose()); },
                 [&](const HiLoFiBelief& d) {
                   add_gram(d.sigma_last_half.matrix().triangularView<Eigen::Upper>() * lin.l_tilde.transpose());
                   if (lin.h_tilde.cols() > 0) add_gram(d.c_hidden.matrix() * lin.h_tilde.transpose());
                 },
                 [&](const LoLoFiBelief& d) {
                   add_gram(d.c_last.matrix() * lin.l_tilde.transpose());
                   if (lin.h_tilde.cols() > 0) add_gram(d.c_hidden.matrix() * lin.h_tilde.transpose());
                 },
             },
             b);
  if (!std::holds_alternative<DenseBelief>(b)) epi = epi.selfadjointView<Eigen::Lower>();
  epi = 0.5 * (epi + epi.transpose());
  GaussianPredictive out{lin.prediction, epi + r, epi};
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

GaussianPredictive predictive(const Belief& b, const NetworkSpec& spec, const Vector& x, const NoiseConfig& noise) {
  return predictive_from(b, linearize(spec, mean_params(b, spec), x), noise.r());
}

double epistemic_variance(const Belief& b, const Linearization& lin, int head) {
  const Vector l = lin.l_tilde.row(head).transpose();
  const Vector h = lin.h_tilde.row(head).transpose();
  return std::visit(Overloaded{
                        [&](const DenseBelief& d) {
                          Vector j(h.size() + l.size());
                          j << h, l;
                          return j.dot(d.cov * j);
                        },
                        [&](const LrkfBelief& d) {
                          const Eigen::Index dw = h.size();
                          const Vector wj = d.w.matrix().leftCols(dw) * h + d.w.matrix().rightCols(l.size()) * l;
                          return wj.squaredNorm();
                        },
                        [&](const HiLoFiBelief& d) {
                          double v = (d.sigma_last_half.matrix().triangularView<Eigen::Upper>() * l).squaredNorm();
                          if (h.size() > 0) v += (d.c_hidden.matrix() * h).squaredNorm();
                          return v;
                        },
                        [&](const LoLoFiBelief& d) {
                          double v = (d.c_last.matrix() * l).squaredNorm();
                          if (h.size() > 0) v += (d.c_hidden.matrix() * h).squaredNorm();
                          return v;
                        },
                    },
                    b);
}

Vector epistemic_variances(const Belief& b, const Linearization& lin) {
  const Matrix& l = lin.l_tilde;
  const Matrix& h = lin.h_tilde;
  auto sq = [](const Matrix& factor_times_jt) -> Vector { return factor_times_jt.colwise().squaredNorm().transpose(); };
  return std::visit(Overloaded{
                        [&](const DenseBelief& d) -> Vector {
                          const Matrix j = lin.jacobian();
                          return (j * d.cov).cwiseProduct(j).rowwise().sum();
                        },
                        [&](const LrkfBelief& d) -> Vector {
                          const Eigen::Index dw = h.cols();
                          Matrix wj = d.w.matrix().rightCols(l.cols()) * l.transpose();
                          if (dw > 0) wj.noalias() += d.w.matrix().leftCols(dw) * h.transpose();
                          return sq(wj);
                        },
                        [&](const HiLoFiBelief& d) -> Vector {
                          Vector v = sq(d.sigma_last_half.matrix().triangularView<Eigen::Upper>() * l.transpose());
                          if (h.cols() > 0) v += sq(d.c_hidden.matrix() * h.transpose());
                          return v;
                        },
                        [&](const LoLoFiBelief& d) -> Vector {
                          Vector v = sq(d.c_last.matrix() * l.transpose());
                          if (h.cols() > 0) v += sq(d.c_hidden.matrix() * h.transpose());
                          return v;
                        },
                    },
                    b);
}

Vector epistemic_variances(const Belief& b, const NetworkSpec& spec, const FlatParams& params, const Vector& x) {
  const Eigen::Index dw = spec.hidden_param_count();
  auto sq = [&](const Matrix& dirs, Eigen::Index offset) -> Vector {
    if (dirs.size() == 0) return Vector::Zero(spec.output_dim);
    return jvp_rows(spec, params, x, dirs, offset).rowwise().squaredNorm();
  };
  return std::visit(Overloaded{
                        [&](const DenseBelief&) -> Vector {
                          return epistemic_variances(b, linearize(spec, params, x));
                        },
                        [&](const LrkfBelief& d) -> Vector { return sq(d.w.matrix(), 0); },
                        [&](const HiLoFiBelief& d) -> Vector {
                          return sq(d.c_hidden.matrix(), 0) + sq(d.sigma_last_half.matrix(), dw);
                        },
                        [&](const LoLoFiBelief& d) -> Vector {
                          return sq(d.c_hidden.matrix(), 0) + sq(d.c_last.matrix(), dw);
                        },
                    },
                    b);
}

Vector sample_predictive(const GaussianPredictive& pred, Philox& rng) {
  const Eigen::Index n = pred.mean.size();
  const Vector z = std_normal(n, rng);
  if (n == 1) return pred.mean + std::sqrt(std::max(pred.cov(0, 0), 0.0)) * z;
  return pred.mean + psd_sqrt(pred.cov) * z;
}

Vector sample_function(const Belief& b, const NetworkSpec& spec, Philox& rng) {
  const Eigen::Index dw = spec.hidden_param_count();
  const Eigen::Index de = spec.last_param_count();
  Vector delta = Vector::Zero(dw + de);
  std::visit(Overloaded{
                 [&](const DenseBelief& d) { delta = psd_sqrt(d.cov) * std_normal(dw + de, rng); },
                 [&](const LrkfBelief& d) { delta = d.w.matrix().transpose() * std_normal(d.w.rank(), rng); },
                 [&](const HiLoFiBelief& d) {
                   if (dw > 0) delta.head(dw) = d.c_hidden.matrix().transpose() * std_normal(d.c_hidden.rank(), rng);
                   delta.tail(de) = d.sigma_last_half.matrix().transpose().triangularView<Eigen::Lower>() *
                                    std_normal(de, rng);
                 },
                 [&](const LoLoFiBelief& d) {
                   if (dw > 0) delta.head(dw) = d.c_hidden.matrix().transpose() * std_normal(d.c_hidden.rank(), rng);
                   delta.tail(de) = d.c_last.matrix().transpose() * std_normal(d.c_last.rank(), rng);
                 },
             },
             b);
  return delta;
}

}  // namespace predfilt
