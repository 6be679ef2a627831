#include "predfilt/bounds.hpp"

#include <cmath>
#include <stdexcept>

namespace predfilt {

namespace {

// ‖K H‖_F without forming the (possibly huge) square product.
double product_norm(const Matrix& k, const Matrix& h) {
  const Matrix ktk = k.transpose() * k;
  const Matrix hht = h * h.transpose();
  return std::sqrt(std::max((ktk.cwiseProduct(hht)).sum(), 0.0));
}

// sqrt(Σ λ²) over the eigenvalues of B^T B + q I (n × n) beyond the top d.
double residual_norm(const Matrix& stacked, Eigen::Index n, Eigen::Index d, double q) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(stacked * stacked.transpose(), Eigen::EigenvaluesOnly);
  const Vector s2 = eig.eigenvalues().reverse().cwiseMax(0.0);
  const Eigen::Index m = std::min<Eigen::Index>(s2.size(), n);
  double acc = 0.0;
  for (Eigen::Index k = d; k < m; ++k) acc += (s2(k) + q) * (s2(k) + q);
  acc += static_cast<double>(std::max<Eigen::Index>(n - std::max(m, d), 0)) * q * q;
  return std::sqrt(acc);
}

}  // namespace

HiLoFiBoundTerms hilofi_bound_terms(const Matrix& k_last, const Matrix& k_hidden, const Matrix& l_tilde,
                                    const Matrix& h_tilde, const Matrix& r, double q_last, double q_hidden,
                                    const Vector& residual_eigs) {
  HiLoFiBoundTerms t;
  if (k_hidden.size() > 0) {
    const double kh = product_norm(k_hidden, h_tilde);
    t.hidden_surrogate = q_hidden * (2.0 * kh + kh * kh);
  }
  const Eigen::Index de = k_last.rows();
  const Matrix a = Matrix::Identity(de, de) - k_last * l_tilde;
  t.last_surrogate = q_last * (a * a.transpose()).norm();
  t.projection = residual_eigs.norm();
  if (k_hidden.size() > 0) t.cross = (k_last * r * k_hidden.transpose()).norm();
  return t;
}

double hilofi_cov_bound(const Matrix& k_last, const Matrix& k_hidden, const Matrix& l_tilde, const Matrix& h_tilde,
                        const Matrix& r, double q_last, double q_hidden, const Vector& residual_eigs) {
  return hilofi_bound_terms(k_last, k_hidden, l_tilde, h_tilde, r, q_last, q_hidden, residual_eigs).total();
}

double hilofi_cov_bound_unsquared(const Matrix& k_last, const Matrix& k_hidden, const Matrix& l_tilde,
                                  const Matrix& h_tilde, const Matrix& r, double q_last, double q_hidden,
                                  const Vector& residual_eigs) {
  return hilofi_bound_terms(k_last, k_hidden, l_tilde, h_tilde, r, q_last, q_hidden, residual_eigs)
      .total_unsquared();
}

double lrkf_cov_bound(const Matrix& k, const Matrix& h, double q, const Vector& residual_eigs) {
  const double kh = product_norm(k, h);
  return q * (2.0 * kh + kh * kh) + residual_eigs.norm();
}

Vector sorted_eigenvalues(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (sym + sym.transpose()), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().reverse();
}

Vector residual_eigenvalues(const Matrix& sym, Eigen::Index d) {
  const Vector ev = sorted_eigenvalues(sym);
  if (d >= ev.size()) return Vector(0);
  return ev.tail(ev.size() - d);
}

double lrkf_blup_gap_bound(double eps, const Matrix& sigma_prev, const Vector& x, double r2, Eigen::Index d) {
  const Eigen::Index n = sigma_prev.rows();
  if (sigma_prev.cols() != n || x.size() != n) throw std::invalid_argument("lrkf_blup_gap_bound: shape mismatch");
  if (d < 1 || d > n) throw std::invalid_argument("lrkf_blup_gap_bound: rank out of range");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (sigma_prev + sigma_prev.transpose()));
  const Vector lam = eig.eigenvalues().reverse();  // descending; PSD so singular values
  const Matrix vecs = eig.eigenvectors().rowwise().reverse();
  const Matrix top = vecs.leftCols(d);
  const Matrix sigma_hat = top * lam.head(d).asDiagonal() * top.transpose();
  const double gamma = std::min(x.dot(sigma_prev * x), x.dot(sigma_hat * x)) + r2;
  if (!(gamma > 0.0)) throw std::domain_error("lrkf_blup_gap_bound: gamma is zero");
  const double s1 = std::max(lam(0), 0.0);
  const double sd1 = d < n ? std::max(lam(d), 0.0) : 0.0;
  const double xn = x.norm();
  return std::abs(eps) * sd1 * xn * (1.0 / gamma + s1 * xn * xn / (gamma * gamma));
}

HiLoFiBoundTerms hilofi_step_bound(const HiLoFiBelief& prior, const Linearization& lin, const NoiseConfig& noise,
                                   const UpdateInfo& info) {
  Vector none(0);
  HiLoFiBoundTerms t = hilofi_bound_terms(info.k_last, info.k_hidden, lin.l_tilde, lin.h_tilde, noise.r(),
                                          noise.q_last, noise.q_hidden, none);
  const Matrix& c = prior.c_hidden.matrix();
  if (c.cols() > 0) {
    const Matrix kt = info.k_hidden.transpose();
    Matrix stacked(c.rows() + kt.rows(), c.cols());
    stacked << c - (c * lin.h_tilde.transpose()) * kt, noise.r_half.matrix() * kt;
    t.projection = residual_norm(stacked, c.cols(), c.rows(), noise.q_hidden);
  }
  return t;
}

double lrkf_step_bound(const LrkfBelief& prior, const Linearization& lin, const NoiseConfig& noise,
                       const UpdateInfo& info) {
  const Matrix j = lin.jacobian();
  const Matrix& w = prior.w.matrix();
  const Matrix kt = info.k.transpose();
  Matrix stacked(w.rows() + kt.rows(), w.cols());
  stacked << w - (w * j.transpose()) * kt, noise.r_half.matrix() * kt;
  const double q = noise.q_hidden;
  const double kh = product_norm(info.k, j);
  return q * (2.0 * kh + kh * kh) + residual_norm(stacked, w.cols(), w.rows(), q);
}

}  // namespace predfilt
