#include "predfilt/suites.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>

#include "predfilt/bounds.hpp"
#include "predfilt/decision.hpp"
#include "predfilt/experiment.hpp"

namespace predfilt {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string sci(double v) { return fmt("%.3g", v); }

// Collects "label value op threshold" checks for one criterion.
class Checks {
 public:
  void le(const std::string& label, double value, double limit) { add(label, value, "<=", limit, value <= limit); }
  void ge(const std::string& label, double value, double limit) { add(label, value, ">=", limit, value >= limit); }
  void lt(const std::string& label, double value, double limit) { add(label, value, "<", limit, value < limit); }
  void note(const std::string& text) { parts_.push_back(text); }
  void skip(const std::string& why) {
    skipped_ = true;
    parts_.push_back("skipped: " + why);
  }

  CriterionResult result(std::string name, double seconds) const {
    CriterionResult r{std::move(name), Status::kPass, "", seconds};
    if (!ok_) {
      r.status = Status::kFail;
    } else if (skipped_) {
      r.status = Status::kSkip;
    }
    for (std::size_t i = 0; i < parts_.size(); ++i) r.detail += (i ? "; " : "") + parts_[i];
    return r;
  }

 private:
  void add(const std::string& label, double value, const char* op, double limit, bool pass) {
    ok_ = ok_ && pass;
    parts_.push_back(label + " " + sci(value) + " " + op + " " + sci(limit) + (pass ? "" : " [miss]"));
  }

  std::vector<std::string> parts_;
  bool ok_ = true;
  bool skipped_ = false;
};

void progress(const SuiteOptions& opts, const std::string& msg) {
  if (opts.verbose) std::cerr << "  .. " << msg << std::endl;
}

// ---- independent dense references -------------------------------------

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, Philox& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  }
  return m;
}

Matrix spd(int n, Philox& rng, double jitter = 0.1) {
  const Matrix a = gaussian(n, n, rng);
  return a * a.transpose() + jitter * Matrix::Identity(n, n);
}

Matrix gram_sum(const std::vector<Matrix>& blocks) {
  Matrix g = Matrix::Zero(blocks.front().cols(), blocks.front().cols());
  for (const auto& b : blocks) g += b.transpose() * b;
  return g;
}

Matrix best_rank(const Matrix& m, int d) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  const Matrix v = eig.eigenvectors().rightCols(d);
  return v * eig.eigenvalues().tail(d).asDiagonal() * v.transpose();
}

// Covariance-form Kalman step with the Joseph update.
std::pair<Vector, Matrix> kalman(const Vector& m, const Matrix& p, const Matrix& j, const Vector& innov,
                                 const Matrix& r) {
  const Matrix s = j * p * j.transpose() + r;
  const Matrix k = p * j.transpose() * s.inverse();
  const Matrix a = Matrix::Identity(p.rows(), p.cols()) - k * j;
  return {m + k * innov, a * p * a.transpose() + k * r * k.transpose()};
}

Matrix fd_jacobian(const NetworkSpec& spec, const FlatParams& p, const Vector& x, double h = 1e-5) {
  Matrix j(spec.output_dim, p.size());
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    FlatParams a = p, b = p;
    a.theta(k) += h;
    b.theta(k) -= h;
    j.col(k) = (forward(spec, a, x) - forward(spec, b, x)) / (2.0 * h);
  }
  return j;
}

int uniform_int(Philox& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// ---- linalg ----------------------------------------------------------------

CriterionResult kernel_correctness(const SuiteOptions&) {
  const auto t0 = Clock::now();
  Philox rng(101, Stream::kTest);
  double qr_worst = 0.0, ey_worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int dim = uniform_int(rng, 1, 32);
    std::vector<Matrix> blocks;
    const int k = uniform_int(rng, 1, 4);
    for (int i = 0; i < k; ++i) blocks.push_back(gaussian(uniform_int(rng, 0, 12), dim, rng));
    blocks.push_back(gaussian(1, dim, rng));
    const Matrix want = gram_sum(blocks);
    qr_worst = std::max(qr_worst, (qr_stack(blocks).gram() - want).norm() / want.norm());
  }
  for (int trial = 0; trial < 1000; ++trial) {
    const int dim = uniform_int(rng, 1, 32);
    std::vector<Matrix> blocks = {gaussian(uniform_int(rng, 1, 40), dim, rng),
                                  gaussian(uniform_int(rng, 1, 40), dim, rng)};
    const int d = uniform_int(rng, 1, dim);
    const Matrix want = best_rank(gram_sum(blocks), d);
    ey_worst = std::max(ey_worst, (lowrank_project(blocks, d).gram() - want).norm());
  }
  const double secs = seconds_since(t0);
  Checks c;
  c.le("qr_stack max relative error", qr_worst, 1e-9);
  c.le("lowrank_project max Frobenius gap", ey_worst, 1e-7);
  c.lt("runtime s", secs, 30.0);
  return c.result("Kernel correctness", secs);
}

// ---- oracle ----------------------------------------------------------------

CriterionResult oracle_equivalence(const SuiteOptions&) {
  const auto t0 = Clock::now();
  const NetworkSpec spec{2, {4}, 1, Activation::kElu};
  const FlatParams init = init_params(spec, 7);
  const Eigen::Index n = init.size();
  FilterOptions fo;
  fo.prior_var_last = fo.prior_var_hidden = 0.5;
  fo.kind = FilterKind::kDense;
  Belief dense = init_belief(spec, init, fo);
  fo.kind = FilterKind::kLrkf;
  fo.rank = n;
  Belief lrkf = init_belief(spec, init, fo);
  const NoiseConfig noise = NoiseConfig::isotropic(1, 0.1);
  Philox env(3, Stream::kEnv);
  std::normal_distribution<double> normal(0.0, 1.0);
  double mean_worst = 0.0, cov_worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Vector x = gaussian(2, 1, env);
    const Vector y = Vector::Constant(1, std::sin(x(0)) + 0.5 * x(1) + 0.1 * normal(env));
    dense = step(dense, spec, x, y, noise);
    lrkf = step(lrkf, spec, x, y, noise);
    const auto& d = std::get<DenseBelief>(dense);
    const auto& l = std::get<LrkfBelief>(lrkf);
    mean_worst = std::max(mean_worst, (d.mean - l.mean).norm());
    cov_worst = std::max(cov_worst, (d.cov - l.w.gram()).norm());
  }
  const double secs = seconds_since(t0);
  Checks c;
  c.le("max mean gap", mean_worst, 1e-8);
  c.le("max covariance gap", cov_worst, 1e-6);
  c.lt("runtime s", secs, 10.0);
  return c.result("Oracle equivalence", secs);
}

CriterionResult jacobian_check(const SuiteOptions&) {
  const auto t0 = Clock::now();
  Philox rng(102, Stream::kTest);
  double worst = 0.0;
  const Activation acts[] = {Activation::kElu, Activation::kTanh};
  for (int trial = 0; trial < 100; ++trial) {
    NetworkSpec spec{uniform_int(rng, 1, 4), {}, uniform_int(rng, 1, 3), acts[trial % 2]};
    const int depth = uniform_int(rng, 1, 3);
    for (int l = 0; l < depth; ++l) spec.hidden_widths.push_back(uniform_int(rng, 2, 12));
    const FlatParams p = init_params(spec, 1000 + trial);
    const Vector x = gaussian(spec.input_dim, 1, rng);
    const JacobianPair jp = jacobians(spec, p, x);
    Matrix j(spec.output_dim, p.size());
    j << jp.h_tilde, jp.l_tilde;
    const Matrix fd = fd_jacobian(spec, p, x);
    worst = std::max(worst, (j - fd).norm() / fd.norm());
  }
  const double secs = seconds_since(t0);
  Checks c;
  c.le("max relative error", worst, 1e-4);
  c.lt("runtime s", secs, 10.0);
  return c.result("Jacobian check", secs);
}

// ---- bounds ----------------------------------------------------------------

struct BoundCounts {
  int dense_violations = 0;
  int block_violations = 0;
  double worst_ratio = 0.0;  // measured / bound against the dense step
};

bool within(double measured, double bound) { return measured <= bound * (1 + 1e-9) + 1e-12; }

// One HiLoFi step from a random block-diagonal prior, compared with the full
// EKF step and with the block-structured reference.
void hilofi_instance(Philox& rng, double q, BoundCounts& out) {
  const int dw = uniform_int(rng, 2, 32), de = uniform_int(rng, 1, 6), dy = uniform_int(rng, 1, 3);
  const int d = uniform_int(rng, 1, dw);
  const Matrix c = 0.5 * gaussian(d, dw, rng);
  const Matrix u = spd(de, rng).llt().matrixU();
  const Matrix h = gaussian(dy, dw, rng), l = gaussian(dy, de, rng);
  const Matrix rh = spd(dy, rng).llt().matrixU();
  NoiseConfig noise;
  noise.r_half = UpperTri(rh);
  noise.q_last = noise.q_hidden = q;
  const HiLoFiBelief b{Vector::Zero(de), Vector::Zero(dw), UpperTri(u), LowRankFactor(c)};
  const Linearization lin{Vector::Zero(dy), l, h};
  UpdateInfo info;
  const HiLoFiBelief o = hilofi_update(b, lin, gaussian(dy, 1, rng), noise, {}, &info);
  const double bound = hilofi_step_bound(b, lin, noise, info).looser();

  const int n = dw + de;
  const Matrix pw = c.transpose() * c + q * Matrix::Identity(dw, dw);
  const Matrix pe = u.transpose() * u + q * Matrix::Identity(de, de);
  Matrix p = Matrix::Zero(n, n);
  p.topLeftCorner(dw, dw) = pw;
  p.bottomRightCorner(de, de) = pe;
  Matrix j(dy, n);
  j << h, l;
  const Matrix r = rh.transpose() * rh;
  const Matrix dense = kalman(Vector::Zero(n), p, j, Vector::Zero(dy), r).second;
  Matrix hat = Matrix::Zero(n, n);
  hat.topLeftCorner(dw, dw) = o.c_hidden.gram();
  hat.bottomRightCorner(de, de) = o.sigma_last_half.gram();

  const Matrix& kw = info.k_hidden;
  const Matrix& ke = info.k_last;
  const Matrix aw = Matrix::Identity(dw, dw) - kw * h, ae = Matrix::Identity(de, de) - ke * l;
  Matrix block = Matrix::Zero(n, n);
  block.topLeftCorner(dw, dw) = aw * pw * aw.transpose() + kw * r * kw.transpose();
  block.bottomRightCorner(de, de) = ae * pe * ae.transpose() + ke * r * ke.transpose();
  block.bottomLeftCorner(de, dw) = ke * r * kw.transpose();
  block.topRightCorner(dw, de) = kw * r * ke.transpose();

  const double measured = (dense - hat).norm();
  if (!within(measured, bound)) ++out.dense_violations;
  if (!within((block - hat).norm(), bound)) ++out.block_violations;
  if (bound > 0) out.worst_ratio = std::max(out.worst_ratio, measured / bound);
}

void lrkf_instance(Philox& rng, double q, BoundCounts& out) {
  const int n = uniform_int(rng, 2, 32), d = uniform_int(rng, 1, n), dy = uniform_int(rng, 1, 3);
  const Matrix w = 0.5 * gaussian(d, n, rng);
  const Matrix j = gaussian(dy, n, rng);
  const Matrix rh = spd(dy, rng).llt().matrixU();
  NoiseConfig noise;
  noise.r_half = UpperTri(rh);
  noise.q_hidden = q;
  const Linearization lin{Vector::Zero(dy), j.rightCols(1), j.leftCols(n - 1)};
  const LrkfBelief b{Vector::Zero(n), LowRankFactor(w)};
  UpdateInfo info;
  const LrkfBelief o = lrkf_update(b, lin, Vector::Zero(dy), noise, {}, &info);
  const double bound = lrkf_step_bound(b, lin, noise, info);
  const Matrix p = w.transpose() * w + q * Matrix::Identity(n, n);
  const Matrix dense = kalman(Vector::Zero(n), p, j, Vector::Zero(dy), rh.transpose() * rh).second;
  const double measured = (dense - o.w.gram()).norm();
  if (!within(measured, bound)) ++out.dense_violations;
  if (bound > 0) out.worst_ratio = std::max(out.worst_ratio, measured / bound);
}

CriterionResult bound_validity(const SuiteOptions&) {
  const auto t0 = Clock::now();
  Philox rng(103, Stream::kTest);
  const double qs[] = {0.0, 1e-6, 1e-2};
  BoundCounts hilofi, lrkf;
  for (int trial = 0; trial < 500; ++trial) hilofi_instance(rng, qs[trial % 3], hilofi);
  for (int trial = 0; trial < 500; ++trial) lrkf_instance(rng, qs[trial % 3], lrkf);
  const double secs = seconds_since(t0);
  Checks c;
  c.le("HiLoFi violations vs dense EKF /500", hilofi.dense_violations, 0);
  c.note("worst HiLoFi measured/bound " + sci(hilofi.worst_ratio));
  c.note("HiLoFi violations vs block reference " + std::to_string(hilofi.block_violations) + "/500");
  c.le("LRKF violations vs dense EKF /500", lrkf.dense_violations, 0);
  c.lt("runtime s", secs, 120.0);
  return c.result("Bound validity", secs);
}

CriterionResult blup_gap(const SuiteOptions&) {
  const auto t0 = Clock::now();
  Philox rng(104, Stream::kTest);
  const int n = 12;
  const NetworkSpec spec{n - 1, {}, 1, Activation::kElu};  // θ = [w; b], features [x; 1]
  int violations = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = uniform_int(rng, 1, n - 1);
    const Matrix sigma = spd(n, rng, 1e-3);
    const Vector x = gaussian(n - 1, 1, rng);
    Vector xt(n);
    xt << x, 1.0;
    const double r2 = 0.1;
    const Vector y = gaussian(1, 1, rng);
    const Vector dense = kalman(Vector::Zero(n), sigma, xt.transpose(), y, Matrix::Constant(1, 1, r2)).first;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma);
    const Matrix w = eig.eigenvalues().tail(d).cwiseSqrt().asDiagonal() * eig.eigenvectors().rightCols(d).transpose();
    const LrkfBelief lr = lrkf_update(LrkfBelief{Vector::Zero(n), LowRankFactor(w)},
                                      linearize(spec, FlatParams{Vector::Zero(n), 0}, x), y,
                                      NoiseConfig::isotropic(1, std::sqrt(r2)));
    const double bound = lrkf_blup_gap_bound(y(0), sigma, xt, r2, d);
    const double gap = (dense - lr.mean).norm();
    if (!within(gap, bound)) ++violations;
    if (bound > 0) worst = std::max(worst, gap / bound);
  }
  const double secs = seconds_since(t0);
  Checks c;
  c.le("violations /1000", violations, 0);
  c.note("worst gap/bound " + sci(worst));
  c.lt("runtime s", secs, 30.0);
  return c.result("BLUP gap bound", secs);
}

// ---- experiments -------------------------------------------------------------

CriterionResult inbetween(const SuiteOptions& opts) {
  const auto t0 = Clock::now();
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::kInbetween;
  cfg.filter = FilterKind::kHiLoFi;
  cfg.hidden = {128, 128, 128, 128};
  cfg.rank_hidden = 50;
  cfg.q_last = cfg.q_hidden = 0.0;
  cfg.r = 0.0;
  cfg.prior_var_last = cfg.prior_var_hidden = 0.5;
  cfg.steps = 120;
  int ok = 0;
  double lowest = INFINITY;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SeedResult r = run_seed(cfg, seed);
    const double ratio = r.metrics.at("gap_ratio");
    lowest = std::min(lowest, ratio);
    ok += ratio >= 1.5;
    progress(opts, "in-between seed " + std::to_string(seed) + " ratio " + sci(ratio));
  }
  const double secs = seconds_since(t0);
  Checks c;
  c.ge("seeds with std(0)/mean train std >= 1.5", ok, 9);
  c.note("lowest ratio " + sci(lowest));
  c.lt("runtime s", secs, 60.0);
  return c.result("In-between uncertainty", secs);
}

double mean_metric(const ExperimentConfig& cfg, const std::string& key, int seeds, const MnistData* data = nullptr) {
  double total = 0.0;
  for (int s = 0; s < seeds; ++s) total += run_seed(cfg, static_cast<std::uint64_t>(s), data).metrics.at(key);
  return total / seeds;
}

CriterionResult synthetic_bandit(const SuiteOptions& opts) {
  const auto t0 = Clock::now();
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::kBandit;
  cfg.filter = FilterKind::kHiLoFi;
  cfg.policy = PolicyKind::kPbayes;
  cfg.hidden = {32};
  cfg.arms = 5;
  cfg.context_dim = 2;
  cfg.bandit_noise = 0.1;
  cfg.r = 0.1;
  cfg.steps = 2000;
  const double pbayes = mean_metric(cfg, "total_regret", 10);
  const double secs = seconds_since(t0);
  progress(opts, "bandit pbayes regret " + sci(pbayes));
  cfg.policy = PolicyKind::kUniform;
  const double uniform = mean_metric(cfg, "total_regret", 10);
  Checks c;
  c.le("regret ratio pBayes/uniform", pbayes / uniform, 0.40);
  c.note("mean regret " + sci(pbayes) + " vs " + sci(uniform));
  c.lt("runtime s (HiLoFi runs)", secs, 120.0);
  return c.result("Synthetic bandit regret", seconds_since(t0));
}

std::optional<MnistData> find_mnist(const SuiteOptions& opts) {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::kMnistBandit;
  cfg.data_dir = opts.data_dir;
  try {
    return load_mnist_for(cfg);
  } catch (const MissingDatasetError&) {
    return std::nullopt;
  }
}

CriterionResult mnist_bandit(const SuiteOptions& opts) {
  const auto t0 = Clock::now();
  Checks c;
  const auto data = find_mnist(opts);
  if (!data) {
    std::cerr << "warning: MNIST IDX files not found (set PREDFILT_DATA_DIR); skipping the MNIST bandit\n";
    c.skip("MNIST IDX files not found");
    return c.result("MNIST bandit", seconds_since(t0));
  }
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::kMnistBandit;
  cfg.policy = PolicyKind::kPbayes;
  cfg.hidden = {64, 64};
  cfg.steps = 20000;
  cfg.rank = cfg.rank_hidden = 50;
  cfg.filter = FilterKind::kHiLoFi;
  double hilofi = 0.0, window = 0.0;
  for (int s = 0; s < 5; ++s) {
    const SeedResult r = run_seed(cfg, static_cast<std::uint64_t>(s), &*data);
    hilofi += r.metrics.at("total_reward") / 5;
    window += r.metrics.at("final_window_reward") / 5;
    progress(opts, "mnist hilofi seed " + std::to_string(s));
  }
  cfg.filter = FilterKind::kLrkf;
  const double lrkf = mean_metric(cfg, "total_reward", 5, &*data);
  const double secs = seconds_since(t0);
  c.ge("HiLoFi - LRKF cumulative reward", hilofi - lrkf, 0.0);
  c.ge("LRKF / HiLoFi cumulative reward", lrkf / hilofi, 0.8);
  c.ge("HiLoFi mean reward over final 5k steps", window, 0.40);
  c.lt("runtime s", secs, 1200.0);
  return c.result("MNIST bandit", secs);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double bo_median(const std::string& function, const SuiteOptions& opts) {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::kBo;
  cfg.filter = FilterKind::kHiLoFi;
  cfg.policy = PolicyKind::kTs;
  cfg.hidden = {64, 64, 64};
  cfg.function = function;
  cfg.function_dim = 2;
  cfg.steps = 100;
  cfg.r = 0.01;
  cfg.prior_var_last = cfg.prior_var_hidden = 10.0;
  std::vector<double> best;
  for (std::uint64_t s = 0; s < 20; ++s) best.push_back(run_seed(cfg, s).metrics.at("best_value"));
  progress(opts, function + " median best " + sci(median(best)));
  return median(best);
}

CriterionResult bo(const SuiteOptions& opts) {
  const auto t0 = Clock::now();
  const double branin = bo_median("branin", opts);
  const double branin_secs = seconds_since(t0);
  const auto t1 = Clock::now();
  const double ackley = bo_median("ackley", opts);
  const double ackley_secs = seconds_since(t1);
  Checks c;
  c.ge("Branin median best", branin, -0.90);
  c.lt("Branin runtime s", branin_secs, 300.0);
  c.ge("Ackley-2D median best", ackley, -1.0);
  c.lt("Ackley-2D runtime s", ackley_secs, 300.0);
  return c.result("BO on Branin and Ackley-2D", seconds_since(t0));
}

CriterionResult timing(const SuiteOptions& opts) {
  const auto t0 = Clock::now();
  Checks c;
  {
    const NetworkSpec spec{2, {128, 128}, 1, Activation::kElu};
    FilterOptions fo;
    fo.rank_hidden = 50;
    Belief b = init_belief(spec, init_params(spec, 1), fo);
    const NoiseConfig noise = NoiseConfig::isotropic(1, 0.1, 1e-6, 1e-6);
    Philox env(5, Stream::kEnv);
    std::vector<double> ns;
    for (int t = 0; t < 1000; ++t) {
      const Vector x = gaussian(2, 1, env);
      const Vector y = Vector::Constant(1, std::sin(x(0)) + std::cos(x(1)));
      const auto s = Clock::now();
      b = step(b, spec, x, y, noise);
      ns.push_back(std::chrono::duration<double, std::micro>(Clock::now() - s).count());
    }
    double early = 0.0, late = 0.0;
    for (int t = 0; t < 100; ++t) early += ns[t] / 100;
    for (int t = 899; t < 1000; ++t) late += ns[t] / 101;
    c.le("late/early mean step time", late / early, 2.0);
    c.note("early " + sci(early) + " us, late " + sci(late) + " us");
  }
  {
    const NetworkSpec spec{2, {128, 128}, 10, Activation::kElu};
    FilterOptions fo;
    fo.rank_hidden = 50;
    Belief b = init_belief(spec, init_params(spec, 2), fo);
    const NoiseConfig noise = NoiseConfig::isotropic(1, 0.1, 1e-6, 1e-6);
    Philox env(6, Stream::kEnv), agent(6, Stream::kAgent);
    for (int t = 0; t < 20; ++t) {
      const Vector x = gaussian(2, 1, env);
      const Linearization lin = select_output(linearize(spec, mean_params(b, spec), x), t % 10);
      b = update(b, lin, gaussian(1, 1, env), noise);
    }
    const DiscreteActions arms = DiscreteActions::output_heads(10);
    const int reps = 50;
    std::vector<Vector> contexts;
    for (int i = 0; i < reps; ++i) contexts.push_back(gaussian(2, 1, env));
    int sink = 0;
    auto s = Clock::now();
    for (const Vector& x : contexts) sink += predictive_sample_action(b, spec, x, arms, noise, agent).action;
    const double pbayes = seconds_since(s) / reps;
    s = Clock::now();
    for (const Vector& x : contexts) {
      for (int k = 0; k < 10; ++k) sink += thompson_sample_action(b, spec, x, arms, agent).action;
    }
    const double ts = seconds_since(s) / reps;
    (void)sink;
    c.ge("TS(10 draws)/pBayes selection time", ts / pbayes, 5.0);
    c.note("D_theta " + std::to_string(spec.param_count()) + ", pBayes " + sci(pbayes * 1e3) + " ms, TS " +
           sci(ts * 1e3) + " ms");
  }
  progress(opts, "timing done");
  return c.result("Constant-time updates", seconds_since(t0));
}

CriterionResult classification(const SuiteOptions& opts) {
  const auto t0 = Clock::now();
  Checks c;
  Philox rng(105, Stream::kTest);
  const double eps = 1e-3;
  double min_eig = INFINITY;
  for (int i = 0; i < 10000; ++i) {
    const double scale = std::exp(std::uniform_real_distribution<double>(std::log(0.1), std::log(30.0))(rng));
    const Vector logits = scale * gaussian(10, 1, rng);
    const Matrix cov = moment_matched_obs(logits, eps).second;
    min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Matrix>(cov, Eigen::EigenvaluesOnly).eigenvalues()(0));
  }
  c.ge("min covariance eigenvalue", min_eig, eps - 1e-12);
  const auto data = find_mnist(opts);
  if (!data) {
    std::cerr << "warning: MNIST IDX files not found (set PREDFILT_DATA_DIR); skipping online classification\n";
    c.skip("MNIST IDX files not found");
  } else {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::kMnistClassify;
    cfg.filter = FilterKind::kLrkf;
    cfg.rank = 20;
    cfg.steps = 10000;
    cfg.obs_eps = eps;
    const double acc = run_seed(cfg, 0, &*data).metrics.at("final_window_accuracy");
    c.ge("rolling accuracy over final 2k steps", acc, 0.70);
  }
  return c.result("Moment-matched classification", seconds_since(t0));
}

using Criterion = std::function<CriterionResult(const SuiteOptions&)>;

const std::map<std::string, std::vector<Criterion>>& registry() {
  static const std::map<std::string, std::vector<Criterion>> suites = {
      {"linalg", {kernel_correctness}},
      {"oracle", {oracle_equivalence, jacobian_check}},
      {"bounds", {bound_validity, blup_gap}},
      {"uncertainty", {inbetween}},
      {"bandit", {synthetic_bandit}},
      {"mnist", {mnist_bandit}},
      {"bo", {bo}},
      {"timing", {timing}},
      {"classify", {classification}},
  };
  return suites;
}

}  // namespace

std::string to_string(Status s) {
  switch (s) {
    case Status::kPass:
      return "PASS";
    case Status::kFail:
      return "FAIL";
    case Status::kSkip:
      return "SKIP";
  }
  return "?";
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"linalg", "oracle", "bounds",   "uncertainty", "bandit",
                                                 "mnist",  "bo",     "timing",   "classify"};
  return names;
}

std::vector<CriterionResult> run_suite(const std::string& suite, const SuiteOptions& opts) {
  const auto it = registry().find(suite);
  if (it == registry().end()) throw std::invalid_argument("unknown suite '" + suite + "'");
  std::vector<CriterionResult> out;
  for (const auto& criterion : it->second) out.push_back(criterion(opts));
  return out;
}

std::string format_result(const CriterionResult& r) {
  return "[" + to_string(r.status) + "] " + r.name + ": " + r.detail + " (" + fmt("%.1f", r.seconds) + " s)";
}

}  // namespace predfilt
