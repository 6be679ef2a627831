#include "predfilt/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "predfilt/bounds.hpp"
#include "predfilt/decision.hpp"

namespace predfilt {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ns(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(b - a).count();
}

NetworkSpec make_spec(const ExperimentConfig& cfg, int in, int out) {
  NetworkSpec spec{in, cfg.hidden, out, cfg.activation};
  spec.validate();
  return spec;
}

Belief make_belief(const ExperimentConfig& cfg, const NetworkSpec& spec, std::uint64_t seed) {
  FilterOptions o;
  o.kind = cfg.filter;
  o.rank = cfg.rank;
  o.rank_hidden = cfg.rank_hidden;
  o.rank_last = cfg.rank_last;
  o.prior_var_last = cfg.prior_var_last;
  o.prior_var_hidden = cfg.prior_var_hidden;
  return init_belief(spec, init_params(spec, seed), o);
}

NoiseConfig make_noise(const ExperimentConfig& cfg, int dy) {
  return NoiseConfig::isotropic(dy, cfg.r, cfg.q_last, cfg.q_hidden);
}

// Filter update; with diagnostics the per-step bound goes into `rec` (not
// counted in the timing).
Belief observe(const Belief& b, const Linearization& lin, const Vector& y, const NoiseConfig& noise, bool diag,
               StepRecord& rec, std::int64_t& ns) {
  UpdateInfo info;
  const auto t0 = Clock::now();
  Belief out = update(b, lin, y, noise, {}, diag ? &info : nullptr);
  ns += elapsed_ns(t0, Clock::now());
  if (diag) {
    if (const auto* h = std::get_if<HiLoFiBelief>(&b)) {
      const HiLoFiBoundTerms terms = hilofi_step_bound(*h, lin, noise, info);
      rec.bound = terms.total();
      rec.bound_unsquared = terms.total_unsquared();
    } else if (const auto* l = std::get_if<LrkfBelief>(&b)) {
      rec.bound = lrkf_step_bound(*l, lin, noise, info);
    }
  }
  return out;
}

double predictive_std(const Belief& b, const Linearization& lin, int head, const NoiseConfig& noise) {
  const Matrix r = noise.r();
  const double rr = r.rows() == 1 ? r(0, 0) : r(head, head);
  return std::sqrt(std::max(epistemic_variance(b, lin, head) + rr, 0.0));
}

// Wall times stay in the traces only, so the summary is reproducible.
void finish_common(SeedResult& res) {
  const auto n = static_cast<double>(res.records.size());
  res.metrics["steps"] = n;
  res.metrics["total_reward"] = res.records.empty() ? 0.0 : res.records.back().cumulative_reward;
  res.metrics["total_regret"] = res.records.empty() ? 0.0 : res.records.back().regret;
}

void push(SeedResult& res, StepRecord rec, double step_regret) {
  const StepRecord* prev = res.records.empty() ? nullptr : &res.records.back();
  rec.t = static_cast<std::int64_t>(res.records.size()) + 1;
  rec.cumulative_reward = (prev ? prev->cumulative_reward : 0.0) + rec.reward;
  rec.regret = (prev ? prev->regret : 0.0) + step_regret;
  res.records.push_back(std::move(rec));
}

// Mean reward over the last `window` records.
double tail_mean(const std::vector<StepRecord>& recs, std::size_t window) {
  window = std::min(window, recs.size());
  if (window == 0) return 0.0;
  double acc = 0.0;
  for (std::size_t i = recs.size() - window; i < recs.size(); ++i) acc += recs[i].reward;
  return acc / static_cast<double>(window);
}

SeedResult run_bandit(const ExperimentConfig& cfg, std::uint64_t seed) {
  LinearBandit env({cfg.arms, cfg.context_dim, cfg.bandit_noise, cfg.drift_var}, seed);
  const NetworkSpec spec = make_spec(cfg, cfg.context_dim, cfg.arms);
  const NoiseConfig noise = make_noise(cfg, 1);
  const DiscreteActions actions = DiscreteActions::output_heads(cfg.arms);
  Belief b = make_belief(cfg, spec, seed);
  Philox rng(seed, Stream::kAgent);
  SeedResult res{seed, {}, {}};
  res.records.reserve(static_cast<std::size_t>(cfg.steps));
  for (int t = 0; t < cfg.steps; ++t) {
    const Vector c = env.context();
    StepRecord rec;
    std::int64_t ns = 0;
    const auto t0 = Clock::now();
    const Linearization lin = linearize(spec, mean_params(b, spec), c);
    int a = 0;
    switch (cfg.policy) {
      case PolicyKind::kPbayes:
        a = predictive_sample_heads(b, lin, noise, rng).action;
        break;
      case PolicyKind::kTs:
        a = thompson_sample_action(b, spec, c, actions, rng).action;
        break;
      case PolicyKind::kEpsGreedy:
        a = rng.uniform() < cfg.epsilon ? std::uniform_int_distribution<int>(0, cfg.arms - 1)(rng)
                                        : argmax_first(lin.prediction);
        break;
      default:
        a = std::uniform_int_distribution<int>(0, cfg.arms - 1)(rng);
    }
    ns += elapsed_ns(t0, Clock::now());
    const BanditFeedback fb = env.reward(c, a);
    const Linearization chosen = select_output(lin, a);
    rec.action = a;
    rec.reward = fb.reward;
    rec.pred_mean = lin.prediction(a);
    rec.pred_std = predictive_std(b, lin, a, noise);
    b = observe(b, chosen, Vector::Constant(1, fb.reward), noise, cfg.diagnostics, rec, ns);
    rec.step_ns = ns;
    push(res, std::move(rec), fb.best_expected - fb.expected);
  }
  finish_common(res);
  return res;
}

SeedResult run_mnist_bandit(const ExperimentConfig& cfg, std::uint64_t seed, const MnistData& data) {
  MnistBandit env(&data, seed);
  const NetworkSpec spec = make_spec(cfg, data.pixel_count(), 10);
  const NoiseConfig noise = make_noise(cfg, 1);
  const DiscreteActions actions = DiscreteActions::output_heads(10);
  Belief b = make_belief(cfg, spec, seed);
  Philox rng(seed, Stream::kAgent);
  SeedResult res{seed, {}, {}};
  const int steps = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(cfg.steps), data.size()));
  res.records.reserve(static_cast<std::size_t>(steps));
  for (int t = 0; t < steps; ++t) {
    const Vector c = env.context();
    StepRecord rec;
    std::int64_t ns = 0;
    const auto t0 = Clock::now();
    const Linearization lin = linearize(spec, mean_params(b, spec), c);
    int a = 0;
    switch (cfg.policy) {
      case PolicyKind::kPbayes:
        a = predictive_sample_heads(b, lin, noise, rng).action;
        break;
      case PolicyKind::kTs:
        a = thompson_sample_action(b, spec, c, actions, rng).action;
        break;
      case PolicyKind::kEpsGreedy:
        a = rng.uniform() < cfg.epsilon ? std::uniform_int_distribution<int>(0, 9)(rng) : argmax_first(lin.prediction);
        break;
      default:
        a = std::uniform_int_distribution<int>(0, 9)(rng);
    }
    ns += elapsed_ns(t0, Clock::now());
    const BanditFeedback fb = env.reward(a);
    rec.action = a;
    rec.reward = fb.reward;
    rec.pred_mean = lin.prediction(a);
    rec.pred_std = predictive_std(b, lin, a, noise);
    b = observe(b, select_output(lin, a), Vector::Constant(1, fb.reward), noise, cfg.diagnostics, rec, ns);
    rec.step_ns = ns;
    push(res, std::move(rec), 1.0 - fb.reward);
  }
  finish_common(res);
  res.metrics["final_window_reward"] = tail_mean(res.records, 5000);
  return res;
}

SeedResult run_mnist_classify(const ExperimentConfig& cfg, std::uint64_t seed, const MnistData& data) {
  MnistBandit stream(&data, seed);
  const NetworkSpec spec = make_spec(cfg, data.pixel_count(), 10);
  Belief b = make_belief(cfg, spec, seed);
  SeedResult res{seed, {}, {}};
  const int steps = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(cfg.steps), data.size()));
  res.records.reserve(static_cast<std::size_t>(steps));
  for (int t = 0; t < steps; ++t) {
    const Vector x = stream.context();
    const int label = stream.label();
    StepRecord rec;
    std::int64_t ns = 0;
    const auto t0 = Clock::now();
    const Linearization logits = linearize(spec, mean_params(b, spec), x);
    const int guess = argmax_first(logits.prediction);
    auto [m, cov] = moment_matched_obs(logits.prediction, cfg.obs_eps);
    NoiseConfig noise;
    noise.r_half = UpperTri(Matrix(cov.llt().matrixU()));
    noise.q_last = cfg.q_last;
    noise.q_hidden = cfg.q_hidden;
    ns += elapsed_ns(t0, Clock::now());
    rec.action = guess;
    rec.reward = guess == label ? 1.0 : 0.0;
    rec.pred_mean = m(guess);
    b = observe(b, softmax_linearization(logits), Vector::Unit(10, label), noise, cfg.diagnostics, rec, ns);
    rec.step_ns = ns;
    push(res, std::move(rec), 1.0 - (guess == label ? 1.0 : 0.0));
  }
  finish_common(res);
  res.metrics["final_window_accuracy"] = tail_mean(res.records, 2000);
  return res;
}

SeedResult run_inbetween(const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto [xs, ys] = inbetween_dataset(seed);
  const NetworkSpec spec = make_spec(cfg, 1, 1);
  const NoiseConfig noise = make_noise(cfg, 1);
  Belief b = make_belief(cfg, spec, seed);
  SeedResult res{seed, {}, {}};
  const Eigen::Index n = std::min<Eigen::Index>(xs.size(), cfg.steps);
  for (Eigen::Index i = 0; i < n; ++i) {
    StepRecord rec;
    std::int64_t ns = 0;
    const Vector x = Vector::Constant(1, xs(i));
    const auto t0 = Clock::now();
    const Linearization lin = linearize(spec, mean_params(b, spec), x);
    ns += elapsed_ns(t0, Clock::now());
    rec.query = {xs(i)};
    rec.pred_mean = lin.prediction(0);
    rec.pred_std = predictive_std(b, lin, 0, noise);
    rec.reward = -std::pow(ys(i) - lin.prediction(0), 2);
    b = observe(b, lin, Vector::Constant(1, ys(i)), noise, cfg.diagnostics, rec, ns);
    rec.step_ns = ns;
    push(res, std::move(rec), 0.0);
  }
  finish_common(res);
  const FlatParams mean = mean_params(b, spec);
  auto sd_at = [&](double x) { return predictive_std(b, linearize(spec, mean, Vector::Constant(1, x)), 0, noise); };
  double train = 0.0;
  for (Eigen::Index i = 0; i < xs.size(); ++i) train += sd_at(xs(i));
  train /= static_cast<double>(xs.size());
  double sq = 0.0;
  for (Eigen::Index i = 0; i < xs.size(); ++i) {
    sq += std::pow(ys(i) - forward(spec, mean, Vector::Constant(1, xs(i)))(0), 2);
  }
  res.metrics["std_gap"] = sd_at(0.0);
  res.metrics["std_train"] = train;
  res.metrics["gap_ratio"] = train > 0 ? sd_at(0.0) / train : 0.0;
  res.metrics["train_rmse"] = std::sqrt(sq / static_cast<double>(xs.size()));
  return res;
}

SeedResult run_bo(const ExperimentConfig& cfg, std::uint64_t seed) {
  const BoFunction f = BoFunction::parse(cfg.function, cfg.function_dim, seed);
  const int dim = f.dim();
  const BoxDomain box = BoxDomain::unit(dim, cfg.candidate_count);
  const NetworkSpec spec = make_spec(cfg, dim, 1);
  const NoiseConfig noise = make_noise(cfg, 1);
  Belief b = make_belief(cfg, spec, seed);
  Philox rng(seed, Stream::kAgent);
  Philox design(seed, Stream::kEnv);
  const double optimum = f.optimum();
  SeedResult res{seed, {}, {}};

  // Initial design: uniform points; their values fix the target scaling.
  const int n_init = std::min(cfg.init_points, cfg.steps);
  std::vector<Vector> init_x;
  std::vector<double> init_y;
  for (int i = 0; i < n_init; ++i) {
    Vector u(dim);
    for (int d = 0; d < dim; ++d) u(d) = design.uniform();
    init_x.push_back(u);
    init_y.push_back(f(u));
  }
  double mu = 0.0, sd = 0.0;
  for (double y : init_y) mu += y;
  mu /= n_init;
  for (double y : init_y) sd += (y - mu) * (y - mu);
  sd = n_init > 1 ? std::sqrt(sd / (n_init - 1)) : 0.0;
  if (!(sd > 1e-12)) sd = 1.0;

  double best = -INFINITY;
  auto record = [&](const Vector& u, double y, std::int64_t ns, const Linearization& lin, StepRecord rec) {
    best = std::max(best, y);
    rec.query.assign(u.data(), u.data() + u.size());
    rec.reward = y;
    rec.pred_mean = mu + sd * lin.prediction(0);
    rec.pred_std = sd * predictive_std(b, lin, 0, noise);
    rec.step_ns = ns;
    push(res, std::move(rec), std::isnan(optimum) ? 0.0 : optimum - y);
  };

  for (int i = 0; i < n_init; ++i) {
    StepRecord rec;
    std::int64_t ns = 0;
    const auto t0 = Clock::now();
    const Linearization lin = linearize(spec, mean_params(b, spec), init_x[i]);
    ns += elapsed_ns(t0, Clock::now());
    const Belief next = observe(b, lin, Vector::Constant(1, (init_y[i] - mu) / sd), noise, cfg.diagnostics, rec, ns);
    record(init_x[i], init_y[i], ns, lin, rec);
    b = next;
  }
  const Matrix candidates = lowdisc_candidates(box, box.candidate_count, seed * 1000003ULL);
  for (int t = n_init; t < cfg.steps; ++t) {
    StepRecord rec;
    std::int64_t ns = 0;
    const auto t0 = Clock::now();
    BoProposeOptions o;
    o.best_so_far = (best - mu) / sd;
    o.refine_steps = cfg.refine_steps;
    o.step_size = cfg.refine_step_size;
    const Vector u = bo_propose_from(b, spec, box, candidates,
                                     cfg.policy == PolicyKind::kEi ? BoStrategy::kEi : BoStrategy::kTs, noise, rng, o);
    const Linearization lin = linearize(spec, mean_params(b, spec), u);
    ns += elapsed_ns(t0, Clock::now());
    const double y = f(u);
    const Belief next = observe(b, lin, Vector::Constant(1, (y - mu) / sd), noise, cfg.diagnostics, rec, ns);
    record(u, y, ns, lin, rec);
    b = next;
  }
  finish_common(res);
  res.metrics["best_value"] = best;
  return res;
}

std::string format_double(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

}  // namespace

SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed, const MnistData* mnist) {
  switch (cfg.experiment) {
    case ExperimentKind::kBandit:
      return run_bandit(cfg, seed);
    case ExperimentKind::kInbetween:
      return run_inbetween(cfg, seed);
    case ExperimentKind::kBo:
      return run_bo(cfg, seed);
    case ExperimentKind::kMnistBandit:
    case ExperimentKind::kMnistClassify:
      if (!mnist) throw MissingDatasetError("MNIST data required for " + to_string(cfg.experiment));
      return cfg.experiment == ExperimentKind::kMnistBandit ? run_mnist_bandit(cfg, seed, *mnist)
                                                            : run_mnist_classify(cfg, seed, *mnist);
  }
  throw std::logic_error("unhandled experiment");
}

std::string resolve_data_dir(const ExperimentConfig& cfg) {
  if (!cfg.data_dir.empty()) return cfg.data_dir;
  const char* env = std::getenv("PREDFILT_DATA_DIR");
  return env ? env : "";
}

MnistData load_mnist_for(const ExperimentConfig& cfg) {
  const std::string dir = resolve_data_dir(cfg);
  if (dir.empty()) throw MissingDatasetError("no MNIST directory: set data_dir or PREDFILT_DATA_DIR");
  const auto files = find_mnist_files(dir);
  if (!files) throw MissingDatasetError("MNIST train IDX files not found under " + dir);
  return load_mnist_idx(files->first, files->second);
}

std::string to_jsonl(const StepRecord& r) {
  nlohmann::ordered_json j;
  j["t"] = r.t;
  if (r.action >= 0) j["action"] = r.action;
  if (!r.query.empty()) j["query"] = r.query;
  j["reward"] = r.reward;
  j["cumulative_reward"] = r.cumulative_reward;
  j["regret"] = r.regret;
  j["step_ns"] = r.step_ns;
  j["pred_mean"] = r.pred_mean;
  j["pred_std"] = r.pred_std;
  if (r.bound) j["bound"] = *r.bound;
  if (r.bound_unsquared) j["bound_unsquared"] = *r.bound_unsquared;
  return j.dump();
}

std::string summary_csv(const std::vector<SeedResult>& seeds) {
  std::vector<std::string> keys;
  for (const auto& s : seeds) {
    for (const auto& [k, v] : s.metrics) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    }
  }
  std::sort(keys.begin(), keys.end());
  std::ostringstream out;
  out << "seed";
  for (const auto& k : keys) out << "," << k;
  out << "\n";
  for (const auto& s : seeds) {
    out << s.seed;
    for (const auto& k : keys) {
      const auto it = s.metrics.find(k);
      out << "," << (it == s.metrics.end() ? "" : format_double(it->second));
    }
    out << "\n";
  }
  const double n = static_cast<double>(seeds.size());
  std::vector<double> mean(keys.size(), 0.0), sd(keys.size(), 0.0);
  for (std::size_t i = 0; i < keys.size(); ++i) {
    for (const auto& s : seeds) mean[i] += s.metrics.count(keys[i]) ? s.metrics.at(keys[i]) : 0.0;
    mean[i] /= n;
    for (const auto& s : seeds) {
      const double v = s.metrics.count(keys[i]) ? s.metrics.at(keys[i]) : 0.0;
      sd[i] += (v - mean[i]) * (v - mean[i]);
    }
    sd[i] = n > 1 ? std::sqrt(sd[i] / (n - 1)) : 0.0;
  }
  out << "mean";
  for (double v : mean) out << "," << format_double(v);
  out << "\nstd";
  for (double v : sd) out << "," << format_double(v);
  out << "\n";
  return out.str();
}

void check_trace(const std::vector<StepRecord>& records) {
  double cum = 0.0, regret = 0.0;
  std::int64_t t = 0;
  for (const auto& r : records) {
    if (r.t <= t) throw std::logic_error("trace: t is not increasing");
    t = r.t;
    cum += r.reward;
    if (cum != r.cumulative_reward) throw std::logic_error("trace: cumulative reward mismatch at t=" + std::to_string(t));
    if (r.regret < regret) throw std::logic_error("trace: regret decreased at t=" + std::to_string(t));
    regret = r.regret;
  }
}

RunResult run(ExperimentConfig cfg, const RunOptions& opts) {
  if (opts.seed_override) cfg.seeds = {*opts.seed_override};
  if (opts.diagnostics) cfg.diagnostics = true;
  cfg.validate();

  std::optional<MnistData> mnist;
  if (cfg.experiment == ExperimentKind::kMnistBandit || cfg.experiment == ExperimentKind::kMnistClassify) {
    mnist = load_mnist_for(cfg);
  }

  RunResult out;
  out.seeds.resize(cfg.seeds.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < cfg.seeds.size(); i = next++) {
      try {
        out.seeds[i] = run_seed(cfg, cfg.seeds[i], mnist ? &*mnist : nullptr);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t n_workers =
      std::min<std::size_t>(cfg.seeds.size(), cfg.workers > 0 ? static_cast<unsigned>(cfg.workers) : hw);
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < n_workers; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  namespace fs = std::filesystem;
  fs::create_directories(opts.out_dir);
  for (const auto& s : out.seeds) {
    check_trace(s.records);
    const fs::path p = fs::path(opts.out_dir) / ("trace_seed" + std::to_string(s.seed) + ".jsonl");
    std::ofstream f(p);
    for (const auto& r : s.records) f << to_jsonl(r) << "\n";
    if (!f) throw std::runtime_error("failed to write " + p.string());
    out.trace_paths.push_back(p.string());
  }
  const fs::path sp = fs::path(opts.out_dir) / "summary.csv";
  std::ofstream f(sp);
  f << summary_csv(out.seeds);
  if (!f) throw std::runtime_error("failed to write " + sp.string());
  out.summary_path = sp.string();
  return out;
}

}  // namespace predfilt
