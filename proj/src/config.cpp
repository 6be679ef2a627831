#include "predfilt/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "toml.hpp"

namespace predfilt {

ExperimentKind parse_experiment(const std::string& name) {
  if (name == "inbetween") return ExperimentKind::kInbetween;
  if (name == "bandit") return ExperimentKind::kBandit;
  if (name == "mnist_bandit") return ExperimentKind::kMnistBandit;
  if (name == "mnist_classify") return ExperimentKind::kMnistClassify;
  if (name == "bo") return ExperimentKind::kBo;
  throw std::invalid_argument("unknown experiment '" + name + "'");
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kInbetween:
      return "inbetween";
    case ExperimentKind::kBandit:
      return "bandit";
    case ExperimentKind::kMnistBandit:
      return "mnist_bandit";
    case ExperimentKind::kMnistClassify:
      return "mnist_classify";
    case ExperimentKind::kBo:
      return "bo";
  }
  return "?";
}

PolicyKind parse_policy(const std::string& name) {
  if (name == "pbayes") return PolicyKind::kPbayes;
  if (name == "ts") return PolicyKind::kTs;
  if (name == "eps_greedy") return PolicyKind::kEpsGreedy;
  if (name == "ei") return PolicyKind::kEi;
  if (name == "uniform") return PolicyKind::kUniform;
  throw std::invalid_argument("unknown policy '" + name + "'");
}

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kPbayes:
      return "pbayes";
    case PolicyKind::kTs:
      return "ts";
    case PolicyKind::kEpsGreedy:
      return "eps_greedy";
    case PolicyKind::kEi:
      return "ei";
    case PolicyKind::kUniform:
      return "uniform";
  }
  return "?";
}

void ExperimentConfig::validate() const {
  std::vector<std::string> bad;
  if (rank < 1) bad.push_back("ranks.d");
  if (rank_hidden < 1) bad.push_back("ranks.d_hidden");
  if (rank_last < 1) bad.push_back("ranks.d_last");
  if (q_last < 0) bad.push_back("noise.q_last");
  if (q_hidden < 0) bad.push_back("noise.q_hidden");
  if (r < 0) bad.push_back("noise.r");
  if (!(obs_eps > 0)) bad.push_back("noise.eps");
  if (epsilon < 0 || epsilon > 1) bad.push_back("epsilon");
  if (prior_var_last < 0) bad.push_back("prior.var_last");
  if (prior_var_hidden < 0) bad.push_back("prior.var_hidden");
  for (int w : hidden) {
    if (w < 1) {
      bad.push_back("net.hidden");
      break;
    }
  }
  if (steps < 1) bad.push_back("steps");
  if (seeds.empty()) bad.push_back("seeds");
  if (workers < 0) bad.push_back("workers");
  if (arms < 1) bad.push_back("bandit.arms");
  if (context_dim < 1) bad.push_back("bandit.context_dim");
  if (bandit_noise < 0) bad.push_back("bandit.noise_sd");
  if (drift_var < 0) bad.push_back("bandit.drift_var");
  if (function_dim < 1) bad.push_back("bo.dim");
  if (candidate_count < 1) bad.push_back("bo.candidate_count");
  if (init_points < 1) bad.push_back("bo.init_points");
  if (refine_steps < 0) bad.push_back("bo.refine_steps");
  if (!(refine_step_size > 0)) bad.push_back("bo.refine_step_size");

  // The regression and classification streams ignore the policy.
  const bool discrete = experiment == ExperimentKind::kBandit || experiment == ExperimentKind::kMnistBandit;
  if (discrete && policy == PolicyKind::kEi) bad.push_back("policy");
  if (experiment == ExperimentKind::kBo && policy != PolicyKind::kEi && policy != PolicyKind::kTs) {
    bad.push_back("policy");
  }
  if (!bad.empty()) {
    std::string msg = "invalid config keys:";
    for (const auto& k : bad) msg += " " + k;
    throw ConfigError(msg, bad);
  }
}

namespace {

// Reads typed values out of a table and records anything unexpected.
class Reader {
 public:
  explicit Reader(std::vector<std::string>& bad) : bad_(bad) {}

  void check_keys(const toml::table& t, const std::string& prefix, const std::set<std::string>& allowed) {
    for (const auto& [k, v] : t) {
      const std::string key(k.str());
      if (!allowed.count(key)) bad_.push_back(prefix + key);
    }
  }

  template <typename T>
  void get(const toml::table& t, const std::string& prefix, const char* key, T& out) {
    const toml::node* n = t.get(key);
    if (!n) return;
    if constexpr (std::is_same_v<T, bool>) {
      if (auto v = n->value_exact<bool>()) return void(out = *v);
    } else if constexpr (std::is_integral_v<T>) {
      if (auto v = n->value_exact<std::int64_t>()) return void(out = static_cast<T>(*v));
    } else if constexpr (std::is_floating_point_v<T>) {
      if (auto v = n->value<double>()) return void(out = *v);
    } else {
      if (auto v = n->value_exact<std::string>()) return void(out = *v);
    }
    bad_.push_back(prefix + key);
  }

  template <typename T>
  void get_list(const toml::table& t, const std::string& prefix, const char* key, std::vector<T>& out) {
    const toml::node* n = t.get(key);
    if (!n) return;
    const toml::array* arr = n->as_array();
    if (!arr) return void(bad_.push_back(prefix + key));
    std::vector<T> vals;
    for (const auto& e : *arr) {
      auto v = e.value_exact<std::int64_t>();
      if (!v || *v < 0) return void(bad_.push_back(prefix + key));
      vals.push_back(static_cast<T>(*v));
    }
    out = std::move(vals);
  }

  template <typename F>
  void parse_enum(const toml::table& t, const std::string& prefix, const char* key, F f) {
    std::string s;
    const std::size_t before = bad_.size();
    get(t, prefix, key, s);
    if (bad_.size() != before || s.empty()) return;
    try {
      f(s);
    } catch (const std::invalid_argument&) {
      bad_.push_back(prefix + key);
    }
  }

  const toml::table* sub(const toml::table& t, const char* key) {
    const toml::node* n = t.get(key);
    if (!n) return nullptr;
    if (!n->is_table()) {
      bad_.push_back(key);
      return nullptr;
    }
    return n->as_table();
  }

 private:
  std::vector<std::string>& bad_;
};

}  // namespace

ExperimentConfig parse_config(const std::string& toml_text) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config is not valid TOML: " << e.description() << " (line " << e.source().begin.line << ")";
    throw ConfigError(msg.str(), {});
  }

  ExperimentConfig c;
  std::vector<std::string> bad;
  Reader rd(bad);
  rd.check_keys(root, "", {"experiment", "filter", "policy", "steps", "seeds", "workers", "diagnostics", "epsilon",
                           "data_dir", "ranks", "noise", "prior", "net", "bandit", "bo"});
  rd.parse_enum(root, "", "experiment", [&](const std::string& s) { c.experiment = parse_experiment(s); });
  rd.parse_enum(root, "", "filter", [&](const std::string& s) { c.filter = parse_filter(s); });
  rd.parse_enum(root, "", "policy", [&](const std::string& s) { c.policy = parse_policy(s); });
  rd.get(root, "", "steps", c.steps);
  rd.get_list(root, "", "seeds", c.seeds);
  rd.get(root, "", "workers", c.workers);
  rd.get(root, "", "diagnostics", c.diagnostics);
  rd.get(root, "", "epsilon", c.epsilon);
  rd.get(root, "", "data_dir", c.data_dir);

  if (const auto* t = rd.sub(root, "ranks")) {
    rd.check_keys(*t, "ranks.", {"d", "d_hidden", "d_last"});
    rd.get(*t, "ranks.", "d", c.rank);
    rd.get(*t, "ranks.", "d_hidden", c.rank_hidden);
    rd.get(*t, "ranks.", "d_last", c.rank_last);
  }
  if (const auto* t = rd.sub(root, "noise")) {
    rd.check_keys(*t, "noise.", {"q_last", "q_hidden", "r", "eps"});
    rd.get(*t, "noise.", "q_last", c.q_last);
    rd.get(*t, "noise.", "q_hidden", c.q_hidden);
    rd.get(*t, "noise.", "r", c.r);
    rd.get(*t, "noise.", "eps", c.obs_eps);
  }
  if (const auto* t = rd.sub(root, "prior")) {
    rd.check_keys(*t, "prior.", {"var_last", "var_hidden"});
    rd.get(*t, "prior.", "var_last", c.prior_var_last);
    rd.get(*t, "prior.", "var_hidden", c.prior_var_hidden);
  }
  if (const auto* t = rd.sub(root, "net")) {
    rd.check_keys(*t, "net.", {"hidden", "activation"});
    std::vector<std::int64_t> widths;
    bool had = t->get("hidden") != nullptr;
    rd.get_list(*t, "net.", "hidden", widths);
    if (had) c.hidden.assign(widths.begin(), widths.end());
    rd.parse_enum(*t, "net.", "activation", [&](const std::string& s) { c.activation = parse_activation(s); });
  }
  if (const auto* t = rd.sub(root, "bandit")) {
    rd.check_keys(*t, "bandit.", {"arms", "context_dim", "noise_sd", "drift_var"});
    rd.get(*t, "bandit.", "arms", c.arms);
    rd.get(*t, "bandit.", "context_dim", c.context_dim);
    rd.get(*t, "bandit.", "noise_sd", c.bandit_noise);
    rd.get(*t, "bandit.", "drift_var", c.drift_var);
  }
  if (const auto* t = rd.sub(root, "bo")) {
    rd.check_keys(*t, "bo.", {"function", "dim", "candidate_count", "init_points", "refine_steps",
                              "refine_step_size"});
    rd.get(*t, "bo.", "function", c.function);
    rd.get(*t, "bo.", "dim", c.function_dim);
    rd.get(*t, "bo.", "candidate_count", c.candidate_count);
    rd.get(*t, "bo.", "init_points", c.init_points);
    rd.get(*t, "bo.", "refine_steps", c.refine_steps);
    rd.get(*t, "bo.", "refine_step_size", c.refine_step_size);
    if (c.function != "ackley" && c.function != "branin" && c.function != "hartmann6" && c.function != "drawnn") {
      bad.push_back("bo.function");
    }
  }
  if (!bad.empty()) {
    std::string msg = "invalid config keys:";
    for (const auto& k : bad) msg += " " + k;
    throw ConfigError(msg, bad);
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path, {});
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace predfilt
