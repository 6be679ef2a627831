#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "predfilt/config.hpp"
#include "predfilt/decision.hpp"
#include "predfilt/environments.hpp"
#include "predfilt/experiment.hpp"
#include "predfilt/filters.hpp"
#include "predfilt/linalg.hpp"
#include "predfilt/net.hpp"
#include "predfilt/suites.hpp"

namespace py = pybind11;
using namespace predfilt;

namespace {

// A belief together with the network and noise it is filtered under.
class Filter {
 public:
  Filter(NetworkSpec spec, const std::string& kind, std::uint64_t seed, Eigen::Index rank, double prior_var_last,
         double prior_var_hidden, double r, double q_last, double q_hidden, Eigen::Index rank_last)
      : spec_(std::move(spec)),
        noise_(NoiseConfig::isotropic(spec_.output_dim, r, q_last, q_hidden)) {
    FilterOptions o;
    o.kind = parse_filter(kind);
    o.rank = o.rank_hidden = rank;
    o.rank_last = rank_last > 0 ? rank_last : rank;
    o.prior_var_last = prior_var_last;
    o.prior_var_hidden = prior_var_hidden;
    belief_ = init_belief(spec_, init_params(spec_, seed), o);
  }

  void step(const Vector& x, const Vector& y) { belief_ = predfilt::step(belief_, spec_, x, y, noise_); }

  py::tuple predict(const Vector& x) const {
    const GaussianPredictive p = predictive(belief_, spec_, x, noise_);
    return py::make_tuple(p.mean, p.cov);
  }

  Vector mean() const { return mean_params(belief_, spec_).theta; }
  Matrix covariance() const { return dense_cov(belief_, spec_); }

  int pbayes(const Vector& context, int arms, std::uint64_t seed) const {
    Philox rng(seed, Stream::kAgent);
    return predictive_sample_action(belief_, spec_, context, DiscreteActions::output_heads(arms), noise_, rng).action;
  }

 private:
  NetworkSpec spec_;
  NoiseConfig noise_;
  Belief belief_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<MissingDatasetError>(m, "MissingDatasetError", PyExc_FileNotFoundError);
  py::register_exception<SingularMatrixError>(m, "SingularMatrixError", PyExc_ArithmeticError);

  py::class_<NetworkSpec>(m, "NetworkSpec")
      .def(py::init([](int input_dim, std::vector<int> hidden, int output_dim, const std::string& activation) {
             NetworkSpec s{input_dim, std::move(hidden), output_dim, parse_activation(activation)};
             s.validate();
             return s;
           }),
           py::arg("input_dim"), py::arg("hidden"), py::arg("output_dim") = 1, py::arg("activation") = "elu")
      .def_property_readonly("param_count", &NetworkSpec::param_count)
      .def_property_readonly("hidden_param_count", &NetworkSpec::hidden_param_count)
      .def_property_readonly("last_param_count", &NetworkSpec::last_param_count);

  m.def("init_params", [](const NetworkSpec& s, std::uint64_t seed) { return init_params(s, seed).theta; });
  m.def("forward", [](const NetworkSpec& s, const Vector& theta, const Vector& x) {
    return forward(s, FlatParams{theta, s.hidden_param_count()}, x);
  });
  m.def(
      "jacobians",
      [](const NetworkSpec& s, const Vector& theta, const Vector& x) {
        const JacobianPair j = jacobians(s, FlatParams{theta, s.hidden_param_count()}, x);
        return py::make_tuple(j.h_tilde, j.l_tilde);
      },
      "(H, L): Jacobians with respect to the hidden and last-layer parameters.");

  m.def("qr_stack", [](const std::vector<Matrix>& blocks) { return qr_stack(std::span<const Matrix>(blocks)).matrix(); });
  m.def(
      "lowrank_project",
      [](const std::vector<Matrix>& blocks, Eigen::Index d, double inflate) {
        return (inflate > 0 ? lowrank_project_inflated(blocks, d, inflate) : lowrank_project(blocks, d)).matrix();
      },
      py::arg("blocks"), py::arg("d"), py::arg("inflate") = 0.0);

  py::class_<Filter>(m, "Filter")
      .def(py::init<NetworkSpec, const std::string&, std::uint64_t, Eigen::Index, double, double, double, double,
                    double, Eigen::Index>(),
           py::arg("spec"), py::arg("kind") = "hilofi", py::arg("seed") = 0, py::arg("rank") = 50,
           py::arg("prior_var_last") = 0.1, py::arg("prior_var_hidden") = 0.1, py::arg("r") = 0.1,
           py::arg("q_last") = 0.0, py::arg("q_hidden") = 0.0, py::arg("rank_last") = 0)
      .def("step", &Filter::step, py::arg("x"), py::arg("y"))
      .def("predict", &Filter::predict, "(mean, covariance) of the one-step predictive.")
      .def("pbayes_action", &Filter::pbayes, py::arg("context"), py::arg("arms"), py::arg("seed"))
      .def_property_readonly("mean", &Filter::mean)
      .def_property_readonly("covariance", &Filter::covariance);

  m.def("bo_function", [](const std::string& name, int dim, const Vector& u) {
    return bo_eval(BoFunction::parse(name, dim, 0), u);
  });
  m.def("lowdisc_candidates", [](int dim, int n, std::uint64_t seed) {
    return lowdisc_candidates(BoxDomain::unit(dim), n, seed);
  });

  m.def(
      "run",
      [](const std::string& toml_text, const std::string& out_dir, std::optional<std::uint64_t> seed) {
        RunOptions o;
        o.out_dir = out_dir;
        o.seed_override = seed;
        const RunResult r = [&] {
          py::gil_scoped_release release;
          return run(parse_config(toml_text), o);
        }();
        py::list seeds;
        for (const auto& s : r.seeds) seeds.append(py::make_tuple(s.seed, s.metrics));
        return py::make_tuple(r.summary_path, seeds);
      },
      py::arg("config"), py::arg("out_dir"), py::arg("seed") = py::none(),
      "Runs an experiment from TOML text. Returns (summary_path, [(seed, metrics)]).");

  m.def("suite_names", &suite_names);
  m.def(
      "verify",
      [](const std::string& suite, const std::string& data_dir) {
        std::vector<CriterionResult> res;
        {
          py::gil_scoped_release release;
          res = run_suite(suite, {data_dir, false});
        }
        py::list out;
        for (const auto& r : res) out.append(py::make_tuple(r.name, to_string(r.status), r.detail));
        return out;
      },
      py::arg("suite"), py::arg("data_dir") = "");
}
