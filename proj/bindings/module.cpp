// Python bindings for the core operations: family construction, oracles,
// inner paths, meta gradients, theoretical constants, training runs, and the
// verification suite. Configuration crosses the boundary as JSON.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "maml/family_io.hpp"
#include "maml/trainer.hpp"
#include "maml/verifier.hpp"

namespace py = pybind11;
using namespace maml;
using nlohmann::json;

namespace {

json to_json(const py::object& obj) {
  if (obj.is_none()) return json::object();
  const py::module_ pyjson = py::module_::import("json");
  return json::parse(pyjson.attr("dumps")(obj).cast<std::string>());
}

py::object from_json(const json& j) {
  const py::module_ pyjson = py::module_::import("json");
  return pyjson.attr("loads")(j.dump());
}

py::dict profile_dict(const SmoothnessProfile& p) {
  py::dict d;
  d["L"] = p.L;
  d["rho"] = p.rho;
  d["sigma"] = p.sigma;
  d["sigma_g"] = p.sigma_g;
  d["sigma_H"] = p.sigma_H;
  d["b"] = p.b;
  d["b_tilde"] = p.b_tilde;
  return d;
}

py::dict metrics_dict(const RunMetrics& m) {
  const auto n = static_cast<py::ssize_t>(m.rows.size());
  py::array_t<double> grad_norm(n), loss(n), beta(n), hat_l(n);
  auto g = grad_norm.mutable_unchecked<1>();
  auto l = loss.mutable_unchecked<1>();
  auto b = beta.mutable_unchecked<1>();
  auto h = hat_l.mutable_unchecked<1>();
  for (py::ssize_t i = 0; i < n; ++i) {
    g(i) = m.rows[i].grad_norm;
    l(i) = m.rows[i].loss;
    b(i) = m.rows[i].beta;
    h(i) = m.rows[i].hat_L;
  }
  py::dict d;
  d["grad_norm"] = grad_norm;
  d["loss"] = loss;
  d["beta"] = beta;
  d["hat_L"] = hat_l;
  d["zeta"] = m.zeta;
  d["zeta_mean_grad_norm"] = m.zeta_mean_grad_norm;
  d["initial_grad_norm"] = m.initial_grad_norm;
  d["final_grad_norm"] = m.final_grad_norm;
  d["delta"] = m.delta;
  d["theorem_rhs"] = m.theorem_rhs;
  d["diverged"] = m.diverged;
  d["ball_violation"] = m.ball_violation;
  d["grad_evals"] = m.grad_evals;
  d["hess_evals"] = m.hess_evals;
  d["resolved_alpha"] = m.resolved_alpha;
  d["w_final"] = m.w_final;
  d["csv"] = metrics_to_csv(m);
  return d;
}

py::dict report_dict(const BoundReport& r) {
  py::dict d;
  d["name"] = r.name;
  d["trials"] = r.trials;
  d["empirical"] = r.empirical;
  d["se"] = r.se;
  d["bound"] = r.bound;
  d["direction"] = r.direction == BoundDirection::Upper ? "<=" : ">=";
  d["satisfied"] = r.satisfied;
  d["slack_ratio"] = r.slack_ratio;
  d["note"] = r.note;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "multi-step MAML toolkit: synthetic task families, exact "
            "meta-gradients, convergence-bound constants, trainers, and "
            "Monte-Carlo bound verification";

  py::class_<TaskDistribution>(m, "TaskDistribution")
      .def_property_readonly("dimension", &TaskDistribution::dimension)
      .def_property_readonly("num_tasks", &TaskDistribution::num_tasks)
      .def_property_readonly("domain_radius",
                             [](const TaskDistribution& d) { return d.domain_radius; })
      .def_property_readonly("case",
                             [](const TaskDistribution& d) { return to_string(d.objective); })
      .def_property_readonly("family",
                             [](const TaskDistribution& d) { return to_string(d.family); })
      .def_property_readonly("profile",
                             [](const TaskDistribution& d) { return profile_dict(d.profile); })
      .def("to_json", [](const TaskDistribution& d) { return from_json(family_to_json(d)); })
      .def("loss", [](const TaskDistribution& d, int i, const Vector& w) {
        return loss(d.tasks.at(i), w);
      })
      .def("grad", [](const TaskDistribution& d, int i, const Vector& w) {
        return grad(d.tasks.at(i), w);
      })
      .def("hess", [](const TaskDistribution& d, int i, const Vector& w) {
        return hess(d.tasks.at(i), w);
      })
      .def("query_loss", [](const TaskDistribution& d, int i, const Vector& w) {
        return query_loss(d.tasks.at(i), w);
      })
      .def("query_grad", [](const TaskDistribution& d, int i, const Vector& w) {
        return query_grad(d.tasks.at(i), w);
      });

  m.def("make_quadratic_family", &make_quadratic_family, py::arg("d"),
        py::arg("num_tasks"), py::arg("L_target"), py::arg("sigma") = 0.0,
        py::arg("sigma_g") = 0.0, py::arg("sigma_H") = 0.0, py::arg("R") = 1.0,
        py::arg("seed") = 0);
  m.def("make_trig_family", &make_trig_family, py::arg("d"),
        py::arg("num_tasks"), py::arg("c_max"), py::arg("a_max"),
        py::arg("lambda_") = 0.0, py::arg("R") = 1.0, py::arg("sigma_g") = 0.0,
        py::arg("sigma_H") = 0.0, py::arg("seed") = 0);
  m.def("make_finite_sum_mse", &make_finite_sum_mse, py::arg("d"),
        py::arg("num_tasks"), py::arg("support_size"), py::arg("query_size"),
        py::arg("noise_std") = 0.0, py::arg("R") = 1.0, py::arg("seed") = 0);
  m.def("family_from_json",
        [](const py::object& doc) { return family_from_json(to_json(doc)); });

  m.def("inner_gd_path",
        [](const TaskDistribution& d, int i, const Vector& w, double alpha,
           int n) {
          const InnerPath p = inner_gd(d.tasks.at(i), w, alpha, n);
          return p.iterates;
        },
        py::arg("dist"), py::arg("task"), py::arg("w"), py::arg("alpha"),
        py::arg("N"));
  m.def("meta_loss", &meta_loss, py::arg("dist"), py::arg("w"),
        py::arg("alpha"), py::arg("N"));
  m.def("exact_meta_grad", &exact_meta_grad, py::arg("dist"), py::arg("w"),
        py::arg("alpha"), py::arg("N"));
  m.def("exact_task_meta_grad",
        [](const TaskDistribution& d, int i, const Vector& w, double alpha,
           int n) { return exact_task_meta_grad(d.tasks.at(i), w, alpha, n); },
        py::arg("dist"), py::arg("task"), py::arg("w"), py::arg("alpha"),
        py::arg("N"));
  m.def("stoch_meta_grad",
        [](const TaskDistribution& d, int i, const Vector& w, double alpha,
           int n, int s, int dd, int t, std::uint64_t seed) {
          return stoch_meta_grad_resample(d.tasks.at(i), i, w, alpha, n, s, dd,
                                          t, RngStream(seed))
              .value;
        },
        py::arg("dist"), py::arg("task"), py::arg("w"), py::arg("alpha"),
        py::arg("N"), py::arg("S"), py::arg("D"), py::arg("T"),
        py::arg("seed"));

  m.def("inner_stepsize_bound", &inner_stepsize_bound, py::arg("N"),
        py::arg("L"));
  m.def("default_alpha", &default_alpha, py::arg("N"), py::arg("L"));
  m.def("constants",
        [](const TaskDistribution& d, double alpha, int n, double c_beta,
           int s, int dd, int t, int b) {
          json out;
          if (alpha < 0.0) alpha = default_alpha(n, d.profile.L);
          if (d.objective == ObjectiveCase::Resampling) {
            const auto c =
                resampling_constants(d.profile, alpha, n, c_beta, s, dd, t, b);
            out = {{"case", "resampling"}, {"alpha", alpha},
                   {"C_L", c.c_L},         {"C_err1", c.c_err1},
                   {"C_err2", c.c_err2},   {"C_squ1", c.c_squ1},
                   {"C_squ2", c.c_squ2},   {"C_squ3", c.c_squ3},
                   {"chi", c.chi},         {"xi", c.xi},
                   {"phi", c.phi},         {"theta", c.theta},
                   {"C_l", c.c_l},         {"Bprime_min", c.bprime_min},
                   {"DL_min", c.dl_min},   {"alpha_max", c.alpha_max}};
          } else {
            const auto c = finite_sum_constants(d.profile, alpha, n, c_beta, b);
            out = {{"case", "finite_sum"}, {"alpha", alpha},
                   {"C_L", c.c_L},         {"C_b", c.c_b},
                   {"A_squ1", c.a_squ1},   {"A_squ2", c.a_squ2},
                   {"xi", c.xi},           {"theta", c.theta},
                   {"phi", c.phi},         {"C_1", c.c_1},
                   {"C_2", c.c_2},         {"Bprime_min", c.bprime_min},
                   {"alpha_max", c.alpha_max}};
          }
          return from_json(out);
        },
        py::arg("dist"), py::arg("alpha") = -1.0, py::arg("N") = 1,
        py::arg("C_beta") = 100.0, py::arg("S") = 1, py::arg("D") = 1,
        py::arg("T") = 1, py::arg("B") = 1);

  m.def("run",
        [](const py::object& config, const TaskDistribution& dist) {
          const RunConfig cfg = run_config_from_json(to_json(config));
          return metrics_dict(run_maml(cfg, dist));
        },
        py::arg("config"), py::arg("dist"));

  m.def("verify",
        [](const TaskDistribution& dist, const py::object& settings) {
          const json s = to_json(settings);
          VerifySettings vs;
          vs.N = s.value("N", vs.N);
          if (s.contains("alpha") && s["alpha"].is_number())
            vs.alpha = s["alpha"].get<double>();
          vs.S = s.value("S", vs.S);
          vs.D = s.value("D", vs.D);
          vs.T = s.value("T", vs.T);
          vs.C_beta = s.value("C_beta", vs.C_beta);
          vs.Bprime = s.value("Bprime", vs.Bprime);
          vs.DL = s.value("DL", vs.DL);
          vs.path_trials = s.value("path_trials", vs.path_trials);
          vs.moment_trials = s.value("moment_trials", vs.moment_trials);
          vs.lemma_trials = s.value("lemma_trials", vs.lemma_trials);
          vs.pairs = s.value("pairs", vs.pairs);
          vs.seed = s.value("seed", vs.seed);
          py::list out;
          for (const auto& r : run_verify_suite(dist, vs))
            out.append(report_dict(r));
          return out;
        },
        py::arg("dist"), py::arg("settings") = py::none());

#ifdef VERSION_INFO
  m.attr("__version__") = VERSION_INFO;
#else
  m.attr("__version__") = "dev";
#endif
}
