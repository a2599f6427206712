#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "llrbc/buffer.hpp"
#include "llrbc/config.hpp"
#include "llrbc/metrics.hpp"
#include "llrbc/report.hpp"
#include "llrbc/rollout.hpp"
#include "llrbc/runio.hpp"
#include "llrbc/trainer.hpp"

namespace py = pybind11;
using namespace llrbc;

namespace {

Instance instance_from_text(const std::string& text) { return instance_from_json(text); }

std::vector<std::string> py_generate_instances(const std::string& distribution,
                                               const std::string& kind, int scale,
                                               double capacity, std::uint64_t seed,
                                               int count) {
  TaskSpec spec;
  spec.distribution = distribution_from_string(distribution);
  spec.kind = problem_kind_from_string(kind);
  spec.scale = scale;
  spec.capacity = capacity;
  spec.seed = seed;
  spec.validate();
  std::vector<std::string> out;
  for (const Instance& inst : generate_instances(spec, count)) {
    out.push_back(instance_to_json(inst));
  }
  return out;
}

Policy make_policy(const std::string& kind, std::uint64_t seed) {
  ModelConfig mc;
  mc.kind = problem_kind_from_string(kind);
  Policy p(mc);
  Rng rng(seed);
  p.init_params(rng);
  return p;
}

py::tuple py_best_route(const Policy& p, const std::string& instance_json) {
  Instance inst = instance_from_text(instance_json);
  EvalRoute best = best_greedy_route(p, inst);
  return py::make_tuple(best.length, best.route);
}

std::vector<double> py_evaluate_lengths(const Policy& p,
                                        const std::vector<std::string>& instance_jsons) {
  std::vector<Instance> set;
  set.reserve(instance_jsons.size());
  for (const std::string& text : instance_jsons) set.push_back(instance_from_text(text));
  return evaluate_lengths(p, set, 0);
}

double py_confidence_weight(const std::vector<double>& probs) {
  Behavior b;
  b.probs = Eigen::Map<const Eigen::VectorXd>(probs.data(),
                                              static_cast<Eigen::Index>(probs.size()));
  b.mask.assign(probs.size(), 1);
  return confidence_weight(b);
}

double py_divergence(const std::vector<double>& p_theta, const std::vector<double>& p_buf,
                     const std::vector<bool>& mask, const std::string& mode) {
  Eigen::Map<const Eigen::VectorXd> q(p_theta.data(),
                                      static_cast<Eigen::Index>(p_theta.size()));
  Eigen::Map<const Eigen::VectorXd> p(p_buf.data(),
                                      static_cast<Eigen::Index>(p_buf.size()));
  std::vector<std::uint8_t> m(mask.begin(), mask.end());
  DivergenceMode dm;
  if (mode == "rkld") dm = DivergenceMode::reverse_kld;
  else if (mode == "kld") dm = DivergenceMode::kld;
  else throw config_error("mode must be rkld or kld");
  return divergence_term(q, p, m, dm);
}

py::dict py_compute_metrics(const std::vector<std::vector<double>>& dbar, int k) {
  Eigen::Index n = static_cast<Eigen::Index>(dbar.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(dbar[static_cast<std::size_t>(i)].size()) != n) {
      throw config_error("metrics need a square matrix");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      m(i, j) = dbar[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  LifelongMetrics v = compute_metrics(m, k);
  py::dict out;
  out["AP"] = v.ap;
  out["AF"] = v.af;
  out["AMF"] = v.amf;
  out["APl"] = v.apl;
  out["AG"] = v.ag;
  return out;
}

std::string py_run(const std::string& config_json) {
  RunConfig cfg = RunConfig::from_json_text(config_json);
  RunLayout layout{resolve_run_dir(cfg)};
  ensure_dir(layout.root);
  check_manifest(layout, cfg);
  write_manifest(layout, cfg);
  for (Method method : cfg.methods) lifelong_learn(cfg, method, layout);
  write_report(layout.root);
  return layout.root;
}

std::string py_validate_config(const std::string& config_json) {
  return RunConfig::from_json_text(config_json).canonical_json();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Lifelong learning for constructive routing solvers";
  m.attr("__version__") = kVersion;

  py::register_exception<config_error>(m, "ConfigError");
  py::register_exception<data_error>(m, "DataError");

  py::class_<Policy>(m, "Policy")
      .def(py::init(&make_policy), py::arg("kind"), py::arg("seed"))
      .def_property_readonly("param_count", &Policy::param_count)
      .def("save", &Policy::save)
      .def_static("load", &Policy::load)
      .def("checkpoint_json", &Policy::to_checkpoint_json);

  m.def("generate_instances", &py_generate_instances, py::arg("distribution"),
        py::arg("kind"), py::arg("scale"), py::arg("capacity") = 0.0, py::arg("seed") = 1,
        py::arg("count") = 1, "Instances as JSON strings");
  m.def("tour_length", [](const std::string& instance_json, const std::vector<int>& route) {
    return tour_length(instance_from_text(instance_json), route);
  });
  m.def("best_route", &py_best_route, py::arg("policy"), py::arg("instance_json"));
  m.def("evaluate_lengths", &py_evaluate_lengths, py::arg("policy"), py::arg("instances"));
  m.def("confidence_weight", &py_confidence_weight, py::arg("probs"));
  m.def("divergence", &py_divergence, py::arg("p_theta"), py::arg("p_buffered"),
        py::arg("mask"), py::arg("mode") = "rkld");
  m.def("compute_metrics", &py_compute_metrics, py::arg("dbar"), py::arg("k"));
  m.def("validate_config", &py_validate_config, py::arg("config_json"),
        "Returns the canonical config JSON or raises ConfigError");
  m.def("run", &py_run, py::arg("config_json"),
        "Full lifelong run; returns the run directory");
}
