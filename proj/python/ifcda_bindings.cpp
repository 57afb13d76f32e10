// Python bindings for the main operations. Soft labels cross the boundary as
// (C+1) x n float arrays, features as m x n arrays (one sample per column).

#include "ifcda/experiment.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace ifcda;

namespace {

SoftLabelMatrix soft_labels(const Eigen::MatrixXd& probs, bool normalized) {
  if (probs.rows() < 2) throw Error(ErrorKind::kData, "soft labels need at least 2 rows");
  return SoftLabelMatrix{probs, static_cast<int>(probs.rows()) - 1, normalized};
}

Scenario parse_scenario(const std::string& name) {
  if (name == "csda") return Scenario::kClosedSet;
  if (name == "osda") return Scenario::kOpenSet;
  throw Error(ErrorKind::kParameter, "scenario must be 'csda' or 'osda'");
}

DomainDataset make_domain(const Eigen::MatrixXd& features, std::optional<Labels> labels, Role role) {
  DomainDataset d;
  d.features = features;
  d.labels = std::move(labels);
  d.role = role;
  return d;
}

py::dict metrics_dict(const MetricsReport& m) {
  py::dict out;
  out["accuracy"] = m.accuracy;
  out["OS"] = m.os;
  out["OS_star"] = m.os_star;
  out["UNK"] = m.unk;
  out["per_class"] = m.per_class;
  out["confusion"] = m.confusion;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Importance-filtered cross-domain adaptation";

  static py::exception<Error> ifcda_error(m, "IfcdaError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(ifcda_error, e.what());
    }
  });

  py::class_<SimilarityGraph>(m, "SimilarityGraph")
      .def_readonly("weights", &SimilarityGraph::weights)
      .def_readonly("degrees", &SimilarityGraph::degrees)
      .def_readonly("laplacian", &SimilarityGraph::laplacian)
      .def_readonly("sigma", &SimilarityGraph::sigma)
      .def_property_readonly("size", &SimilarityGraph::size);

  m.def("to_one_hot",
        [](const Labels& labels, int class_count) { return to_one_hot(labels, class_count).probs; },
        py::arg("labels"), py::arg("class_count"));

  m.def(
      "make_synthetic",
      [](int classes, int novel, int samples, int dim, double shift, double rotation,
         double noise, double radius, double arc, std::uint64_t seed) {
        SyntheticSpec spec;
        spec.class_count = classes;
        spec.novel_class_count = novel;
        spec.source_samples_per_class = spec.target_samples_per_class = samples;
        spec.dimension = dim;
        spec.mean_shift = shift;
        spec.rotation_deg = rotation;
        spec.noise_scale = noise;
        spec.cluster_radius = radius;
        spec.arc_deg = arc;
        spec.seed = seed;
        auto [source, target] = make_synthetic(spec);
        py::dict out;
        out["source_features"] = source.features;
        out["source_labels"] = *source.labels;
        out["target_features"] = target.features;
        out["target_labels"] = *target.labels;
        return out;
      },
      py::arg("classes") = 3, py::arg("novel") = 0, py::arg("samples") = 60, py::arg("dim") = 2,
      py::arg("shift") = 0.0, py::arg("rotation") = 0.0, py::arg("noise") = 1.0,
      py::arg("radius") = 4.0, py::arg("arc") = 360.0, py::arg("seed") = 0);

  m.def(
      "build_graph",
      [](const Eigen::MatrixXd& points, int p, std::optional<double> sigma) {
        return build_graph(points, p, sigma ? SigmaMode::value(*sigma) : SigmaMode::automatic());
      },
      py::arg("points"), py::arg("p"), py::arg("sigma") = py::none());

  m.def(
      "propagate",
      [](const SimilarityGraph& graph, const Eigen::MatrixXd& labels, const Eigen::VectorXd& alpha) {
        return propagate(graph, soft_labels(labels, false), AnchorVector{alpha}).probs;
      },
      py::arg("graph"), py::arg("labels"), py::arg("alpha"));

  m.def(
      "column_normalize",
      [](const Eigen::MatrixXd& labels) { return column_normalize(soft_labels(labels, false)).probs; },
      py::arg("labels"));

  m.def(
      "filter_label",
      [](const Eigen::VectorXd& probs, double tau, int keep) {
        return filter_label(probs, FilterConfig{tau, keep});
      },
      py::arg("probs"), py::arg("tau") = 0.8, py::arg("N") = 3);

  m.def(
      "collapse_shared_novel",
      [](const Eigen::MatrixXd& labels) { return collapse_shared_novel(soft_labels(labels, true)).probs; },
      py::arg("labels"));

  m.def(
      "mmd_shared",
      [](const Eigen::MatrixXd& xs, const Eigen::MatrixXd& xt, const Eigen::MatrixXd& fs,
         const Eigen::MatrixXd& ft) {
        return mmd_shared(xs, xt, collapse_shared_novel(soft_labels(fs, true)),
                          collapse_shared_novel(soft_labels(ft, true)));
      },
      py::arg("xs"), py::arg("xt"), py::arg("fs"), py::arg("ft"));

  m.def(
      "mmd_classwise",
      [](const Eigen::MatrixXd& xs, const Eigen::MatrixXd& xt, const Eigen::MatrixXd& fs,
         const Eigen::MatrixXd& ft) {
        return mmd_classwise(xs, xt, soft_labels(fs, true), soft_labels(ft, true));
      },
      py::arg("xs"), py::arg("xt"), py::arg("fs"), py::arg("ft"));

  m.def(
      "scatter_matrices",
      [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& class_weights) {
        const ScatterPair s = scatter_matrices(x, class_weights);
        return py::make_tuple(s.between, s.within);
      },
      py::arg("x"), py::arg("class_weights"));

  m.def("build_subspace_regularizer", &build_subspace_regularizer, py::arg("beta"),
        py::arg("gamma"), py::arg("dimension"));

  m.def("embed", &embed, py::arg("features"), py::arg("projection"),
        py::arg("normalize_columns") = true);

  m.def(
      "predict_hard",
      [](const Eigen::MatrixXd& labels, const std::string& scenario) {
        return predict_hard(soft_labels(labels, true), parse_scenario(scenario));
      },
      py::arg("labels"), py::arg("scenario"));

  m.def(
      "compute_metrics",
      [](const Labels& predicted, const Labels& truth, int class_count, const std::string& scenario) {
        return metrics_dict(compute_metrics(predicted, truth, class_count, parse_scenario(scenario)));
      },
      py::arg("predicted"), py::arg("truth"), py::arg("class_count"), py::arg("scenario"));

  m.def(
      "run_ifcda",
      [](const Eigen::MatrixXd& source_features, const Labels& source_labels,
         const Eigen::MatrixXd& target_features, const py::dict& settings) {
        ExperimentConfig config;
        config.data.synthetic = SyntheticSpec{};  // unused; satisfies the data-source contract
        for (const auto& [key, value] : settings) {
          apply_setting(config, py::str(key), py::str(value));
        }
        const AdaptationResult result =
            run_ifcda(make_domain(source_features, source_labels, Role::kSource),
                      make_domain(target_features, std::nullopt, Role::kTarget), config.adaptation);
        py::list trajectory;
        for (const auto& snap : result.iterations) trajectory.append(snap.target_labels.probs);
        py::dict out;
        out["target_labels"] = result.target_labels.probs;
        out["A_s"] = result.projections.source;
        out["A_t"] = result.projections.target;
        out["eigenvalues"] = result.projections.eigenvalues;
        out["iterations"] = trajectory;
        out["class_count"] = result.class_count;
        return out;
      },
      py::arg("source_features"), py::arg("source_labels"), py::arg("target_features"),
      py::arg("settings") = py::dict());

  m.def(
      "run_experiment",
      [](const std::filesystem::path& config, const std::filesystem::path& out_dir) {
        RunOptions options;
        options.out_dir = out_dir;
        py::list reports;
        for (const auto& outcome : run_experiment(config, options)) {
          py::dict entry = outcome.metrics ? metrics_dict(*outcome.metrics) : py::dict();
          entry["label"] = outcome.label;
          entry["predictions"] = outcome.predictions;
          reports.append(entry);
        }
        return reports;
      },
      py::arg("config"), py::arg("out_dir") = ".");
}
