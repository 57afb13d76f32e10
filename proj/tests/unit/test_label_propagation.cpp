#include "ifcda/error.hpp"
#include "ifcda/label_propagation.hpp"

#include "../support/oracles.hpp"

#include <doctest.h>

using namespace ifcda;

namespace {

SoftLabelMatrix soft(const Eigen::MatrixXd& probs, int classes, bool normalized = false) {
  SoftLabelMatrix s;
  s.probs = probs;
  s.class_count = classes;
  s.normalized = normalized;
  return s;
}

// Source nodes first (alpha = 0, one-hot over the shared classes), then
// targets with alpha drawn from `choices`.
struct RandomProblem {
  Eigen::MatrixXd w;
  Eigen::MatrixXd f;
  Eigen::VectorXd alpha;
};

RandomProblem random_problem(oracle::Rng& rng, int n, int classes, const std::vector<double>& choices) {
  RandomProblem p;
  p.w = oracle::random_weights(n, rng);
  p.f = Eigen::MatrixXd::Zero(classes + 1, n);
  p.alpha.resize(n);
  const int ns = oracle::uniform_int(rng, 1, n / 2);
  for (int l = 0; l < n; ++l) {
    if (l < ns) {
      p.alpha(l) = 0.0;
      p.f(oracle::uniform_int(rng, 0, classes - 1), l) = 1.0;
    } else {
      p.alpha(l) = choices[static_cast<std::size_t>(oracle::uniform_int(rng, 0, static_cast<int>(choices.size()) - 1))];
      if (oracle::uniform(rng) < 0.5) p.f(classes, l) = 1.0;
    }
  }
  return p;
}

}  // namespace

TEST_SUITE("label_propagation") {

TEST_CASE("closed-set initialization") {
  const SoftLabelMatrix fs = to_one_hot({1, 2}, 2);
  const InitialLabels init = init_labels(fs, 3, Scenario::kClosedSet);
  REQUIRE(init.labels.probs.cols() == 5);
  CHECK(init.labels.probs.rightCols(3).isZero(0.0));
  CHECK(init.labels.probs.leftCols(2) == fs.probs);
  CHECK(init.anchors.alpha.tail(3) == Eigen::Vector3d::Ones());
  CHECK(init.anchors.alpha.head(2).isZero(0.0));
}

TEST_CASE("open-set initialization") {
  const SoftLabelMatrix fs = to_one_hot({1, 2}, 2);
  const InitialLabels init = init_labels(fs, 2, Scenario::kOpenSet, 0.98);
  CHECK(init.labels.probs.col(2) == Eigen::Vector3d(0, 0, 1));
  CHECK(init.labels.probs.col(3) == Eigen::Vector3d(0, 0, 1));
  CHECK(init.anchors.alpha.tail(2) == Eigen::Vector2d(0.98, 0.98));
  CHECK(init.anchors.alpha.head(2).isZero(0.0));
  CHECK(init.labels.normalized);
  for (double bad : {0.0, 1.0, -0.1, 1.5}) {
    try {
      init_labels(fs, 2, Scenario::kOpenSet, bad);
      FAIL("expected a parameter error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kParameter);
    }
  }
  CHECK_THROWS_AS(init_labels(to_one_hot({3}, 2), 2, Scenario::kOpenSet), Error);
}

TEST_CASE("all anchors pinned leaves labels unchanged") {
  oracle::Rng rng(1);
  const oracle::MatrixXd w = oracle::random_weights(10, rng);
  const SoftLabelMatrix f = soft(oracle::stochastic_columns(4, 10, rng), 3, true);
  AnchorVector a{Eigen::VectorXd::Zero(10)};
  CHECK(propagate(oracle::graph_from_dense(w), f, a).probs == f.probs);
}

TEST_CASE("a single neighbour transfers its label") {
  Eigen::Matrix2d w;
  w << 0, 1, 1, 0;
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(2, 2);
  f(0, 0) = 1.0;
  const SoftLabelMatrix out = propagate(oracle::graph_from_dense(w), soft(f, 1), {Eigen::Vector2d(0, 1)});
  CHECK(out.probs(0, 1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(out.probs(1, 1) == 0.0);
  CHECK(out.probs.col(0) == f.col(0));
}

TEST_CASE("closed form matches the dense stationarity solve") {
  oracle::Rng rng(40);
  for (int trial = 0; trial < 30; ++trial) {
    const RandomProblem p = random_problem(rng, 40, 3, {1.0, 0.98, 0.5, 0.9, 0.999});
    const SoftLabelMatrix out =
        propagate(oracle::graph_from_dense(p.w), soft(p.f, 3), {p.alpha});
    const Eigen::MatrixXd expected = oracle::propagate_dense(p.w, p.f, p.alpha);
    CHECK((out.probs - expected).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(oracle::stationarity_residual(p.w, p.f, out.probs, p.alpha) <= 1e-8);
    for (int l = 0; l < 40; ++l)
      if (p.alpha(l) == 0.0) CHECK((out.probs.col(l) - p.f.col(l)).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("iterative scheme agrees with the dense solve") {
  oracle::Rng rng(41);
  PropagationOptions iterative;
  iterative.dense_limit = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const RandomProblem p = random_problem(rng, 60, 4, {0.5, 0.8, 0.9});
    const auto g = oracle::graph_from_dense(p.w);
    const SoftLabelMatrix dense = propagate(g, soft(p.f, 4), {p.alpha});
    const SoftLabelMatrix iter = propagate(g, soft(p.f, 4), {p.alpha}, iterative);
    CHECK((dense.probs - iter.probs).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("a free component without anchors is reported") {
  // Nodes 0-1 form a component with a source node; 2-3 are free targets only.
  Eigen::Matrix4d w = Eigen::Matrix4d::Zero();
  w(0, 1) = w(1, 0) = 1.0;
  w(2, 3) = w(3, 2) = 1.0;
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(2, 4);
  f(0, 0) = 1.0;
  try {
    propagate(oracle::graph_from_dense(w), soft(f, 1), {Eigen::Vector4d(0, 1, 1, 1)});
    FAIL("expected a propagation error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kPropagation);
    CHECK(std::string(e.what()).find("{2, 3}") != std::string::npos);
  }
  // A partially anchored target (alpha < 1) anchors its own component.
  CHECK_NOTHROW(propagate(oracle::graph_from_dense(w), soft(f, 1), {Eigen::Vector4d(0, 1, 0.9, 1)}));
}

TEST_CASE("bad anchor vectors") {
  Eigen::Matrix2d w;
  w << 0, 1, 1, 0;
  const auto g = oracle::graph_from_dense(w);
  CHECK_THROWS_AS(propagate(g, soft(Eigen::MatrixXd::Zero(2, 2), 1), {Eigen::Vector2d(0, 1.5)}), Error);
  CHECK_THROWS_AS(propagate(g, soft(Eigen::MatrixXd::Zero(2, 3), 1), {Eigen::Vector3d(0, 1, 1)}), Error);
}

TEST_CASE("column normalization") {
  Eigen::MatrixXd f(3, 2);
  f << 2, 0.2, 1, 0.3, 1, 0.5;
  const SoftLabelMatrix out = column_normalize(soft(f, 2));
  CHECK(out.probs.col(0) == Eigen::Vector3d(0.5, 0.25, 0.25));
  CHECK((out.probs.col(1) - f.col(1)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(out.normalized);
  f.col(1).setZero();
  try {
    column_normalize(soft(f, 2));
    FAIL("expected a normalization error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNormalization);
  }
}

TEST_CASE("novel detections do not increase as alpha_set grows") {
  SyntheticSpec spec;
  spec.class_count = 3;
  spec.novel_class_count = 1;
  spec.rotation_deg = 30;
  spec.mean_shift = 1;
  spec.noise_scale = 0.8;
  spec.seed = 5;
  auto [source, target] = make_synthetic(spec);
  Eigen::MatrixXd x(2, source.size() + target.size());
  x << source.features, target.features;
  const SimilarityGraph g = build_graph(x, 10);
  const SoftLabelMatrix fs = to_one_hot(*source.labels, 3);
  long previous = target.size() + 1;
  for (double alpha : {0.90, 0.95, 0.98, 1.0 - 1e-6}) {
    const InitialLabels init = init_labels(fs, target.size(), Scenario::kOpenSet, alpha);
    const SoftLabelMatrix out = column_normalize(propagate(g, init.labels, init.anchors));
    long novel = 0;
    for (Eigen::Index j = source.size(); j < out.probs.cols(); ++j) {
      Eigen::Index arg = 0;
      out.probs.col(j).maxCoeff(&arg);
      novel += arg == 3;
    }
    CHECK(novel <= previous);
    previous = novel;
  }
}

}  // TEST_SUITE
