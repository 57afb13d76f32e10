#include "ifcda/error.hpp"
#include "ifcda/graph.hpp"

#include "../support/oracles.hpp"
#include "../support/temp_dir.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

using namespace ifcda;

namespace {

Eigen::MatrixXd dense(const Eigen::SparseMatrix<double>& m) { return Eigen::MatrixXd(m); }

void check_graph_invariants(const SimilarityGraph& g) {
  const Eigen::MatrixXd w = dense(g.weights);
  CHECK(w == w.transpose());
  CHECK(w.diagonal().cwiseAbs().maxCoeff() == 0.0);
  CHECK((w.array() >= 0.0).all());
  CHECK(g.degrees.minCoeff() > 0.0);
  CHECK((g.degrees - w.rowwise().sum()).cwiseAbs().maxCoeff() < 1e-14);
  const Eigen::MatrixXd lap = dense(g.laplacian);
  CHECK((lap * Eigen::VectorXd::Ones(lap.rows())).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(g.sigma > 0.0);
}

}  // namespace

TEST_SUITE("graph") {

TEST_CASE("collinear points at 0, 1, 3 with p = 1") {
  Eigen::MatrixXd x(1, 3);
  x << 0, 1, 3;
  const SimilarityGraph g = build_graph(x, 1, SigmaMode::value(1.0));
  const Eigen::MatrixXd w = dense(g.weights);
  CHECK(w(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(w(1, 2) == doctest::Approx(std::exp(-4.0)).epsilon(1e-15));
  CHECK(w(0, 2) == 0.0);
  CHECK(g.weights.nonZeros() == 4);
  check_graph_invariants(g);
}

TEST_CASE("duplicate points get weight one") {
  Eigen::MatrixXd x(2, 2);
  x << 1, 1, 2, 2;
  const SimilarityGraph g = build_graph(x, 1);
  CHECK(g.weights.coeff(0, 1) == 1.0);
  CHECK(g.weights.coeff(1, 0) == 1.0);
  check_graph_invariants(g);
}

TEST_CASE("distance ties go to the lower index") {
  // Node 1 is equidistant from 0 and 2; with p = 1 it links to 0. Node 2
  // still links to its own nearest neighbour (1), so the OR rule keeps 1-2.
  Eigen::MatrixXd x(1, 4);
  x << 0, 1, 2, 10;
  const SimilarityGraph g = build_graph(x, 1, SigmaMode::value(1.0));
  CHECK(g.weights.coeff(0, 1) > 0.0);
  CHECK(g.weights.coeff(1, 2) > 0.0);
  CHECK(g.weights.coeff(2, 3) > 0.0);
  CHECK(g.weights.coeff(0, 2) == 0.0);
}

TEST_CASE("symmetric OR neighbour rule matches brute force") {
  oracle::Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = oracle::uniform_int(rng, 5, 40);
    const int p = oracle::uniform_int(rng, 1, std::min(6, n - 1));
    const Eigen::MatrixXd x = oracle::gaussian(3, n, rng);
    const double sigma = oracle::uniform(rng, 0.5, 2.0);
    const SimilarityGraph g = build_graph(x, p, SigmaMode::value(sigma));
    // Brute force: rank neighbours by (distance, index).
    Eigen::MatrixXi knn = Eigen::MatrixXi::Zero(n, n);
    for (int j = 0; j < n; ++j) {
      std::vector<std::pair<double, int>> order;
      for (int i = 0; i < n; ++i)
        if (i != j) order.emplace_back((x.col(i) - x.col(j)).squaredNorm(), i);
      std::sort(order.begin(), order.end());
      for (int q = 0; q < p; ++q) knn(order[static_cast<std::size_t>(q)].second, j) = 1;
    }
    const Eigen::MatrixXd w = dense(g.weights);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const bool edge = i != j && (knn(i, j) || knn(j, i));
        const double expected = edge ? std::exp(-(x.col(i) - x.col(j)).squaredNorm() / (sigma * sigma)) : 0.0;
        CHECK(std::abs(w(i, j) - expected) <= 1e-15);
      }
    check_graph_invariants(g);
  }
}

TEST_CASE("automatic sigma is the median retained edge length") {
  Eigen::MatrixXd x(1, 3);
  x << 0, 1, 3;
  // Edges (0,1) length 1 and (1,2) length 2: the median of {1, 2} is 1.5.
  const SimilarityGraph g = build_graph(x, 1);
  CHECK(g.sigma == doctest::Approx(1.5));
  Eigen::MatrixXd y(1, 5);
  y << 0, 1, 3, 6, 10;
  // Edges 0-1, 1-3, 3-6, 6-10 of lengths 1..4.
  CHECK(build_graph(y, 1).sigma == doctest::Approx(2.5));
  CHECK(build_graph(Eigen::MatrixXd::Zero(2, 4), 2).sigma == 1.0);
}

TEST_CASE("laplacian of a two-node graph") {
  Eigen::MatrixXd x(1, 2);
  x << 0, 0;
  const LaplacianParts parts = laplacian_parts(build_graph(x, 1));
  CHECK(dense(parts.degree) == Eigen::Matrix2d::Identity());
  Eigen::Matrix2d lap;
  lap << 1, -1, -1, 1;
  CHECK(dense(parts.laplacian) == lap);
}

TEST_CASE("laplacian is positive semidefinite") {
  oracle::Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const SimilarityGraph g = build_graph(oracle::gaussian(4, 30, rng), oracle::uniform_int(rng, 1, 8));
    const LaplacianParts parts = laplacian_parts(g);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dense(parts.laplacian));
    CHECK(eig.eigenvalues().minCoeff() >= -1e-9);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(30);
    CHECK((parts.laplacian * ones).cwiseAbs().maxCoeff() < 1e-12);
    for (int r = 0; r < 5; ++r) {
      const Eigen::VectorXd v = oracle::gaussian(30, 1, rng);
      CHECK(v.dot(parts.laplacian * v) >= -1e-9 * v.squaredNorm());
    }
    check_graph_invariants(g);
  }
}

TEST_CASE("weights decrease with distance") {
  oracle::Rng rng(2);
  const Eigen::MatrixXd x = oracle::gaussian(2, 25, rng);
  const SimilarityGraph g = build_graph(x, 24, SigmaMode::value(1.3));
  std::vector<std::pair<double, double>> pairs;
  for (int i = 0; i < 25; ++i)
    for (int j = i + 1; j < 25; ++j) pairs.emplace_back((x.col(i) - x.col(j)).norm(), g.weights.coeff(i, j));
  std::sort(pairs.begin(), pairs.end());
  for (std::size_t q = 1; q < pairs.size(); ++q) CHECK(pairs[q].second <= pairs[q - 1].second);
}

TEST_CASE("invalid inputs") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(2, 3);
  CHECK_THROWS_AS(build_graph(x, 3), Error);
  CHECK_THROWS_AS(build_graph(x, 0), Error);
  CHECK_THROWS_AS(build_graph(x, 1, SigmaMode::value(0.0)), Error);
  x(0, 0) = std::nan("");
  CHECK_THROWS_AS(build_graph(x, 1), Error);
  try {
    build_graph(Eigen::MatrixXd::Zero(2, 3), 3);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kParameter);
  }
}

TEST_CASE("edge list dump") {
  Eigen::MatrixXd x(1, 3);
  x << 0, 1, 3;
  TempDir dir;
  write_edge_list(build_graph(x, 1, SigmaMode::value(1.0)), dir / "g.txt");
  std::istringstream in(read_file(dir / "g.txt"));
  int i, j;
  double w;
  REQUIRE(static_cast<bool>(in >> i >> j >> w));
  CHECK(i == 0);
  CHECK(j == 1);
  CHECK(w == std::exp(-1.0));
  REQUIRE(static_cast<bool>(in >> i >> j >> w));
  CHECK(i == 1);
  CHECK(j == 2);
  CHECK(w == std::exp(-4.0));
  CHECK_FALSE(static_cast<bool>(in >> i));
}

}  // TEST_SUITE
