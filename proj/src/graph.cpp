#include "ifcda/graph.hpp"

#include "ifcda/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <vector>

namespace ifcda {

namespace {

struct Edge {
  Eigen::Index i;
  Eigen::Index j;
  double squared_distance;
};

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

SimilarityGraph build_graph(const Eigen::MatrixXd& points, int neighbors, SigmaMode sigma_mode) {
  const Eigen::Index n = points.cols();
  if (neighbors < 1) throw Error(ErrorKind::kParameter, "neighbor count p must be >= 1");
  if (n < neighbors + 1) {
    throw Error(ErrorKind::kParameter, "p = " + std::to_string(neighbors) +
                                           " requires at least p+1 samples, got " +
                                           std::to_string(n));
  }
  if (!points.allFinite()) throw Error(ErrorKind::kData, "graph input contains non-finite values");
  if (sigma_mode.fixed && !(*sigma_mode.fixed > 0.0 && std::isfinite(*sigma_mode.fixed))) {
    throw Error(ErrorKind::kParameter, "fixed sigma must be positive");
  }

  // Brute-force exact distances, one column at a time; adjacency marks the
  // symmetric-OR neighbour rule.
  std::vector<std::vector<Eigen::Index>> adjacency(static_cast<std::size_t>(n));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  Eigen::VectorXd row(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    row = (points.colwise() - points.col(j)).colwise().squaredNorm().transpose();
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::erase(order, j);
    std::partial_sort(order.begin(), order.begin() + neighbors, order.end(),
                      [&](Eigen::Index a, Eigen::Index b) {
                        return row(a) < row(b) || (row(a) == row(b) && a < b);
                      });
    for (int q = 0; q < neighbors; ++q) {
      const Eigen::Index i = order[static_cast<std::size_t>(q)];
      adjacency[static_cast<std::size_t>(std::min(i, j))].push_back(std::max(i, j));
    }
    order.push_back(j);
  }

  std::vector<Edge> edges;
  for (Eigen::Index i = 0; i < n; ++i) {
    auto& list = adjacency[static_cast<std::size_t>(i)];
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    for (Eigen::Index j : list) {
      edges.push_back({i, j, (points.col(i) - points.col(j)).squaredNorm()});
    }
  }

  double sigma = 0.0;
  if (sigma_mode.fixed) {
    sigma = *sigma_mode.fixed;
  } else {
    std::vector<double> lengths;
    lengths.reserve(edges.size());
    for (const Edge& e : edges) lengths.push_back(std::sqrt(e.squared_distance));
    sigma = median(lengths);
    if (!(sigma > 0.0)) {
      // More than half the edges join duplicates; fall back to the longest.
      sigma = *std::max_element(lengths.begin(), lengths.end());
      if (!(sigma > 0.0)) sigma = 1.0;
    }
  }

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * edges.size());
  const double inv_sigma_sq = 1.0 / (sigma * sigma);
  for (const Edge& e : edges) {
    const double w = std::exp(-e.squared_distance * inv_sigma_sq);
    triplets.emplace_back(e.i, e.j, w);
    triplets.emplace_back(e.j, e.i, w);
  }

  SimilarityGraph graph;
  graph.sigma = sigma;
  graph.weights.resize(n, n);
  graph.weights.setFromTriplets(triplets.begin(), triplets.end());
  graph.weights.makeCompressed();

  // Row sums accumulated in column-index order so the result does not depend
  // on the triplet insertion order.
  graph.degrees = Eigen::VectorXd::Zero(n);
  for (Eigen::Index k = 0; k < graph.weights.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(graph.weights, k); it; ++it) {
      graph.degrees(it.row()) += it.value();
    }
  }
  graph.laplacian = laplacian_parts(graph).laplacian;
  return graph;
}

LaplacianParts laplacian_parts(const SimilarityGraph& graph) {
  const Eigen::Index n = graph.size();
  LaplacianParts parts;
  parts.degree.resize(n, n);
  std::vector<Eigen::Triplet<double>> diag;
  diag.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) diag.emplace_back(i, i, graph.degrees(i));
  parts.degree.setFromTriplets(diag.begin(), diag.end());
  parts.laplacian = parts.degree - graph.weights;
  parts.laplacian.makeCompressed();
  return parts;
}

void write_edge_list(const SimilarityGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kFile, "cannot write " + path.string());
  out.precision(17);
  for (Eigen::Index k = 0; k < graph.weights.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(graph.weights, k); it; ++it) {
      if (it.row() < it.col()) out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    }
  }
}

}  // namespace ifcda
