#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <filesystem>
#include <optional>

namespace ifcda {

/// Bandwidth selection: `std::nullopt` picks the median retained-edge
/// distance, otherwise the given positive value is used.
struct SigmaMode {
  std::optional<double> fixed;

  static SigmaMode automatic() { return {}; }
  static SigmaMode value(double sigma) { return {sigma}; }
};

/// Symmetric p-NN Gaussian affinity graph with its degree vector and
/// Laplacian. W has a zero diagonal; every node has at least one edge.
struct SimilarityGraph {
  Eigen::SparseMatrix<double> weights;    // W
  Eigen::VectorXd degrees;                // diag(H)
  Eigen::SparseMatrix<double> laplacian;  // H - W
  double sigma = 1.0;

  Eigen::Index size() const { return weights.rows(); }
};

/// Columns of `points` are samples. Edge (i, j) exists iff i is among the p
/// nearest neighbours of j or vice versa (self excluded, ties by lower index);
/// its weight is exp(-|x_i - x_j|^2 / sigma^2).
SimilarityGraph build_graph(const Eigen::MatrixXd& points, int neighbors,
                            SigmaMode sigma_mode = SigmaMode::automatic());

struct LaplacianParts {
  Eigen::SparseMatrix<double> degree;     // H
  Eigen::SparseMatrix<double> laplacian;  // L = H - W
};

LaplacianParts laplacian_parts(const SimilarityGraph& graph);

/// One "i j weight" line per undirected edge (i < j, 0-based).
void write_edge_list(const SimilarityGraph& graph, const std::filesystem::path& path);

}  // namespace ifcda
