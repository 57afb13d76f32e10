#pragma once

// Loss assembly, projection learning, and the alternating adaptation loop.
//
// Joint projection P = [A_s; A_t] (2m x k). All 2m x 2m matrices are laid out
// with the source block first, so tr(P^T M P) splits into the four m x m
// blocks M_ss, M_st, M_ts, M_tt acting on (A_s, A_t).

#include "ifcda/dataset.hpp"
#include "ifcda/graph.hpp"
#include "ifcda/importance_filter.hpp"
#include "ifcda/label_propagation.hpp"

#include <functional>
#include <vector>

namespace ifcda {

/// Weighted mean-difference MMD matrix for the collapsed shared-class mass:
/// tr(P^T M1 P) = |A_s^T X_s w_s - A_t^T X_t w_t|^2 with w = f^1 / sum(f^1).
/// Throws kDegenerate if either domain has zero shared mass.
Eigen::MatrixXd mmd_shared(const Eigen::MatrixXd& source_features,
                           const Eigen::MatrixXd& target_features,
                           const CollapsedLabelMatrix& source_labels,
                           const CollapsedLabelMatrix& target_labels);

/// Sum over classes 1..C of the same construction with row c of the labels.
/// Classes with zero mass in either domain are skipped; throws kDegenerate if
/// every class is skipped.
Eigen::MatrixXd mmd_classwise(const Eigen::MatrixXd& source_features,
                              const Eigen::MatrixXd& target_features,
                              const SoftLabelMatrix& source_labels,
                              const SoftLabelMatrix& target_labels);

struct ScatterPair {
  Eigen::MatrixXd between;  // N_b
  Eigen::MatrixXd within;   // N_w
};

/// Soft-weighted LDA scatters, both scaled by 1 / total mass. `class_weights`
/// is C x n (shared classes only). Empty classes contribute nothing.
ScatterPair scatter_matrices(const Eigen::MatrixXd& features, const Eigen::MatrixXd& class_weights);

/// V = [(beta+gamma) I, -beta I; -beta I, (beta+gamma) I], so that
/// tr(P^T V P) = beta |A_s - A_t|_F^2 + gamma (|A_s|_F^2 + |A_t|_F^2).
Eigen::MatrixXd build_subspace_regularizer(double beta, double gamma, Eigen::Index dimension);

struct LossMatrices {
  Eigen::MatrixXd mmd_marginal;      // M1, 2m x 2m
  Eigen::MatrixXd mmd_conditional;   // M2, 2m x 2m
  Eigen::MatrixXd subspace;          // V, 2m x 2m
  ScatterPair source;                // N_sb, N_sw
  ScatterPair target;                // N_tb, N_tw

  Eigen::Index dimension() const { return source.between.rows(); }
};

struct ProjectionPair {
  Eigen::MatrixXd source;    // A_s, m x k
  Eigen::MatrixXd target;    // A_t, m x k
  Eigen::MatrixXd joint;     // P = [A_s; A_t]
  Eigen::VectorXd eigenvalues;  // descending
  double relative_residual = 0.0;
};

struct SolverOptions {
  double lambda = 0.01;
  double delta = 1.0;
  int dimensions = 20;  // k
  bool tie_projections = false;
};

/// Top-k generalized eigenvectors of
///   blockdiag(N_sb, N_tb) P = (lambda blockdiag(N_sw, N_tw) + delta (M1 + M2) + V + eps I) P Phi
/// with eps = 1e-6 tr(D) / dim(D). Eigenvectors satisfy P^T D P = I. With
/// tied projections the four blocks of each matrix are summed and an m x m
/// problem is solved, giving A_s = A_t.
ProjectionPair solve_projection(const LossMatrices& losses, const SolverOptions& options);

/// Z = A^T X (k x n), optionally with unit-norm columns.
Eigen::MatrixXd embed(const Eigen::MatrixXd& features, const Eigen::MatrixXd& projection,
                      bool normalize_columns = true);

struct AdaptationConfig {
  Scenario scenario = Scenario::kClosedSet;
  int dimensions = 20;        // k
  int neighbors = 20;         // p
  int iterations = 5;         // T
  int keep_count = 3;         // N; 0 selects all C+1 entries
  double threshold = 0.8;     // tau
  double alpha_set = 0.98;
  double gamma = 0.05;
  double beta = 0.5;
  double lambda = 0.01;
  double delta = 0.1;
  std::optional<double> sigma;  // fixed graph bandwidth; auto when empty
  std::optional<bool> tie_projections;  // default: off closed-set, on open-set
  bool normalize_embeddings = true;
  int class_count = 0;        // 0: infer as the largest source label
  std::uint64_t seed = 0;
  PropagationOptions propagation;

  bool ties_projections() const {
    return tie_projections.value_or(scenario == Scenario::kOpenSet);
  }
  void validate() const;
};

struct IterationSnapshot {
  int iteration = 0;           // 0 = before any projection is learned
  SoftLabelMatrix target_labels;  // filtered, (C+1) x n_t
  double sigma = 0.0;
  Eigen::VectorXd eigenvalues;    // empty at iteration 0
};

struct AdaptationResult {
  ProjectionPair projections;
  SoftLabelMatrix target_labels;  // final filtered F_t*
  std::vector<IterationSnapshot> iterations;  // T + 1 entries
  int class_count = 0;
};

/// Called with (iteration, graph) after each graph build.
using GraphObserver = std::function<void(int, const SimilarityGraph&)>;

/// Builds the graph on the raw features, propagates and filters, then runs
/// exactly T rounds of {losses, projection, embedding, graph, propagation,
/// filtering}. alpha_set == 1 in the open-set scenario takes the closed-set
/// initialization (no novel anchoring). Errors carry the iteration index.
AdaptationResult run_ifcda(const DomainDataset& source, const DomainDataset& target,
                           const AdaptationConfig& config, const GraphObserver& on_graph = {});

/// Propagate + normalize + filter on one graph; the label step of the loop.
SoftLabelMatrix predict_target_labels(const SimilarityGraph& graph,
                                      const SoftLabelMatrix& source_labels,
                                      Eigen::Index target_count, const AdaptationConfig& config,
                                      int class_count);

}  // namespace ifcda
