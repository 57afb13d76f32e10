#pragma once

// Anchored graph label propagation over the joint source + target graph.
//
// Each node l carries an anchoring coefficient alpha_l in [0, 1]. alpha = 0
// pins the label to its initial value; alpha = 1 makes it fully determined by
// its neighbours. The propagated labels F* satisfy, for every free node,
//
//   h_l f*_l - alpha_l * sum_j W_lj f*_j = (1 - alpha_l) h_l f_l
//
// i.e. F* = (I - I_alpha H^-1 W)^-1 (I - I_alpha) F.

#include "ifcda/dataset.hpp"
#include "ifcda/graph.hpp"

namespace ifcda {

enum class Scenario { kClosedSet, kOpenSet };

struct AnchorVector {
  Eigen::VectorXd alpha;  // length n_st; 0 on source nodes
};

struct InitialLabels {
  SoftLabelMatrix labels;  // [F_s, F_t], (C+1) x n_st
  AnchorVector anchors;
};

/// Closed set: F_t = 0, alpha_t = 1. Open set: F_t = e_{C+1}, alpha_t =
/// `alpha_set`, which must lie strictly inside (0, 1).
InitialLabels init_labels(const SoftLabelMatrix& source_labels, Eigen::Index target_count,
                          Scenario scenario, double alpha_set = 0.98);

struct PropagationOptions {
  /// Above this many free nodes the stationary iteration replaces the dense
  /// factorization.
  Eigen::Index dense_limit = 3000;
  double iteration_tolerance = 1e-10;
  int max_iterations = 100000;
  double max_condition = 1e12;
};

/// Throws kPropagation when some free node has no path to an anchored node.
SoftLabelMatrix propagate(const SimilarityGraph& graph, const SoftLabelMatrix& labels,
                          const AnchorVector& anchors, const PropagationOptions& options = {});

/// Divides each column by its sum; a zero-sum column throws kNormalization.
SoftLabelMatrix column_normalize(const SoftLabelMatrix& labels);

}  // namespace ifcda
