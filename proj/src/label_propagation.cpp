#include "ifcda/label_propagation.hpp"

#include "ifcda/error.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <deque>
#include <sstream>

namespace ifcda {

namespace {

constexpr Eigen::Index kNotFree = -1;

/// Free nodes (alpha > 0) with no path to a pinned node or to a node with
/// alpha < 1 make the system singular. Returns a description of the first
/// such component, or an empty string.
std::string find_unanchored_component(const Eigen::SparseMatrix<double>& weights,
                                      const Eigen::VectorXd& alpha) {
  const Eigen::Index n = alpha.size();
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (Eigen::Index start = 0; start < n; ++start) {
    if (alpha(start) == 0.0 || seen[static_cast<std::size_t>(start)]) continue;
    std::vector<Eigen::Index> members;
    bool anchored = false;
    std::deque<Eigen::Index> queue{start};
    seen[static_cast<std::size_t>(start)] = 1;
    while (!queue.empty()) {
      const Eigen::Index node = queue.front();
      queue.pop_front();
      members.push_back(node);
      if (alpha(node) < 1.0) anchored = true;
      // W is symmetric, so the column holds the node's neighbours.
      for (Eigen::SparseMatrix<double>::InnerIterator it(weights, node); it; ++it) {
        if (it.value() <= 0.0) continue;
        const Eigen::Index next = it.row();
        if (alpha(next) == 0.0) {
          anchored = true;
        } else if (!seen[static_cast<std::size_t>(next)]) {
          seen[static_cast<std::size_t>(next)] = 1;
          queue.push_back(next);
        }
      }
    }
    if (!anchored) {
      std::ostringstream msg;
      msg << "component of " << members.size() << " node(s) {";
      for (std::size_t q = 0; q < members.size() && q < 8; ++q) msg << (q ? ", " : "") << members[q];
      if (members.size() > 8) msg << ", ...";
      msg << "} has no path to a labelled node";
      return msg.str();
    }
  }
  return {};
}

Eigen::MatrixXd solve_dense(const SimilarityGraph& graph, const Eigen::MatrixXd& initial,
                            const Eigen::VectorXd& alpha, const std::vector<Eigen::Index>& free,
                            const std::vector<Eigen::Index>& position,
                            const PropagationOptions& options) {
  const Eigen::Index nf = static_cast<Eigen::Index>(free.size());
  const Eigen::Index rows = initial.rows();

  // Row l of the stationarity condition divided by alpha_l gives the
  // symmetric positive definite system
  //   (h_l / alpha_l) f*_l - sum_{j free} W_lj f*_j
  //       = sum_{j pinned} W_lj f_j + ((1 - alpha_l) / alpha_l) h_l f_l.
  // With d_l = h_l / alpha_l it is solved as (I - D^-1/2 W_ff D^-1/2) y =
  // D^-1/2 rhs, f* = D^-1/2 y; the scaled matrix stays well conditioned when
  // degrees span many orders of magnitude.
  Eigen::VectorXd inv_sqrt_d(nf);
  for (Eigen::Index a = 0; a < nf; ++a) {
    const Eigen::Index l = free[static_cast<std::size_t>(a)];
    inv_sqrt_d(a) = 1.0 / std::sqrt(graph.degrees(l) / alpha(l));
  }
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(nf, nf);
  Eigen::MatrixXd rhs(nf, rows);
  for (Eigen::Index a = 0; a < nf; ++a) {
    const Eigen::Index l = free[static_cast<std::size_t>(a)];
    const double h = graph.degrees(l);
    rhs.row(a) = ((1.0 - alpha(l)) / alpha(l) * h) * initial.col(l).transpose();
    for (Eigen::SparseMatrix<double>::InnerIterator it(graph.weights, l); it; ++it) {
      const Eigen::Index j = it.row();
      const Eigen::Index b = position[static_cast<std::size_t>(j)];
      if (b == kNotFree) {
        rhs.row(a) += it.value() * initial.col(j).transpose();
      } else {
        system(a, b) -= it.value() * inv_sqrt_d(a) * inv_sqrt_d(b);
      }
    }
    rhs.row(a) *= inv_sqrt_d(a);
  }

  Eigen::LLT<Eigen::MatrixXd> factor(system);
  if (factor.info() != Eigen::Success || factor.rcond() < 1.0 / options.max_condition) {
    throw Error(ErrorKind::kPropagation,
                "propagation system is numerically singular (reciprocal condition " +
                    std::to_string(factor.info() == Eigen::Success ? factor.rcond() : 0.0) + ")");
  }
  return inv_sqrt_d.asDiagonal() * factor.solve(rhs);  // nf x rows
}

Eigen::MatrixXd solve_iterative(const SimilarityGraph& graph, const Eigen::MatrixXd& initial,
                                const Eigen::VectorXd& alpha, const PropagationOptions& options) {
  // F <- I_alpha H^-1 W F + (I - I_alpha) F0, in row-sample layout.
  const Eigen::MatrixXd f0 = initial.transpose();
  const Eigen::VectorXd scale = alpha.cwiseQuotient(graph.degrees);
  const Eigen::MatrixXd anchor = (1.0 - alpha.array()).matrix().asDiagonal() * f0;
  Eigen::MatrixXd current = f0;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    Eigen::MatrixXd next = scale.asDiagonal() * (graph.weights * current) + anchor;
    const double change = (next - current).cwiseAbs().maxCoeff();
    const double size = std::max(next.cwiseAbs().maxCoeff(), 1e-300);
    current = std::move(next);
    if (change <= options.iteration_tolerance * size) return current;
  }
  throw Error(ErrorKind::kPropagation, "stationary iteration did not converge in " +
                                           std::to_string(options.max_iterations) + " steps");
}

}  // namespace

InitialLabels init_labels(const SoftLabelMatrix& source_labels, Eigen::Index target_count,
                          Scenario scenario, double alpha_set) {
  const int C = source_labels.class_count;
  if (source_labels.probs.rows() != C + 1) {
    throw Error(ErrorKind::kPrecondition, "source labels must have C+1 rows");
  }
  if (source_labels.probs.cols() > 0 && source_labels.probs.row(C).cwiseAbs().maxCoeff() != 0.0) {
    throw Error(ErrorKind::kPrecondition, "source labels must not use the novel class");
  }
  if (target_count < 1) throw Error(ErrorKind::kParameter, "target domain is empty");
  if (scenario == Scenario::kOpenSet && !(alpha_set > 0.0 && alpha_set < 1.0)) {
    throw Error(ErrorKind::kParameter, "alpha_set must lie in (0, 1) for open-set propagation");
  }

  const Eigen::Index ns = source_labels.size();
  InitialLabels init;
  init.labels.class_count = C;
  init.labels.probs = Eigen::MatrixXd::Zero(C + 1, ns + target_count);
  init.labels.probs.leftCols(ns) = source_labels.probs;
  init.anchors.alpha = Eigen::VectorXd::Zero(ns + target_count);
  if (scenario == Scenario::kClosedSet) {
    init.anchors.alpha.tail(target_count).setOnes();
  } else {
    init.labels.probs.row(C).tail(target_count).setOnes();
    init.anchors.alpha.tail(target_count).setConstant(alpha_set);
  }
  // Every column is a distribution in the open-set case only.
  init.labels.normalized = scenario == Scenario::kOpenSet && source_labels.normalized;
  return init;
}

SoftLabelMatrix propagate(const SimilarityGraph& graph, const SoftLabelMatrix& labels,
                          const AnchorVector& anchors, const PropagationOptions& options) {
  const Eigen::Index n = graph.size();
  if (labels.size() != n || anchors.alpha.size() != n) {
    throw Error(ErrorKind::kData, "graph, labels and anchors disagree on the node count");
  }
  if ((anchors.alpha.array() < 0.0).any() || (anchors.alpha.array() > 1.0).any()) {
    throw Error(ErrorKind::kParameter, "anchoring coefficients must lie in [0, 1]");
  }

  std::vector<Eigen::Index> free;
  std::vector<Eigen::Index> position(static_cast<std::size_t>(n), kNotFree);
  for (Eigen::Index l = 0; l < n; ++l) {
    if (anchors.alpha(l) > 0.0) {
      position[static_cast<std::size_t>(l)] = static_cast<Eigen::Index>(free.size());
      free.push_back(l);
    }
  }

  SoftLabelMatrix result = labels;
  result.normalized = false;
  if (free.empty()) {
    result.normalized = labels.normalized;
    return result;
  }
  if (const std::string problem = find_unanchored_component(graph.weights, anchors.alpha);
      !problem.empty()) {
    throw Error(ErrorKind::kPropagation, problem);
  }

  if (static_cast<Eigen::Index>(free.size()) <= options.dense_limit) {
    const Eigen::MatrixXd solved =
        solve_dense(graph, labels.probs, anchors.alpha, free, position, options);
    for (std::size_t a = 0; a < free.size(); ++a) {
      result.probs.col(free[a]) = solved.row(static_cast<Eigen::Index>(a)).transpose();
    }
  } else {
    const Eigen::MatrixXd solved = solve_iterative(graph, labels.probs, anchors.alpha, options);
    for (Eigen::Index l : free) result.probs.col(l) = solved.row(l).transpose();
  }
  // The M-matrix inverse is entrywise nonnegative; clip round-off.
  result.probs = result.probs.cwiseMax(0.0);
  return result;
}

SoftLabelMatrix column_normalize(const SoftLabelMatrix& labels) {
  SoftLabelMatrix result = labels;
  for (Eigen::Index j = 0; j < result.probs.cols(); ++j) {
    const double sum = result.probs.col(j).sum();
    if (!(sum > 0.0) || !std::isfinite(sum)) {
      throw Error(ErrorKind::kNormalization,
                  "column " + std::to_string(j) + " has zero mass (unreachable node?)");
    }
    result.probs.col(j) /= sum;
  }
  result.normalized = true;
  return result;
}

}  // namespace ifcda
