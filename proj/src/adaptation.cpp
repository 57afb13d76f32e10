#include "ifcda/adaptation.hpp"

#include "ifcda/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <optional>

namespace ifcda {

namespace {

void require_same_dimension(const Eigen::MatrixXd& xs, const Eigen::MatrixXd& xt) {
  if (xs.rows() != xt.rows()) {
    throw Error(ErrorKind::kData, "source and target feature dimensions differ (" +
                                      std::to_string(xs.rows()) + " vs " +
                                      std::to_string(xt.rows()) + ")");
  }
}

/// u u^T with u = [X_s f_s / sum(f_s); -X_t f_t / sum(f_t)]. This is
/// X Q X^T for Q = w w^T, the rank-one weighted mean-difference kernel.
std::optional<Eigen::MatrixXd> mean_difference_matrix(const Eigen::MatrixXd& xs,
                                                      const Eigen::MatrixXd& xt,
                                                      const Eigen::VectorXd& fs,
                                                      const Eigen::VectorXd& ft) {
  const double ms = fs.sum();
  const double mt = ft.sum();
  if (!(ms > 0.0) || !(mt > 0.0)) return std::nullopt;
  const Eigen::Index m = xs.rows();
  Eigen::VectorXd u(2 * m);
  u.head(m) = xs * (fs / ms);
  u.tail(m) = -(xt * (ft / mt));
  return Eigen::MatrixXd(u * u.transpose());
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& a) { return 0.5 * (a + a.transpose()); }

Eigen::MatrixXd block_diagonal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

/// M_ss + M_st + M_ts + M_tt: the form seen by a tied projection A_s = A_t.
Eigen::MatrixXd sum_blocks(const Eigen::MatrixXd& joint) {
  const Eigen::Index m = joint.rows() / 2;
  return joint.topLeftCorner(m, m) + joint.topRightCorner(m, m) +
         joint.bottomLeftCorner(m, m) + joint.bottomRightCorner(m, m);
}

}  // namespace

Eigen::MatrixXd mmd_shared(const Eigen::MatrixXd& source_features,
                           const Eigen::MatrixXd& target_features,
                           const CollapsedLabelMatrix& source_labels,
                           const CollapsedLabelMatrix& target_labels) {
  require_same_dimension(source_features, target_features);
  if (source_labels.probs.cols() != source_features.cols() ||
      target_labels.probs.cols() != target_features.cols()) {
    throw Error(ErrorKind::kData, "label and feature sample counts differ");
  }
  auto m1 = mean_difference_matrix(source_features, target_features, source_labels.shared(),
                                   target_labels.shared());
  if (!m1) throw Error(ErrorKind::kDegenerate, "zero shared-class mass in one domain");
  return symmetrized(*m1);
}

Eigen::MatrixXd mmd_classwise(const Eigen::MatrixXd& source_features,
                              const Eigen::MatrixXd& target_features,
                              const SoftLabelMatrix& source_labels,
                              const SoftLabelMatrix& target_labels) {
  require_same_dimension(source_features, target_features);
  if (source_labels.size() != source_features.cols() ||
      target_labels.size() != target_features.cols() ||
      source_labels.class_count != target_labels.class_count) {
    throw Error(ErrorKind::kData, "label and feature shapes disagree");
  }
  const Eigen::Index m = source_features.rows();
  Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  int used = 0;
  for (int c = 0; c < source_labels.class_count; ++c) {
    auto block = mean_difference_matrix(source_features, target_features,
                                        source_labels.probs.row(c).transpose(),
                                        target_labels.probs.row(c).transpose());
    if (!block) continue;
    m2 += *block;
    ++used;
  }
  if (used == 0) throw Error(ErrorKind::kDegenerate, "class-wise MMD: every class has zero mass");
  return symmetrized(m2);
}

ScatterPair scatter_matrices(const Eigen::MatrixXd& features, const Eigen::MatrixXd& class_weights) {
  if (class_weights.cols() != features.cols()) {
    throw Error(ErrorKind::kData, "class weights and features disagree on the sample count");
  }
  const Eigen::VectorXd class_mass = class_weights.rowwise().sum();  // n^c
  const double total = class_mass.sum();                            // n
  if (!(total > 0.0)) throw Error(ErrorKind::kDegenerate, "scatter: all label mass is zero");

  Eigen::VectorXd inv_mass = Eigen::VectorXd::Zero(class_mass.size());  // diag(K)
  for (Eigen::Index c = 0; c < class_mass.size(); ++c) {
    if (class_mass(c) > 0.0) inv_mass(c) = 1.0 / class_mass(c);
  }
  const Eigen::VectorXd sample_mass = class_weights.colwise().sum().transpose();  // diag(B)

  const Eigen::MatrixXd class_sums = features * class_weights.transpose();  // X F^T
  const Eigen::MatrixXd between_classes =
      class_sums * inv_mass.asDiagonal() * class_sums.transpose();  // X F^T K F X^T
  const Eigen::VectorXd grand_sum = features * sample_mass;        // X B 1
  const Eigen::MatrixXd weighted_gram =
      features * sample_mass.asDiagonal() * features.transpose();  // X B X^T

  ScatterPair out;
  out.between = symmetrized(
      (between_classes - grand_sum * grand_sum.transpose() / total) / total);
  out.within = symmetrized((weighted_gram - between_classes) / total);
  return out;
}

Eigen::MatrixXd build_subspace_regularizer(double beta, double gamma, Eigen::Index dimension) {
  if (beta < 0.0 || gamma < 0.0) {
    throw Error(ErrorKind::kParameter, "beta and gamma must be nonnegative");
  }
  const Eigen::Index m = dimension;
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  v.topLeftCorner(m, m).diagonal().setConstant(beta + gamma);
  v.bottomRightCorner(m, m).diagonal().setConstant(beta + gamma);
  v.topRightCorner(m, m).diagonal().setConstant(-beta);
  v.bottomLeftCorner(m, m).diagonal().setConstant(-beta);
  return v;
}

ProjectionPair solve_projection(const LossMatrices& losses, const SolverOptions& options) {
  const Eigen::Index m = losses.dimension();
  const int k = options.dimensions;
  if (k < 1 || k > m) {
    throw Error(ErrorKind::kParameter, "projection dimension k = " + std::to_string(k) +
                                           " outside 1.." + std::to_string(m));
  }
  if (options.lambda < 0.0 || options.delta < 0.0) {
    throw Error(ErrorKind::kParameter, "lambda and delta must be nonnegative");
  }

  Eigen::MatrixXd numerator;
  Eigen::MatrixXd denominator;
  const bool use_mmd = options.delta != 0.0;
  if (options.tie_projections) {
    numerator = losses.source.between + losses.target.between;
    denominator = options.lambda * (losses.source.within + losses.target.within) +
                  sum_blocks(losses.subspace);
    if (use_mmd) {
      denominator += options.delta * sum_blocks(losses.mmd_marginal + losses.mmd_conditional);
    }
  } else {
    numerator = block_diagonal(losses.source.between, losses.target.between);
    denominator = options.lambda * block_diagonal(losses.source.within, losses.target.within) +
                  losses.subspace;
    if (use_mmd) denominator += options.delta * (losses.mmd_marginal + losses.mmd_conditional);
  }
  numerator = symmetrized(numerator);
  denominator = symmetrized(denominator);
  if (!numerator.allFinite() || !denominator.allFinite()) {
    throw Error(ErrorKind::kSolver, "loss matrices contain non-finite entries");
  }

  const Eigen::Index dim = denominator.rows();
  const double trace = denominator.trace();
  const double eps = trace > 0.0 ? 1e-6 * trace / static_cast<double>(dim) : 1e-6;
  denominator.diagonal().array() += eps;

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      numerator, denominator, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::kSolver, "generalized eigensolver failed (denominator not definite?)");
  }

  // Eigen returns ascending eigenvalues; keep the k largest, descending.
  ProjectionPair out;
  out.eigenvalues = solver.eigenvalues().tail(k).reverse();
  Eigen::MatrixXd vectors = solver.eigenvectors().rightCols(k).rowwise().reverse();

  const Eigen::MatrixXd lhs = numerator * vectors;
  const Eigen::MatrixXd rhs = denominator * vectors * out.eigenvalues.asDiagonal();
  const double scale = lhs.norm();
  out.relative_residual = scale > 0.0 ? (lhs - rhs).norm() / scale : (lhs - rhs).norm();
  if (out.relative_residual > 1e-6) {
    throw Error(ErrorKind::kSolver,
                "eigenpair residual " + std::to_string(out.relative_residual) + " exceeds 1e-6");
  }

  if (options.tie_projections) {
    out.source = vectors;
    out.target = vectors;
    out.joint.resize(2 * m, k);
    out.joint << vectors, vectors;
  } else {
    out.joint = std::move(vectors);
    out.source = out.joint.topRows(m);
    out.target = out.joint.bottomRows(m);
  }
  return out;
}

Eigen::MatrixXd embed(const Eigen::MatrixXd& features, const Eigen::MatrixXd& projection,
                      bool normalize_columns) {
  if (features.rows() != projection.rows()) {
    throw Error(ErrorKind::kData, "projection rows must match the feature dimension");
  }
  Eigen::MatrixXd z = projection.transpose() * features;
  if (normalize_columns) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      const double norm = z.col(j).norm();
      if (norm > 0.0) z.col(j) /= norm;
    }
  }
  return z;
}

void AdaptationConfig::validate() const {
  if (dimensions < 1) throw Error(ErrorKind::kParameter, "k must be >= 1");
  if (iterations < 1) throw Error(ErrorKind::kParameter, "T must be >= 1");
  if (neighbors < 1) throw Error(ErrorKind::kParameter, "p must be >= 1");
  if (keep_count < 0) throw Error(ErrorKind::kParameter, "N must be >= 1 (or 0 for all)");
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorKind::kParameter, "tau must lie in (0, 1)");
  }
  if (scenario == Scenario::kOpenSet && !(alpha_set > 0.0 && alpha_set <= 1.0)) {
    throw Error(ErrorKind::kParameter, "alpha_set must lie in (0, 1]");
  }
  if (gamma < 0.0 || beta < 0.0 || lambda < 0.0 || delta < 0.0) {
    throw Error(ErrorKind::kParameter, "regularizers must be nonnegative");
  }
  if (sigma && !(*sigma > 0.0)) throw Error(ErrorKind::kParameter, "sigma must be positive");
  if (class_count < 0) throw Error(ErrorKind::kParameter, "class count must be >= 0");
}

SoftLabelMatrix predict_target_labels(const SimilarityGraph& graph,
                                      const SoftLabelMatrix& source_labels,
                                      Eigen::Index target_count, const AdaptationConfig& config,
                                      int class_count) {
  // alpha_set = 1 erases the novel initialization entirely, which is exactly
  // the closed-set propagation.
  const bool open_set = config.scenario == Scenario::kOpenSet && config.alpha_set < 1.0;
  const InitialLabels init =
      init_labels(source_labels, target_count,
                  open_set ? Scenario::kOpenSet : Scenario::kClosedSet, config.alpha_set);
  const SoftLabelMatrix propagated =
      column_normalize(propagate(graph, init.labels, init.anchors, config.propagation));
  const FilterConfig filter{config.threshold,
                            config.keep_count == 0 ? class_count + 1 : config.keep_count};
  const SoftLabelMatrix filtered =
      filter_target_labels(propagated, source_labels.size(), filter);

  SoftLabelMatrix target;
  target.class_count = class_count;
  target.normalized = true;
  target.probs = filtered.probs.rightCols(target_count);
  return target;
}

AdaptationResult run_ifcda(const DomainDataset& source, const DomainDataset& target,
                           const AdaptationConfig& config, const GraphObserver& on_graph) {
  config.validate();
  if (!source.labels) throw Error(ErrorKind::kData, "source domain requires labels");
  require_same_dimension(source.features, target.features);
  const Eigen::Index m = source.dimension();
  const Eigen::Index ns = source.size();
  const Eigen::Index nt = target.size();
  if (ns < 1 || nt < 1) throw Error(ErrorKind::kData, "both domains need samples");

  const int C = config.class_count > 0
                    ? config.class_count
                    : *std::max_element(source.labels->begin(), source.labels->end());
  DomainDataset checked_source = source;
  checked_source.role = Role::kSource;
  checked_source.validate(C);
  if (!target.features.allFinite()) {
    throw Error(ErrorKind::kData, "target features contain non-finite values");
  }
  if (config.keep_count > C + 1) {
    throw Error(ErrorKind::kParameter, "N = " + std::to_string(config.keep_count) +
                                           " exceeds C+1 = " + std::to_string(C + 1));
  }
  if (config.dimensions > m) {
    throw Error(ErrorKind::kParameter, "k = " + std::to_string(config.dimensions) +
                                           " exceeds the feature dimension " + std::to_string(m));
  }

  const SoftLabelMatrix source_labels = to_one_hot(*source.labels, C);
  const SigmaMode sigma_mode = config.sigma ? SigmaMode::value(*config.sigma) : SigmaMode::automatic();
  const SolverOptions solver_options{config.lambda, config.delta, config.dimensions,
                                     config.ties_projections()};
  const Eigen::MatrixXd subspace = build_subspace_regularizer(config.beta, config.gamma, m);
  const ScatterPair source_scatter =
      scatter_matrices(source.features, source_labels.probs.topRows(C));
  const CollapsedLabelMatrix source_collapsed = collapse_shared_novel(source_labels);

  auto label_step = [&](const Eigen::MatrixXd& zs, const Eigen::MatrixXd& zt, int iteration,
                        double& sigma_out) {
    Eigen::MatrixXd joint(zs.rows(), ns + nt);
    joint << zs, zt;
    const SimilarityGraph graph = build_graph(joint, config.neighbors, sigma_mode);
    sigma_out = graph.sigma;
    if (on_graph) on_graph(iteration, graph);
    return predict_target_labels(graph, source_labels, nt, config, C);
  };

  AdaptationResult result;
  result.class_count = C;
  try {
    IterationSnapshot initial;
    initial.iteration = 0;
    initial.target_labels = label_step(source.features, target.features, 0, initial.sigma);
    result.iterations.push_back(std::move(initial));
  } catch (const Error& e) {
    throw e.with_context("iteration 0");
  }

  for (int iter = 1; iter <= config.iterations; ++iter) {
    try {
      const SoftLabelMatrix& current = result.iterations.back().target_labels;
      LossMatrices losses;
      if (config.delta != 0.0) {
        losses.mmd_marginal = mmd_shared(source.features, target.features, source_collapsed,
                                         collapse_shared_novel(current));
        losses.mmd_conditional =
            mmd_classwise(source.features, target.features, source_labels, current);
      } else {
        losses.mmd_marginal = Eigen::MatrixXd::Zero(2 * m, 2 * m);
        losses.mmd_conditional = Eigen::MatrixXd::Zero(2 * m, 2 * m);
      }
      losses.subspace = subspace;
      losses.source = source_scatter;
      losses.target = scatter_matrices(target.features, current.probs.topRows(C));

      ProjectionPair projections = solve_projection(losses, solver_options);
      const Eigen::MatrixXd zs =
          embed(source.features, projections.source, config.normalize_embeddings);
      const Eigen::MatrixXd zt =
          embed(target.features, projections.target, config.normalize_embeddings);

      IterationSnapshot snapshot;
      snapshot.iteration = iter;
      snapshot.eigenvalues = projections.eigenvalues;
      snapshot.target_labels = label_step(zs, zt, iter, snapshot.sigma);
      result.iterations.push_back(std::move(snapshot));
      result.projections = std::move(projections);
    } catch (const Error& e) {
      throw e.with_context("iteration " + std::to_string(iter));
    }
  }
  result.target_labels = result.iterations.back().target_labels;
  return result;
}

}  // namespace ifcda
