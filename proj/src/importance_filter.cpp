#include "ifcda/importance_filter.hpp"

#include "ifcda/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace ifcda {

namespace {
constexpr double kSumTolerance = 1e-9;
}

void FilterConfig::validate(Eigen::Index label_length) const {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorKind::kParameter, "filter threshold must lie in (0, 1)");
  }
  if (keep_count < 1 || keep_count > label_length) {
    throw Error(ErrorKind::kParameter, "keep count N = " + std::to_string(keep_count) +
                                           " outside 1.." + std::to_string(label_length));
  }
}

Eigen::VectorXd filter_label(const Eigen::VectorXd& probs, const FilterConfig& config) {
  const Eigen::Index n = probs.size();
  config.validate(n);
  if (!probs.allFinite() || (probs.array() < 0.0).any() ||
      std::abs(probs.sum() - 1.0) > kSumTolerance) {
    throw Error(ErrorKind::kPrecondition, "filter_label expects a probability vector");
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto keep = static_cast<std::ptrdiff_t>(config.keep_count);
  std::partial_sort(order.begin(), order.begin() + keep, order.end(),
                    [&](Eigen::Index a, Eigen::Index b) {
                      return probs(a) > probs(b) || (probs(a) == probs(b) && a < b);
                    });

  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  if (probs(order.front()) > config.threshold) {
    out(order.front()) = 1.0;
    return out;
  }
  double kept = 0.0;
  for (std::ptrdiff_t q = 0; q < keep; ++q) kept += probs(order[static_cast<std::size_t>(q)]);
  for (std::ptrdiff_t q = 0; q < keep; ++q) {
    const Eigen::Index idx = order[static_cast<std::size_t>(q)];
    out(idx) = probs(idx) / kept;
  }
  return out;
}

SoftLabelMatrix filter_target_labels(const SoftLabelMatrix& labels, Eigen::Index source_count,
                                     const FilterConfig& config) {
  if (!labels.normalized) {
    throw Error(ErrorKind::kPrecondition, "filter_target_labels expects normalized labels");
  }
  if (source_count < 0 || source_count > labels.size()) {
    throw Error(ErrorKind::kData, "source count exceeds the label matrix width");
  }
  SoftLabelMatrix out = labels;
  for (Eigen::Index j = source_count; j < labels.size(); ++j) {
    out.probs.col(j) = filter_label(labels.probs.col(j), config);
  }
  return out;
}

CollapsedLabelMatrix collapse_shared_novel(const SoftLabelMatrix& labels) {
  const int C = labels.class_count;
  if (labels.probs.rows() != C + 1) {
    throw Error(ErrorKind::kPrecondition, "collapse expects C+1 label rows");
  }
  CollapsedLabelMatrix out;
  out.probs.resize(2, labels.size());
  out.probs.row(0) = labels.probs.topRows(C).colwise().sum();
  out.probs.row(1) = labels.probs.row(C);
  return out;
}

}  // namespace ifcda
