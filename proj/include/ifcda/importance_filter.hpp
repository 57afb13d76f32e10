#pragma once

#include "ifcda/dataset.hpp"

namespace ifcda {

struct FilterConfig {
  double threshold = 0.8;  // confident iff max probability > threshold
  int keep_count = 3;      // N: entries kept for ambiguous labels

  /// 0 < threshold < 1 and 1 <= keep_count <= `label_length`.
  void validate(Eigen::Index label_length) const;
};

/// Confident columns (max > threshold) become one-hot at their argmax;
/// ambiguous ones keep their N largest entries, renormalized. Ties go to the
/// lower index. Throws kPrecondition on an unnormalized column.
Eigen::VectorXd filter_label(const Eigen::VectorXd& probs, const FilterConfig& config);

/// Filters every column from `source_count` onward; source columns pass through.
SoftLabelMatrix filter_target_labels(const SoftLabelMatrix& labels, Eigen::Index source_count,
                                     const FilterConfig& config);

/// Row 0: total shared-class mass, row 1: novel-class mass.
struct CollapsedLabelMatrix {
  Eigen::MatrixXd probs;  // 2 x n

  Eigen::VectorXd shared() const { return probs.row(0).transpose(); }
  Eigen::VectorXd novel() const { return probs.row(1).transpose(); }
};

CollapsedLabelMatrix collapse_shared_novel(const SoftLabelMatrix& labels);

}  // namespace ifcda
