#pragma once

// Data model for the two domains plus file I/O and synthetic generators.
//
// Convention: features are stored m x n with one sample per COLUMN. CSV files
// on disk have one sample per ROW and are transposed on load/save. Digital
// labels are 1-based; for C shared classes the novel (unknown) class is C + 1.

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

namespace ifcda {

enum class Role { kSource, kTarget };

using Labels = std::vector<int>;

struct DomainDataset {
  Eigen::MatrixXd features;  // m x n, column j = sample j
  std::optional<Labels> labels;
  Role role = Role::kSource;

  Eigen::Index dimension() const { return features.rows(); }
  Eigen::Index size() const { return features.cols(); }

  /// Throws kData on non-finite entries or a label/sample count mismatch and
  /// kLabel on labels outside 1..C+1 (1..C for a source). `class_count` = 0
  /// only checks the lower bound.
  void validate(int class_count = 0) const;
};

/// (C+1) x n matrix of class scores; row C (0-based) is the novel class.
struct SoftLabelMatrix {
  Eigen::MatrixXd probs;
  int class_count = 0;
  bool normalized = false;

  Eigen::Index size() const { return probs.cols(); }

  /// Checks nonnegativity always and column sums == 1 (within `tol`) when
  /// `normalized` is set. Throws kPrecondition.
  void validate(double tol = 1e-9) const;
};

enum class FileFormat { kCsv, kBinary };

struct LoadOptions {
  FileFormat format = FileFormat::kCsv;
  bool csv_header = false;
  bool has_labels = true;  // CSV: last column is the digital label
  bool standardize = true; // per-dimension z-score after load
  Role role = Role::kSource;
  int class_count = 0;     // 0: skip the upper label bound check
};

/// CSV: rows are samples, optional trailing integer label column.
/// Binary: u64 m, u64 n, then m*n little-endian f64 column-major, optionally
/// followed by n little-endian i64 labels.
DomainDataset load_features(const std::filesystem::path& path,
                            const LoadOptions& options = {});

void save_features(const DomainDataset& dataset,
                   const std::filesystem::path& path,
                   FileFormat format = FileFormat::kCsv,
                   bool csv_header = false);

/// Per-row z-score. Constant rows are centered only.
Eigen::MatrixXd standardize_rows(const Eigen::MatrixXd& features);

SoftLabelMatrix to_one_hot(const Labels& labels, int class_count);

struct SyntheticSpec {
  int class_count = 3;
  int novel_class_count = 0;
  int source_samples_per_class = 60;
  int target_samples_per_class = 60;
  int dimension = 2;
  double mean_shift = 0.0;      // magnitude of the target translation
  double rotation_deg = 0.0;    // rotation of the target in coordinates 0,1
  double noise_scale = 1.0;     // isotropic standard deviation
  double cluster_radius = 4.0;  // class means lie on a circle of this radius
  double arc_deg = 360.0;       // angular span shared by the C means (spacing arc / C)
  std::uint64_t seed = 0;

  void validate() const;
};

/// Source: C isotropic Gaussian clusters. Target: the same clusters rotated
/// and shifted, plus `novel_class_count` extra clusters (all labelled C+1).
/// Both datasets carry labels; the target's are ground truth for evaluation.
std::pair<DomainDataset, DomainDataset> make_synthetic(const SyntheticSpec& spec);

}  // namespace ifcda
