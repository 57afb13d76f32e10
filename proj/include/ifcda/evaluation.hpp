#pragma once

#include "ifcda/adaptation.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ifcda {

/// Argmax per column, 1-based. Closed set ignores the novel row (C+1).
/// Ties resolve to the lower class index.
Labels predict_hard(const SoftLabelMatrix& labels, Scenario scenario);

struct IterationMetrics {
  int iteration = 0;
  double accuracy = 0.0;
  double os = 0.0;
  double os_star = 0.0;
  std::optional<double> unk;
};

struct MetricsReport {
  Scenario scenario = Scenario::kClosedSet;
  int class_count = 0;
  double accuracy = 0.0;  // total correct / total
  double os = 0.0;        // mean per-class accuracy over classes present in truth
  double os_star = 0.0;   // same, shared classes 1..C only
  std::optional<double> unk;  // accuracy on class C+1, if present in truth
  std::vector<std::optional<double>> per_class;  // index c-1; empty if absent
  std::vector<std::vector<long>> confusion;      // [truth-1][pred-1], (C+1)^2
  std::vector<IterationMetrics> trajectory;
};

/// Throws kData on length mismatch or empty truth, kLabel on truth outside
/// 1..C+1. Predictions outside 1..C+1 count as wrong.
MetricsReport compute_metrics(const Labels& predicted, const Labels& truth, int class_count,
                              Scenario scenario);

}  // namespace ifcda
