#include "ifcda/evaluation.hpp"

#include "ifcda/error.hpp"

namespace ifcda {

Labels predict_hard(const SoftLabelMatrix& labels, Scenario scenario) {
  const Eigen::Index rows =
      scenario == Scenario::kOpenSet ? labels.class_count + 1 : labels.class_count;
  if (labels.probs.rows() != labels.class_count + 1 || rows < 1) {
    throw Error(ErrorKind::kPrecondition, "predict_hard expects C+1 label rows");
  }
  Labels out(static_cast<std::size_t>(labels.size()));
  for (Eigen::Index j = 0; j < labels.size(); ++j) {
    Eigen::Index best = 0;
    for (Eigen::Index r = 1; r < rows; ++r) {
      if (labels.probs(r, j) > labels.probs(best, j)) best = r;
    }
    out[static_cast<std::size_t>(j)] = static_cast<int>(best) + 1;
  }
  return out;
}

MetricsReport compute_metrics(const Labels& predicted, const Labels& truth, int class_count,
                              Scenario scenario) {
  if (truth.empty()) throw Error(ErrorKind::kData, "empty ground truth");
  if (predicted.size() != truth.size()) {
    throw Error(ErrorKind::kData, "prediction and truth lengths differ");
  }
  if (class_count < 1) throw Error(ErrorKind::kParameter, "class count must be >= 1");
  const int classes = class_count + 1;

  MetricsReport report;
  report.scenario = scenario;
  report.class_count = class_count;
  report.confusion.assign(static_cast<std::size_t>(classes),
                          std::vector<long>(static_cast<std::size_t>(classes), 0));
  std::vector<long> count(static_cast<std::size_t>(classes), 0);
  std::vector<long> correct(static_cast<std::size_t>(classes), 0);
  long total_correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int y = truth[i];
    if (y < 1 || y > classes) {
      throw Error(ErrorKind::kLabel, "truth label " + std::to_string(y) + " outside 1.." +
                                         std::to_string(classes));
    }
    const int p = predicted[i];
    ++count[static_cast<std::size_t>(y - 1)];
    if (p >= 1 && p <= classes) {
      ++report.confusion[static_cast<std::size_t>(y - 1)][static_cast<std::size_t>(p - 1)];
    }
    if (p == y) {
      ++correct[static_cast<std::size_t>(y - 1)];
      ++total_correct;
    }
  }

  report.accuracy = static_cast<double>(total_correct) / static_cast<double>(truth.size());
  report.per_class.resize(static_cast<std::size_t>(classes));
  double all_sum = 0.0;
  int all_present = 0;
  double known_sum = 0.0;
  int known_present = 0;
  for (int c = 0; c < classes; ++c) {
    const auto idx = static_cast<std::size_t>(c);
    if (count[idx] == 0) continue;
    const double acc = static_cast<double>(correct[idx]) / static_cast<double>(count[idx]);
    report.per_class[idx] = acc;
    all_sum += acc;
    ++all_present;
    if (c < class_count) {
      known_sum += acc;
      ++known_present;
    }
  }
  report.os = all_sum / all_present;
  report.os_star = known_present > 0 ? known_sum / known_present : 0.0;
  report.unk = report.per_class.back();
  return report;
}

}  // namespace ifcda
