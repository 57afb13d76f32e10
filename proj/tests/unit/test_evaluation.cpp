#include "ifcda/error.hpp"
#include "ifcda/evaluation.hpp"

#include "../support/oracles.hpp"

#include <doctest.h>

using namespace ifcda;

namespace {

SoftLabelMatrix column(const Eigen::VectorXd& v) {
  SoftLabelMatrix s;
  s.probs = v;
  s.class_count = static_cast<int>(v.size()) - 1;
  s.normalized = true;
  return s;
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("hard predictions") {
  CHECK(predict_hard(column(Eigen::Vector3d(0.1, 0.7, 0.2)), Scenario::kOpenSet) == Labels{2});
  CHECK(predict_hard(column(Eigen::Vector3d(0.3, 0.3, 0.4)), Scenario::kOpenSet) == Labels{3});
  CHECK(predict_hard(column(Eigen::Vector3d(0.3, 0.3, 0.4)), Scenario::kClosedSet) == Labels{1});
  oracle::Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const int C = oracle::uniform_int(rng, 1, 6);
    Labels y(25);
    for (int& v : y) v = oracle::uniform_int(rng, 1, C + 1);
    CHECK(predict_hard(to_one_hot(y, C), Scenario::kOpenSet) == y);
  }
}

TEST_CASE("perfect predictions") {
  const MetricsReport m = compute_metrics({1, 1, 2, 3}, {1, 1, 2, 3}, 2, Scenario::kOpenSet);
  CHECK(m.os == 1.0);
  CHECK(m.os_star == 1.0);
  REQUIRE(m.unk);
  CHECK(*m.unk == 1.0);
  CHECK(m.accuracy == 1.0);
}

TEST_CASE("hand-counted open-set example") {
  const MetricsReport m = compute_metrics({1, 2, 3, 1}, {1, 2, 3, 3}, 2, Scenario::kOpenSet);
  CHECK(*m.per_class[0] == 1.0);
  CHECK(*m.per_class[1] == 1.0);
  CHECK(*m.per_class[2] == 0.5);
  CHECK(m.os == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
  CHECK(m.os_star == 1.0);
  CHECK(*m.unk == 0.5);
  CHECK(m.accuracy == 0.75);
  CHECK(m.confusion[2][0] == 1);
  CHECK(m.confusion[2][2] == 1);
}

TEST_CASE("absent classes are skipped") {
  const MetricsReport m = compute_metrics({1, 1, 3}, {1, 1, 1}, 2, Scenario::kClosedSet);
  CHECK(m.os == doctest::Approx(2.0 / 3.0));
  CHECK_FALSE(m.per_class[1]);
  CHECK_FALSE(m.unk);
}

TEST_CASE("OS identity on random instances") {
  oracle::Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const int C = oracle::uniform_int(rng, 1, 8);
    const int n = oracle::uniform_int(rng, C + 1, 200);
    Labels truth(static_cast<std::size_t>(n)), pred(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      truth[static_cast<std::size_t>(i)] = i <= C ? i + 1 : oracle::uniform_int(rng, 1, C + 1);
      pred[static_cast<std::size_t>(i)] = oracle::uniform_int(rng, 1, C + 1);
    }
    const MetricsReport m = compute_metrics(pred, truth, C, Scenario::kOpenSet);
    const oracle::OpenSetScores o = oracle::open_set_scores(pred, truth, C);
    CHECK(std::abs(m.os - (C * m.os_star + *m.unk) / (C + 1)) <= 1e-9);
    CHECK(std::abs(m.os - o.os) <= 1e-12);
    CHECK(std::abs(m.os_star - o.os_star) <= 1e-12);
    CHECK(std::abs(*m.unk - o.unk) <= 1e-12);
  }
}

TEST_CASE("metric errors") {
  CHECK_THROWS_AS(compute_metrics({}, {}, 2, Scenario::kOpenSet), Error);
  CHECK_THROWS_AS(compute_metrics({1}, {1, 2}, 2, Scenario::kOpenSet), Error);
  try {
    compute_metrics({1}, {4}, 2, Scenario::kOpenSet);
    FAIL("expected a label error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kLabel);
  }
  // Out-of-range predictions just count as wrong.
  CHECK(compute_metrics({9}, {1}, 2, Scenario::kOpenSet).accuracy == 0.0);
}

}  // TEST_SUITE
