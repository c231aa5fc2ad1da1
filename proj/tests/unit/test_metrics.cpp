#include <doctest.h>

#include <cmath>

#include "fairdtd/error.hpp"
#include "fairdtd/metrics.hpp"
#include "oracles.hpp"

using namespace fairdtd;

namespace {

PredictionSet make(std::vector<int> yhat, std::vector<int> y, std::vector<int> s) {
  const Mask all(yhat.size(), 1);
  return {std::move(yhat), std::move(y), std::move(s), all};
}

}  // namespace

TEST_CASE("statistical parity examples") {
  // Group 0 predicts positive at 0.75, group 1 at 0.25.
  const PredictionSet p = make({1, 0, 1, 1, 0, 0, 1, 0}, {1, 1, 1, 1, 1, 1, 1, 1}, {0, 0, 0, 0, 1, 1, 1, 1});
  CHECK(delta_sp(p) == 50.0);
  CHECK(delta_sp(make({1, 0, 1, 0}, {0, 0, 0, 0}, {0, 0, 1, 1})) == 0.0);
  CHECK_THROWS_AS(delta_sp(make({1, 0}, {1, 0}, {0, 0})), UndefinedMetricError);
}

TEST_CASE("equal opportunity examples") {
  // Positives: group 0 has 2 of 3 predicted, group 1 has 1 of 2.
  const PredictionSet p = make({1, 1, 0, 1, 0, 1}, {1, 1, 1, 1, 1, 0}, {0, 0, 0, 1, 1, 1});
  CHECK(delta_eo(p) == doctest::Approx(100.0 * (2.0 / 3.0 - 0.5)).epsilon(1e-14));
  CHECK(delta_eo(p) == doctest::Approx(16.67).epsilon(1e-3));
  CHECK(delta_eo(make({1, 0, 1, 0}, {1, 1, 1, 1}, {0, 0, 1, 1})) == 0.0);
  CHECK_THROWS_AS(delta_eo(make({1, 0, 1, 0}, {1, 1, 0, 0}, {0, 0, 1, 1})), UndefinedMetricError);
}

TEST_CASE("accuracy examples") {
  CHECK(accuracy(make({0, 1, 1, 0}, {0, 1, 1, 0}, {0, 1, 0, 1})) == 100.0);
  CHECK(accuracy(make({1, 0, 0, 1}, {0, 1, 1, 0}, {0, 1, 0, 1})) == 0.0);
  CHECK(accuracy(make({0, 1, 1, 1}, {0, 1, 1, 0}, {0, 1, 0, 1})) == 75.0);
  PredictionSet none = make({0, 1}, {0, 1}, {0, 1});
  none.mask = {0, 0};
  CHECK_THROWS_AS(accuracy(none), EmptySelectionError);
}

TEST_CASE("metrics match the brute-force oracle on 1000 random prediction sets") {
  Rng rng(77);
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = 1 + rng.below(40);
    PredictionSet p;
    for (std::size_t i = 0; i < n; ++i) {
      p.predicted.push_back(static_cast<int>(rng.below(2)));
      p.labels.push_back(static_cast<int>(rng.below(2)));
      p.sensitive.push_back(rng.bernoulli(0.8) ? static_cast<int>(rng.below(2)) : 0);
      p.mask.push_back(rng.bernoulli(0.7) ? 1 : 0);
    }
    const oracle::BruteMetrics want = oracle::brute_metrics(p.predicted, p.labels, p.sensitive, p.mask);
    if (want.acc) {
      CHECK(accuracy(p) == *want.acc);
      const MetricRow row = evaluate_predictions(p);
      CHECK(row.delta_sp == want.sp);
      CHECK(row.delta_eo == want.eo);
    } else {
      CHECK_THROWS_AS(accuracy(p), EmptySelectionError);
    }
  }
}

TEST_CASE("predictions from logits break ties toward class 0") {
  CHECK(predictions_from_logits(Matrix{{0.2, 0.2}, {0.1, 0.3}, {1.0, -1.0}}) == std::vector<int>{0, 1, 0});
}

TEST_CASE("prediction set validation") {
  PredictionSet p = make({0, 1}, {0, 1}, {0, 1});
  p.labels.pop_back();
  CHECK_THROWS_AS(p.validate(), DimensionError);
  CHECK_THROWS_AS(make({0, 2}, {0, 1}, {0, 1}).validate(), DomainError);
}

TEST_CASE("mean and population std") {
  const double one[] = {3.5};
  CHECK(mean_std(one).std == 0.0);
  CHECK(mean_std(one).mean == 3.5);
  const double two[] = {1.0, 3.0};
  CHECK(mean_std(two).mean == 2.0);
  CHECK(mean_std(two).std == 1.0);
  CHECK(mean_std(std::span<const double>{}).count == 0);
  CHECK(format_mean_std(mean_std(two)) == "2.00 ± 1.00");
  CHECK(format_mean_std({}) == "NA");

  FairnessReport r;
  r.add(1, {80.0, 10.0, std::nullopt});
  r.add(2, {90.0, 20.0, 5.0});
  CHECK(r.acc().mean == 85.0);
  CHECK(r.delta_sp().std == 5.0);
  CHECK(r.delta_eo().count == 1);
}

TEST_CASE("ROC AUC") {
  const double perfect[] = {0.1, 0.2, 0.8, 0.9};
  const int truth[] = {0, 0, 1, 1};
  CHECK(roc_auc(perfect, truth) == 1.0);
  const double flat[] = {0.5, 0.5, 0.5, 0.5};
  CHECK(roc_auc(flat, truth) == 0.5);
  const double mixed[] = {0.3, 0.7, 0.5, 0.9};
  CHECK(roc_auc(mixed, truth) == 0.75);
  const int one_class[] = {1, 1, 1, 1};
  CHECK_THROWS_AS(roc_auc(perfect, one_class), UndefinedMetricError);
}

TEST_CASE("sensitive-attribute probe") {
  const std::size_t n = 600;
  SUBCASE("one-hot of s is perfectly leaky") {
    Rng rng(1);
    std::vector<int> s(n);
    Matrix rep(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<int>(rng.below(2));
      rep(i, static_cast<std::size_t>(s[i])) = 1.0;
    }
    const ProbeResult r = sensitive_probe(rep, s, 3);
    CHECK(r.accuracy >= 99.0);
    CHECK(r.auc >= 0.99);
  }
  SUBCASE("pure noise gives chance-level AUC") {
    double mean_auc = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      Rng rng(seed);
      std::vector<int> s(n);
      for (int& v : s) v = static_cast<int>(rng.below(2));
      mean_auc += sensitive_probe(oracle::random_matrix(rng, n, 4), s, seed).auc / 5.0;
    }
    CHECK(std::abs(mean_auc - 0.5) <= 0.05);
  }
  SUBCASE("s with 20% flips caps accuracy near the Bayes rate") {
    Rng rng(2);
    std::vector<int> s(2000);
    Matrix rep(2000, 1);
    for (std::size_t i = 0; i < 2000; ++i) {
      s[i] = static_cast<int>(rng.below(2));
      rep(i, 0) = rng.bernoulli(0.2) ? 1 - s[i] : s[i];
    }
    CHECK(std::abs(sensitive_probe(rep, s, 4).accuracy - 80.0) <= 3.0);
  }
  SUBCASE("same seed reproduces the result") {
    Rng rng(3);
    std::vector<int> s(n);
    for (int& v : s) v = static_cast<int>(rng.below(2));
    const Matrix rep = oracle::random_matrix(rng, n, 3);
    const ProbeResult a = sensitive_probe(rep, s, 9), b = sensitive_probe(rep, s, 9);
    CHECK(a.auc == b.auc);
    CHECK(a.accuracy == b.accuracy);
  }
  SUBCASE("a single sensitive group is undefined") {
    const std::vector<int> s(n, 1);
    CHECK_THROWS_AS(sensitive_probe(Matrix(n, 2), s, 1), UndefinedMetricError);
  }
}
