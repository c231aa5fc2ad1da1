#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairdtd/graph.hpp"
#include "fairdtd/matrix.hpp"

namespace fairdtd {

/// Predictions, labels and sensitive attribute over one evaluation subset.
struct PredictionSet {
  std::vector<int> predicted;
  std::vector<int> labels;
  std::vector<int> sensitive;
  Mask mask;

  /// Throws DimensionError on unequal lengths, DomainError on non-binary values
  /// among masked nodes.
  void validate() const;
};

/// argmax over logit columns, ties resolved toward class 0.
std::vector<int> predictions_from_logits(const Matrix& logits);

PredictionSet make_prediction_set(const Matrix& logits, const Graph& g, const Mask& mask);

/// Percentages in [0, 100].
double accuracy(const PredictionSet& p);
/// |P(yhat=1 | s=0) - P(yhat=1 | s=1)|. UndefinedMetricError if a group is empty.
double delta_sp(const PredictionSet& p);
/// |P(yhat=1 | y=1, s=0) - P(yhat=1 | y=1, s=1)|. UndefinedMetricError if a
/// group has no positive-label node.
double delta_eo(const PredictionSet& p);

/// One evaluation; undefined values are empty.
struct MetricRow {
  double acc = 0.0;
  std::optional<double> delta_sp;
  std::optional<double> delta_eo;
};

MetricRow evaluate_predictions(const PredictionSet& p);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
  std::size_t count = 0;
};

/// Population std (divides by n); std of a single value is 0. Empty input
/// yields count 0.
MeanStd mean_std(std::span<const double> values);

/// Per-seed rows plus aggregates. Seeds whose metric is undefined are skipped
/// in that metric's aggregate.
struct FairnessReport {
  std::vector<std::uint64_t> seeds;
  std::vector<MetricRow> rows;

  void add(std::uint64_t seed, const MetricRow& row);
  MeanStd acc() const;
  MeanStd delta_sp() const;
  MeanStd delta_eo() const;
};

/// "mean ± std" with two decimals, or "NA".
std::string format_mean_std(const MeanStd& m);

/// Logistic-probe leakage diagnostic.
struct ProbeResult {
  double accuracy = 0.0;  // percent, held-out half
  double auc = 0.5;
};

struct ProbeOptions {
  std::size_t epochs = 300;
  double lr = 0.05;
  double train_fraction = 0.5;
};

/// Trains a logistic regression from standardized `representation` rows to
/// `sensitive` on a seeded split stratified by s, reports held-out accuracy
/// and ROC AUC. Only rows with `mask` != 0 take part (empty mask = all).
/// Throws UndefinedMetricError when either class is missing from a half.
ProbeResult sensitive_probe(const Matrix& representation, std::span<const int> sensitive,
                            std::uint64_t seed, const Mask& mask = {},
                            const ProbeOptions& opts = {});

/// Mann-Whitney AUC with ties counted 1/2.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

}  // namespace fairdtd
