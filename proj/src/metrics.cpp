#include "fairdtd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "fairdtd/adam.hpp"
#include "fairdtd/error.hpp"
#include "fairdtd/random.hpp"

namespace fairdtd {

void PredictionSet::validate() const {
  const std::size_t n = predicted.size();
  if (labels.size() != n || sensitive.size() != n || mask.size() != n) {
    throw DimensionError("prediction set arrays differ in length");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    if ((predicted[i] | labels[i] | sensitive[i]) & ~1) {
      throw DomainError("prediction set holds a non-binary value at node " + std::to_string(i));
    }
  }
}

std::vector<int> predictions_from_logits(const Matrix& logits) {
  std::vector<int> out(logits.rows(), 0);
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto row = logits.row(i);
    // max_element keeps the first maximum, so ties go to the lower class.
    out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

PredictionSet make_prediction_set(const Matrix& logits, const Graph& g, const Mask& mask) {
  if (logits.rows() != g.num_nodes()) {
    throw DimensionError("logits have " + std::to_string(logits.rows()) + " rows for " +
                         std::to_string(g.num_nodes()) + " nodes");
  }
  return {predictions_from_logits(logits), g.labels, g.sensitive, mask};
}

double accuracy(const PredictionSet& p) {
  p.validate();
  std::size_t hit = 0, total = 0;
  for (std::size_t i = 0; i < p.mask.size(); ++i) {
    if (!p.mask[i]) continue;
    ++total;
    hit += p.predicted[i] == p.labels[i] ? 1 : 0;
  }
  if (total == 0) throw EmptySelectionError("accuracy over an empty mask");
  return 100.0 * static_cast<double>(hit) / static_cast<double>(total);
}

namespace {

// Positive-prediction rate gap between groups among masked nodes passing `keep`.
template <class Keep>
double rate_gap(const PredictionSet& p, Keep keep, const char* what) {
  p.validate();
  std::size_t pos[2] = {0, 0}, tot[2] = {0, 0};
  for (std::size_t i = 0; i < p.mask.size(); ++i) {
    if (!p.mask[i] || !keep(i)) continue;
    const int s = p.sensitive[i];
    ++tot[s];
    pos[s] += p.predicted[i] == 1 ? 1 : 0;
  }
  if (tot[0] == 0 || tot[1] == 0) {
    throw UndefinedMetricError(std::string(what) + " undefined: a sensitive group is empty");
  }
  const double r0 = static_cast<double>(pos[0]) / static_cast<double>(tot[0]);
  const double r1 = static_cast<double>(pos[1]) / static_cast<double>(tot[1]);
  return 100.0 * std::abs(r0 - r1);
}

}  // namespace

double delta_sp(const PredictionSet& p) {
  return rate_gap(p, [](std::size_t) { return true; }, "delta_sp");
}

double delta_eo(const PredictionSet& p) {
  return rate_gap(p, [&p](std::size_t i) { return p.labels[i] == 1; }, "delta_eo");
}

MetricRow evaluate_predictions(const PredictionSet& p) {
  MetricRow row;
  row.acc = accuracy(p);
  try {
    row.delta_sp = delta_sp(p);
  } catch (const UndefinedMetricError&) {
  }
  try {
    row.delta_eo = delta_eo(p);
  } catch (const UndefinedMetricError&) {
  }
  return row;
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd m;
  m.count = values.size();
  if (values.empty()) return m;
  m.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - m.mean) * (v - m.mean);
  m.std = std::sqrt(ss / static_cast<double>(values.size()));
  return m;
}

void FairnessReport::add(std::uint64_t seed, const MetricRow& row) {
  seeds.push_back(seed);
  rows.push_back(row);
}

namespace {
template <class Get>
MeanStd aggregate(const std::vector<MetricRow>& rows, Get get) {
  std::vector<double> v;
  for (const MetricRow& r : rows)
    if (auto x = get(r)) v.push_back(*x);
  return mean_std(v);
}
}  // namespace

MeanStd FairnessReport::acc() const {
  return aggregate(rows, [](const MetricRow& r) { return std::optional<double>(r.acc); });
}
MeanStd FairnessReport::delta_sp() const {
  return aggregate(rows, [](const MetricRow& r) { return r.delta_sp; });
}
MeanStd FairnessReport::delta_eo() const {
  return aggregate(rows, [](const MetricRow& r) { return r.delta_eo; });
}

std::string format_mean_std(const MeanStd& m) {
  if (m.count == 0) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f ± %.2f", m.mean, m.std);
  return buf;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DimensionError("roc_auc: scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  // Average ranks over ties, then the Mann-Whitney U statistic.
  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        rank_sum_pos += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw UndefinedMetricError("AUC undefined with a single class");
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

ProbeResult sensitive_probe(const Matrix& representation, std::span<const int> sensitive,
                            std::uint64_t seed, const Mask& mask, const ProbeOptions& opts) {
  const std::size_t n = representation.rows();
  if (sensitive.size() != n) throw DimensionError("probe: sensitive length differs from rows");
  if (!mask.empty() && mask.size() != n) throw DimensionError("probe: mask length differs from rows");
  if (!(opts.train_fraction > 0.0 && opts.train_fraction < 1.0)) {
    throw ConfigError("probe train fraction must lie in (0, 1)");
  }

  // Stratified split by s.
  std::vector<std::size_t> groups[2];
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask.empty() && !mask[i]) continue;
    if (sensitive[i] != 0 && sensitive[i] != 1) throw DomainError("probe: sensitive must be 0/1");
    groups[sensitive[i]].push_back(i);
  }
  Rng rng(seed);
  std::vector<std::size_t> train, test;
  for (auto& grp : groups) {
    for (std::size_t i = grp.size(); i > 1; --i) std::swap(grp[i - 1], grp[rng.below(i)]);
    const auto cut = static_cast<std::size_t>(std::llround(opts.train_fraction * static_cast<double>(grp.size())));
    if (cut == 0 || cut == grp.size()) {
      throw UndefinedMetricError("probe undefined: a sensitive class is missing from a split half");
    }
    train.insert(train.end(), grp.begin(), grp.begin() + static_cast<std::ptrdiff_t>(cut));
    test.insert(test.end(), grp.begin() + static_cast<std::ptrdiff_t>(cut), grp.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());

  // Standardize on the probe-train half.
  const std::size_t d = representation.cols();
  std::vector<double> mu(d, 0.0), sd(d, 0.0);
  for (std::size_t i : train)
    for (std::size_t c = 0; c < d; ++c) mu[c] += representation(i, c);
  for (double& v : mu) v /= static_cast<double>(train.size());
  for (std::size_t i : train)
    for (std::size_t c = 0; c < d; ++c) sd[c] += std::pow(representation(i, c) - mu[c], 2);
  for (double& v : sd) {
    v = std::sqrt(v / static_cast<double>(train.size()));
    if (v < 1e-12) v = 1.0;
  }
  auto feature = [&](std::size_t i, std::size_t c) { return (representation(i, c) - mu[c]) / sd[c]; };

  Matrix w(d, 1), b(1, 1);
  AdamState state;
  const AdamOptions adam{opts.lr};
  Matrix* params[] = {&w, &b};
  auto logit = [&](std::size_t i) {
    double z = b(0, 0);
    for (std::size_t c = 0; c < d; ++c) z += w(c, 0) * feature(i, c);
    return z;
  };
  auto sigmoid = [](double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); };
  const double inv_m = 1.0 / static_cast<double>(train.size());
  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    Matrix gw(d, 1), gb(1, 1);
    for (std::size_t i : train) {
      const double r = (sigmoid(logit(i)) - sensitive[i]) * inv_m;
      for (std::size_t c = 0; c < d; ++c) gw(c, 0) += r * feature(i, c);
      gb(0, 0) += r;
    }
    const Matrix grads[] = {gw, gb};
    adam_step(params, grads, state, adam);
  }

  std::vector<double> scores;
  std::vector<int> truth;
  std::size_t hit = 0;
  for (std::size_t i : test) {
    const double z = logit(i);
    scores.push_back(z);
    truth.push_back(sensitive[i]);
    hit += (z > 0.0 ? 1 : 0) == sensitive[i] ? 1 : 0;
  }
  ProbeResult res;
  res.accuracy = 100.0 * static_cast<double>(hit) / static_cast<double>(test.size());
  res.auc = roc_auc(scores, truth);
  return res;
}

}  // namespace fairdtd
