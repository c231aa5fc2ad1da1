#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fairdtd/distill.hpp"
#include "fairdtd/graph.hpp"
#include "fairdtd/metrics.hpp"
#include "fairdtd/models.hpp"

namespace fairdtd {

inline constexpr double kGcnLearningRate = 0.01;
inline constexpr double kGinLearningRate = 0.0001;

struct TrainConfig {
  std::size_t epochs = 700;
  std::size_t hidden = kDefaultHidden;
  EncoderKind student_kind = EncoderKind::Gcn;
  /// Unset means the backbone default (0.01 GCN, 0.0001 GIN).
  std::optional<double> student_lr;
  /// Unset means 0.01 (MLP and GCN teachers).
  std::optional<double> teacher_lr;
  DistillConfig distill;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  /// z-score features with training-node statistics.
  bool standardize = true;
  /// Inverted dropout on encoder inputs during training; 0 disables it.
  double input_dropout = 0.0;

  double resolved_student_lr() const;
  double resolved_teacher_lr() const;
  /// Throws ConfigError on epochs == 0, hidden == 0, lr <= 0, empty seeds,
  /// dropout outside [0, 1) or an invalid distillation config.
  void validate() const;
};

/// Graph plus the derived inputs every phase needs. Owns the operators, so it
/// must outlive any tape built from it.
struct PreparedGraph {
  const Graph* graph = nullptr;
  Matrix features;  // possibly standardized
  Matrix ones;
  GraphOperators ops;
};

/// Throws EmptySelectionError when the train or validation mask is empty.
PreparedGraph prepare_graph(const Graph& g, bool standardize);

struct EpochMetrics {
  double acc = 0.0;
  std::optional<double> delta_sp;
  std::optional<double> delta_eo;
};

struct RunRecord {
  std::string role;
  std::uint64_t seed = 0;
  std::vector<LossTerms> losses;     // one per epoch
  std::vector<MetricRow> val;        // one per epoch, parameters before the step
  std::size_t best_epoch = 0;
  MetricRow test;                    // at the best-validation parameters
  std::optional<double> probe_auc;   // sensitive probe on hidden representations
  std::optional<double> mean_tau_fea;
  std::optional<double> mean_tau_str;
  double wall_seconds = 0.0;
};

struct TrainedModel {
  ModelParams params;
  RunRecord record;
};

/// Cross-entropy training of one encoder on `input` (features or ones).
/// Shared by both teachers and the vanilla baseline.
TrainedModel train_supervised(const PreparedGraph& pg, EncoderKind kind, const Matrix& input,
                              double lr, std::size_t epochs, std::size_t hidden, std::uint64_t seed,
                              std::string role, double input_dropout = 0.0);

TrainedModel train_feature_teacher(const PreparedGraph& pg, const TrainConfig& cfg,
                                   std::uint64_t master_seed);
TrainedModel train_structure_teacher(const PreparedGraph& pg, const TrainConfig& cfg,
                                     std::uint64_t master_seed);
/// Plain supervised student on the "student" seed stream.
TrainedModel train_vanilla(const PreparedGraph& pg, const TrainConfig& cfg,
                           std::uint64_t master_seed);

struct StudentResult {
  ModelParams student;
  std::optional<ModelParams> temp_fea;
  std::optional<ModelParams> temp_str;
  RunRecord record;
};

/// Distills the frozen teachers into the student. A teacher may be null only
/// when the config disables it (DependencyError otherwise).
StudentResult train_student(const PreparedGraph& pg, const TrainedModel* fea,
                            const TrainedModel* str, const TrainConfig& cfg,
                            std::uint64_t master_seed);

enum class Variant { FairDtd, WithoutFt, WithoutSt, WithoutGd, WithoutNst, Vanilla };

inline constexpr Variant kAblationVariants[] = {Variant::FairDtd, Variant::WithoutFt,
                                                Variant::WithoutSt, Variant::WithoutGd,
                                                Variant::WithoutNst};

/// Table label, e.g. "w/o FT".
std::string_view variant_label(Variant v);
/// File-system friendly name, e.g. "wo_ft".
std::string_view variant_slug(Variant v);
DistillConfig apply_variant(DistillConfig base, Variant v);

/// Everything produced for one (variant, seed).
struct SeedRun {
  std::uint64_t seed = 0;
  std::string label;
  RunRecord record;
  ModelParams student;
  std::optional<ModelParams> temp_fea;
  std::optional<ModelParams> temp_str;
};

struct TeacherPair {
  std::optional<TrainedModel> fea;
  std::optional<TrainedModel> str;
};

/// Trains the teachers the distill config needs.
TeacherPair train_teachers(const PreparedGraph& pg, const TrainConfig& cfg, std::uint64_t seed);

/// Full pipeline for one seed: teachers then student (or the vanilla model).
SeedRun run_variant_seed(const PreparedGraph& pg, const TrainConfig& cfg, Variant v,
                         std::uint64_t seed, const TeacherPair* teachers = nullptr);

struct VariantRuns {
  Variant variant;
  std::vector<SeedRun> runs;
  FairnessReport report() const;
};

/// Runs cfg.distill as configured (or vanilla when is_vanilla()) over cfg.seeds.
VariantRuns run_seeds(const PreparedGraph& pg, const TrainConfig& cfg, Variant v = Variant::FairDtd);

/// FairDTD plus the four ablations under shared seeds and shared teachers.
std::vector<VariantRuns> run_ablation(const PreparedGraph& pg, const TrainConfig& cfg);

/// Full data (GCN on X), features only (MLP on X), topology only (GCN on ones).
struct StrategyRuns {
  std::string label;
  std::vector<SeedRun> runs;
  FairnessReport report() const;
};
std::vector<StrategyRuns> run_partial_data(const PreparedGraph& pg, const TrainConfig& cfg);

inline constexpr std::string_view kPartialStrategies[] = {"full-data", "features-only",
                                                         "topology-only"};

}  // namespace fairdtd
