#include "fairdtd/trainer.hpp"

#include <chrono>
#include <cmath>
#include <utility>

#include "fairdtd/adam.hpp"
#include "fairdtd/error.hpp"
#include "fairdtd/keyvalue.hpp"
#include "fairdtd/ops.hpp"
#include "fairdtd/random.hpp"

namespace fairdtd {

double TrainConfig::resolved_student_lr() const {
  if (student_lr) return *student_lr;
  return student_kind == EncoderKind::Gin ? kGinLearningRate : kGcnLearningRate;
}

double TrainConfig::resolved_teacher_lr() const { return teacher_lr.value_or(kGcnLearningRate); }

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be >= 1");
  if (hidden == 0) throw ConfigError("hidden dimension must be >= 1");
  if (student_kind == EncoderKind::Mlp) throw ConfigError("student encoder must be gcn or gin");
  const double lrs[] = {resolved_student_lr(), resolved_teacher_lr()};
  for (double lr : lrs) {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be > 0, got " + format_double(lr));
  }
  if (seeds.empty()) throw ConfigError("seed list is empty");
  if (!(input_dropout >= 0.0 && input_dropout < 1.0)) throw ConfigError("input_dropout must lie in [0, 1)");
  distill.validate();
}

PreparedGraph prepare_graph(const Graph& g, bool standardize) {
  g.validate();
  if (g.splits.train.empty() || count(g.splits.train) == 0) throw EmptySelectionError("train mask is empty");
  if (g.splits.val.empty() || count(g.splits.val) == 0) throw EmptySelectionError("validation mask is empty");
  if (g.splits.test.empty() || count(g.splits.test) == 0) throw EmptySelectionError("test mask is empty");
  PreparedGraph pg;
  pg.graph = &g;
  pg.features = standardize ? standardize_features(g.features, g.splits.train) : g.features;
  pg.ones = all_ones_features(g);
  pg.ops = make_operators(g);
  return pg;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Inverted input dropout, fresh mask per epoch from a dedicated stream.
class InputDropout {
 public:
  InputDropout(double rate, std::uint64_t seed) : rate_(rate), rng_(seed) {}

  Matrix apply(const Matrix& x) {
    if (rate_ == 0.0) return x;
    Matrix out = x;
    const double keep = 1.0 / (1.0 - rate_);
    for (double& v : out.values()) v = rng_.bernoulli(rate_) ? 0.0 : v * keep;
    return out;
  }

 private:
  double rate_;
  Rng rng_;
};

MetricRow metrics_on(const Matrix& logits, const Graph& g, const Mask& mask) {
  return evaluate_predictions(make_prediction_set(logits, g, mask));
}

std::vector<Matrix> grads_of(const ad::Tape& tape, const BoundParams& bp) {
  std::vector<Matrix> g;
  for (const ad::Var& v : bp.vars()) g.push_back(tape.grad(v));
  return g;
}

/// Best-validation checkpointing: the first epoch reaching the maximum wins.
template <class State>
class BestTracker {
 public:
  void offer(double val_acc, std::size_t epoch, const State& state) {
    if (!best_ || val_acc > best_acc_) {
      best_ = state;
      best_acc_ = val_acc;
      best_epoch_ = epoch;
    }
  }
  const State& state() const { return *best_; }
  std::size_t epoch() const { return best_epoch_; }

 private:
  std::optional<State> best_;
  double best_acc_ = 0.0;
  std::size_t best_epoch_ = 0;
};

void finish_record(RunRecord& rec, const PreparedGraph& pg, const ForwardValues& fv,
                   std::uint64_t master_seed) {
  const Graph& g = *pg.graph;
  rec.test = metrics_on(fv.logits, g, g.splits.test);
  try {
    rec.probe_auc = sensitive_probe(fv.hidden, g.sensitive, derive_seed(master_seed, "probe")).auc;
  } catch (const UndefinedMetricError&) {
    rec.probe_auc.reset();
  }
}

}  // namespace

TrainedModel train_supervised(const PreparedGraph& pg, EncoderKind kind, const Matrix& input,
                              double lr, std::size_t epochs, std::size_t hidden, std::uint64_t seed,
                              std::string role, double input_dropout) {
  const auto t0 = Clock::now();
  const Graph& g = *pg.graph;
  ModelParams params = init_params(kind, input.cols(), hidden, kNumClasses, seed);
  AdamState adam;
  const AdamOptions opts{lr};
  InputDropout dropout(input_dropout, derive_seed(seed, "dropout"));
  BestTracker<ModelParams> best;

  RunRecord rec;
  rec.role = std::move(role);
  rec.seed = seed;
  ad::Tape tape;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    tape.reset();
    const BoundParams bp = bind(tape, params, true);
    const ad::Var x = tape.constant(dropout.apply(input));
    const ForwardOutput out = forward_any(bp, kind, pg.ops, x);
    const ad::Var loss = ad::cross_entropy_masked(out.logits, g.labels, g.splits.train);

    LossTerms terms;
    terms.hard = loss.scalar();
    terms.final = terms.hard;
    rec.losses.push_back(terms);
    const Matrix& eval_logits =
        input_dropout == 0.0 ? out.logits.value() : evaluate(params, pg.ops, input).logits;
    rec.val.push_back(metrics_on(eval_logits, g, g.splits.val));
    best.offer(rec.val.back().acc, epoch, params);

    tape.backward(loss);
    const std::vector<Matrix> grads = grads_of(tape, bp);
    const std::vector<Matrix*> ptrs = params.tensors();
    adam_step(ptrs, grads, adam, opts);
  }
  rec.best_epoch = best.epoch();
  TrainedModel tm{best.state(), std::move(rec)};
  finish_record(tm.record, pg, evaluate(tm.params, pg.ops, input), seed);
  tm.record.wall_seconds = seconds_since(t0);
  return tm;
}

TrainedModel train_feature_teacher(const PreparedGraph& pg, const TrainConfig& cfg,
                                   std::uint64_t master_seed) {
  cfg.validate();
  return train_supervised(pg, EncoderKind::Mlp, pg.features,
                          cfg.resolved_teacher_lr(), cfg.epochs, cfg.hidden,
                          derive_seed(master_seed, "feature_teacher"), "feature_teacher",
                          cfg.input_dropout);
}

TrainedModel train_structure_teacher(const PreparedGraph& pg, const TrainConfig& cfg,
                                     std::uint64_t master_seed) {
  cfg.validate();
  return train_supervised(pg, EncoderKind::Gcn, pg.ones,
                          cfg.resolved_teacher_lr(), cfg.epochs, cfg.hidden,
                          derive_seed(master_seed, "structure_teacher"), "structure_teacher",
                          cfg.input_dropout);
}

TrainedModel train_vanilla(const PreparedGraph& pg, const TrainConfig& cfg,
                           std::uint64_t master_seed) {
  cfg.validate();
  return train_supervised(pg, cfg.student_kind, pg.features, cfg.resolved_student_lr(), cfg.epochs,
                          cfg.hidden, derive_seed(master_seed, "student"), "vanilla",
                          cfg.input_dropout);
}

StudentResult train_student(const PreparedGraph& pg, const TrainedModel* fea,
                            const TrainedModel* str, const TrainConfig& cfg,
                            std::uint64_t master_seed) {
  cfg.validate();
  const auto t0 = Clock::now();
  const Graph& g = *pg.graph;
  const DistillConfig& dc = cfg.distill;
  if (dc.use_feature_teacher && fea == nullptr) throw DependencyError("feature teacher enabled but not trained");
  if (dc.use_structure_teacher && str == nullptr) throw DependencyError("structure teacher enabled but not trained");

  // Teachers are frozen: their outputs are computed once.
  std::optional<TeacherOutputs> out_fea, out_str;
  if (dc.use_feature_teacher) {
    ForwardValues fv = evaluate(fea->params, pg.ops, pg.features);
    out_fea = TeacherOutputs{std::move(fv.logits), std::move(fv.hidden)};
  }
  if (dc.use_structure_teacher) {
    ForwardValues fv = evaluate(str->params, pg.ops, pg.ones);
    out_str = TeacherOutputs{std::move(fv.logits), std::move(fv.hidden)};
  }
  for (const auto* t : {&out_fea, &out_str}) {
    if (*t && t->value().hidden.cols() != cfg.hidden) {
      throw CompatibilityError("teacher hidden width differs from the student's");
    }
  }

  const std::uint64_t student_seed = derive_seed(master_seed, "student");
  struct State {
    ModelParams student;
    std::optional<ModelParams> temp_fea, temp_str;
  };
  State st;
  st.student = init_params(cfg.student_kind, pg.features.cols(), cfg.hidden, kNumClasses, student_seed);
  if (dc.use_node_temps && dc.use_feature_teacher)
    st.temp_fea = init_temperature_net(kNumClasses, derive_seed(master_seed, "temp_fea"));
  if (dc.use_node_temps && dc.use_structure_teacher)
    st.temp_str = init_temperature_net(kNumClasses, derive_seed(master_seed, "temp_str"));

  AdamState adam_student, adam_fea, adam_str;
  const AdamOptions opts{cfg.resolved_student_lr()};
  InputDropout dropout(cfg.input_dropout, derive_seed(student_seed, "dropout"));
  BestTracker<State> best;

  RunRecord rec;
  rec.role = "student";
  rec.seed = student_seed;
  ad::Tape tape;
  auto step = [&opts](ModelParams& p, const ad::Tape& t, const BoundParams& bp, AdamState& s) {
    const std::vector<Matrix> grads = grads_of(t, bp);
    const std::vector<Matrix*> ptrs = p.tensors();
    adam_step(ptrs, grads, s, opts);
  };
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    tape.reset();
    const BoundParams sp = bind(tape, st.student, true);
    std::optional<BoundParams> tf, ts;
    if (st.temp_fea) tf = bind(tape, *st.temp_fea, true);
    if (st.temp_str) ts = bind(tape, *st.temp_str, true);
    const ad::Var x = tape.constant(dropout.apply(pg.features));
    const ForwardOutput out = forward_student(sp, pg.ops, x, cfg.student_kind);
    const StudentObjective obj = student_objective(
        tape, out.logits, out.hidden, g.labels, g.splits.train, out_fea ? &*out_fea : nullptr,
        out_str ? &*out_str : nullptr, tf ? &*tf : nullptr, ts ? &*ts : nullptr, dc);

    rec.losses.push_back(obj.terms);
    const Matrix& eval_logits = cfg.input_dropout == 0.0
                                    ? out.logits.value()
                                    : evaluate(st.student, pg.ops, pg.features).logits;
    rec.val.push_back(metrics_on(eval_logits, g, g.splits.val));
    best.offer(rec.val.back().acc, epoch, st);

    tape.backward(obj.loss);
    step(st.student, tape, sp, adam_student);
    if (tf) step(*st.temp_fea, tape, *tf, adam_fea);
    if (ts) step(*st.temp_str, tape, *ts, adam_str);
  }
  rec.best_epoch = best.epoch();
  StudentResult res{best.state().student, best.state().temp_fea, best.state().temp_str, std::move(rec)};
  finish_record(res.record, pg, evaluate(res.student, pg.ops, pg.features), student_seed);

  auto mean_tau = [&](const std::optional<ModelParams>& net, const std::optional<TeacherOutputs>& t) {
    std::optional<double> m;
    if (!net || !t) return m;
    ad::Tape scratch;
    const Matrix tau = node_temperatures(bind(scratch, *net, false), t->logits, dc.tau_min, dc.tau_max).value();
    double s = 0.0;
    for (double v : tau.values()) s += v;
    m = s / static_cast<double>(tau.rows());
    return m;
  };
  res.record.mean_tau_fea = mean_tau(res.temp_fea, out_fea);
  res.record.mean_tau_str = mean_tau(res.temp_str, out_str);
  res.record.wall_seconds = seconds_since(t0);
  return res;
}

std::string_view variant_label(Variant v) {
  switch (v) {
    case Variant::FairDtd: return "FairDTD";
    case Variant::WithoutFt: return "w/o FT";
    case Variant::WithoutSt: return "w/o ST";
    case Variant::WithoutGd: return "w/o GD";
    case Variant::WithoutNst: return "w/o NST";
    case Variant::Vanilla: return "vanilla";
  }
  return "unknown";
}

std::string_view variant_slug(Variant v) {
  switch (v) {
    case Variant::FairDtd: return "fairdtd";
    case Variant::WithoutFt: return "wo_ft";
    case Variant::WithoutSt: return "wo_st";
    case Variant::WithoutGd: return "wo_gd";
    case Variant::WithoutNst: return "wo_nst";
    case Variant::Vanilla: return "vanilla";
  }
  return "unknown";
}

DistillConfig apply_variant(DistillConfig base, Variant v) {
  switch (v) {
    case Variant::FairDtd: break;
    case Variant::WithoutFt: base.use_feature_teacher = false; break;
    case Variant::WithoutSt: base.use_structure_teacher = false; break;
    case Variant::WithoutGd: base.use_mid_loss = false; break;
    case Variant::WithoutNst: base.use_node_temps = false; break;
    case Variant::Vanilla:
      base.use_feature_teacher = false;
      base.use_structure_teacher = false;
      break;
  }
  return base;
}

TeacherPair train_teachers(const PreparedGraph& pg, const TrainConfig& cfg, std::uint64_t seed) {
  TeacherPair t;
  if (cfg.distill.use_feature_teacher) t.fea = train_feature_teacher(pg, cfg, seed);
  if (cfg.distill.use_structure_teacher) t.str = train_structure_teacher(pg, cfg, seed);
  return t;
}

SeedRun run_variant_seed(const PreparedGraph& pg, const TrainConfig& cfg, Variant v,
                         std::uint64_t seed, const TeacherPair* teachers) {
  TrainConfig vc = cfg;
  vc.distill = apply_variant(cfg.distill, v);
  SeedRun run;
  run.seed = seed;
  run.label = std::string(variant_label(v));
  if (vc.distill.is_vanilla()) {
    TrainedModel tm = train_vanilla(pg, vc, seed);
    run.record = std::move(tm.record);
    run.student = std::move(tm.params);
    return run;
  }
  TeacherPair own;
  if (teachers == nullptr) {
    own = train_teachers(pg, vc, seed);
    teachers = &own;
  }
  const TrainedModel* fea = vc.distill.use_feature_teacher && teachers->fea ? &*teachers->fea : nullptr;
  const TrainedModel* str = vc.distill.use_structure_teacher && teachers->str ? &*teachers->str : nullptr;
  StudentResult sr = train_student(pg, fea, str, vc, seed);
  run.record = std::move(sr.record);
  run.student = std::move(sr.student);
  run.temp_fea = std::move(sr.temp_fea);
  run.temp_str = std::move(sr.temp_str);
  return run;
}

namespace {
FairnessReport report_of(const std::vector<SeedRun>& runs) {
  FairnessReport r;
  for (const SeedRun& s : runs) r.add(s.seed, s.record.test);
  return r;
}
}  // namespace

FairnessReport VariantRuns::report() const { return report_of(runs); }
FairnessReport StrategyRuns::report() const { return report_of(runs); }

VariantRuns run_seeds(const PreparedGraph& pg, const TrainConfig& cfg, Variant v) {
  cfg.validate();
  VariantRuns out{v, {}};
  for (std::uint64_t seed : cfg.seeds) out.runs.push_back(run_variant_seed(pg, cfg, v, seed));
  return out;
}

std::vector<VariantRuns> run_ablation(const PreparedGraph& pg, const TrainConfig& cfg) {
  cfg.validate();
  TrainConfig both = cfg;
  both.distill.use_feature_teacher = true;
  both.distill.use_structure_teacher = true;
  std::vector<VariantRuns> out;
  for (Variant v : kAblationVariants) out.push_back({v, {}});
  for (std::uint64_t seed : cfg.seeds) {
    const TeacherPair teachers = train_teachers(pg, both, seed);
    for (VariantRuns& vr : out) {
      vr.runs.push_back(run_variant_seed(pg, both, vr.variant, seed, &teachers));
    }
  }
  return out;
}

std::vector<StrategyRuns> run_partial_data(const PreparedGraph& pg, const TrainConfig& cfg) {
  cfg.validate();
  std::vector<StrategyRuns> out;
  for (std::string_view label : kPartialStrategies) out.push_back({std::string(label), {}});
  auto to_run = [](std::uint64_t seed, const std::string& label, TrainedModel tm) {
    SeedRun r;
    r.seed = seed;
    r.label = label;
    r.record = std::move(tm.record);
    r.student = std::move(tm.params);
    return r;
  };
  for (std::uint64_t seed : cfg.seeds) {
    out[0].runs.push_back(to_run(seed, out[0].label, train_vanilla(pg, cfg, seed)));
    out[1].runs.push_back(to_run(seed, out[1].label, train_feature_teacher(pg, cfg, seed)));
    out[2].runs.push_back(to_run(seed, out[2].label, train_structure_teacher(pg, cfg, seed)));
  }
  return out;
}

}  // namespace fairdtd
