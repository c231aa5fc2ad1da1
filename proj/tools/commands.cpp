#include "commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fairdtd/error.hpp"
#include "fairdtd/metrics.hpp"
#include "fairdtd/models.hpp"
#include "fairdtd/random.hpp"

namespace fairdtd::cli {

namespace fs = std::filesystem;

int exit_code_for(const std::exception& e) {
  const auto* err = dynamic_cast<const Error*>(&e);
  if (err == nullptr) return kExitOther;
  switch (err->kind()) {
    case ErrorKind::Config:
    case ErrorKind::Dependency: return kExitConfig;
    case ErrorKind::Io: return kExitIo;
    case ErrorKind::Schema:
    case ErrorKind::Domain:
    case ErrorKind::Referential:
    case ErrorKind::Dimension:
    case ErrorKind::Compatibility:
    case ErrorKind::EmptySelection: return kExitData;
    case ErrorKind::UndefinedMetric: return kExitUndefinedMetric;
    case ErrorKind::Tape: return kExitOther;
  }
  return kExitOther;
}

fs::path resolve_output(const std::optional<fs::path>& flag, const std::optional<fs::path>& config,
                        const std::string& command) {
  if (flag) return *flag;
  if (config) return *config;
  if (const char* root = std::getenv(kOutputRootEnv); root != nullptr && *root != '\0') {
    return fs::path(root) / command;
  }
  return fs::path("fairdtd-out") / command;
}

namespace {

constexpr const char* kNa = "NA";

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string opt(const std::optional<double>& v, int digits = 6) { return v ? fixed(*v, digits) : kNa; }

std::string exact(double v) { return format_double(v); }

/// Creates `dir`; refuses a directory that already holds a manifest unless
/// `overwrite` is set.
void prepare_output(const fs::path& dir, bool overwrite) {
  std::error_code ec;
  if (fs::exists(dir / "manifest.txt", ec) && !overwrite) {
    throw IoError(dir.string() + " already holds results; pass --overwrite to replace them");
  }
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void close_checked(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw IoError("write failed for " + path.string());
}

/// Per-(run, seed) result rows; `metrics.csv` is byte-deterministic, wall
/// time goes to `timing.csv`.
class MetricsFile {
 public:
  explicit MetricsFile(const fs::path& dir)
      : metrics_path_(dir / "metrics.csv"), timing_path_(dir / "timing.csv") {
    metrics_ = open_out(metrics_path_);
    timing_ = open_out(timing_path_);
    metrics_ << "run_id,variant,seed,acc,delta_sp,delta_eo,probe_auc\n";
    timing_ << "run_id,wall_seconds\n";
  }

  void add(const std::string& run_id, const std::string& variant, const RunRecord& rec,
           std::uint64_t seed) {
    metrics_ << run_id << ',' << csv_field(variant) << ',' << seed << ',' << fixed(rec.test.acc) << ','
             << opt(rec.test.delta_sp) << ',' << opt(rec.test.delta_eo) << ','
             << opt(rec.probe_auc) << '\n';
    timing_ << run_id << ',' << fixed(rec.wall_seconds, 3) << '\n';
  }

  void close() {
    close_checked(metrics_, metrics_path_);
    close_checked(timing_, timing_path_);
  }

  static std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }

 private:
  fs::path metrics_path_, timing_path_;
  std::ofstream metrics_, timing_;
};

struct SummaryRow {
  std::string label;
  FairnessReport report;
};

void write_summary(const fs::path& dir, const std::vector<SummaryRow>& rows) {
  const fs::path path = dir / "summary.csv";
  std::ofstream out = open_out(path);
  out << "variant,runs,acc_mean,acc_std,delta_sp_mean,delta_sp_std,delta_eo_mean,delta_eo_std\n";
  for (const SummaryRow& r : rows) {
    auto cell = [](const MeanStd& m) {
      return m.count == 0 ? std::string(kNa) + "," + kNa : fixed(m.mean) + "," + fixed(m.std);
    };
    out << MetricsFile::csv_field(r.label) << ',' << r.report.rows.size() << ',' << cell(r.report.acc())
        << ',' << cell(r.report.delta_sp()) << ',' << cell(r.report.delta_eo()) << '\n';
  }
  close_checked(out, path);

  std::printf("%-16s %-16s %-16s %-16s\n", "variant", "ACC", "delta_sp", "delta_eo");
  for (const SummaryRow& r : rows) {
    std::printf("%-16s %-16s %-16s %-16s\n", r.label.c_str(), format_mean_std(r.report.acc()).c_str(),
                format_mean_std(r.report.delta_sp()).c_str(),
                format_mean_std(r.report.delta_eo()).c_str());
  }
}

void write_record(const fs::path& path, const RunRecord& rec) {
  std::ofstream out = open_out(path);
  out << "epoch,hard,soft_fea,soft_str,mid_fea,mid_str,final,val_acc,val_delta_sp,val_delta_eo\n";
  for (std::size_t e = 0; e < rec.losses.size(); ++e) {
    const LossTerms& l = rec.losses[e];
    const MetricRow& v = rec.val[e];
    out << e << ',' << exact(l.hard) << ',' << exact(l.soft_fea) << ',' << exact(l.soft_str) << ','
        << exact(l.mid_fea) << ',' << exact(l.mid_str) << ',' << exact(l.final) << ',' << fixed(v.acc)
        << ',' << opt(v.delta_sp) << ',' << opt(v.delta_eo) << '\n';
  }
  close_checked(out, path);
}

KeyValue run_manifest(const ExperimentConfig& cfg, const Graph& g, const std::string& command) {
  KeyValue kv;
  kv.set("tool", "fairdtd");
  kv.set("command", command);
  to_manifest(cfg, kv);
  kv.set("graph.num_nodes", g.num_nodes());
  kv.set("graph.num_edges", g.num_edges());
  kv.set("graph.num_features", g.num_features());
  kv.set("graph.train", count(g.splits.train));
  kv.set("graph.val", count(g.splits.val));
  kv.set("graph.test", count(g.splits.test));
  kv.set("metrics.subset", "test");
  kv.set("metrics.undefined_token", kNa);
  return kv;
}

std::string run_id(std::string_view slug, std::uint64_t seed) {
  return std::string(slug) + "_seed" + std::to_string(seed);
}

/// `rec.seed` is the phase stream seed, which also keys the probe split.
void save_model(const fs::path& stem, const ModelParams& p, const std::string& role,
                const RunRecord& rec, std::uint64_t master_seed) {
  std::error_code ec;
  fs::create_directories(stem.parent_path(), ec);
  KeyValue extra;
  extra.set("master_seed", static_cast<unsigned long long>(master_seed));
  save_checkpoint(stem, p, CheckpointMeta{role, rec.seed, static_cast<long long>(rec.best_epoch)}, extra);
}

/// Persists a student run: per-epoch record, student and temperature nets.
void save_run(const fs::path& dir, const SeedRun& run) {
  write_record(dir / "record.csv", run.record);
  save_model(dir / "student", run.student, run.record.role, run.record, run.seed);
  if (run.temp_fea) save_model(dir / "temp_fea", *run.temp_fea, "temperature_fea", run.record, run.seed);
  if (run.temp_str) save_model(dir / "temp_str", *run.temp_str, "temperature_str", run.record, run.seed);
  KeyValue kv;
  kv.set("label", run.label);
  kv.set("seed", static_cast<unsigned long long>(run.seed));
  kv.set("best_epoch", run.record.best_epoch);
  if (run.record.mean_tau_fea) kv.set("mean_tau_fea", *run.record.mean_tau_fea);
  if (run.record.mean_tau_str) kv.set("mean_tau_str", *run.record.mean_tau_str);
  kv.write(dir / "run.manifest");
}

void save_teachers(const fs::path& dir, const TeacherPair& t, std::uint64_t seed) {
  if (t.fea) {
    save_model(dir / "feature_teacher", t.fea->params, "feature_teacher", t.fea->record, seed);
    write_record(dir / "feature_teacher_record.csv", t.fea->record);
  }
  if (t.str) {
    save_model(dir / "structure_teacher", t.str->params, "structure_teacher", t.str->record, seed);
    write_record(dir / "structure_teacher_record.csv", t.str->record);
  }
}

TeacherPair train_all_teachers(const PreparedGraph& pg, const TrainConfig& cfg, std::uint64_t seed) {
  TrainConfig both = cfg;
  both.distill.use_feature_teacher = true;
  both.distill.use_structure_teacher = true;
  return train_teachers(pg, both, seed);
}

void progress(const std::string& what) { std::fprintf(stderr, "[fairdtd] %s\n", what.c_str()); }

}  // namespace

void cmd_gen_data(const SyntheticSpec& spec, const SplitFractions& fractions,
                  std::uint64_t split_seed, const fs::path& out, bool overwrite) {
  spec.validate();
  prepare_output(out, overwrite);
  Graph g = generate_biased_sbm(spec);
  g.splits = make_splits(g, fractions, split_seed);
  write_node_file(g, out / "nodes.csv");
  write_edge_file(g, out / "edges.csv");
  write_splits_file(g, out / "splits.csv");
  KeyValue kv;
  kv.set("tool", "fairdtd");
  kv.set("command", "gen-data");
  spec.to_manifest(kv);
  kv.set("graph.num_nodes", g.num_nodes());
  kv.set("graph.num_edges", g.num_edges());
  kv.set("graph.num_features", g.num_features());
  kv.set("split.train", fractions.train);
  kv.set("split.val", fractions.val);
  kv.set("split.test", fractions.test);
  kv.set("split.seed", static_cast<unsigned long long>(split_seed));
  kv.set("split.stratified_by", "label,sensitive");
  kv.set("files.nodes", "nodes.csv");
  kv.set("files.edges", "edges.csv");
  kv.set("files.splits", "splits.csv");
  try {
    kv.set("graph.sensitive_homophily_ratio", sensitive_homophily_ratio(g));
  } catch (const UndefinedMetricError&) {
    kv.set("graph.sensitive_homophily_ratio", kNa);
  }
  kv.write(out / "manifest.txt");
  std::printf("wrote %zu nodes, %zu edges, %zu features to %s\n", g.num_nodes(), g.num_edges(),
              g.num_features(), out.string().c_str());
}

void cmd_train(const ExperimentConfig& cfg, const fs::path& out, bool overwrite) {
  cfg.train.validate();
  prepare_output(out, overwrite);
  const Graph g = materialize(cfg.data);
  const PreparedGraph pg = prepare_graph(g, cfg.train.standardize);
  const Variant variant = cfg.vanilla || cfg.train.distill.is_vanilla() ? Variant::Vanilla : Variant::FairDtd;
  KeyValue kv = run_manifest(cfg, g, "train");
  kv.set("variant", std::string(variant_label(variant)));
  kv.write(out / "manifest.txt");

  MetricsFile metrics(out);
  SummaryRow summary{std::string(variant_label(variant)), {}};
  for (std::uint64_t seed : cfg.train.seeds) {
    const std::string id = run_id(variant_slug(variant), seed);
    progress("train " + id);
    TeacherPair teachers;
    if (variant != Variant::Vanilla) {
      teachers = train_teachers(pg, cfg.train, seed);
      save_teachers(out / "runs" / ("teachers_seed" + std::to_string(seed)), teachers, seed);
    }
    const SeedRun run = run_variant_seed(pg, cfg.train, variant, seed, &teachers);
    save_run(out / "runs" / id, run);
    metrics.add(id, run.label, run.record, seed);
    summary.report.add(seed, run.record.test);
  }
  metrics.close();
  write_summary(out, {summary});
}

void cmd_ablate(const ExperimentConfig& cfg, const fs::path& out, bool overwrite) {
  cfg.train.validate();
  prepare_output(out, overwrite);
  const Graph g = materialize(cfg.data);
  const PreparedGraph pg = prepare_graph(g, cfg.train.standardize);
  KeyValue kv = run_manifest(cfg, g, "ablate");
  for (Variant v : kAblationVariants) {
    const DistillConfig d = apply_variant(cfg.train.distill, v);
    const std::string p = "variant." + std::string(variant_slug(v)) + ".";
    kv.set(p + "label", std::string(variant_label(v)));
    kv.set(p + "use_feature_teacher", d.use_feature_teacher);
    kv.set(p + "use_structure_teacher", d.use_structure_teacher);
    kv.set(p + "use_mid_loss", d.use_mid_loss);
    kv.set(p + "use_node_temps", d.use_node_temps);
    if (!d.use_node_temps) kv.set(p + "fixed_tau", d.fixed_tau);
  }
  kv.write(out / "manifest.txt");

  MetricsFile metrics(out);
  std::vector<SummaryRow> summary;
  for (Variant v : kAblationVariants) summary.push_back({std::string(variant_label(v)), {}});
  for (std::uint64_t seed : cfg.train.seeds) {
    progress("ablate seed " + std::to_string(seed));
    const TeacherPair teachers = train_all_teachers(pg, cfg.train, seed);
    save_teachers(out / "runs" / ("teachers_seed" + std::to_string(seed)), teachers, seed);
    for (std::size_t k = 0; k < std::size(kAblationVariants); ++k) {
      const Variant v = kAblationVariants[k];
      const SeedRun run = run_variant_seed(pg, cfg.train, v, seed, &teachers);
      const std::string id = run_id(variant_slug(v), seed);
      save_run(out / "runs" / id, run);
      metrics.add(id, run.label, run.record, seed);
      summary[k].report.add(seed, run.record.test);
    }
  }
  metrics.close();
  write_summary(out, summary);
}

SweepParam parse_sweep_param(const std::string& name) {
  if (name == "alpha") return SweepParam::Alpha;
  if (name == "tau" || name == "tau_fixed") return SweepParam::Tau;
  throw ConfigError("unknown sweep parameter '" + name + "' (expected alpha or tau)");
}

void cmd_sweep(const ExperimentConfig& cfg, SweepParam param,
               const std::optional<std::vector<double>>& grid, const fs::path& out, bool overwrite) {
  cfg.train.validate();
  struct Point {
    std::string label;
    std::string slug;
    TrainConfig train;
  };
  std::vector<Point> points;
  std::vector<double> values;
  if (grid) {
    values = *grid;
  } else if (param == SweepParam::Alpha) {
    for (int i = 1; i <= 9; ++i) values.push_back(i / 10.0);
  } else {
    values = {1.0, 2.0, 3.0, 4.0, 5.0};
  }
  if (values.empty()) throw ConfigError("sweep grid is empty");
  for (double v : values) {
    Point p{"", "", cfg.train};
    if (param == SweepParam::Alpha) {
      p.train.distill.alpha = v;
      p.label = "alpha=" + fixed(v, 2);
    } else {
      p.train.distill.use_node_temps = false;
      p.train.distill.fixed_tau = v;
      p.label = "tau=" + fixed(v, 2);
    }
    p.slug = p.label;
    for (char& c : p.slug)
      if (c == '=') c = '_';
    p.train.validate();
    points.push_back(std::move(p));
  }
  if (param == SweepParam::Tau) {
    Point p{"NST", "nst", cfg.train};
    p.train.distill.use_node_temps = true;
    points.push_back(std::move(p));
  }

  prepare_output(out, overwrite);
  const Graph g = materialize(cfg.data);
  const PreparedGraph pg = prepare_graph(g, cfg.train.standardize);
  KeyValue kv = run_manifest(cfg, g, "sweep");
  kv.set("sweep.parameter", param == SweepParam::Alpha ? "alpha" : "tau");
  std::string labels;
  for (const Point& p : points) labels += (labels.empty() ? "" : ";") + p.label;
  kv.set("sweep.points", labels);
  kv.write(out / "manifest.txt");

  MetricsFile metrics(out);
  std::vector<SummaryRow> summary;
  for (const Point& p : points) summary.push_back({p.label, {}});
  for (std::uint64_t seed : cfg.train.seeds) {
    progress("sweep seed " + std::to_string(seed));
    const TeacherPair teachers = train_all_teachers(pg, cfg.train, seed);
    for (std::size_t k = 0; k < points.size(); ++k) {
      SeedRun run = run_variant_seed(pg, points[k].train, Variant::FairDtd, seed, &teachers);
      run.label = points[k].label;
      const std::string id = run_id(points[k].slug, seed);
      save_run(out / "runs" / id, run);
      metrics.add(id, run.label, run.record, seed);
      summary[k].report.add(seed, run.record.test);
    }
  }
  metrics.close();
  write_summary(out, summary);
}

void cmd_partial_data_report(const ExperimentConfig& cfg, const fs::path& out, bool overwrite) {
  cfg.train.validate();
  prepare_output(out, overwrite);
  const Graph g = materialize(cfg.data);
  const PreparedGraph pg = prepare_graph(g, cfg.train.standardize);
  KeyValue kv = run_manifest(cfg, g, "partial-data-report");
  kv.set("strategy.full-data", "gcn on features and graph");
  kv.set("strategy.features-only", "mlp on features");
  kv.set("strategy.topology-only", "gcn on all-ones input");
  kv.write(out / "manifest.txt");

  progress("partial-data report");
  const std::vector<StrategyRuns> strategies = run_partial_data(pg, cfg.train);
  MetricsFile metrics(out);
  std::vector<SummaryRow> summary;
  for (const StrategyRuns& s : strategies) {
    for (const SeedRun& run : s.runs) {
      const std::string id = run_id(s.label, run.seed);
      write_record(out / "runs" / id / "record.csv", run.record);
      save_model(out / "runs" / id / "model", run.student, run.record.role, run.record, run.seed);
      metrics.add(id, s.label, run.record, run.seed);
    }
    summary.push_back({s.label, s.report()});
  }
  metrics.close();
  write_summary(out, summary);
}

namespace {

struct LoadedModel {
  ModelParams params;
  KeyValue manifest;
  const Matrix* input = nullptr;
};

LoadedModel load_for(const PreparedGraph& pg, const fs::path& checkpoint) {
  LoadedModel m;
  m.params = load_checkpoint(checkpoint, &m.manifest);
  const std::string role = m.manifest.get("role").value_or("");
  m.input = role == "structure_teacher" ? &pg.ones : &pg.features;
  if (m.params.in_dim != m.input->cols()) {
    throw CompatibilityError("checkpoint expects " + std::to_string(m.params.in_dim) +
                             " input columns, dataset has " + std::to_string(m.input->cols()));
  }
  if (m.params.out_dim != kNumClasses) {
    throw CompatibilityError("checkpoint has " + std::to_string(m.params.out_dim) +
                             " outputs, expected " + std::to_string(kNumClasses));
  }
  return m;
}

std::string split_name(const Graph& g, std::size_t i) {
  if (!g.splits.train.empty() && g.splits.train[i]) return "train";
  if (!g.splits.val.empty() && g.splits.val[i]) return "val";
  if (!g.splits.test.empty() && g.splits.test[i]) return "test";
  return "none";
}

}  // namespace

void cmd_export_embeddings(const ExperimentConfig& cfg, const fs::path& checkpoint,
                           const fs::path& out_file, bool overwrite) {
  std::error_code ec;
  if (fs::exists(out_file, ec) && !overwrite) {
    throw IoError(out_file.string() + " exists; pass --overwrite to replace it");
  }
  const Graph g = materialize(cfg.data);
  const PreparedGraph pg = prepare_graph(g, cfg.train.standardize);
  const LoadedModel m = load_for(pg, checkpoint);
  const ForwardValues fv = evaluate(m.params, pg.ops, *m.input);

  std::ofstream out = open_out(out_file);
  out << "id,s,y,split";
  for (std::size_t h = 0; h < fv.hidden.cols(); ++h) out << ",r" << h;
  for (std::size_t c = 0; c < fv.logits.cols(); ++c) out << ",z" << c;
  out << '\n';
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    out << g.node_ids[i] << ',' << g.sensitive[i] << ',' << g.labels[i] << ',' << split_name(g, i);
    for (double v : fv.hidden.row(i)) out << ',' << exact(v);
    for (double v : fv.logits.row(i)) out << ',' << exact(v);
    out << '\n';
  }
  close_checked(out, out_file);
  std::printf("wrote %zu embedding rows to %s\n", g.num_nodes(), out_file.string().c_str());
}

void cmd_evaluate(const ExperimentConfig& cfg, const fs::path& checkpoint,
                  const std::optional<fs::path>& out_file, bool overwrite) {
  const Graph g = materialize(cfg.data);
  const PreparedGraph pg = prepare_graph(g, cfg.train.standardize);
  const LoadedModel m = load_for(pg, checkpoint);
  const ForwardValues fv = evaluate(m.params, pg.ops, *m.input);
  const MetricRow row = evaluate_predictions(make_prediction_set(fv.logits, g, g.splits.test));
  std::optional<double> auc;
  try {
    const std::uint64_t seed = m.manifest.require_uint("seed");
    auc = sensitive_probe(fv.hidden, g.sensitive, derive_seed(seed, "probe")).auc;
  } catch (const UndefinedMetricError&) {
  }

  std::ostringstream text;
  text << "checkpoint,role,acc,delta_sp,delta_eo,probe_auc\n"
       << MetricsFile::csv_field(checkpoint.string()) << ',' << m.manifest.get("role").value_or(kNa) << ','
       << fixed(row.acc) << ',' << opt(row.delta_sp) << ',' << opt(row.delta_eo) << ',' << opt(auc)
       << '\n';
  std::fputs(text.str().c_str(), stdout);
  if (out_file) {
    std::error_code ec;
    if (fs::exists(*out_file, ec) && !overwrite) {
      throw IoError(out_file->string() + " exists; pass --overwrite to replace it");
    }
    std::ofstream out = open_out(*out_file);
    out << text.str();
    close_checked(out, *out_file);
  }
}

}  // namespace fairdtd::cli
