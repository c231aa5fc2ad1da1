#include "config.hpp"

#include <fstream>
#include <set>
#include <string>

#include "fairdtd/error.hpp"
#include "fairdtd/random.hpp"

namespace fairdtd::cli {

using nlohmann::json;

namespace {

// Rejects keys outside `allowed` so that typos never pass silently.
void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <class T>
void read_optional(const json& obj, const char* key, std::optional<T>& out, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return;
  T v{};
  read(obj, key, v, where);
  out = v;
}

SyntheticSpec parse_synthetic(const json& j) {
  check_keys(j,
             {"num_nodes", "sensitive_balance", "label_sensitive_corr", "p_intra", "p_inter",
              "label_homophily", "num_features", "class_separation", "sensitive_leakage",
              "noise_std", "seed"},
             "data.synthetic");
  SyntheticSpec s = standard_fixture();
  const std::string w = "data.synthetic";
  read(j, "num_nodes", s.num_nodes, w);
  read(j, "sensitive_balance", s.sensitive_balance, w);
  read(j, "label_sensitive_corr", s.label_sensitive_corr, w);
  read(j, "p_intra", s.p_intra, w);
  read(j, "p_inter", s.p_inter, w);
  read(j, "label_homophily", s.label_homophily, w);
  read(j, "num_features", s.num_features, w);
  read(j, "class_separation", s.class_separation, w);
  read(j, "sensitive_leakage", s.sensitive_leakage, w);
  read(j, "noise_std", s.noise_std, w);
  read(j, "seed", s.seed, w);
  s.validate();
  return s;
}

DatasetPaths parse_dataset(const json& j, const std::filesystem::path& base) {
  check_keys(j,
             {"nodes", "edges", "splits", "id_column", "sensitive_column", "label_column",
              "ignore_columns", "clip_labels"},
             "data.dataset");
  const std::string w = "data.dataset";
  DatasetPaths d;
  std::string nodes, edges;
  read(j, "nodes", nodes, w);
  read(j, "edges", edges, w);
  if (nodes.empty() || edges.empty()) throw ConfigError("data.dataset needs 'nodes' and 'edges'");
  auto resolve = [&base](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
  };
  d.nodes = resolve(nodes);
  d.edges = resolve(edges);
  std::optional<std::string> splits;
  read_optional(j, "splits", splits, w);
  if (splits) d.splits = resolve(*splits);
  read(j, "id_column", d.schema.id_column, w);
  read(j, "sensitive_column", d.schema.sensitive_column, w);
  read(j, "label_column", d.schema.label_column, w);
  read(j, "ignore_columns", d.schema.ignore_columns, w);
  read(j, "clip_labels", d.schema.clip_labels, w);
  return d;
}

void parse_distill(const json& j, DistillConfig& d) {
  check_keys(j,
             {"alpha", "fixed_tau", "tau_min", "tau_max", "use_feature_teacher",
              "use_structure_teacher", "use_mid_loss", "use_node_temps", "kl_direction"},
             "distill");
  const std::string w = "distill";
  read(j, "alpha", d.alpha, w);
  read(j, "fixed_tau", d.fixed_tau, w);
  read(j, "tau_min", d.tau_min, w);
  read(j, "tau_max", d.tau_max, w);
  read(j, "use_feature_teacher", d.use_feature_teacher, w);
  read(j, "use_structure_teacher", d.use_structure_teacher, w);
  read(j, "use_mid_loss", d.use_mid_loss, w);
  read(j, "use_node_temps", d.use_node_temps, w);
  std::string dir(to_string(d.kl_direction));
  read(j, "kl_direction", dir, w);
  d.kl_direction = parse_kl_direction(dir);
}

void parse_train(const json& j, ExperimentConfig& cfg) {
  check_keys(j,
             {"epochs", "hidden", "student", "student_lr", "teacher_lr", "seeds", "standardize",
              "input_dropout", "vanilla"},
             "train");
  const std::string w = "train";
  TrainConfig& t = cfg.train;
  read(j, "epochs", t.epochs, w);
  read(j, "hidden", t.hidden, w);
  std::string kind(to_string(t.student_kind));
  read(j, "student", kind, w);
  t.student_kind = parse_encoder_kind(kind);
  read_optional(j, "student_lr", t.student_lr, w);
  read_optional(j, "teacher_lr", t.teacher_lr, w);
  read(j, "seeds", t.seeds, w);
  read(j, "standardize", t.standardize, w);
  read(j, "input_dropout", t.input_dropout, w);
  read(j, "vanilla", cfg.vanilla, w);
}

}  // namespace

ExperimentConfig config_from_json(const json& j, const std::filesystem::path& base) {
  check_keys(j, {"data", "split", "train", "distill", "output"}, "config");
  ExperimentConfig cfg;
  if (!j.contains("data")) throw ConfigError("config needs a 'data' section");
  const json& data = j.at("data");
  check_keys(data, {"synthetic", "dataset"}, "data");
  const bool has_syn = data.contains("synthetic"), has_ds = data.contains("dataset");
  if (has_syn == has_ds) throw ConfigError("data needs exactly one of 'synthetic' or 'dataset'");
  if (has_syn) cfg.data.synthetic = parse_synthetic(data.at("synthetic"));
  if (has_ds) cfg.data.dataset = parse_dataset(data.at("dataset"), base);

  if (j.contains("split")) {
    const json& s = j.at("split");
    check_keys(s, {"train", "val", "test", "seed"}, "split");
    read(s, "train", cfg.data.fractions.train, "split");
    read(s, "val", cfg.data.fractions.val, "split");
    read(s, "test", cfg.data.fractions.test, "split");
    read(s, "seed", cfg.data.split_seed, "split");
  }
  if (j.contains("train")) parse_train(j.at("train"), cfg);
  if (j.contains("distill")) parse_distill(j.at("distill"), cfg.train.distill);
  std::optional<std::string> out;
  read_optional(j, "output", out, "config");
  if (out) {
    std::filesystem::path p(*out);
    cfg.output = p.is_absolute() ? p : base / p;
  }
  cfg.train.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read config " + file.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + file.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j, file.parent_path());
}

void to_manifest(const ExperimentConfig& cfg, KeyValue& kv) {
  if (cfg.data.synthetic) {
    kv.set("data.source", "synthetic");
    cfg.data.synthetic->to_manifest(kv);
  } else {
    const DatasetPaths& d = *cfg.data.dataset;
    kv.set("data.source", "dataset");
    kv.set("data.nodes", d.nodes.string());
    kv.set("data.edges", d.edges.string());
    kv.set("data.splits", d.splits ? d.splits->string() : std::string("generated"));
    kv.set("data.id_column", d.schema.id_column);
    kv.set("data.sensitive_column", d.schema.sensitive_column);
    kv.set("data.label_column", d.schema.label_column);
    kv.set("data.clip_labels", d.schema.clip_labels);
    kv.set("prng", std::string(Rng::kAlgorithm));
    kv.set("prng.seeding", std::string(Rng::kSeeding));
  }
  kv.set("split.train", cfg.data.fractions.train);
  kv.set("split.val", cfg.data.fractions.val);
  kv.set("split.test", cfg.data.fractions.test);
  kv.set("split.seed", static_cast<unsigned long long>(cfg.data.split_seed));
  kv.set("split.stratified_by", "label,sensitive");

  const TrainConfig& t = cfg.train;
  kv.set("train.epochs", t.epochs);
  kv.set("train.hidden", t.hidden);
  kv.set("train.student", std::string(to_string(t.student_kind)));
  kv.set("train.student_lr", t.resolved_student_lr());
  kv.set("train.teacher_lr", t.resolved_teacher_lr());
  std::string seeds;
  for (std::uint64_t s : t.seeds) seeds += (seeds.empty() ? "" : ",") + std::to_string(s);
  kv.set("train.seeds", seeds);
  kv.set("train.seed_streams", "splitmix64(seed ^ fnv1a64(phase))");
  kv.set("train.standardize", t.standardize);
  kv.set("train.input_dropout", t.input_dropout);
  kv.set("train.vanilla", cfg.vanilla);
  kv.set("train.selection", "best validation accuracy");

  const DistillConfig& d = t.distill;
  kv.set("distill.alpha", d.alpha);
  kv.set("distill.fixed_tau", d.fixed_tau);
  kv.set("distill.tau_min", d.tau_min);
  kv.set("distill.tau_max", d.tau_max);
  kv.set("distill.use_feature_teacher", d.use_feature_teacher);
  kv.set("distill.use_structure_teacher", d.use_structure_teacher);
  kv.set("distill.use_mid_loss", d.use_mid_loss);
  kv.set("distill.use_node_temps", d.use_node_temps);
  kv.set("distill.kl_direction", std::string(to_string(d.kl_direction)));
}

Graph materialize(const DataSource& src) {
  Graph g;
  if (src.synthetic) {
    g = generate_biased_sbm(*src.synthetic);
  } else {
    const DatasetPaths& d = *src.dataset;
    g = load_dataset(d.nodes, d.edges, d.schema, d.splits);
    if (d.splits) return g;
  }
  g.splits = make_splits(g, src.fractions, src.split_seed);
  g.validate();
  return g;
}

}  // namespace fairdtd::cli
