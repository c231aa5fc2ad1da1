// fairdtd: dual-teacher distillation for fair node classification.
#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "config.hpp"

namespace {

using namespace fairdtd;
using namespace fairdtd::cli;
namespace fs = std::filesystem;

// Flag overrides shared by the training commands. Flags win over the config.
struct Overrides {
  std::string config;
  std::optional<std::string> output;
  bool overwrite = false;
  std::optional<std::size_t> epochs;
  std::optional<std::vector<std::uint64_t>> seeds;
  std::optional<double> alpha;
  std::optional<std::string> student;
  std::optional<double> student_lr;
  bool vanilla = false;

  void attach(CLI::App* cmd, bool with_vanilla) {
    cmd->add_option("-c,--config", config, "Experiment config (JSON)")->required();
    cmd->add_option("-o,--output", output, "Output directory");
    cmd->add_flag("--overwrite", overwrite, "Replace results in an existing output directory");
    cmd->add_option("--epochs", epochs, "Epochs per phase");
    cmd->add_option("--seeds", seeds, "Seed list")->delimiter(',');
    cmd->add_option("--alpha", alpha, "Feature/structure teacher balance");
    cmd->add_option("--student", student, "Student encoder: gcn or gin");
    cmd->add_option("--student-lr", student_lr, "Student learning rate");
    if (with_vanilla) cmd->add_flag("--vanilla", vanilla, "Train the plain student without teachers");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig cfg = load_config(config);
    if (epochs) cfg.train.epochs = *epochs;
    if (seeds) cfg.train.seeds = *seeds;
    if (alpha) cfg.train.distill.alpha = *alpha;
    if (student) cfg.train.student_kind = parse_encoder_kind(*student);
    if (student_lr) cfg.train.student_lr = *student_lr;
    if (vanilla) cfg.vanilla = true;
    cfg.train.validate();
    return cfg;
  }

  fs::path out_dir(const ExperimentConfig& cfg, const std::string& command) const {
    std::optional<fs::path> flag;
    if (output) flag = fs::path(*output);
    return resolve_output(flag, cfg.output, command);
  }
};

struct GenDataArgs {
  SyntheticSpec spec = standard_fixture();
  SplitFractions fractions;
  std::uint64_t split_seed = 1;
  std::optional<std::string> output;
  bool overwrite = false;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FairDTD: dual-teacher knowledge distillation for fair node classification"};
  app.require_subcommand(1);

  GenDataArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-data", "Generate a biased synthetic graph");
  gen_cmd->add_option("--n", gen.spec.num_nodes, "Number of nodes");
  gen_cmd->add_option("--rho", gen.spec.label_sensitive_corr, "Label-sensitive correlation in [0, 1]");
  gen_cmd->add_option("--balance", gen.spec.sensitive_balance, "P(S = 1)");
  gen_cmd->add_option("--p-intra", gen.spec.p_intra, "Edge probability within a sensitive group");
  gen_cmd->add_option("--p-inter", gen.spec.p_inter, "Edge probability across groups");
  gen_cmd->add_option("--label-homophily", gen.spec.label_homophily,
                      "Fraction of cross-label edges removed");
  gen_cmd->add_option("--features", gen.spec.num_features, "Feature dimension");
  gen_cmd->add_option("--separation", gen.spec.class_separation, "Class signal magnitude");
  gen_cmd->add_option("--leakage", gen.spec.sensitive_leakage, "Sensitive signal magnitude");
  gen_cmd->add_option("--noise", gen.spec.noise_std, "Feature noise standard deviation");
  gen_cmd->add_option("--seed", gen.spec.seed, "Generator seed");
  gen_cmd->add_option("--split-seed", gen.split_seed, "Split seed");
  gen_cmd->add_option("--train", gen.fractions.train, "Train fraction");
  gen_cmd->add_option("--val", gen.fractions.val, "Validation fraction");
  gen_cmd->add_option("--test", gen.fractions.test, "Test fraction");
  gen_cmd->add_option("-o,--output", gen.output, "Output directory");
  gen_cmd->add_flag("--overwrite", gen.overwrite, "Replace existing files");

  Overrides train_o, ablate_o, sweep_o, partial_o;
  CLI::App* train_cmd = app.add_subcommand("train", "Teachers then student over all seeds");
  train_o.attach(train_cmd, true);
  CLI::App* ablate_cmd = app.add_subcommand("ablate", "FairDTD and its four ablations");
  ablate_o.attach(ablate_cmd, false);
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Sweep alpha or a fixed temperature");
  sweep_o.attach(sweep_cmd, false);
  std::string sweep_param;
  std::optional<std::vector<double>> sweep_grid;
  sweep_cmd->add_option("--param", sweep_param, "alpha or tau")->required();
  sweep_cmd->add_option("--grid", sweep_grid, "Comma-separated grid")->delimiter(',');
  CLI::App* partial_cmd =
      app.add_subcommand("partial-data-report", "Full data vs features only vs topology only");
  partial_o.attach(partial_cmd, false);

  std::string export_config, export_checkpoint, export_out;
  bool export_overwrite = false;
  CLI::App* export_cmd = app.add_subcommand("export-embeddings", "Write per-node R and Z");
  export_cmd->add_option("-c,--config", export_config, "Experiment config (JSON)")->required();
  export_cmd->add_option("--checkpoint", export_checkpoint, "Checkpoint stem")->required();
  export_cmd->add_option("-o,--output", export_out, "Embedding CSV")->required();
  export_cmd->add_flag("--overwrite", export_overwrite, "Replace an existing file");

  std::string eval_config, eval_checkpoint;
  std::optional<std::string> eval_out;
  bool eval_overwrite = false;
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "Test metrics of a checkpoint");
  eval_cmd->add_option("-c,--config", eval_config, "Experiment config (JSON)")->required();
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "Checkpoint stem")->required();
  eval_cmd->add_option("-o,--output", eval_out, "Write the metrics row here");
  eval_cmd->add_flag("--overwrite", eval_overwrite, "Replace an existing file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*gen_cmd) {
      std::optional<fs::path> flag;
      if (gen.output) flag = fs::path(*gen.output);
      cmd_gen_data(gen.spec, gen.fractions, gen.split_seed, resolve_output(flag, std::nullopt, "gen-data"),
                   gen.overwrite);
    } else if (*train_cmd) {
      const ExperimentConfig cfg = train_o.resolve();
      cmd_train(cfg, train_o.out_dir(cfg, "train"), train_o.overwrite);
    } else if (*ablate_cmd) {
      const ExperimentConfig cfg = ablate_o.resolve();
      cmd_ablate(cfg, ablate_o.out_dir(cfg, "ablate"), ablate_o.overwrite);
    } else if (*sweep_cmd) {
      const ExperimentConfig cfg = sweep_o.resolve();
      cmd_sweep(cfg, parse_sweep_param(sweep_param), sweep_grid, sweep_o.out_dir(cfg, "sweep"),
                sweep_o.overwrite);
    } else if (*partial_cmd) {
      const ExperimentConfig cfg = partial_o.resolve();
      cmd_partial_data_report(cfg, partial_o.out_dir(cfg, "partial-data-report"), partial_o.overwrite);
    } else if (*export_cmd) {
      cmd_export_embeddings(load_config(export_config), export_checkpoint, export_out, export_overwrite);
    } else if (*eval_cmd) {
      std::optional<fs::path> out;
      if (eval_out) out = fs::path(*eval_out);
      cmd_evaluate(load_config(eval_config), eval_checkpoint, out, eval_overwrite);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "fairdtd: error: %s\n", e.what());
    return exit_code_for(e);
  }
  return kExitOk;
}
