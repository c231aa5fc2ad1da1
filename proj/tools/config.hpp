#pragma once

#include <filesystem>
#include <optional>

#include <json.hpp>

#include "fairdtd/dataset_io.hpp"
#include "fairdtd/graph.hpp"
#include "fairdtd/keyvalue.hpp"
#include "fairdtd/splits.hpp"
#include "fairdtd/synthetic.hpp"
#include "fairdtd/trainer.hpp"

namespace fairdtd::cli {

struct DatasetPaths {
  std::filesystem::path nodes;
  std::filesystem::path edges;
  std::optional<std::filesystem::path> splits;
  DatasetSchema schema;
};

/// Exactly one of `synthetic` / `dataset` is set.
struct DataSource {
  std::optional<SyntheticSpec> synthetic;
  std::optional<DatasetPaths> dataset;
  SplitFractions fractions;
  std::uint64_t split_seed = 1;
};

struct ExperimentConfig {
  DataSource data;
  TrainConfig train;
  bool vanilla = false;
  std::optional<std::filesystem::path> output;
};

/// Strict parse: unknown keys, wrong types and a missing or doubled data
/// source throw ConfigError. Relative dataset paths resolve against `base`.
ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base);
ExperimentConfig load_config(const std::filesystem::path& file);

/// Echo of every resolved setting.
void to_manifest(const ExperimentConfig& cfg, KeyValue& kv);

/// Generates or loads the graph and attaches splits (from the splits file
/// when given, otherwise seeded stratified splits).
Graph materialize(const DataSource& src);

}  // namespace fairdtd::cli
