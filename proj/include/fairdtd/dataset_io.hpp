#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fairdtd/graph.hpp"

namespace fairdtd {

/// Column roles in a node file. Every other column is a feature.
struct DatasetSchema {
  std::string id_column = "id";
  std::string sensitive_column = "sensitive";
  std::string label_column = "label";
  std::vector<std::string> ignore_columns;
  /// Map labels > 1 to 1 (multi-valued raw labels such as Pokec's working
  /// field). Negative labels always mean unlabeled.
  bool clip_labels = false;
};

/// Reads a node file (`id,<features...>,<sensitive>,<label>` with header)
/// and an edge file (`src,dst` per line, optional header). Edges are
/// symmetrized and deduplicated; self-loops are dropped. When
/// `splits_file` is given, masks are read from it, otherwise they stay empty.
Graph load_dataset(const std::filesystem::path& node_file,
                   const std::filesystem::path& edge_file, const DatasetSchema& schema,
                   const std::optional<std::filesystem::path>& splits_file = std::nullopt);

void write_node_file(const Graph& g, const std::filesystem::path& path,
                     const DatasetSchema& schema = {});
void write_edge_file(const Graph& g, const std::filesystem::path& path);
/// `id,split` rows with split in {train, val, test, none}.
void write_splits_file(const Graph& g, const std::filesystem::path& path);
Splits read_splits_file(const Graph& g, const std::filesystem::path& path);

}  // namespace fairdtd
