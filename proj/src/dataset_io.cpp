#include "fairdtd/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <unordered_map>

#include "fairdtd/error.hpp"
#include "fairdtd/keyvalue.hpp"

namespace fairdtd {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    std::string_view f = line.substr(start, pos == std::string_view::npos ? line.npos : pos - start);
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t')) f.remove_suffix(1);
    out.push_back(f);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::ifstream open_input(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

std::unordered_map<std::int64_t, std::uint32_t> index_of(const Graph& g) {
  std::unordered_map<std::int64_t, std::uint32_t> idx;
  idx.reserve(g.num_nodes());
  for (std::uint32_t i = 0; i < g.num_nodes(); ++i) idx.emplace(g.node_ids[i], i);
  return idx;
}

}  // namespace

Graph load_dataset(const std::filesystem::path& node_file, const std::filesystem::path& edge_file,
                   const DatasetSchema& schema,
                   const std::optional<std::filesystem::path>& splits_file) {
  Graph g;
  auto in = open_input(node_file);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(node_file.string() + " is empty");
  const auto header = split_fields(line);
  auto find_col = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw SchemaError(node_file.string() + " has no column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t id_col = find_col(schema.id_column);
  const std::size_t s_col = find_col(schema.sensitive_column);
  const std::size_t y_col = find_col(schema.label_column);
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == id_col || c == s_col || c == y_col) continue;
    if (std::find(schema.ignore_columns.begin(), schema.ignore_columns.end(), header[c]) !=
        schema.ignore_columns.end())
      continue;
    feature_cols.push_back(c);
  }
  if (feature_cols.empty()) throw SchemaError(node_file.string() + " has no feature columns");

  std::vector<double> feats;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_fields(line);
    auto where = [&] { return node_file.string() + ":" + std::to_string(lineno); };
    if (fields.size() != header.size()) {
      throw SchemaError(where() + " has " + std::to_string(fields.size()) + " fields, header has " +
                        std::to_string(header.size()));
    }
    std::int64_t id = 0;
    if (!parse_number(fields[id_col], id)) throw SchemaError(where() + ": bad node id");
    double s = 0.0;
    if (!parse_number(fields[s_col], s) || (s != 0.0 && s != 1.0)) {
      throw DomainError(where() + ": sensitive attribute must be 0 or 1, got '" +
                        std::string(fields[s_col]) + "'");
    }
    int y = kUnlabeled;
    if (!fields[y_col].empty()) {
      double yv = 0.0;
      if (!parse_number(fields[y_col], yv) || yv != static_cast<int>(yv)) {
        throw SchemaError(where() + ": bad label '" + std::string(fields[y_col]) + "'");
      }
      y = static_cast<int>(yv);
      if (y < 0) y = kUnlabeled;
      else if (y > 1) {
        if (!schema.clip_labels) throw DomainError(where() + ": label must be 0/1 or -1");
        y = 1;
      }
    }
    for (std::size_t c : feature_cols) {
      double v = 0.0;
      if (!parse_number(fields[c], v)) {
        throw SchemaError(where() + ": bad value in column '" + std::string(header[c]) + "'");
      }
      feats.push_back(v);
    }
    g.node_ids.push_back(id);
    g.sensitive.push_back(static_cast<int>(s));
    g.labels.push_back(y);
  }
  g.features = Matrix(g.node_ids.size(), feature_cols.size(), std::move(feats));

  const auto idx = index_of(g);
  if (idx.size() != g.num_nodes()) throw SchemaError(node_file.string() + " has duplicate ids");

  auto ein = open_input(edge_file);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  lineno = 0;
  while (std::getline(ein, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), '\t', ',');
    std::replace(line.begin(), line.end(), ' ', ',');
    auto fields = split_fields(line);
    fields.erase(std::remove(fields.begin(), fields.end(), std::string_view{}), fields.end());
    std::int64_t a = 0, b = 0;
    if (fields.size() != 2 || !parse_number(fields[0], a) || !parse_number(fields[1], b)) {
      if (lineno == 1) continue;  // header
      throw SchemaError(edge_file.string() + ":" + std::to_string(lineno) + ": expected src,dst");
    }
    const auto ia = idx.find(a);
    const auto ib = idx.find(b);
    if (ia == idx.end() || ib == idx.end()) {
      throw ReferentialError(edge_file.string() + ":" + std::to_string(lineno) +
                             ": endpoint " + std::to_string(ia == idx.end() ? a : b) +
                             " is not a node");
    }
    edges.emplace_back(ia->second, ib->second);
  }
  g.edges = canonical_edges(std::move(edges));
  if (splits_file) g.splits = read_splits_file(g, *splits_file);
  g.validate();
  return g;
}

void write_node_file(const Graph& g, const std::filesystem::path& path,
                     const DatasetSchema& schema) {
  auto out = open_output(path);
  out << schema.id_column;
  for (std::size_t c = 0; c < g.num_features(); ++c) out << ",f" << c;
  out << ',' << schema.sensitive_column << ',' << schema.label_column << '\n';
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    out << g.node_ids[i];
    for (double v : g.features.row(i)) out << ',' << format_double(v);
    out << ',' << g.sensitive[i] << ',' << g.labels[i] << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void write_edge_file(const Graph& g, const std::filesystem::path& path) {
  auto out = open_output(path);
  for (const auto& [u, v] : g.edges) out << g.node_ids[u] << ',' << g.node_ids[v] << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

void write_splits_file(const Graph& g, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "id,split\n";
  auto flag = [](const Mask& m, std::size_t i) { return !m.empty() && m[i]; };
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    const char* s = flag(g.splits.train, i) ? "train"
                    : flag(g.splits.val, i) ? "val"
                    : flag(g.splits.test, i) ? "test"
                                             : "none";
    out << g.node_ids[i] << ',' << s << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

Splits read_splits_file(const Graph& g, const std::filesystem::path& path) {
  auto in = open_input(path);
  const auto idx = index_of(g);
  Splits sp{Mask(g.num_nodes(), 0), Mask(g.num_nodes(), 0), Mask(g.num_nodes(), 0)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 || line.empty() || line == "\r") continue;
    const auto f = split_fields(line);
    std::int64_t id = 0;
    if (f.size() != 2 || !parse_number(f[0], id)) {
      throw SchemaError(path.string() + ":" + std::to_string(lineno) + ": expected id,split");
    }
    const auto it = idx.find(id);
    if (it == idx.end()) {
      throw ReferentialError(path.string() + ": unknown node id " + std::to_string(id));
    }
    if (f[1] == "train") sp.train[it->second] = 1;
    else if (f[1] == "val") sp.val[it->second] = 1;
    else if (f[1] == "test") sp.test[it->second] = 1;
    else if (f[1] != "none") throw SchemaError(path.string() + ": unknown split '" + std::string(f[1]) + "'");
  }
  return sp;
}

}  // namespace fairdtd
