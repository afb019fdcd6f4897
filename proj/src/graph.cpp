#include "paire/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace paire {
namespace {

std::string loc(const std::filesystem::path& path, Index line) {
  return path.string() + ":" + std::to_string(line);
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

// Strips `#` comments; returns whitespace-separated tokens.
std::vector<std::string> tokenize(const std::string& line) {
  std::string body = line.substr(0, line.find('#'));
  std::istringstream ss(body);
  std::vector<std::string> tokens;
  std::string tok;
  while (ss >> tok) tokens.push_back(tok);
  return tokens;
}

Index parse_index(const std::string& tok, const std::string& where) {
  Index value = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw Error(where + ": malformed integer '" + tok + "'");
  }
  return value;
}

double parse_real(const std::string& tok, const std::string& where) {
  try {
    std::size_t used = 0;
    double value = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return value;
  } catch (const std::exception&) {
    throw Error(where + ": malformed number '" + tok + "'");
  }
}

// Reads the `count dim` headed matrix format shared by features and labels.
Matrix read_headed_matrix(const std::filesystem::path& path, const char* what) {
  const auto lines = read_lines(path);
  Index row_line = 0;
  std::vector<std::string> header;
  while (row_line < static_cast<Index>(lines.size())) {
    header = tokenize(lines[row_line]);
    ++row_line;
    if (!header.empty()) break;
  }
  if (header.size() != 2) {
    throw Error(loc(path, row_line) + ": expected header 'count dim' for " + what);
  }
  const Index count = parse_index(header[0], loc(path, row_line));
  const Index dim = parse_index(header[1], loc(path, row_line));
  if (count < 0 || dim < 1) {
    throw Error(loc(path, row_line) + ": invalid " + what + " header " + lines[row_line - 1]);
  }
  Matrix m(count, dim);
  Index row = 0;
  for (Index i = row_line; i < static_cast<Index>(lines.size()); ++i) {
    const auto tokens = tokenize(lines[i]);
    if (tokens.empty()) continue;
    if (row >= count) {
      throw Error(path.string() + ": row-count mismatch: header declares " +
                  std::to_string(count) + " " + what + " rows but more follow (line " +
                  std::to_string(i + 1) + ")");
    }
    if (static_cast<Index>(tokens.size()) != dim) {
      throw Error(loc(path, i + 1) + ": expected " + std::to_string(dim) + " values, got " +
                  std::to_string(tokens.size()));
    }
    for (Index j = 0; j < dim; ++j) {
      m(row, j) = parse_real(tokens[j], loc(path, i + 1));
    }
    ++row;
  }
  if (row != count) {
    throw Error(path.string() + ": row-count mismatch: header declares " + std::to_string(count) +
                " " + what + " rows but file has " + std::to_string(row));
  }
  return m;
}

void check_binary(const Matrix& labels, const char* what) {
  for (Index i = 0; i < labels.rows(); ++i) {
    for (Index j = 0; j < labels.cols(); ++j) {
      const double v = labels(i, j);
      if (v != 0.0 && v != 1.0) {
        throw Error(std::string(what) + " row " + std::to_string(i) + " col " +
                    std::to_string(j) + ": non-binary label value " + std::to_string(v));
      }
    }
  }
}

std::uint64_t edge_key(NodeId u, NodeId v, bool directed) {
  if (!directed && u > v) std::swap(u, v);
  return PairSet::key(u, v);
}

}  // namespace

const std::vector<NodeId>& Graph::neighbors(NodeId u) const {
  if (u < 0 || u >= n_nodes) {
    throw Error("invalid node id " + std::to_string(u) + " (graph has " +
                std::to_string(n_nodes) + " nodes)");
  }
  return adjacency_[static_cast<std::size_t>(u)];
}

const std::vector<Index>& Graph::incident_edges(NodeId u) const {
  if (u < 0 || u >= n_nodes) {
    throw Error("invalid node id " + std::to_string(u));
  }
  return incidence_[static_cast<std::size_t>(u)];
}

void Graph::build_indexes() {
  adjacency_.assign(static_cast<std::size_t>(n_nodes), {});
  incidence_.assign(static_cast<std::size_t>(n_nodes), {});
  for (Index e = 0; e < static_cast<Index>(edges.size()); ++e) {
    const auto [u, v] = edges[static_cast<std::size_t>(e)];
    if (u != v) {  // self-loops are kept as edges but excluded from N(u)
      adjacency_[static_cast<std::size_t>(u)].push_back(v);
      if (!directed) adjacency_[static_cast<std::size_t>(v)].push_back(u);
    }
    incidence_[static_cast<std::size_t>(u)].push_back(e);
    if (u != v) incidence_[static_cast<std::size_t>(v)].push_back(e);
  }
  for (auto& nbrs : adjacency_) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }
}

Graph make_graph(Index n_nodes, std::vector<std::pair<NodeId, NodeId>> raw_edges, Matrix features,
                 std::optional<Matrix> node_labels, std::optional<Matrix> edge_labels,
                 bool directed) {
  Graph g;
  g.n_nodes = n_nodes;
  g.directed = directed;
  if (features.rows() != n_nodes) {
    throw Error("row-count mismatch: " + std::to_string(features.rows()) +
                " feature rows for " + std::to_string(n_nodes) + " nodes");
  }
  if (features.cols() < 1) throw Error("feature dimension must be >= 1");
  g.features = std::move(features);

  if (edge_labels && edge_labels->rows() != static_cast<Index>(raw_edges.size())) {
    throw Error("row-count mismatch: " + std::to_string(edge_labels->rows()) +
                " edge label rows for " + std::to_string(raw_edges.size()) + " edge lines");
  }

  std::unordered_map<std::uint64_t, Index> seen;
  std::vector<Index> kept_raw_index;
  Index duplicates = 0;
  Index label_conflicts = 0;
  for (Index i = 0; i < static_cast<Index>(raw_edges.size()); ++i) {
    const auto [u, v] = raw_edges[static_cast<std::size_t>(i)];
    if (u < 0 || u >= n_nodes || v < 0 || v >= n_nodes) {
      throw Error("edge " + std::to_string(i) + " (" + std::to_string(u) + "," +
                  std::to_string(v) + "): endpoint id out of range [0," +
                  std::to_string(n_nodes) + ")");
    }
    const auto key = edge_key(u, v, directed);
    auto [it, inserted] = seen.emplace(key, static_cast<Index>(g.edges.size()));
    if (inserted) {
      g.edges.emplace_back(u, v);
      kept_raw_index.push_back(i);
    } else {
      ++duplicates;
      if (edge_labels &&
          (edge_labels->row(i).array() !=
           edge_labels->row(kept_raw_index[static_cast<std::size_t>(it->second)]).array())
              .any()) {
        ++label_conflicts;
      }
    }
  }
  if (duplicates > 0) {
    g.load_warnings.push_back("deduplicated " + std::to_string(duplicates) +
                              " duplicate edge(s)");
  }
  if (label_conflicts > 0) {
    g.load_warnings.push_back(std::to_string(label_conflicts) +
                              " duplicate edge(s) carried a different label; "
                              "keeping first occurrence");
  }
  if (edge_labels) {
    Matrix kept(static_cast<Index>(kept_raw_index.size()), edge_labels->cols());
    for (Index e = 0; e < kept.rows(); ++e) {
      kept.row(e) = edge_labels->row(kept_raw_index[static_cast<std::size_t>(e)]);
    }
    g.edge_labels = std::move(kept);
  }

  if (node_labels) {
    if (node_labels->rows() != n_nodes) {
      throw Error("row-count mismatch: " + std::to_string(node_labels->rows()) +
                  " node label rows for " + std::to_string(n_nodes) + " nodes");
    }
    check_binary(*node_labels, "node_labels");
    g.node_labels = std::move(node_labels);
  }
  if (g.edge_labels) check_binary(*g.edge_labels, "edge_labels");

  g.build_indexes();
  return g;
}

Graph load_graph(const std::filesystem::path& edge_path,
                 const std::filesystem::path& feature_path,
                 const std::optional<std::filesystem::path>& node_label_path,
                 const std::optional<std::filesystem::path>& edge_label_path,
                 bool directed) {
  Matrix features = read_headed_matrix(feature_path, "feature");
  const Index n_nodes = features.rows();

  std::vector<std::pair<NodeId, NodeId>> raw_edges;
  const auto lines = read_lines(edge_path);
  for (Index i = 0; i < static_cast<Index>(lines.size()); ++i) {
    const auto tokens = tokenize(lines[i]);
    if (tokens.empty()) continue;
    if (tokens.size() != 2) {
      throw Error(loc(edge_path, i + 1) + ": malformed edge line, expected 'src<TAB>dst'");
    }
    const Index u = parse_index(tokens[0], loc(edge_path, i + 1));
    const Index v = parse_index(tokens[1], loc(edge_path, i + 1));
    if (u < 0 || u >= n_nodes || v < 0 || v >= n_nodes) {
      throw Error(loc(edge_path, i + 1) + ": endpoint id out of range [0," +
                  std::to_string(n_nodes) + ")");
    }
    raw_edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
  }

  std::optional<Matrix> node_labels;
  if (node_label_path) node_labels = read_headed_matrix(*node_label_path, "node label");
  std::optional<Matrix> edge_labels;
  if (edge_label_path) edge_labels = read_headed_matrix(*edge_label_path, "edge label");

  return make_graph(n_nodes, std::move(raw_edges), std::move(features), std::move(node_labels),
                    std::move(edge_labels), directed);
}

PairSet enumerate_pairs(const Graph& g) {
  PairSet ps;
  ps.out_pairs.assign(static_cast<std::size_t>(g.n_nodes), {});
  auto add = [&](NodeId u, NodeId v) {
    const auto key = PairSet::key(u, v);
    if (ps.index_.contains(key)) return;
    const Index id = static_cast<Index>(ps.pairs.size());
    ps.pairs.emplace_back(u, v);
    ps.index_.emplace(key, id);
    ps.out_pairs[static_cast<std::size_t>(u)].push_back(id);
  };
  for (const auto& [u, v] : g.edges) {
    add(u, v);
    if (!g.directed && u != v) add(v, u);
  }
  return ps;
}

std::vector<Index> pair_neighborhood(const Graph& g, const PairSet& ps, Index pair_id) {
  if (pair_id < 0 || pair_id >= ps.size()) {
    throw Error("unknown pair id " + std::to_string(pair_id));
  }
  const auto [u, v] = ps.pairs[static_cast<std::size_t>(pair_id)];
  const Index reverse_id = ps.find(v, u);
  std::vector<Index> result;
  auto collect = [&](NodeId source) {
    for (NodeId w : g.neighbors(source)) {
      const Index id = ps.find(source, w);
      if (id >= 0 && id != pair_id && id != reverse_id) result.push_back(id);
    }
  };
  collect(u);
  if (v != u) collect(v);
  std::sort(result.begin(), result.end());
  result.erase(std::unique(result.begin(), result.end()), result.end());
  return result;
}

}  // namespace paire
