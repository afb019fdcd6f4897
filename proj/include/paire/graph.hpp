#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "paire/types.hpp"

namespace paire {

// Immutable after load. Edges are stored deduplicated in first-occurrence
// order; for undirected graphs (u,v) and (v,u) denote the same edge.
// Adjacency lists hold N(u): sorted, self-loops dropped, all neighbors for
// undirected input and out-neighbors for directed input.
struct Graph {
  Index n_nodes = 0;
  bool directed = false;
  std::vector<std::pair<NodeId, NodeId>> edges;
  Matrix features;                      // n_nodes x d
  std::optional<Matrix> node_labels;    // n_nodes x L_n, entries in {0,1}
  std::optional<Matrix> edge_labels;    // |edges| x L_e, rows aligned with `edges`
  std::vector<std::string> load_warnings;

  Index feature_dim() const { return features.cols(); }

  const std::vector<NodeId>& neighbors(NodeId u) const;

  // Incident edge ids per node (both endpoints), for edge-adjacency queries.
  const std::vector<Index>& incident_edges(NodeId u) const;

  void build_indexes();

 private:
  std::vector<std::vector<NodeId>> adjacency_;
  std::vector<std::vector<Index>> incidence_;
};

// The ordered pairs P(G). For undirected input every non-loop edge expands to
// both orientations; pair ids are assigned in edge order and are stable.
struct PairSet {
  std::vector<std::pair<NodeId, NodeId>> pairs;
  std::vector<std::vector<Index>> out_pairs;  // pair ids with the node as source

  Index size() const { return static_cast<Index>(pairs.size()); }

  // -1 when (u,v) is not a pair.
  Index find(NodeId u, NodeId v) const {
    auto it = index_.find(key(u, v));
    return it == index_.end() ? -1 : it->second;
  }

  static std::uint64_t key(NodeId u, NodeId v) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) |
           static_cast<std::uint32_t>(v);
  }

  std::unordered_map<std::uint64_t, Index> index_;
};

Graph load_graph(const std::filesystem::path& edge_path,
                 const std::filesystem::path& feature_path,
                 const std::optional<std::filesystem::path>& node_label_path,
                 const std::optional<std::filesystem::path>& edge_label_path,
                 bool directed);

// In-memory construction used by tests and the python bindings. Performs the
// same validation and dedup as load_graph.
Graph make_graph(Index n_nodes, std::vector<std::pair<NodeId, NodeId>> edges, Matrix features,
                 std::optional<Matrix> node_labels, std::optional<Matrix> edge_labels,
                 bool directed);

PairSet enumerate_pairs(const Graph& g);

// All pairs (u,u_i), (v,v_j) of Def-style 1-hop neighborhoods, excluding the
// pair itself and its reverse. Returned sorted by pair id.
std::vector<Index> pair_neighborhood(const Graph& g, const PairSet& ps, Index pair_id);

}  // namespace paire
