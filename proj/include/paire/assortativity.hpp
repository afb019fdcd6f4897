#pragma once

#include <optional>
#include <vector>

#include "paire/graph.hpp"
#include "paire/types.hpp"

namespace paire {

// Class-mixing counts over ordered pairs of adjacent elements. Counts are kept
// as integers so the assortativity coefficient is exact.
struct MixingMatrix {
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counts;  // K x K
  std::int64_t total = 0;

  // Normalized fractions e_ij; entries sum to 1.
  Eigen::MatrixXd e() const;
};

enum class MixingScope { Node, Edge };

// Node scope: one entry per ordered pair (source label, target label).
// Edge scope: one entry per ordered pair of distinct edges sharing an endpoint.
MixingMatrix mixing_matrix(const Graph& g, const PairSet& ps,
                           const std::vector<int>& element_class, MixingScope scope);

// (Tr(e) - sum_i a_i b_i) / (1 - sum_i a_i b_i); nullopt when all mass sits in
// a single class (degenerate denominator).
std::optional<double> global_assortativity(const MixingMatrix& m);

// Fraction of neighbors sharing u's class; nullopt for isolated nodes.
std::optional<double> local_node_assortativity(const Graph& g,
                                               const std::vector<int>& node_class, NodeId u);

// Fraction of edges adjacent to e (sharing an endpoint) with the same class;
// nullopt when the edge has no adjacent edges.
std::optional<double> local_edge_assortativity(const Graph& g,
                                               const std::vector<int>& edge_class, Index edge);

double cosine_similarity(const Vector& a, const Vector& b);

// Fixed-thirds stratification of local coefficients: [0,1/3), [1/3,2/3), [2/3,1].
enum class AssortativityBucket { Low = 0, Mid = 1, High = 2 };

AssortativityBucket assortativity_bucket(double value);

struct Stratification {
  std::vector<AssortativityBucket> assignment;  // aligned with the defined inputs
  std::array<Index, 3> bucket_sizes = {0, 0, 0};
};

Stratification stratify_by_local_assortativity(const std::vector<double>& values);

// Per-label-dimension report. Single-label (one-hot) matrices produce one
// dimension over argmax classes; genuine multi-label matrices produce one
// 2-class dimension per column.
struct AssortativityDimension {
  std::string name;
  std::optional<double> global;
  std::vector<double> local_values;  // defined values only
  Index undefined_count = 0;         // isolated nodes / edges with no adjacent edge
};

struct AssortativityReport {
  std::vector<AssortativityDimension> dimensions;
};

bool is_one_hot(const Matrix& labels);

// Class ids per element: argmax for one-hot rows; {0,1} for a single column.
std::vector<int> label_column_classes(const Matrix& labels, Index column);
std::vector<int> argmax_classes(const Matrix& labels);

AssortativityReport node_assortativity_report(const Graph& g, const PairSet& ps);
AssortativityReport edge_assortativity_report(const Graph& g);

}  // namespace paire
