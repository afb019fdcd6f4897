#pragma once

#include "paire/graph.hpp"
#include "paire/types.hpp"

namespace paire {

// Per-pair input distributions for the two reconstruction tasks. Rows are
// aligned with PairSet order; every row sums to 1 and is nonnegative.
struct PairFeatureTable {
  Matrix ego;  // |P(G)| x F
  Matrix agg;  // |P(G)| x F

  Index size() const { return ego.rows(); }
  Index feature_width() const { return ego.cols(); }  // F = 2d
};

// Concat(x_u, x_v), raw (unnormalized). Order matters: the pair is ordered.
Vector ego_features(const Graph& g, NodeId u, NodeId v);

// Concat(mean of x_i over N(u), mean of x_j over N(v)); an empty neighborhood
// contributes a zero half-vector.
Vector agg_features(const Graph& g, NodeId u, NodeId v);

// L1 normalization with an additive epsilon floor so the result is a strictly
// positive distribution. Throws on negative entries: shift or scale features
// upstream (the CLI exposes --shift-nonneg).
Vector to_distribution(const Vector& raw);

inline constexpr double kDistributionEpsilon = 1e-8;

PairFeatureTable build_dataset(const Graph& g, const PairSet& ps, int workers = 1);

// Column-wise min shift so all features are nonnegative (the --shift-nonneg
// preprocessing). Columns with nonnegative minimum are left untouched.
Matrix shift_nonnegative(const Matrix& features);

}  // namespace paire
