#include "paire/features.hpp"

#include "paire/parallel.hpp"

namespace paire {

Vector ego_features(const Graph& g, NodeId u, NodeId v) {
  const Index d = g.feature_dim();
  Vector out(2 * d);
  out.head(d) = g.features.row(u).transpose();
  out.tail(d) = g.features.row(v).transpose();
  return out;
}

namespace {

// Mean of neighbor features; zero vector when N(u) is empty.
Vector neighbor_mean(const Graph& g, NodeId u) {
  const auto& nbrs = g.neighbors(u);
  Vector mean = Vector::Zero(g.feature_dim());
  if (nbrs.empty()) return mean;
  for (NodeId w : nbrs) mean += g.features.row(w).transpose();
  mean /= static_cast<double>(nbrs.size());
  return mean;
}

}  // namespace

Vector agg_features(const Graph& g, NodeId u, NodeId v) {
  const Index d = g.feature_dim();
  Vector out(2 * d);
  out.head(d) = neighbor_mean(g, u);
  out.tail(d) = neighbor_mean(g, v);
  return out;
}

Vector to_distribution(const Vector& raw) {
  for (Index i = 0; i < raw.size(); ++i) {
    if (raw[i] < 0.0) {
      throw Error("to_distribution: negative entry " + std::to_string(raw[i]) + " at index " +
                  std::to_string(i) + "; features must be nonnegative (see --shift-nonneg)");
    }
  }
  Vector shifted = raw.array() + kDistributionEpsilon;
  return shifted / shifted.sum();
}

PairFeatureTable build_dataset(const Graph& g, const PairSet& ps, int workers) {
  const Index n = ps.size();
  const Index f = 2 * g.feature_dim();
  PairFeatureTable table;
  table.ego.resize(n, f);
  table.agg.resize(n, f);

  // Per-node neighbor means are shared by every pair touching the node;
  // precompute them once.
  Matrix node_means(g.n_nodes, g.feature_dim());
  parallel_for(g.n_nodes, workers, [&](Index begin, Index end) {
    for (Index u = begin; u < end; ++u) {
      node_means.row(u) = neighbor_mean(g, static_cast<NodeId>(u)).transpose();
    }
  });

  parallel_for(n, workers, [&](Index begin, Index end) {
    const Index d = g.feature_dim();
    Vector raw(f);
    for (Index p = begin; p < end; ++p) {
      const auto [u, v] = ps.pairs[static_cast<std::size_t>(p)];
      raw.head(d) = g.features.row(u).transpose();
      raw.tail(d) = g.features.row(v).transpose();
      try {
        table.ego.row(p) = to_distribution(raw).transpose();
      } catch (const Error& e) {
        throw Error("pair " + std::to_string(p) + " ego features: " + e.what());
      }
      raw.head(d) = node_means.row(u).transpose();
      raw.tail(d) = node_means.row(v).transpose();
      try {
        table.agg.row(p) = to_distribution(raw).transpose();
      } catch (const Error& e) {
        throw Error("pair " + std::to_string(p) + " agg features: " + e.what());
      }
    }
  });
  return table;
}

Matrix shift_nonnegative(const Matrix& features) {
  Matrix shifted = features;
  for (Index j = 0; j < shifted.cols(); ++j) {
    const double min = shifted.col(j).minCoeff();
    if (min < 0.0) shifted.col(j).array() -= min;
  }
  return shifted;
}

}  // namespace paire
