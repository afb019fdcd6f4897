#include "paire/translate.hpp"

#include <algorithm>

namespace paire {

Translator translator_from_string(const std::string& name) {
  if (name == "sum") return Translator::Sum;
  if (name == "mean") return Translator::Mean;
  if (name == "max") return Translator::Max;
  if (name == "min") return Translator::Min;
  throw Error("unknown translator '" + name + "' (expected sum|mean|max|min)");
}

std::string to_string(Translator t) {
  switch (t) {
    case Translator::Sum: return "sum";
    case Translator::Mean: return "mean";
    case Translator::Max: return "max";
    case Translator::Min: return "min";
  }
  throw std::logic_error("unreachable");
}

Matrix pairs_to_nodes(const Matrix& pair_embeddings, const PairSet& ps, Index n_nodes,
                      Translator translator) {
  if (pair_embeddings.rows() != ps.size()) {
    throw Error("pairs_to_nodes: embedding rows (" + std::to_string(pair_embeddings.rows()) +
                ") do not match pair count (" + std::to_string(ps.size()) + ")");
  }
  const Index dim = pair_embeddings.cols();
  Matrix nodes = Matrix::Zero(n_nodes, dim);
  for (Index u = 0; u < n_nodes; ++u) {
    const auto& out = ps.out_pairs[static_cast<std::size_t>(u)];
    if (out.empty()) continue;  // isolated node: zero vector
    auto row = nodes.row(u);
    row = pair_embeddings.row(out[0]);
    for (std::size_t k = 1; k < out.size(); ++k) {
      const auto pair_row = pair_embeddings.row(out[k]);
      switch (translator) {
        case Translator::Sum:
        case Translator::Mean:
          row += pair_row;
          break;
        case Translator::Max:
          row = row.cwiseMax(pair_row);
          break;
        case Translator::Min:
          row = row.cwiseMin(pair_row);
          break;
      }
    }
    if (translator == Translator::Mean) row /= static_cast<double>(out.size());
  }
  return nodes;
}

}  // namespace paire
