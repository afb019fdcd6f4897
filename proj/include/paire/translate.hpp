#pragma once

#include <string>

#include "paire/graph.hpp"
#include "paire/types.hpp"

namespace paire {

enum class Translator { Sum, Mean, Max, Min };

Translator translator_from_string(const std::string& name);
std::string to_string(Translator t);

// z_u = T over the pair embeddings with u as source. Nodes with no outgoing
// pairs map to the zero vector. Result is independent of pair row order.
Matrix pairs_to_nodes(const Matrix& pair_embeddings, const PairSet& ps, Index n_nodes,
                      Translator translator);

}  // namespace paire
