#pragma once

#include "graphnewton/graph.hpp"

namespace gn {

/// Undirected hypergraph over graph nodes (one vertex per node; supernode
/// granularity, block dims live inside each vertex).
struct Hypergraph {
  std::vector<NodeId> vertex_ids;          // position = vertex index
  std::vector<std::vector<int>> edges;     // sorted vertex index lists
  int num_vertices() const { return static_cast<int>(vertex_ids.size()); }
  /// Adjacency of the primal (2-section) graph.
  std::vector<std::vector<int>> primal_adjacency() const;
};

/// One hyperedge {v} u pa(v) per non-input node, plus singleton edges for
/// input nodes carrying objectives.
Hypergraph moralize(const CompGraph& g);

enum class OrderingHeuristic { MinFill, MinDegree };

using EliminationOrdering = std::vector<int>;

/// Greedy ordering on the primal graph; ties broken by smallest vertex id.
EliminationOrdering elimination_order(const Hypergraph& h, OrderingHeuristic heuristic);

struct TreeDecomposition {
  std::vector<std::vector<int>> bags;       // sorted vertex index lists
  std::vector<std::pair<int, int>> edges;   // tree edges over bag ids
  int width = 0;                            // max |bag| - 1
  int num_bags() const { return static_cast<int>(bags.size()); }
  std::vector<std::vector<int>> adjacency() const;
};

/// Fill-in elimination along `order`; subset bags merged into neighbors.
TreeDecomposition decomposition_from_ordering(const Hypergraph& h, const EliminationOrdering& order);

/// Checks vertex cover, edge cover, and running intersection; empty iff valid.
std::vector<std::string> validate_decomposition(const Hypergraph& h, const TreeDecomposition& td);

/// Edge-separation check for tree edge `edge_index`: no hyperedge of
/// H[V \ (chi(x) n chi(y))] connects the two sides.
bool check_edge_separation(const Hypergraph& h, const TreeDecomposition& td, int edge_index);

/// Exact tree-width by dynamic programming over vertex subsets. Intended for
/// test corpora; requires num_vertices() <= 25.
int exact_treewidth(const Hypergraph& h);

}  // namespace gn
