#pragma once

#include <nlohmann/json.hpp>

#include "graphnewton/graph.hpp"

namespace gn {

/// A parsed problem file: graph plus initial input states.
struct Problem {
  CompGraph graph;
  Vec inputs_init;  // stacked over input_nodes() order
};

/// Parses `{nodes: [{id, dim, parents, func, objective}], inputs_init: {...}}`.
/// Throws GraphError with a node-level message on schema or validation errors.
Problem parse_problem(const nlohmann::json& doc);
Problem load_problem(const std::string& path);

/// Serializes a registry-built graph back to the problem-file schema.
/// Requires every func/objective to carry registry descriptors.
nlohmann::json serialize_problem(const CompGraph& g, const Vec& inputs_init);

/// Canonical string for round-trip identity checks.
std::string problem_fingerprint(const nlohmann::json& doc);

// --- instance families for the benchmark harness ------------------------------

/// Scalar-state LQR-style chain as a problem document (width-2 moralization).
nlohmann::json make_oc_chain_doc(int horizon, unsigned seed = 0);
/// Random tree-shaped DAG, dims 1..3, tanh/affine functions, quadratic losses.
nlohmann::json make_random_tree_doc(int num_nodes, unsigned seed);
/// Layered grid whose moralized width grows with k.
nlohmann::json make_grid_doc(int layers, int k, unsigned seed = 0);
/// Random DAG (not necessarily a tree) for small-graph test corpora.
nlohmann::json make_random_dag_doc(int num_nodes, unsigned seed);

}  // namespace gn
