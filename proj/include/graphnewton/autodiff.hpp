#pragma once

#include "graphnewton/graph.hpp"

namespace gn {

/// Forward/backward tangent pair of a Hessian-vector sweep.
struct TangentAssignment {
  std::vector<Vec> dstate;  // delta S_v, forward linearization
  std::vector<Vec> dgrad;   // delta[d f / d S_v]
};

/// Total derivatives d f / d S_v for every node, by the backward recursion in
/// reverse topological order. The restriction to input nodes is the gradient
/// of the substituted objective.
DualAssignment reverse_grad(const CompGraph& g, const StateAssignment& s);

/// Stacks the input-node entries of a dual (or tangent) assignment.
Vec stack_input_duals(const CompGraph& g, const std::vector<Vec>& per_node);

/// Hessian-vector product by one forward-backward sweep. delta_inputs is
/// stacked over input_nodes() order; duals must come from reverse_grad(g, s).
TangentAssignment hessian_vector(const CompGraph& g, const StateAssignment& s,
                                 const DualAssignment& duals, const Vec& delta_inputs);

/// Dense Hessian over the stacked input dims, one hessian_vector call per unit
/// vector. Returned symmetrized; *asymmetry (if given) receives
/// ||H - H^T|| / max(1, ||H||) before symmetrization.
Mat accumulate_dense_hessian(const CompGraph& g, const StateAssignment& s,
                             double* asymmetry = nullptr);

}  // namespace gn
