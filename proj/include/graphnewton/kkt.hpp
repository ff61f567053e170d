#pragma once

#include <iosfwd>
#include <map>

#include "graphnewton/graph.hpp"

namespace gn {

/// Block-sparse symmetric indefinite KKT system. Variable layout: primal
/// blocks per node in graph order, then one multiplier block per non-input
/// node, in graph order.
struct KktSystem {
  const CompGraph* g = nullptr;

  std::vector<int> primal_offset;  // per node
  int primal_dim = 0;
  std::vector<int> mult_offset;  // per node; -1 for inputs
  int mult_dim = 0;

  /// Lagrangian Hessian blocks, keyed (a, b) with a <= b; block is dim(a) x dim(b).
  std::map<std::pair<int, int>, Mat> Q;

  /// One block row per non-input node d: blocks d Phi_d / d S_v for v in pa(d)
  /// plus -I in column d.
  struct ConstraintRow {
    int node;                                // d
    std::vector<std::pair<int, Mat>> blocks;  // (column node, block), includes (d, -I)
  };
  std::vector<ConstraintRow> constraints;

  Vec rhs;  // (-partial grads ; -h), length primal_dim + mult_dim

  int total_dim() const { return primal_dim + mult_dim; }
  Mat dense() const;
  /// K * x without forming the dense matrix.
  Vec apply(const Vec& x) const;
  /// Adds mu * I to every primal diagonal block.
  void add_primal_regularization(double mu);
  /// Matrix-Market coordinate symmetric export (1-based, lower triangle).
  void write_matrix_market(std::ostream& os) const;
};

/// Assembles the structured KKT system at a feasible point with duals fixed to
/// the total derivatives from reverse_grad. Throws InfeasibleError when the
/// constraint residual exceeds 1e-10 * (1 + ||S||_inf).
KktSystem assemble_kkt(const CompGraph& g, const StateAssignment& s, const DualAssignment& duals);

struct KktSolution {
  Vec full;                 // stacked (delta S ; lambda+)
  std::vector<Vec> dstate;  // per node
  std::vector<Vec> lambda;  // per node (empty for inputs)
};

KktSolution split_solution(const KktSystem& k, const Vec& sol);

/// Dense pivoted factorization oracle. Throws SingularMatrixError.
KktSolution dense_kkt_solve(const KktSystem& k);

/// Projects the primal part of a KKT solution onto the stacked input dims.
Vec extract_input_step(const KktSystem& k, const KktSolution& sol);

}  // namespace gn
