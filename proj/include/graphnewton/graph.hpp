#pragma once

#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "graphnewton/types.hpp"

namespace gn {

/// Node function Phi_v: maps the concatenation of parent states to the node state.
/// Parent blocks are concatenated in the order of NodeSpec::parents; that
/// ordering fixes the column layout of Jacobian blocks everywhere downstream.
class NodeFunction {
 public:
  virtual ~NodeFunction() = default;
  virtual int input_dim() const = 0;
  virtual int output_dim() const = 0;
  virtual Vec value(const Vec& x) const = 0;
  /// output_dim x input_dim
  virtual Mat jacobian(const Vec& x) const = 0;
  /// sum_k lambda_k * Hessian(Phi_k), a symmetric input_dim x input_dim matrix.
  virtual Mat weighted_hessian(const Vec& x, const Vec& lambda) const = 0;
};

/// Local objective l_v over the concatenation of states of [v, parents...].
class LocalObjective {
 public:
  virtual ~LocalObjective() = default;
  virtual int dim() const = 0;
  virtual double value(const Vec& z) const = 0;
  virtual Vec gradient(const Vec& z) const = 0;
  virtual Mat hessian(const Vec& z) const = 0;
};

struct NodeSpec {
  NodeId id;
  int dim = 0;
  std::vector<NodeId> parents;
  std::shared_ptr<const NodeFunction> func;       // present iff parents nonempty
  std::shared_ptr<const LocalObjective> objective;  // optional
  // Registry descriptors, kept for problem-file serialization. Empty for
  // graphs built programmatically with ad-hoc functions.
  std::string func_name;
  std::shared_ptr<const nlohmann::json> func_params;
  std::string objective_name;
  std::shared_ptr<const nlohmann::json> objective_params;
};

/// Computational graph (G, {Phi_v}, {l_v}). Immutable after construction;
/// topological order is computed once and cached. Construction never throws
/// on structural violations -- run validate() to obtain them as data.
class CompGraph {
 public:
  explicit CompGraph(std::vector<NodeSpec> nodes);

  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  const NodeSpec& node(int i) const { return nodes_[i]; }
  const std::vector<NodeSpec>& nodes() const { return nodes_; }

  /// -1 if unknown.
  int index(const NodeId& id) const;
  bool is_input(int i) const { return nodes_[i].parents.empty(); }
  const std::vector<int>& parents(int i) const { return parent_idx_[i]; }
  const std::vector<int>& children(int i) const { return children_[i]; }

  bool acyclic() const { return acyclic_; }
  /// Valid only if acyclic().
  const std::vector<int>& topo_order() const { return topo_; }
  /// Input (parentless) nodes in graph order.
  const std::vector<int>& input_nodes() const { return inputs_; }

  int dim(int i) const { return nodes_[i].dim; }
  /// Sum of parent dims of node i.
  int parent_dim(int i) const { return parent_dim_[i]; }
  /// Offset of the k-th parent block within the concatenated parent vector.
  int parent_offset(int i, int k) const { return parent_off_[i][k]; }
  int total_input_dim() const { return input_dim_; }
  /// Offset of input node i (by position in input_nodes()) within the stacked input vector.
  int input_offset(int pos) const { return input_off_[pos]; }

  /// Members of node i's local objective: [i, parents...], with offsets.
  const std::vector<int>& objective_members(int i) const { return obj_members_[i]; }
  int objective_member_offset(int i, int k) const { return obj_member_off_[i][k]; }

  std::vector<std::string> validate() const;

 private:
  std::vector<NodeSpec> nodes_;
  std::unordered_map<NodeId, int> index_;
  std::vector<std::vector<int>> parent_idx_;
  std::vector<std::vector<int>> children_;
  std::vector<int> topo_;
  std::vector<int> inputs_;
  std::vector<int> parent_dim_;
  std::vector<std::vector<int>> parent_off_;
  std::vector<std::vector<int>> obj_members_;
  std::vector<std::vector<int>> obj_member_off_;
  std::vector<int> input_off_;
  int input_dim_ = 0;
  bool acyclic_ = false;
};

/// Per-node state vectors, indexed like the graph's node list.
using StateAssignment = std::vector<Vec>;
/// Per-node total derivatives d f / d S_v (equivalently the multipliers).
using DualAssignment = std::vector<Vec>;

std::vector<std::string> validate_graph(const CompGraph& g);

/// Concatenation of the parent states of node i.
Vec concat_parents(const CompGraph& g, const StateAssignment& s, int i);
/// Concatenation of objective-member states [i, parents...] of node i.
Vec concat_objective_members(const CompGraph& g, const StateAssignment& s, int i);

/// Forward evaluation: inputs stacked over input_nodes() order.
StateAssignment forward_eval(const CompGraph& g, const Vec& inputs);
StateAssignment forward_eval(const CompGraph& g, const std::vector<Vec>& input_states);

double objective_value(const CompGraph& g, const StateAssignment& s);

/// Stacked input states of an assignment.
Vec stack_inputs(const CompGraph& g, const StateAssignment& s);

/// Constraint residuals h_v = Phi_v(S_pa(v)) - S_v for all non-input v; inf norm.
double constraint_residual_inf(const CompGraph& g, const StateAssignment& s);

}  // namespace gn
