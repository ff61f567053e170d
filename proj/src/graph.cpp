#include "graphnewton/graph.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <sstream>

namespace gn {

CompGraph::CompGraph(std::vector<NodeSpec> nodes) : nodes_(std::move(nodes)) {
  const int n = static_cast<int>(nodes_.size());
  for (int i = 0; i < n; ++i) {
    if (!index_.count(nodes_[i].id)) index_[nodes_[i].id] = i;
  }
  parent_idx_.resize(n);
  children_.resize(n);
  parent_dim_.assign(n, 0);
  parent_off_.resize(n);
  obj_members_.resize(n);
  obj_member_off_.resize(n);
  for (int i = 0; i < n; ++i) {
    for (const auto& pid : nodes_[i].parents) {
      auto it = index_.find(pid);
      parent_idx_[i].push_back(it == index_.end() ? -1 : it->second);
    }
    int off = 0;
    for (int p : parent_idx_[i]) {
      parent_off_[i].push_back(off);
      off += (p >= 0) ? nodes_[p].dim : 0;
      if (p >= 0) children_[p].push_back(i);
    }
    parent_dim_[i] = off;
    obj_members_[i].push_back(i);
    obj_member_off_[i].push_back(0);
    int moff = nodes_[i].dim;
    for (size_t k = 0; k < parent_idx_[i].size(); ++k) {
      obj_members_[i].push_back(parent_idx_[i][k]);
      obj_member_off_[i].push_back(moff);
      moff += (parent_idx_[i][k] >= 0) ? nodes_[parent_idx_[i][k]].dim : 0;
    }
  }
  // Kahn's algorithm.
  std::vector<int> indeg(n, 0);
  for (int i = 0; i < n; ++i)
    for (int p : parent_idx_[i])
      if (p >= 0) ++indeg[i];
  std::deque<int> q;
  for (int i = 0; i < n; ++i)
    if (indeg[i] == 0) q.push_back(i);
  while (!q.empty()) {
    int v = q.front();
    q.pop_front();
    topo_.push_back(v);
    for (int c : children_[v])
      if (--indeg[c] == 0) q.push_back(c);
  }
  acyclic_ = (static_cast<int>(topo_.size()) == n);
  for (int i = 0; i < n; ++i) {
    if (parent_idx_[i].empty()) {
      input_off_.push_back(input_dim_);
      inputs_.push_back(i);
      input_dim_ += nodes_[i].dim;
    }
  }
}

int CompGraph::index(const NodeId& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? -1 : it->second;
}

std::vector<std::string> CompGraph::validate() const {
  std::vector<std::string> out;
  const int n = num_nodes();
  std::set<NodeId> seen;
  for (const auto& nd : nodes_) {
    if (!seen.insert(nd.id).second) out.push_back("duplicate node id: " + nd.id);
  }
  for (int i = 0; i < n; ++i) {
    const auto& nd = nodes_[i];
    if (nd.dim < 1) out.push_back("node " + nd.id + ": dim must be >= 1");
    std::set<NodeId> pseen;
    for (size_t k = 0; k < nd.parents.size(); ++k) {
      if (parent_idx_[i][k] < 0)
        out.push_back("node " + nd.id + ": unknown parent " + nd.parents[k]);
      if (!pseen.insert(nd.parents[k]).second)
        out.push_back("node " + nd.id + ": duplicate parent " + nd.parents[k]);
    }
    if (nd.parents.empty() && nd.func)
      out.push_back("node " + nd.id + ": input node must not have a function");
    if (!nd.parents.empty() && !nd.func)
      out.push_back("node " + nd.id + ": non-input node is missing a function");
    if (nd.func) {
      if (nd.func->input_dim() != parent_dim_[i])
        out.push_back("node " + nd.id + ": function input dim " +
                      std::to_string(nd.func->input_dim()) + " != parent dims " +
                      std::to_string(parent_dim_[i]));
      if (nd.func->output_dim() != nd.dim)
        out.push_back("node " + nd.id + ": function output dim " +
                      std::to_string(nd.func->output_dim()) + " != node dim " +
                      std::to_string(nd.dim));
    }
    if (nd.objective) {
      int want = nd.dim + parent_dim_[i];
      if (nd.objective->dim() != want)
        out.push_back("node " + nd.id + ": objective dim " +
                      std::to_string(nd.objective->dim()) + " != member dims " +
                      std::to_string(want));
    }
  }
  if (!acyclic_) out.push_back("graph contains a cycle");
  return out;
}

std::vector<std::string> validate_graph(const CompGraph& g) { return g.validate(); }

Vec concat_parents(const CompGraph& g, const StateAssignment& s, int i) {
  Vec x(g.parent_dim(i));
  const auto& ps = g.parents(i);
  for (size_t k = 0; k < ps.size(); ++k)
    x.segment(g.parent_offset(i, static_cast<int>(k)), g.dim(ps[k])) = s[ps[k]];
  return x;
}

Vec concat_objective_members(const CompGraph& g, const StateAssignment& s, int i) {
  Vec z(g.dim(i) + g.parent_dim(i));
  const auto& ms = g.objective_members(i);
  for (size_t k = 0; k < ms.size(); ++k)
    z.segment(g.objective_member_offset(i, static_cast<int>(k)), g.dim(ms[k])) = s[ms[k]];
  return z;
}

StateAssignment forward_eval(const CompGraph& g, const std::vector<Vec>& input_states) {
  const auto& ins = g.input_nodes();
  if (input_states.size() != ins.size())
    throw DimensionError("forward_eval: expected " + std::to_string(ins.size()) +
                         " input states, got " + std::to_string(input_states.size()));
  Vec stacked(g.total_input_dim());
  for (size_t k = 0; k < ins.size(); ++k) {
    if (input_states[k].size() != g.dim(ins[k]))
      throw DimensionError("forward_eval: input " + g.node(ins[k]).id + " has wrong dim");
    stacked.segment(g.input_offset(static_cast<int>(k)), g.dim(ins[k])) = input_states[k];
  }
  return forward_eval(g, stacked);
}

StateAssignment forward_eval(const CompGraph& g, const Vec& inputs) {
  if (!g.acyclic()) throw GraphError("forward_eval: graph has a cycle");
  if (inputs.size() != g.total_input_dim())
    throw DimensionError("forward_eval: stacked input dim mismatch");
  StateAssignment s(g.num_nodes());
  const auto& ins = g.input_nodes();
  for (size_t k = 0; k < ins.size(); ++k)
    s[ins[k]] = inputs.segment(g.input_offset(static_cast<int>(k)), g.dim(ins[k]));
  for (int v : g.topo_order()) {
    if (g.is_input(v)) continue;
    Vec x = concat_parents(g, s, v);
    Vec y = g.node(v).func->value(x);
    if (y.size() != g.dim(v))
      throw DimensionError("forward_eval: node " + g.node(v).id + " produced wrong dim");
    s[v] = std::move(y);
  }
  return s;
}

double objective_value(const CompGraph& g, const StateAssignment& s) {
  double total = 0.0;
  for (int i = 0; i < g.num_nodes(); ++i) {
    const auto& obj = g.node(i).objective;
    if (!obj) continue;
    total += obj->value(concat_objective_members(g, s, i));
  }
  return total;
}

Vec stack_inputs(const CompGraph& g, const StateAssignment& s) {
  Vec x(g.total_input_dim());
  const auto& ins = g.input_nodes();
  for (size_t k = 0; k < ins.size(); ++k)
    x.segment(g.input_offset(static_cast<int>(k)), g.dim(ins[k])) = s[ins[k]];
  return x;
}

double constraint_residual_inf(const CompGraph& g, const StateAssignment& s) {
  double r = 0.0;
  for (int v = 0; v < g.num_nodes(); ++v) {
    if (g.is_input(v)) continue;
    Vec h = g.node(v).func->value(concat_parents(g, s, v)) - s[v];
    r = std::max(r, h.lpNorm<Eigen::Infinity>());
  }
  return r;
}

}  // namespace gn
