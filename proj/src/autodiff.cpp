#include "graphnewton/autodiff.hpp"

namespace gn {

DualAssignment reverse_grad(const CompGraph& g, const StateAssignment& s) {
  const int n = g.num_nodes();
  DualAssignment dual(n);
  for (int v = 0; v < n; ++v) dual[v] = Vec::Zero(g.dim(v));

  // Partial derivatives of the local objectives, scattered to their members.
  for (int o = 0; o < n; ++o) {
    const auto& obj = g.node(o).objective;
    if (!obj) continue;
    Vec grad = obj->gradient(concat_objective_members(g, s, o));
    const auto& ms = g.objective_members(o);
    for (size_t k = 0; k < ms.size(); ++k)
      dual[ms[k]] += grad.segment(g.objective_member_offset(o, static_cast<int>(k)), g.dim(ms[k]));
  }

  // Backward recursion: when d is visited its dual is complete.
  const auto& topo = g.topo_order();
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    int d = *it;
    if (g.is_input(d)) continue;
    Mat J = g.node(d).func->jacobian(concat_parents(g, s, d));
    const auto& ps = g.parents(d);
    for (size_t k = 0; k < ps.size(); ++k) {
      int v = ps[k];
      dual[v] += J.middleCols(g.parent_offset(d, static_cast<int>(k)), g.dim(v)).transpose() * dual[d];
    }
  }
  return dual;
}

Vec stack_input_duals(const CompGraph& g, const std::vector<Vec>& per_node) {
  Vec out(g.total_input_dim());
  const auto& ins = g.input_nodes();
  for (size_t k = 0; k < ins.size(); ++k)
    out.segment(g.input_offset(static_cast<int>(k)), g.dim(ins[k])) = per_node[ins[k]];
  return out;
}

TangentAssignment hessian_vector(const CompGraph& g, const StateAssignment& s,
                                 const DualAssignment& duals, const Vec& delta_inputs) {
  if (delta_inputs.size() != g.total_input_dim())
    throw DimensionError("hessian_vector: delta_inputs dim mismatch");
  const int n = g.num_nodes();
  TangentAssignment t;
  t.dstate.resize(n);
  t.dgrad.resize(n);
  for (int v = 0; v < n; ++v) t.dgrad[v] = Vec::Zero(g.dim(v));

  const auto& ins = g.input_nodes();
  for (size_t k = 0; k < ins.size(); ++k)
    t.dstate[ins[k]] = delta_inputs.segment(g.input_offset(static_cast<int>(k)), g.dim(ins[k]));

  auto concat_dstate_parents = [&](int i) {
    Vec x(g.parent_dim(i));
    const auto& ps = g.parents(i);
    for (size_t k = 0; k < ps.size(); ++k)
      x.segment(g.parent_offset(i, static_cast<int>(k)), g.dim(ps[k])) = t.dstate[ps[k]];
    return x;
  };

  // Forward sweep: linearized state propagation. Jacobians are cached for the
  // backward sweep so each node function is differentiated exactly once.
  std::vector<Mat> jac(n);
  for (int v : g.topo_order()) {
    if (g.is_input(v)) continue;
    jac[v] = g.node(v).func->jacobian(concat_parents(g, s, v));
    t.dstate[v] = jac[v] * concat_dstate_parents(v);
  }

  // Curvature contributions, independent of dgrad: objective Hessians and
  // lambda-weighted function Hessians.
  for (int o = 0; o < n; ++o) {
    const auto& obj = g.node(o).objective;
    if (!obj) continue;
    const auto& ms = g.objective_members(o);
    Vec dz(obj->dim());
    for (size_t k = 0; k < ms.size(); ++k)
      dz.segment(g.objective_member_offset(o, static_cast<int>(k)), g.dim(ms[k])) = t.dstate[ms[k]];
    Vec w = obj->hessian(concat_objective_members(g, s, o)) * dz;
    for (size_t k = 0; k < ms.size(); ++k)
      t.dgrad[ms[k]] += w.segment(g.objective_member_offset(o, static_cast<int>(k)), g.dim(ms[k]));
  }
  for (int d = 0; d < n; ++d) {
    if (g.is_input(d)) continue;
    Mat W = g.node(d).func->weighted_hessian(concat_parents(g, s, d), duals[d]);
    Vec y = W * concat_dstate_parents(d);
    const auto& ps = g.parents(d);
    for (size_t k = 0; k < ps.size(); ++k)
      t.dgrad[ps[k]] += y.segment(g.parent_offset(d, static_cast<int>(k)), g.dim(ps[k]));
  }

  // Backward sweep.
  const auto& topo = g.topo_order();
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    int d = *it;
    if (g.is_input(d)) continue;
    const auto& ps = g.parents(d);
    for (size_t k = 0; k < ps.size(); ++k) {
      int v = ps[k];
      t.dgrad[v] +=
          jac[d].middleCols(g.parent_offset(d, static_cast<int>(k)), g.dim(v)).transpose() * t.dgrad[d];
    }
  }
  return t;
}

Mat accumulate_dense_hessian(const CompGraph& g, const StateAssignment& s, double* asymmetry) {
  const int N = g.total_input_dim();
  DualAssignment duals = reverse_grad(g, s);
  Mat H(N, N);
  for (int j = 0; j < N; ++j) {
    Vec e = Vec::Zero(N);
    e[j] = 1.0;
    H.col(j) = stack_input_duals(g, hessian_vector(g, s, duals, e).dgrad);
  }
  double denom = std::max(1.0, H.norm());
  if (asymmetry) *asymmetry = (H - H.transpose()).norm() / denom;
  return 0.5 * (H + H.transpose().eval());
}

}  // namespace gn
