#include "graphnewton/kkt.hpp"

#include <Eigen/Dense>
#include <ostream>

namespace gn {

namespace {

void add_block(std::map<std::pair<int, int>, Mat>& Q, int a, int b, const Mat& blk) {
  Mat m = (a <= b) ? blk : Mat(blk.transpose());
  auto key = std::minmax(a, b);
  auto it = Q.find(key);
  if (it == Q.end())
    Q.emplace(key, std::move(m));
  else
    it->second += m;
}

}  // namespace

KktSystem assemble_kkt(const CompGraph& g, const StateAssignment& s, const DualAssignment& duals) {
  const int n = g.num_nodes();
  double smax = 0.0;
  for (int v = 0; v < n; ++v) smax = std::max(smax, s[v].lpNorm<Eigen::Infinity>());
  double hres = constraint_residual_inf(g, s);
  if (hres > 1e-10 * (1.0 + smax))
    throw InfeasibleError("assemble_kkt: infeasible point, ||h||_inf = " + std::to_string(hres));

  KktSystem k;
  k.g = &g;
  k.primal_offset.resize(n);
  k.mult_offset.assign(n, -1);
  for (int v = 0; v < n; ++v) {
    k.primal_offset[v] = k.primal_dim;
    k.primal_dim += g.dim(v);
  }
  for (int v = 0; v < n; ++v) {
    if (g.is_input(v)) continue;
    k.mult_offset[v] = k.mult_dim;
    k.mult_dim += g.dim(v);
  }
  k.rhs = Vec::Zero(k.total_dim());

  // Local-objective contributions: Hessian blocks over member pairs, and the
  // partial-gradient right-hand side. Partial (not total) derivatives here;
  // the lambda = df/dS convention makes the two KKT derivations agree.
  for (int o = 0; o < n; ++o) {
    const auto& obj = g.node(o).objective;
    if (!obj) continue;
    Vec z = concat_objective_members(g, s, o);
    Vec grad = obj->gradient(z);
    Mat H = obj->hessian(z);
    const auto& ms = g.objective_members(o);
    for (size_t a = 0; a < ms.size(); ++a) {
      int oa = g.objective_member_offset(o, static_cast<int>(a));
      k.rhs.segment(k.primal_offset[ms[a]], g.dim(ms[a])) -= grad.segment(oa, g.dim(ms[a]));
      for (size_t b = a; b < ms.size(); ++b) {
        int ob = g.objective_member_offset(o, static_cast<int>(b));
        add_block(k.Q, ms[a], ms[b], H.block(oa, ob, g.dim(ms[a]), g.dim(ms[b])));
      }
    }
  }

  // Constraint curvature lambda^T d2 Phi_d and the Jacobian block rows.
  for (int d = 0; d < n; ++d) {
    if (g.is_input(d)) continue;
    Vec x = concat_parents(g, s, d);
    Mat W = g.node(d).func->weighted_hessian(x, duals[d]);
    const auto& ps = g.parents(d);
    for (size_t a = 0; a < ps.size(); ++a) {
      int pa = g.parent_offset(d, static_cast<int>(a));
      for (size_t b = a; b < ps.size(); ++b) {
        int pb = g.parent_offset(d, static_cast<int>(b));
        add_block(k.Q, ps[a], ps[b], W.block(pa, pb, g.dim(ps[a]), g.dim(ps[b])));
      }
    }
    Mat J = g.node(d).func->jacobian(x);
    KktSystem::ConstraintRow row;
    row.node = d;
    for (size_t a = 0; a < ps.size(); ++a)
      row.blocks.emplace_back(ps[a],
                              J.middleCols(g.parent_offset(d, static_cast<int>(a)), g.dim(ps[a])));
    row.blocks.emplace_back(d, -Mat::Identity(g.dim(d), g.dim(d)));
    k.constraints.push_back(std::move(row));
    // rhs bottom block is -h = 0 at a feasible point; keep the literal value.
    Vec h = g.node(d).func->value(x) - s[d];
    k.rhs.segment(k.primal_dim + k.mult_offset[d], g.dim(d)) = -h;
  }
  return k;
}

Mat KktSystem::dense() const {
  Mat K = Mat::Zero(total_dim(), total_dim());
  for (const auto& [key, blk] : Q) {
    auto [a, b] = key;
    K.block(primal_offset[a], primal_offset[b], blk.rows(), blk.cols()) = blk;
    if (a != b)
      K.block(primal_offset[b], primal_offset[a], blk.cols(), blk.rows()) = blk.transpose();
  }
  for (const auto& row : constraints) {
    int r = primal_dim + mult_offset[row.node];
    for (const auto& [v, blk] : row.blocks) {
      K.block(r, primal_offset[v], blk.rows(), blk.cols()) = blk;
      K.block(primal_offset[v], r, blk.cols(), blk.rows()) = blk.transpose();
    }
  }
  return K;
}

Vec KktSystem::apply(const Vec& x) const {
  Vec y = Vec::Zero(total_dim());
  for (const auto& [key, blk] : Q) {
    auto [a, b] = key;
    y.segment(primal_offset[a], blk.rows()) += blk * x.segment(primal_offset[b], blk.cols());
    if (a != b)
      y.segment(primal_offset[b], blk.cols()) +=
          blk.transpose() * x.segment(primal_offset[a], blk.rows());
  }
  for (const auto& row : constraints) {
    int r = primal_dim + mult_offset[row.node];
    for (const auto& [v, blk] : row.blocks) {
      y.segment(r, blk.rows()) += blk * x.segment(primal_offset[v], blk.cols());
      y.segment(primal_offset[v], blk.cols()) += blk.transpose() * x.segment(r, blk.rows());
    }
  }
  return y;
}

void KktSystem::add_primal_regularization(double mu) {
  for (int v = 0; v < g->num_nodes(); ++v)
    add_block(Q, v, v, mu * Mat::Identity(g->dim(v), g->dim(v)));
}

void KktSystem::write_matrix_market(std::ostream& os) const {
  os << "%%MatrixMarket matrix coordinate real symmetric\n";
  std::vector<std::tuple<int, int, double>> entries;
  auto push = [&](int r, int c, double v) {
    if (v == 0.0) return;
    if (r >= c)
      entries.emplace_back(r, c, v);
    else
      entries.emplace_back(c, r, v);
  };
  for (const auto& [key, blk] : Q) {
    auto [a, b] = key;
    for (int i = 0; i < blk.rows(); ++i)
      for (int j = 0; j < blk.cols(); ++j) {
        int r = primal_offset[a] + i, c = primal_offset[b] + j;
        if (a == b && j > i) continue;  // diagonal block: lower triangle only
        push(r, c, blk(i, j));
      }
  }
  for (const auto& row : constraints) {
    int r0 = primal_dim + mult_offset[row.node];
    for (const auto& [v, blk] : row.blocks)
      for (int i = 0; i < blk.rows(); ++i)
        for (int j = 0; j < blk.cols(); ++j) push(r0 + i, primal_offset[v] + j, blk(i, j));
  }
  os << total_dim() << " " << total_dim() << " " << entries.size() << "\n";
  for (const auto& [r, c, v] : entries) os << (r + 1) << " " << (c + 1) << " " << v << "\n";
}

KktSolution split_solution(const KktSystem& k, const Vec& sol) {
  const CompGraph& g = *k.g;
  KktSolution out;
  out.full = sol;
  out.dstate.resize(g.num_nodes());
  out.lambda.resize(g.num_nodes());
  for (int v = 0; v < g.num_nodes(); ++v) {
    out.dstate[v] = sol.segment(k.primal_offset[v], g.dim(v));
    if (k.mult_offset[v] >= 0)
      out.lambda[v] = sol.segment(k.primal_dim + k.mult_offset[v], g.dim(v));
  }
  return out;
}

KktSolution dense_kkt_solve(const KktSystem& k) {
  Mat K = k.dense();
  Eigen::FullPivLU<Mat> lu(K);
  if (!lu.isInvertible())
    throw SingularMatrixError("dense_kkt_solve: singular KKT matrix", static_cast<int>(lu.rank()));
  return split_solution(k, lu.solve(k.rhs));
}

Vec extract_input_step(const KktSystem& k, const KktSolution& sol) {
  const CompGraph& g = *k.g;
  Vec out(g.total_input_dim());
  const auto& ins = g.input_nodes();
  for (size_t p = 0; p < ins.size(); ++p)
    out.segment(g.input_offset(static_cast<int>(p)), g.dim(ins[p])) = sol.dstate[ins[p]];
  return out;
}

}  // namespace gn
