#include "graphnewton/mpsolver.hpp"

#include <algorithm>
#include <deque>
#include <unordered_map>

namespace gn {

DistributedBlocks distribute_blocks(const KktSystem& k, const TreeDecomposition& td) {
  const CompGraph& g = *k.g;
  const int m = td.num_bags();
  std::vector<std::vector<int>> bags_of(g.num_nodes());
  for (int b = 0; b < m; ++b)
    for (int v : td.bags[b]) bags_of[v].push_back(b);

  auto bag_contains = [&](int b, int v) {
    return std::binary_search(td.bags[b].begin(), td.bags[b].end(), v);
  };
  auto first_bag_with = [&](const std::vector<int>& nodes) {
    int best = -1;
    for (int b : bags_of[nodes.front()]) {
      bool all = true;
      for (size_t i = 1; i < nodes.size() && all; ++i) all = bag_contains(b, nodes[i]);
      if (all && (best < 0 || b < best)) best = b;
    }
    return best;
  };

  DistributedBlocks d;
  d.q_blocks.resize(m);
  d.rhs_nodes.resize(m);
  d.constraint_rows.resize(m);
  for (const auto& [key, blk] : k.Q) {
    int b = first_bag_with({key.first, key.second});
    if (b < 0)
      throw GraphError("distribute_blocks: uncovered Q block (" + g.node(key.first).id + "," +
                       g.node(key.second).id + ")");
    d.q_blocks[b].push_back(key);
  }
  for (int v = 0; v < g.num_nodes(); ++v) {
    int b = first_bag_with({v});
    if (b < 0) throw GraphError("distribute_blocks: uncovered node " + g.node(v).id);
    d.rhs_nodes[b].push_back(v);
  }
  for (size_t ci = 0; ci < k.constraints.size(); ++ci) {
    std::vector<int> fam = g.parents(k.constraints[ci].node);
    fam.push_back(k.constraints[ci].node);
    int b = first_bag_with(fam);
    if (b < 0)
      throw GraphError("distribute_blocks: uncovered constraint of node " +
                       g.node(k.constraints[ci].node).id);
    d.constraint_rows[b].push_back(static_cast<int>(ci));
  }
  return d;
}

CliqueFactor factorize_clique(const Mat& M, const Vec& rhs,
                              const std::vector<int>& must_eliminate,
                              const std::vector<int>& may_eliminate, int bag_id) {
  const int n = static_cast<int>(M.rows());
  std::vector<int> cand = must_eliminate;
  cand.insert(cand.end(), may_eliminate.begin(), may_eliminate.end());
  const int nc = static_cast<int>(cand.size());

  // Rank-revealing pivot selection on the candidate block: greedy symmetric
  // elimination with 1x1 and 2x2 pivots.
  std::vector<char> picked(nc, 0);
  if (nc > 0) {
    Mat A(nc, nc);
    for (int i = 0; i < nc; ++i)
      for (int j = 0; j < nc; ++j) A(i, j) = M(cand[i], cand[j]);
    double tol = 1e-12 * std::max(1e-300, A.cwiseAbs().maxCoeff());
    std::vector<char> alive(nc, 1);
    while (true) {
      int id = -1, io = -1, jo = -1;
      double d = 0.0, o = 0.0;
      for (int i = 0; i < nc; ++i) {
        if (!alive[i]) continue;
        if (std::abs(A(i, i)) > d) {
          d = std::abs(A(i, i));
          id = i;
        }
        for (int j = i + 1; j < nc; ++j) {
          if (!alive[j]) continue;
          if (std::abs(A(i, j)) > o) {
            o = std::abs(A(i, j));
            io = i;
            jo = j;
          }
        }
      }
      if (std::max(d, o) <= tol) break;
      if (d >= 0.33 * o) {
        picked[id] = 1;
        alive[id] = 0;
        Vec col = A.col(id);
        double p = A(id, id);
        for (int i = 0; i < nc; ++i)
          if (alive[i])
            for (int j = 0; j < nc; ++j)
              if (alive[j]) A(i, j) -= col[i] * col[j] / p;
      } else {
        picked[io] = picked[jo] = 1;
        alive[io] = alive[jo] = 0;
        Eigen::Matrix2d P;
        P << A(io, io), A(io, jo), A(jo, io), A(jo, jo);
        Eigen::Matrix2d Pi = P.inverse();
        Vec ci = A.col(io), cj = A.col(jo);
        for (int i = 0; i < nc; ++i)
          if (alive[i])
            for (int j = 0; j < nc; ++j)
              if (alive[j]) {
                Eigen::Vector2d vi(ci[i], cj[i]), vj(ci[j], cj[j]);
                A(i, j) -= vi.dot(Pi * vj);
              }
      }
    }
  }

  CliqueFactor f;
  for (int i = 0; i < static_cast<int>(must_eliminate.size()); ++i) {
    if (!picked[i])
      throw SingularPivotError("factorize_clique: eliminate-block variable has no pivot", bag_id);
    f.elim.push_back(cand[i]);
  }
  for (int i = static_cast<int>(must_eliminate.size()); i < nc; ++i)
    if (picked[i]) f.elim.push_back(cand[i]);

  std::vector<char> is_elim(n, 0);
  for (int v : f.elim) is_elim[v] = 1;
  for (int v = 0; v < n; ++v)
    if (!is_elim[v]) f.kept.push_back(v);

  const int ne = static_cast<int>(f.elim.size());
  const int nk = static_cast<int>(f.kept.size());
  Mat Mee(ne, ne);
  f.cross.resize(ne, nk);
  f.rhs_elim.resize(ne);
  for (int i = 0; i < ne; ++i) {
    f.rhs_elim[i] = rhs[f.elim[i]];
    for (int j = 0; j < ne; ++j) Mee(i, j) = M(f.elim[i], f.elim[j]);
    for (int j = 0; j < nk; ++j) f.cross(i, j) = M(f.elim[i], f.kept[j]);
  }
  f.lu.compute(Mee);
  if (ne > 0 && !f.lu.isInvertible())
    throw SingularPivotError("factorize_clique: eliminate block is singular", bag_id);

  Mat Mkk(nk, nk);
  Vec rk(nk);
  for (int i = 0; i < nk; ++i) {
    rk[i] = rhs[f.kept[i]];
    for (int j = 0; j < nk; ++j) Mkk(i, j) = M(f.kept[i], f.kept[j]);
  }
  if (ne > 0) {
    Mat X = f.lu.solve(f.cross);  // Mee^{-1} Mek
    f.schur = Mkk - f.cross.transpose() * X;
    f.rhs_kept = rk - f.cross.transpose() * f.lu.solve(f.rhs_elim);
  } else {
    f.schur = Mkk;
    f.rhs_kept = rk;
  }
  return f;
}

namespace {

struct LocalSystem {
  std::vector<int> globals;  // global scalar index per local var
  std::vector<char> is_sep;  // separator primal scalar
  std::vector<char> is_mult;
  Mat M;
  Vec rhs;
};

}  // namespace

TreeFactorization gather(const KktSystem& k, const TreeDecomposition& td,
                         const DistributedBlocks& dist, int root) {
  const CompGraph& g = *k.g;
  const int m = td.num_bags();
  TreeFactorization tf;
  tf.root = root;
  tf.bag_parent.assign(m, -1);
  tf.records.resize(m);
  tf.messages.resize(m);

  auto adj = td.adjacency();
  std::vector<std::vector<int>> children(m);
  {
    std::vector<bool> seen(m, false);
    std::deque<int> q{root};
    seen[root] = true;
    std::vector<int> pre;
    while (!q.empty()) {
      int b = q.front();
      q.pop_front();
      pre.push_back(b);
      for (int u : adj[b])
        if (!seen[u]) {
          seen[u] = true;
          tf.bag_parent[u] = b;
          children[b].push_back(u);
          q.push_back(u);
        }
    }
    if (static_cast<int>(pre.size()) != m) throw GraphError("gather: decomposition tree is disconnected");
    // Post-order: reverse BFS order visits children before parents.
    tf.gather_order.assign(pre.rbegin(), pre.rend());
  }

  auto in_parent = [&](int p, int v) {
    return std::binary_search(td.bags[p].begin(), td.bags[p].end(), v);
  };

  for (int l : tf.gather_order) {
    const int p = tf.bag_parent[l];

    LocalSystem sys;
    std::unordered_map<int, int> local;  // global -> local
    auto add_var = [&](int global, bool sep, bool mult) {
      local[global] = static_cast<int>(sys.globals.size());
      sys.globals.push_back(global);
      sys.is_sep.push_back(sep);
      sys.is_mult.push_back(mult);
    };
    for (int v : td.bags[l])
      for (int i = 0; i < g.dim(v); ++i)
        add_var(k.primal_offset[v] + i, p >= 0 && in_parent(p, v), false);
    for (int ci : dist.constraint_rows[l]) {
      int d = k.constraints[ci].node;
      for (int i = 0; i < g.dim(d); ++i) add_var(k.primal_dim + k.mult_offset[d] + i, false, true);
    }
    for (int c : children[l])
      for (int gm : tf.messages[c].fwd_mult) add_var(gm, false, true);

    const int nv = static_cast<int>(sys.globals.size());
    sys.M = Mat::Zero(nv, nv);
    sys.rhs = Vec::Zero(nv);

    auto loc = [&](int global) {
      auto it = local.find(global);
      if (it == local.end()) throw GraphError("gather: scalar not present in bag");
      return it->second;
    };

    for (auto key : dist.q_blocks[l]) {
      const Mat& blk = k.Q.at(key);
      int ra = loc(k.primal_offset[key.first]);
      int cb = loc(k.primal_offset[key.second]);
      sys.M.block(ra, cb, blk.rows(), blk.cols()) += blk;
      if (key.first != key.second)
        sys.M.block(cb, ra, blk.cols(), blk.rows()) += blk.transpose();
    }
    for (int v : dist.rhs_nodes[l])
      sys.rhs.segment(loc(k.primal_offset[v]), g.dim(v)) += k.rhs.segment(k.primal_offset[v], g.dim(v));
    for (int ci : dist.constraint_rows[l]) {
      const auto& row = k.constraints[ci];
      int d = row.node;
      int r = loc(k.primal_dim + k.mult_offset[d]);
      for (const auto& [v, blk] : row.blocks) {
        int c = loc(k.primal_offset[v]);
        sys.M.block(r, c, blk.rows(), blk.cols()) += blk;
        sys.M.block(c, r, blk.cols(), blk.rows()) += blk.transpose();
      }
      sys.rhs.segment(r, g.dim(d)) += k.rhs.segment(k.primal_dim + k.mult_offset[d], g.dim(d));
    }
    for (int c : children[l]) {
      const GatherMessage& msg = tf.messages[c];
      const int ns = static_cast<int>(msg.sep_scalars.size());
      std::vector<int> sl(ns);
      for (int i = 0; i < ns; ++i) sl[i] = loc(msg.sep_scalars[i]);
      for (int i = 0; i < ns; ++i) {
        sys.rhs[sl[i]] += msg.b[i];
        for (int j = 0; j < ns; ++j) sys.M(sl[i], sl[j]) += msg.Q(i, j);
      }
      const int nf = static_cast<int>(msg.fwd_mult.size());
      for (int i = 0; i < nf; ++i) {
        int r = loc(msg.fwd_mult[i]);
        sys.rhs[r] += msg.h[i];
        for (int j = 0; j < ns; ++j) {
          sys.M(r, sl[j]) += msg.G(i, j);
          sys.M(sl[j], r) += msg.G(i, j);
        }
        for (int j = 0; j < nf; ++j) sys.M(r, loc(msg.fwd_mult[j])) += msg.C(i, j);
      }
    }

    if (p < 0) {
      tf.root_globals = sys.globals;
      tf.root_matrix = sys.M;
      tf.root_rhs = sys.rhs;
      tf.root_lu.compute(sys.M);
      if (nv > 0 && !tf.root_lu.isInvertible())
        throw SingularPivotError("gather: singular root system", l);
      continue;
    }

    std::vector<int> must, may;
    for (int i = 0; i < nv; ++i) {
      if (sys.is_mult[i])
        may.push_back(i);
      else if (!sys.is_sep[i])
        must.push_back(i);
    }
    CliqueFactor f = factorize_clique(sys.M, sys.rhs, must, may, l);

    auto& rec = tf.records[l];
    for (int i : f.elim) rec.elim_globals.push_back(sys.globals[i]);
    for (int i : f.kept) rec.kept_globals.push_back(sys.globals[i]);
    rec.lu = std::move(f.lu);
    rec.cross = std::move(f.cross);
    rec.rhs_elim = std::move(f.rhs_elim);

    GatherMessage msg;
    std::vector<int> sep_pos, mult_pos;
    for (size_t i = 0; i < f.kept.size(); ++i) {
      if (sys.is_mult[f.kept[i]]) {
        mult_pos.push_back(static_cast<int>(i));
        msg.fwd_mult.push_back(sys.globals[f.kept[i]]);
      } else {
        sep_pos.push_back(static_cast<int>(i));
        msg.sep_scalars.push_back(sys.globals[f.kept[i]]);
      }
    }
    const int ns = static_cast<int>(sep_pos.size());
    const int nf = static_cast<int>(mult_pos.size());
    msg.Q.resize(ns, ns);
    msg.b.resize(ns);
    msg.G.resize(nf, ns);
    msg.h.resize(nf);
    msg.C.resize(nf, nf);
    for (int i = 0; i < ns; ++i) {
      msg.b[i] = f.rhs_kept[sep_pos[i]];
      for (int j = 0; j < ns; ++j) msg.Q(i, j) = f.schur(sep_pos[i], sep_pos[j]);
    }
    for (int i = 0; i < nf; ++i) {
      msg.h[i] = f.rhs_kept[mult_pos[i]];
      for (int j = 0; j < ns; ++j) msg.G(i, j) = f.schur(mult_pos[i], sep_pos[j]);
      for (int j = 0; j < nf; ++j) msg.C(i, j) = f.schur(mult_pos[i], mult_pos[j]);
    }
    tf.messages[l] = std::move(msg);
  }
  return tf;
}

KktSolution backsolve(const KktSystem& k, const TreeFactorization& tf) {
  Vec x = Vec::Zero(k.total_dim());
  if (!tf.root_globals.empty()) {
    Vec xr = tf.root_lu.solve(tf.root_rhs);
    for (size_t i = 0; i < tf.root_globals.size(); ++i) x[tf.root_globals[i]] = xr[static_cast<int>(i)];
  }
  // Reverse of the gather (post-)order is a valid pre-order from the root.
  for (auto it = tf.gather_order.rbegin(); it != tf.gather_order.rend(); ++it) {
    int l = *it;
    if (tf.bag_parent[l] < 0) continue;
    const auto& rec = tf.records[l];
    const int ne = static_cast<int>(rec.elim_globals.size());
    if (ne == 0) continue;
    Vec xk(static_cast<int>(rec.kept_globals.size()));
    for (size_t i = 0; i < rec.kept_globals.size(); ++i) xk[static_cast<int>(i)] = x[rec.kept_globals[i]];
    Vec xe = rec.lu.solve(rec.rhs_elim - rec.cross * xk);
    for (int i = 0; i < ne; ++i) x[rec.elim_globals[i]] = xe[i];
  }
  return split_solution(k, x);
}

KktSolution solve_kkt_tree(const KktSystem& k, const TreeDecomposition& td, int root) {
  DistributedBlocks dist = distribute_blocks(k, td);
  TreeFactorization tf = gather(k, td, dist, root);
  return backsolve(k, tf);
}

}  // namespace gn
