// Acceptance suite: one pass/fail line per criterion, nonzero exit on failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "graphnewton/optimal_control.hpp"
#include "helpers.hpp"

using namespace gn;
using namespace gn::testing;

namespace {

int failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", criterion, detail.c_str());
  if (!ok) ++failures;
}

TreeDecomposition decompose(const CompGraph& g, OrderingHeuristic heur = OrderingHeuristic::MinFill) {
  Hypergraph h = moralize(g);
  return decomposition_from_ordering(h, elimination_order(h, heur));
}

// Small-problem corpus: chains and random DAGs, dims 1-3.
std::vector<Problem> small_corpus() {
  std::vector<Problem> out;
  for (int n : {2, 4, 6, 8, 10}) out.push_back(parse_problem(make_oc_chain_doc(n, 0)));
  for (unsigned seed = 0; seed < 20; ++seed)
    out.push_back(parse_problem(make_random_dag_doc(6 + seed % 7, seed)));
  for (unsigned seed = 0; seed < 8; ++seed)
    out.push_back(parse_problem(make_random_tree_doc(8 + seed % 5, seed)));
  return out;
}

// 1. Graphical Newton step (tree solver) == dense Newton step on PD problems.
void criterion1() {
  int tested = 0;
  double worst = 0.0;
  for (const auto& p : small_corpus()) {
    const CompGraph& g = p.graph;
    StateAssignment s = forward_eval(g, p.inputs_init);
    Mat H = accumulate_dense_hessian(g, s);
    Eigen::SelfAdjointEigenSolver<Mat> es(H);
    if (es.eigenvalues().minCoeff() <= 1e-8) continue;
    Vec grad = stack_input_duals(g, reverse_grad(g, s));
    Vec ref = -H.llt().solve(grad).eval();
    NewtonConfig cfg;
    cfg.solver = SolverKind::Tree;
    Vec step = newton_step(g, p.inputs_init, cfg);
    worst = std::max(worst, rel_err(step, ref));
    ++tested;
  }
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "Newton-step equivalence on %d PD problems, worst rel err %.2e (tol 1e-8)", tested,
                worst);
  report(1, tested >= 20 && worst <= 1e-8, buf);
}

// 2. solve_kkt_tree vs dense_kkt_solve, plus residual bounds.
void criterion2() {
  int tested = 0;
  double worst_rel = 0.0, worst_res = 0.0;
  for (const auto& p : small_corpus()) {
    const CompGraph& g = p.graph;
    StateAssignment s = forward_eval(g, p.inputs_init);
    KktSystem k = assemble_kkt(g, s, reverse_grad(g, s));
    KktSolution dense;
    try {
      dense = dense_kkt_solve(k);
    } catch (const SingularMatrixError&) {
      continue;
    }
    KktSolution tree = solve_kkt_tree(k, decompose(g));
    double scale = 1 + k.rhs.lpNorm<Eigen::Infinity>();
    worst_rel = std::max(worst_rel, rel_err(tree.full, dense.full));
    worst_res = std::max(worst_res,
                         std::max((k.apply(tree.full) - k.rhs).lpNorm<Eigen::Infinity>(),
                                  (k.apply(dense.full) - k.rhs).lpNorm<Eigen::Infinity>()) /
                             scale);
    ++tested;
  }
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "KKT oracle equivalence on %d systems, worst rel %.2e, worst residual %.2e",
                tested, worst_rel, worst_res);
  report(2, tested >= 20 && worst_rel <= 1e-8 && worst_res <= 1e-9, buf);
}

// 3. AD vs finite differences; HVP bilinear symmetry.
void criterion3() {
  double worst_grad = 0.0, worst_hvp = 0.0, worst_sym = 0.0;
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> unif(-0.5, 0.5);
  std::vector<Problem> corpus;
  for (unsigned seed = 0; seed < 6; ++seed)
    corpus.push_back(parse_problem(make_random_dag_doc(8, seed)));
  corpus.push_back(parse_problem(make_oc_chain_doc(5, 0)));
  // Pendulum chain covers the nonlinear registry dynamics.
  {
    OcProblem oc = make_pendulum_swingup(5);
    corpus.push_back(Problem{build_chain(oc), Vec::Constant(5, 0.2)});
  }
  for (const auto& p : corpus) {
    const CompGraph& g = p.graph;
    int n = g.total_input_dim();
    for (int trial = 0; trial < 5; ++trial) {
      Vec in(n);
      for (int i = 0; i < n; ++i) in[i] = p.inputs_init[i] + unif(rng);
      worst_grad = std::max(worst_grad, rel_err(analytic_gradient(g, in), fd_gradient(g, in)));
      StateAssignment s = forward_eval(g, in);
      DualAssignment duals = reverse_grad(g, s);
      Vec d1(n), d2(n);
      for (int i = 0; i < n; ++i) {
        d1[i] = unif(rng);
        d2[i] = unif(rng);
      }
      Vec Hd1 = stack_input_duals(g, hessian_vector(g, s, duals, d1).dgrad);
      Vec Hd2 = stack_input_duals(g, hessian_vector(g, s, duals, d2).dgrad);
      double b1 = d2.dot(Hd1), b2 = d1.dot(Hd2);
      worst_sym = std::max(worst_sym, std::abs(b1 - b2) / std::max(1.0, std::abs(b1)));
      double h = 1e-6;
      Vec fd = (analytic_gradient(g, in + h * d1) - analytic_gradient(g, in - h * d1)) / (2 * h);
      worst_hvp = std::max(worst_hvp, rel_err(Hd1, fd));
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "AD checks: grad-FD %.2e (tol 1e-5), HVP-FD %.2e (tol 1e-5), symmetry %.2e (tol 1e-10)",
                worst_grad, worst_hvp, worst_sym);
  report(3, worst_grad <= 1e-5 && worst_hvp <= 1e-5 && worst_sym <= 1e-10, buf);
}

double fit_slope(const std::vector<std::pair<double, double>>& xy) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [x, y] : xy) {
    double lx = std::log(x), ly = std::log(std::max(y, 1e-9));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double m = static_cast<double>(xy.size());
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

// 4. Tree-solver slope <= 1.2 on oc-chain n in {32..1024}; dense slope >= 2.5 on n <= 256.
void criterion4() {
  std::vector<std::pair<double, double>> tree_xy, dense_xy;
  for (int n : {32, 64, 128, 256, 512, 1024}) {
    Problem p = parse_problem(make_oc_chain_doc(n, 0));
    const CompGraph& g = p.graph;
    StateAssignment s = forward_eval(g, p.inputs_init);
    KktSystem k = assemble_kkt(g, s, reverse_grad(g, s));
    TreeDecomposition td = decompose(g);
    auto time_ms = [](auto&& body) {
      body();  // warm-up
      std::vector<double> samples;
      for (int r = 0; r < 5; ++r) {
        auto t0 = std::chrono::steady_clock::now();
        int inner = 0;
        double el = 0.0;
        do {
          body();
          ++inner;
          el = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                   .count();
        } while (el < 2.0 && inner < 1000);
        samples.push_back(el / inner);
      }
      std::sort(samples.begin(), samples.end());
      return samples[2];
    };
    tree_xy.emplace_back(n, time_ms([&] { solve_kkt_tree(k, td); }));
    if (n <= 256) dense_xy.emplace_back(n, time_ms([&] { dense_kkt_solve(k); }));
  }
  double ts = fit_slope(tree_xy), ds = fit_slope(dense_xy);
  char buf[160];
  std::snprintf(buf, sizeof buf, "scaling slopes: tree %.3f (<= 1.2), dense %.3f (>= 2.5)", ts, ds);
  report(4, ts <= 1.2 && ds >= 2.5, buf);
}

// 5. Decomposition validity + separation + heuristic width >= exact; OC chain width 2.
void criterion5() {
  bool ok = true;
  std::string why = "100 random graphs x 2 heuristics valid, separation holds, width >= exact; chain width 2";
  std::mt19937 rng(2025);
  for (int trial = 0; trial < 100 && ok; ++trial) {
    int n = 4 + static_cast<int>(rng() % 9);
    Problem p = parse_problem(make_random_dag_doc(n, static_cast<unsigned>(1000 + trial)));
    Hypergraph h = moralize(p.graph);
    int exact = exact_treewidth(h);
    for (auto heur : {OrderingHeuristic::MinFill, OrderingHeuristic::MinDegree}) {
      TreeDecomposition td = decomposition_from_ordering(h, elimination_order(h, heur));
      if (!validate_decomposition(h, td).empty()) {
        ok = false;
        why = "validate_decomposition failed on trial " + std::to_string(trial);
      }
      for (size_t e = 0; e < td.edges.size(); ++e)
        if (!check_edge_separation(h, td, static_cast<int>(e))) {
          ok = false;
          why = "edge separation failed on trial " + std::to_string(trial);
        }
      if (td.width < exact) {
        ok = false;
        why = "heuristic width below exact width on trial " + std::to_string(trial);
      }
    }
  }
  TreeDecomposition chain_td = decompose(build_chain(make_lqr_scalar(10)));
  if (chain_td.width != 2) {
    ok = false;
    why = "OC chain width " + std::to_string(chain_td.width) + " != 2";
  }
  report(5, ok, why);
}

// 6. DDP equivalences.
void criterion6() {
  bool ok = true;
  std::string why;

  // (a) message passing along the LQR order == value recursion.
  {
    OcProblem oc = make_pendulum_swingup(6);
    const int n = oc.horizon;
    CompGraph g = build_chain(oc);
    std::vector<Vec> u(n, Vec::Constant(1, 0.25));
    StateAssignment s = forward_eval(g, stack_controls(oc, u));
    KktSystem k = assemble_kkt(g, s, reverse_grad(g, s));
    TreeDecomposition td;
    td.bags.resize(n);
    for (int i = 1; i < n; ++i) {
      std::vector<int> bag = {i, n + i - 1, n + i};
      std::sort(bag.begin(), bag.end());
      td.bags[n - 1 - i] = bag;
      td.edges.push_back({n - 1 - i, n - i});
    }
    td.bags[n - 1] = {0, n};
    td.width = 2;
    DistributedBlocks db = distribute_blocks(k, td);
    TreeFactorization tf = gather(k, td, db, n - 1);
    BackwardPassResult bp = ddp_backward(oc, rollout(oc, u), DdpVariant::StagewiseNewton);
    double worst = 0.0;
    for (int i = 1; i < n; ++i) {
      const GatherMessage& msg = tf.messages[n - 1 - i];
      worst = std::max(worst, rel_err(msg.Q, bp.Vxx[i]));
      worst = std::max(worst, rel_err(msg.b, (-bp.vx[i]).eval()));
    }
    if (worst > 1e-10) {
      ok = false;
      why = "message/value-recursion mismatch " + std::to_string(worst);
    }
  }

  // (b) stagewise-Newton direction == dense Newton direction on pendulum n <= 10.
  {
    OcProblem oc = make_pendulum_swingup(8);
    CompGraph g = build_chain(oc);
    std::vector<Vec> u(oc.horizon, Vec::Constant(1, 0.3));
    StateAssignment s = forward_eval(g, stack_controls(oc, u));
    Mat H = accumulate_dense_hessian(g, s);
    Vec grad = stack_input_duals(g, reverse_grad(g, s));
    Vec ref = -H.fullPivLu().solve(grad).eval();
    Trajectory tr = rollout(oc, u);
    BackwardPassResult bp = ddp_backward(oc, tr, DdpVariant::StagewiseNewton);
    ForwardResult fr = ddp_forward(oc, tr, bp, ForwardMode::Linear);
    Vec d(oc.horizon);
    for (int i = 0; i < oc.horizon; ++i) d[i] = fr.du[i][0];
    if (rel_err(d, ref) > 1e-8) {
      ok = false;
      why = "stagewise-Newton vs dense Newton rel err " + std::to_string(rel_err(d, ref));
    }
  }

  // (c) all four variants coincide on linear dynamics.
  {
    OcProblem oc = make_lqr_mimo(5);
    std::vector<Vec> u(oc.horizon, Vec::Constant(oc.control_dim, 0.2));
    Trajectory tr = rollout(oc, u);
    BackwardPassResult ref = ddp_backward(oc, tr, DdpVariant::Ddp);
    for (auto v :
         {DdpVariant::StagewiseNewton, DdpVariant::NonlinearStagewiseNewton, DdpVariant::Ilqr}) {
      BackwardPassResult bp = ddp_backward(oc, tr, v);
      for (int i = 0; i < oc.horizon; ++i)
        if ((bp.K[i] - ref.K[i]).norm() != 0.0 || (bp.kff[i] - ref.kff[i]).norm() != 0.0) {
          ok = false;
          why = "variants differ on linear dynamics";
        }
    }
  }

  // (d) scalar LQR worked example: delta u0 = -0.5.
  {
    OcProblem oc = make_lqr_scalar(1);
    Trajectory tr = rollout(oc, {Vec::Zero(1)});
    BackwardPassResult bp = ddp_backward(oc, tr, DdpVariant::StagewiseNewton);
    ForwardResult fr = ddp_forward(oc, tr, bp, ForwardMode::Linear);
    if (std::abs(fr.du[0][0] + 0.5) > 1e-12) {
      ok = false;
      why = "scalar LQR delta u0 = " + std::to_string(fr.du[0][0]);
    }
  }
  if (ok) why = "message/value recursion, Newton direction, variant collapse, delta u0 = -0.5";
  report(6, ok, why);
}

// 7. Quadratic local convergence on pendulum swing-up and Rosenbrock.
void criterion7() {
  bool ok = true;
  std::string why = "pendulum + Rosenbrock converge to 1e-8 with quadratic tail";
  auto check = [&](const CompGraph& g, const Vec& x0, const char* name) {
    NewtonConfig cfg;
    NewtonResult res = optimize(g, x0, cfg);
    if (res.status != NewtonStatus::Converged || res.trace.back().grad_inf > 1e-8) {
      ok = false;
      why = std::string(name) + " did not converge to 1e-8";
      return;
    }
    size_t m = res.trace.size();
    if (m < 4) return;  // immediate convergence is fine
    for (size_t i = m - 3; i < m; ++i) {
      double gk = res.trace[i - 1].grad_inf, gk1 = res.trace[i].grad_inf;
      double C = gk1 / std::max(gk * gk, 1e-300);
      if (!(gk1 <= 1e6 * gk * gk + 1e-14)) {
        ok = false;
        why = std::string(name) + " tail not quadratic (C = " + std::to_string(C) + ")";
      }
    }
  };
  OcProblem oc = make_pendulum_swingup(12);
  CompGraph pend = build_chain(oc);
  check(pend, Vec::Zero(pend.total_input_dim()), "pendulum");
  CompGraph rosen = make_rosenbrock_graph();
  Vec r0(2);
  r0 << -1.2, 1.0;
  check(rosen, r0, "rosenbrock");
  report(7, ok, why);
}

// 8. Feasibility of every iterate, both backends.
void criterion8() {
  double worst = 0.0;
  OcProblem oc = make_pendulum_swingup(10);
  CompGraph pend = build_chain(oc);
  std::vector<std::pair<CompGraph, Vec>> cases;
  cases.emplace_back(pend, Vec::Zero(pend.total_input_dim()));
  Problem p = parse_problem(make_random_tree_doc(15, 4));
  cases.emplace_back(p.graph, p.inputs_init);
  for (auto& [g, x0] : cases)
    for (auto kind : {SolverKind::Tree, SolverKind::Dense}) {
      NewtonConfig cfg;
      cfg.solver = kind;
      NewtonResult res = optimize(g, x0, cfg);
      for (const auto& rec : res.trace) worst = std::max(worst, rec.constraint_residual);
    }
  char buf[120];
  std::snprintf(buf, sizeof buf, "worst iterate constraint residual %.2e (tol 1e-12)", worst);
  report(8, worst <= 1e-12, buf);
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  return failures == 0 ? 0 : 1;
}
