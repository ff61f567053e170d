#include <doctest.h>

#include <sstream>

#include "graphnewton/optimal_control.hpp"
#include "helpers.hpp"

using namespace gn;
using namespace gn::testing;

TEST_CASE("newton_step: f(x) = 2x^2 at x = 3 steps by -3") {
  CompGraph g = make_double_square_graph();
  NewtonConfig cfg;
  for (auto kind : {SolverKind::Tree, SolverKind::Dense}) {
    cfg.solver = kind;
    Vec d = newton_step(g, Vec::Constant(1, 3.0), cfg);
    CHECK(d[0] == doctest::Approx(-3.0).epsilon(1e-12));
  }
}

TEST_CASE("newton_step: zero step at a stationary point") {
  CompGraph g = make_double_square_graph();
  NewtonConfig cfg;
  Vec d = newton_step(g, Vec::Zero(1), cfg);
  CHECK(d.norm() <= 1e-14);
}

TEST_CASE("newton_step: one step minimizes a strictly convex quadratic") {
  Problem p = parse_problem(make_oc_chain_doc(5, 0));
  NewtonConfig cfg;
  Vec d = newton_step(p.graph, p.inputs_init, cfg);
  Vec grad_after = analytic_gradient(p.graph, p.inputs_init + d);
  CHECK(grad_after.lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("newton_step: indefinite curvature triggers regularization, result is descent") {
  // f(u) = -0.5 y^2 + 0.05 u^2 with y = tanh(u): concave near u = 0.5.
  std::vector<NodeSpec> nodes(2);
  nodes[0].id = "u";
  nodes[0].dim = 1;
  nodes[0].objective = make_quadratic_objective(0.1 * Mat::Identity(1, 1), Vec::Zero(1));
  nodes[1].id = "y";
  nodes[1].dim = 1;
  nodes[1].parents = {"u"};
  nodes[1].func = make_tanh(1);
  Mat Q = Mat::Zero(2, 2);
  Q(0, 0) = -1.0;
  nodes[1].objective = make_quadratic_objective(Q, Vec::Zero(2));
  CompGraph g(std::move(nodes));
  Vec u0 = Vec::Constant(1, 0.5);
  Vec grad = analytic_gradient(g, u0);
  REQUIRE(grad.lpNorm<Eigen::Infinity>() > 1e-6);
  NewtonConfig cfg;
  StepDiagnostics diag;
  Vec d = newton_step(g, u0, cfg, &diag);
  CHECK(diag.mu > 0.0);
  CHECK(grad.dot(d) < 0.0);
}

TEST_CASE("linesearch: quadratic accepts the full step") {
  CompGraph g = make_double_square_graph();
  Vec u0 = Vec::Constant(1, 3.0);
  NewtonConfig cfg;
  Vec d = newton_step(g, u0, cfg);
  CHECK(linesearch(g, u0, d, analytic_gradient(g, u0), cfg) == 1.0);
}

TEST_CASE("linesearch: overshooting step backtracks to eta < 1 with Armijo satisfied") {
  // f(x) = x^2 at x = 1 with the deliberately long step delta = -5.
  std::vector<NodeSpec> nodes(1);
  nodes[0].id = "x";
  nodes[0].dim = 1;
  nodes[0].objective = make_quadratic_objective(2.0 * Mat::Identity(1, 1), Vec::Zero(1));
  CompGraph g(std::move(nodes));
  Vec x0 = Vec::Ones(1), delta = Vec::Constant(1, -5.0);
  NewtonConfig cfg;
  Vec grad = analytic_gradient(g, x0);
  double eta = linesearch(g, x0, delta, grad, cfg);
  CHECK(eta < 1.0);
  double f0 = substituted_objective(g, x0);
  double f1 = substituted_objective(g, x0 + eta * delta);
  CHECK(f1 <= f0 + cfg.armijo_c * eta * grad.dot(delta));
}

TEST_CASE("linesearch: ascent direction is rejected") {
  CompGraph g = make_double_square_graph();
  Vec u0 = Vec::Constant(1, 3.0);
  NewtonConfig cfg;
  CHECK_THROWS_AS(linesearch(g, u0, Vec::Ones(1), analytic_gradient(g, u0), cfg),
                  LinesearchFailError);
}

TEST_CASE("optimize: convex quadratic converges in one iteration") {
  Problem p = parse_problem(make_oc_chain_doc(6, 0));
  NewtonConfig cfg;
  NewtonResult res = optimize(p.graph, p.inputs_init, cfg);
  CHECK(res.status == NewtonStatus::Converged);
  CHECK(res.trace.back().iter <= 1);
}

TEST_CASE("optimize: graph-composed Rosenbrock reaches (1, 1)") {
  CompGraph g = make_rosenbrock_graph();
  Vec x0(2);
  x0 << -1.2, 1.0;
  NewtonConfig cfg;
  NewtonResult res = optimize(g, x0, cfg);
  REQUIRE(res.status == NewtonStatus::Converged);
  CHECK(res.inputs[0] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(res.inputs[1] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(res.trace.back().grad_inf <= 1e-8);
}

TEST_CASE("optimize: tree and dense backends produce the same iterate sequence") {
  OcProblem oc = make_pendulum_swingup(8);
  CompGraph g = build_chain(oc);
  Vec u0 = Vec::Zero(g.total_input_dim());
  NewtonConfig cfg;
  cfg.solver = SolverKind::Tree;
  NewtonResult tr = optimize(g, u0, cfg);
  cfg.solver = SolverKind::Dense;
  NewtonResult de = optimize(g, u0, cfg);
  REQUIRE(tr.trace.size() == de.trace.size());
  for (size_t i = 0; i < tr.trace.size(); ++i) {
    CHECK(std::abs(tr.trace[i].objective - de.trace[i].objective) <=
          1e-8 * (1 + std::abs(de.trace[i].objective)));
    CHECK(std::abs(tr.trace[i].grad_inf - de.trace[i].grad_inf) <=
          1e-8 * (1 + de.trace[i].grad_inf));
  }
}

TEST_CASE("optimize: every iterate is feasible to roundoff") {
  OcProblem oc = make_pendulum_swingup(8);
  CompGraph g = build_chain(oc);
  NewtonConfig cfg;
  for (auto kind : {SolverKind::Tree, SolverKind::Dense}) {
    cfg.solver = kind;
    NewtonResult res = optimize(g, Vec::Zero(g.total_input_dim()), cfg);
    for (const auto& rec : res.trace) CHECK(rec.constraint_residual <= 1e-12);
  }
}

TEST_CASE("optimize: quadratic local convergence on the pendulum chain") {
  OcProblem oc = make_pendulum_swingup(10);
  CompGraph g = build_chain(oc);
  NewtonConfig cfg;
  NewtonResult res = optimize(g, Vec::Zero(g.total_input_dim()), cfg);
  REQUIRE(res.status == NewtonStatus::Converged);
  size_t m = res.trace.size();
  REQUIRE(m >= 4);
  for (size_t i = m - 3; i < m; ++i) {
    double gk = res.trace[i - 1].grad_inf, gk1 = res.trace[i].grad_inf;
    CHECK(gk1 <= 1e4 * gk * gk + 1e-14);  // finite quadratic-rate constant
  }
}

TEST_CASE("write_trace_csv emits the documented columns") {
  IterationTrace trace(1);
  trace[0].iter = 0;
  trace[0].objective = 1.5;
  std::ostringstream os;
  write_trace_csv(os, trace);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  CHECK(header == "iter,objective,grad_inf,eta,mu,kkt_residual,ms");
}
