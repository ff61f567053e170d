#include <doctest.h>

#include "graphnewton/optimal_control.hpp"
#include "helpers.hpp"

using namespace gn;

namespace {

CompGraph two_node_chain() {
  Mat A(1, 1);
  A << 1.0;
  std::vector<NodeSpec> nodes(2);
  nodes[0].id = "x";
  nodes[0].dim = 1;
  nodes[1].id = "y";
  nodes[1].dim = 1;
  nodes[1].parents = {"x"};
  nodes[1].func = make_affine(A, Vec::Zero(1));
  return CompGraph(std::move(nodes));
}

}  // namespace

TEST_CASE("validate: well-formed two-node chain passes") {
  CHECK(two_node_chain().validate().empty());
}

TEST_CASE("validate: cycle is reported") {
  std::vector<NodeSpec> nodes(2);
  nodes[0].id = "a";
  nodes[0].dim = 1;
  nodes[0].parents = {"b"};
  nodes[0].func = make_tanh(1);
  nodes[1].id = "b";
  nodes[1].dim = 1;
  nodes[1].parents = {"a"};
  nodes[1].func = make_tanh(1);
  CompGraph g(std::move(nodes));
  auto v = g.validate();
  REQUIRE(!v.empty());
  bool found = false;
  for (const auto& s : v)
    if (s.find("cycl") != std::string::npos || s.find("acycl") != std::string::npos) found = true;
  CHECK(found);
  CHECK(!g.acyclic());
}

TEST_CASE("validate: non-input node without a function is reported") {
  std::vector<NodeSpec> nodes(2);
  nodes[0].id = "x";
  nodes[0].dim = 1;
  nodes[1].id = "y";
  nodes[1].dim = 1;
  nodes[1].parents = {"x"};  // no func
  CompGraph g(std::move(nodes));
  auto v = g.validate();
  REQUIRE(!v.empty());
  bool found = false;
  for (const auto& s : v)
    if (s.find("y") != std::string::npos) found = true;
  CHECK(found);
}

TEST_CASE("validate: dimension mismatches are reported") {
  Mat A(2, 1);  // output dim 2, but node dim is 1
  A << 1.0, 1.0;
  std::vector<NodeSpec> nodes(2);
  nodes[0].id = "x";
  nodes[0].dim = 1;
  nodes[1].id = "y";
  nodes[1].dim = 1;
  nodes[1].parents = {"x"};
  nodes[1].func = make_affine(A, Vec::Zero(2));
  CHECK(!CompGraph(std::move(nodes)).validate().empty());
}

TEST_CASE("forward_eval: x1 = x0 + u0") {
  Mat A(1, 2);
  A << 1.0, 1.0;
  std::vector<NodeSpec> nodes(3);
  nodes[0].id = "x0";
  nodes[0].dim = 1;
  nodes[1].id = "u0";
  nodes[1].dim = 1;
  nodes[2].id = "x1";
  nodes[2].dim = 1;
  nodes[2].parents = {"x0", "u0"};
  nodes[2].func = make_affine(A, Vec::Zero(1));
  CompGraph g(std::move(nodes));
  Vec in(2);
  in << 1.0, 2.0;
  StateAssignment s = forward_eval(g, in);
  CHECK(s[2][0] == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("forward_eval: tanh at the origin") {
  std::vector<NodeSpec> nodes(2);
  nodes[0].id = "u";
  nodes[0].dim = 1;
  nodes[1].id = "y";
  nodes[1].dim = 1;
  nodes[1].parents = {"u"};
  nodes[1].func = make_tanh(1);
  CompGraph g(std::move(nodes));
  StateAssignment s = forward_eval(g, Vec::Zero(1));
  CHECK(s[1][0] == 0.0);
}

TEST_CASE("forward_eval: three-stage 0.9x+u chain reaches 0.729") {
  // x_{i+1} = 0.9 x_i + u_i, x0 = 1, u = 0 -> x3 = 0.9^3.
  OcProblem oc;
  oc.horizon = 3;
  oc.state_dim = 1;
  oc.control_dim = 1;
  oc.x0 = Vec::Ones(1);
  Mat A(1, 2);
  A << 0.9, 1.0;
  oc.dynamics = make_affine(A, Vec::Zero(1));
  oc.stage_loss.assign(3, make_quadratic_objective(Mat::Identity(2, 2), Vec::Zero(2)));
  oc.terminal_loss = make_quadratic_objective(Mat::Identity(1, 1), Vec::Zero(1));
  CompGraph g = build_chain(oc);
  StateAssignment s = forward_eval(g, Vec::Zero(3));
  int x3 = g.index("x3");
  REQUIRE(x3 >= 0);
  CHECK(s[x3][0] == doctest::Approx(0.729).epsilon(1e-12));
}

TEST_CASE("objective_value: no objectives sums to zero") {
  CHECK(objective_value(two_node_chain(), forward_eval(two_node_chain(), Vec::Ones(1))) == 0.0);
}

TEST_CASE("objective_value: half squared norm") {
  std::vector<NodeSpec> nodes(1);
  nodes[0].id = "x";
  nodes[0].dim = 2;
  nodes[0].objective = make_quadratic_objective(Mat::Identity(2, 2), Vec::Zero(2));
  CompGraph g(std::move(nodes));
  Vec in(2);
  in << 3.0, 4.0;
  CHECK(objective_value(g, forward_eval(g, in)) == doctest::Approx(12.5).epsilon(1e-15));
}

TEST_CASE("objective_value: one-stage chain worked example equals 1.0") {
  // f = x0 + u0, x0 = 1, u0 = 0; l0 = (x0^2+u0^2)/2, l1 = x1^2/2 -> 0.5 + 0.5.
  OcProblem oc = make_lqr_scalar(1);
  CompGraph g = build_chain(oc);
  CHECK(objective_value(g, forward_eval(g, Vec::Zero(1))) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("forward_eval is independent of node declaration order") {
  // Same graph, two declaration orders; forward values must agree exactly.
  auto build = [](bool reversed) {
    Mat A(1, 2);
    A << 0.5, -1.25;
    std::vector<NodeSpec> nodes(3);
    nodes[0].id = "a";
    nodes[0].dim = 1;
    nodes[1].id = "b";
    nodes[1].dim = 1;
    nodes[2].id = "c";
    nodes[2].dim = 1;
    nodes[2].parents = {"a", "b"};
    nodes[2].func = make_affine(A, Vec::Ones(1));
    if (reversed) std::swap(nodes[0], nodes[1]);
    return CompGraph(std::move(nodes));
  };
  CompGraph g1 = build(false), g2 = build(true);
  Vec in(2);
  in << 2.0, 3.0;
  Vec in2(2);
  in2 << 3.0, 2.0;  // input order follows declaration order
  StateAssignment s1 = forward_eval(g1, in);
  StateAssignment s2 = forward_eval(g2, in2);
  CHECK(s1[g1.index("c")][0] == s2[g2.index("c")][0]);
}

TEST_CASE("forward_eval leaves all constraints exactly feasible") {
  Problem p = parse_problem(make_random_dag_doc(10, 7));
  StateAssignment s = forward_eval(p.graph, p.inputs_init);
  CHECK(constraint_residual_inf(p.graph, s) == 0.0);
}

TEST_CASE("forward_eval rejects wrong input length with the node named") {
  CompGraph g = two_node_chain();
  CHECK_THROWS_AS(forward_eval(g, Vec::Zero(3)), DimensionError);
}
