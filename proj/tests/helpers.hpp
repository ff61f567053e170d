#pragma once

#include <random>

#include "graphnewton/autodiff.hpp"
#include "graphnewton/functions.hpp"
#include "graphnewton/newton.hpp"
#include "graphnewton/problem_io.hpp"

namespace gn::testing {

// f(x) = 2x^2 realized as y = 2x with loss 0.5 y^2 on y.
inline CompGraph make_double_square_graph() {
  Mat A(1, 1);
  A << 2.0;
  std::vector<NodeSpec> nodes(2);
  nodes[0].id = "x";
  nodes[0].dim = 1;
  nodes[1].id = "y";
  nodes[1].dim = 1;
  nodes[1].parents = {"x"};
  nodes[1].func = make_affine(A, Vec::Zero(1));
  nodes[1].objective = make_quadratic_objective(Mat::Identity(2, 2).topLeftCorner(2, 2).eval(), Vec::Zero(2));
  // only the y coordinate enters: 0.5 y^2
  Mat Q = Mat::Zero(2, 2);
  Q(0, 0) = 1.0;
  nodes[1].objective = make_quadratic_objective(Q, Vec::Zero(2));
  return CompGraph(std::move(nodes));
}

// Rosenbrock via the graph: w = x^2; loss 100 (y - w)^2 + (1 - x)^2 over (w, x, y).
inline CompGraph make_rosenbrock_graph() {
  std::vector<NodeSpec> nodes(3);
  nodes[0].id = "x";
  nodes[0].dim = 1;
  nodes[1].id = "y";
  nodes[1].dim = 1;
  nodes[2].id = "w";
  nodes[2].dim = 1;
  nodes[2].parents = {"x", "y"};
  nodes[2].func = make_coord_square(2, {0});
  Mat Q(3, 3);
  Q << 200, 0, -200, 0, 2, 0, -200, 0, 200;
  Vec r(3);
  r << 0, -2, 0;
  nodes[2].objective = make_quadratic_objective(Q, r, 1.0);
  return CompGraph(std::move(nodes));
}

inline double substituted_objective(const CompGraph& g, const Vec& inputs) {
  return objective_value(g, forward_eval(g, inputs));
}

inline Vec fd_gradient(const CompGraph& g, const Vec& inputs) {
  Vec grad(inputs.size());
  for (int i = 0; i < inputs.size(); ++i) {
    double h = 1e-5 * (1.0 + std::abs(inputs[i]));
    Vec p = inputs, m = inputs;
    p[i] += h;
    m[i] -= h;
    grad[i] = (substituted_objective(g, p) - substituted_objective(g, m)) / (2 * h);
  }
  return grad;
}

inline Vec analytic_gradient(const CompGraph& g, const Vec& inputs) {
  StateAssignment s = forward_eval(g, inputs);
  return stack_input_duals(g, reverse_grad(g, s));
}

inline Mat fd_hessian(const CompGraph& g, const Vec& inputs) {
  Mat H(inputs.size(), inputs.size());
  for (int i = 0; i < inputs.size(); ++i) {
    double h = 1e-5 * (1.0 + std::abs(inputs[i]));
    Vec p = inputs, m = inputs;
    p[i] += h;
    m[i] -= h;
    H.col(i) = (analytic_gradient(g, p) - analytic_gradient(g, m)) / (2 * h);
  }
  return ((H + H.transpose()) / 2).eval();
}

inline double rel_err(const Vec& a, const Vec& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

inline double rel_err(const Mat& a, const Mat& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

}  // namespace gn::testing
