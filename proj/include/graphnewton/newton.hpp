#pragma once

#include <optional>

#include "graphnewton/mpsolver.hpp"

namespace gn {

enum class SolverKind { Tree, Dense };

struct NewtonConfig {
  double tol = 1e-8;  // gradient inf-norm threshold
  int max_iters = 100;
  double armijo_c = 1e-4;
  double shrink = 0.5;
  int max_backtracks = 40;
  double reg_init = 1e-6;
  double reg_growth = 10.0;
  double reg_max = 1e6;
  SolverKind solver = SolverKind::Tree;
  OrderingHeuristic heuristic = OrderingHeuristic::MinFill;
};

struct IterRecord {
  int iter = 0;
  double objective = 0.0;
  double grad_inf = 0.0;
  double eta = 0.0;
  double mu = 0.0;
  double kkt_residual = 0.0;
  double ms = 0.0;
  double constraint_residual = 0.0;
};

using IterationTrace = std::vector<IterRecord>;

enum class NewtonStatus { Converged, MaxIters };

struct NewtonResult {
  Vec inputs;
  IterationTrace trace;
  NewtonStatus status = NewtonStatus::MaxIters;
};

struct StepDiagnostics {
  double mu = 0.0;            // regularization actually used (0 = none)
  double kkt_residual = 0.0;  // ||K sol - rhs||_inf on the regularized system
  double grad_dot_step = 0.0;
};

/// One Graphical-Newton direction at the feasible point forward_eval(inputs),
/// with duals from reverse_grad. Retries with escalating mu*I on the primal
/// diagonal when the solve fails or the step is not a descent direction.
/// An optional prebuilt decomposition avoids recomputing it per call.
Vec newton_step(const CompGraph& g, const Vec& inputs, const NewtonConfig& cfg,
                StepDiagnostics* diag = nullptr, const TreeDecomposition* td = nullptr);

/// Backtracking Armijo on the substituted objective of the inputs only.
double linesearch(const CompGraph& g, const Vec& inputs, const Vec& delta, const Vec& grad,
                  const NewtonConfig& cfg);

NewtonResult optimize(const CompGraph& g, const Vec& inputs0, const NewtonConfig& cfg);

void write_trace_csv(std::ostream& os, const IterationTrace& trace);

}  // namespace gn
