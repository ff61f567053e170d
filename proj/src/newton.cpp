#include "graphnewton/newton.hpp"

#include <chrono>
#include <ostream>

#include "graphnewton/autodiff.hpp"

namespace gn {

namespace {

KktSolution solve_with(const KktSystem& k, const NewtonConfig& cfg, const TreeDecomposition* td) {
  if (cfg.solver == SolverKind::Dense || td == nullptr) return dense_kkt_solve(k);
  return solve_kkt_tree(k, *td);
}

}  // namespace

Vec newton_step(const CompGraph& g, const Vec& inputs, const NewtonConfig& cfg,
                StepDiagnostics* diag, const TreeDecomposition* td) {
  std::optional<TreeDecomposition> own_td;
  if (cfg.solver == SolverKind::Tree && td == nullptr) {
    Hypergraph h = moralize(g);
    own_td = decomposition_from_ordering(h, elimination_order(h, cfg.heuristic));
    td = &*own_td;
  }
  StateAssignment s = forward_eval(g, inputs);
  DualAssignment duals = reverse_grad(g, s);
  Vec grad = stack_input_duals(g, duals);
  KktSystem k = assemble_kkt(g, s, duals);

  double mu = 0.0;
  while (true) {
    KktSystem kr = k;
    if (mu > 0.0) kr.add_primal_regularization(mu);
    bool solved = false;
    Vec delta;
    double residual = 0.0, gd = 0.0;
    try {
      KktSolution sol = solve_with(kr, cfg, td);
      residual = (kr.apply(sol.full) - kr.rhs).lpNorm<Eigen::Infinity>();
      delta = extract_input_step(kr, sol);
      gd = grad.dot(delta);
      solved = (gd < 0.0) || grad.lpNorm<Eigen::Infinity>() == 0.0;
    } catch (const SingularPivotError&) {
    } catch (const SingularMatrixError&) {
    }
    if (solved) {
      if (diag) {
        diag->mu = mu;
        diag->kkt_residual = residual;
        diag->grad_dot_step = gd;
      }
      return delta;
    }
    mu = (mu == 0.0) ? cfg.reg_init : mu * cfg.reg_growth;
    if (mu > cfg.reg_max)
      throw NonDescentError("newton_step: no descent direction within regularization budget");
  }
}

double linesearch(const CompGraph& g, const Vec& inputs, const Vec& delta, const Vec& grad,
                  const NewtonConfig& cfg) {
  double gd = grad.dot(delta);
  if (gd >= 0.0) throw LinesearchFailError("linesearch: not a descent direction");
  double f0 = objective_value(g, forward_eval(g, inputs));
  double eta = 1.0;
  for (int i = 0; i < cfg.max_backtracks; ++i) {
    double f = objective_value(g, forward_eval(g, inputs + eta * delta));
    if (f <= f0 + cfg.armijo_c * eta * gd) return eta;
    eta *= cfg.shrink;
  }
  throw LinesearchFailError("linesearch: backtrack limit reached");
}

NewtonResult optimize(const CompGraph& g, const Vec& inputs0, const NewtonConfig& cfg) {
  std::optional<TreeDecomposition> td;
  if (cfg.solver == SolverKind::Tree) {
    Hypergraph h = moralize(g);
    td = decomposition_from_ordering(h, elimination_order(h, cfg.heuristic));
  }
  NewtonResult res;
  res.inputs = inputs0;
  for (int it = 0; it < cfg.max_iters; ++it) {
    auto t0 = std::chrono::steady_clock::now();
    StateAssignment s = forward_eval(g, res.inputs);
    DualAssignment duals = reverse_grad(g, s);
    Vec grad = stack_input_duals(g, duals);
    IterRecord rec;
    rec.iter = it;
    rec.objective = objective_value(g, s);
    rec.grad_inf = grad.lpNorm<Eigen::Infinity>();
    rec.constraint_residual = constraint_residual_inf(g, s);
    if (rec.grad_inf <= cfg.tol) {
      res.trace.push_back(rec);
      res.status = NewtonStatus::Converged;
      return res;
    }
    StepDiagnostics diag;
    Vec delta = newton_step(g, res.inputs, cfg, &diag, td ? &*td : nullptr);
    rec.mu = diag.mu;
    rec.kkt_residual = diag.kkt_residual;
    rec.eta = linesearch(g, res.inputs, delta, grad, cfg);
    res.inputs += rec.eta * delta;
    rec.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    res.trace.push_back(rec);
  }
  res.status = NewtonStatus::MaxIters;
  return res;
}

void write_trace_csv(std::ostream& os, const IterationTrace& trace) {
  os << "iter,objective,grad_inf,eta,mu,kkt_residual,ms\n";
  for (const auto& r : trace)
    os << r.iter << "," << r.objective << "," << r.grad_inf << "," << r.eta << "," << r.mu << ","
       << r.kkt_residual << "," << r.ms << "\n";
}

}  // namespace gn
