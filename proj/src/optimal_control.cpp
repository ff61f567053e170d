#include "graphnewton/optimal_control.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "graphnewton/autodiff.hpp"
#include "graphnewton/functions.hpp"

namespace gn {

namespace {

/// Objective with its leading coordinates bound to a constant.
class BoundPrefixObj final : public LocalObjective {
 public:
  BoundPrefixObj(std::shared_ptr<const LocalObjective> inner, Vec prefix)
      : inner_(std::move(inner)), prefix_(std::move(prefix)) {}
  int dim() const override { return inner_->dim() - static_cast<int>(prefix_.size()); }
  double value(const Vec& z) const override { return inner_->value(full(z)); }
  Vec gradient(const Vec& z) const override { return inner_->gradient(full(z)).tail(dim()); }
  Mat hessian(const Vec& z) const override {
    return inner_->hessian(full(z)).bottomRightCorner(dim(), dim());
  }

 private:
  Vec full(const Vec& z) const {
    Vec w(inner_->dim());
    w.head(prefix_.size()) = prefix_;
    w.tail(z.size()) = z;
    return w;
  }
  std::shared_ptr<const LocalObjective> inner_;
  Vec prefix_;
};

/// Objective that ignores the first `pad` coordinates of its member vector.
class PadObj final : public LocalObjective {
 public:
  PadObj(int pad, std::shared_ptr<const LocalObjective> inner) : pad_(pad), inner_(std::move(inner)) {}
  int dim() const override { return pad_ + inner_->dim(); }
  double value(const Vec& z) const override { return inner_->value(z.tail(inner_->dim())); }
  Vec gradient(const Vec& z) const override {
    Vec g = Vec::Zero(dim());
    g.tail(inner_->dim()) = inner_->gradient(z.tail(inner_->dim()));
    return g;
  }
  Mat hessian(const Vec& z) const override {
    Mat H = Mat::Zero(dim(), dim());
    H.bottomRightCorner(inner_->dim(), inner_->dim()) = inner_->hessian(z.tail(inner_->dim()));
    return H;
  }

 private:
  int pad_;
  std::shared_ptr<const LocalObjective> inner_;
};

/// Objective that ignores everything past the first inner.dim() coordinates.
class HeadObj final : public LocalObjective {
 public:
  HeadObj(std::shared_ptr<const LocalObjective> inner, int total) : inner_(std::move(inner)), total_(total) {}
  int dim() const override { return total_; }
  double value(const Vec& z) const override { return inner_->value(z.head(inner_->dim())); }
  Vec gradient(const Vec& z) const override {
    Vec g = Vec::Zero(total_);
    g.head(inner_->dim()) = inner_->gradient(z.head(inner_->dim()));
    return g;
  }
  Mat hessian(const Vec& z) const override {
    Mat H = Mat::Zero(total_, total_);
    H.topLeftCorner(inner_->dim(), inner_->dim()) = inner_->hessian(z.head(inner_->dim()));
    return H;
  }

 private:
  std::shared_ptr<const LocalObjective> inner_;
  int total_;
};

std::string uid(int i) { return "u" + std::to_string(i); }
std::string xid(int i) { return "x" + std::to_string(i); }

}  // namespace

CompGraph build_chain(const OcProblem& oc) {
  const int n = oc.horizon;
  const int nx = oc.state_dim, nu = oc.control_dim;
  std::vector<NodeSpec> nodes;
  for (int i = 0; i < n; ++i) {
    NodeSpec u;
    u.id = uid(i);
    u.dim = nu;
    if (i == 0 && oc.stage_loss[0])
      u.objective = std::make_shared<BoundPrefixObj>(oc.stage_loss[0], oc.x0);
    nodes.push_back(std::move(u));
  }
  for (int i = 1; i <= n; ++i) {
    NodeSpec x;
    x.id = xid(i);
    x.dim = nx;
    if (i == 1) {
      x.parents = {uid(0)};
      x.func = make_bound_prefix(oc.dynamics, oc.x0);
    } else {
      x.parents = {xid(i - 1), uid(i - 1)};
      x.func = oc.dynamics;
    }
    // Stage loss l_{i-1}(x_{i-1}, u_{i-1}) rides on node x_i's family for i >= 2
    // (stage 0 lives on u0 with x0 bound). Terminal loss folds in at x_n.
    std::shared_ptr<const LocalObjective> obj;
    if (i >= 2 && oc.stage_loss[i - 1]) obj = std::make_shared<PadObj>(nx, oc.stage_loss[i - 1]);
    if (i == n && oc.terminal_loss) {
      auto term = std::make_shared<HeadObj>(oc.terminal_loss, nx + (i == 1 ? nu : nx + nu));
      if (obj) {
        // Combine stage and terminal pieces at the last node.
        struct SumObj final : LocalObjective {
          std::shared_ptr<const LocalObjective> a, b;
          int dim() const override { return a->dim(); }
          double value(const Vec& z) const override { return a->value(z) + b->value(z); }
          Vec gradient(const Vec& z) const override { return a->gradient(z) + b->gradient(z); }
          Mat hessian(const Vec& z) const override { return a->hessian(z) + b->hessian(z); }
        };
        auto sum = std::make_shared<SumObj>();
        sum->a = obj;
        sum->b = term;
        obj = sum;
      } else {
        obj = term;
      }
    }
    x.objective = obj;
    nodes.push_back(std::move(x));
  }
  return CompGraph(std::move(nodes));
}

Vec stack_controls(const OcProblem& oc, const std::vector<Vec>& controls) {
  Vec out(oc.horizon * oc.control_dim);
  for (int i = 0; i < oc.horizon; ++i) out.segment(i * oc.control_dim, oc.control_dim) = controls[i];
  return out;
}

Trajectory rollout(const OcProblem& oc, const std::vector<Vec>& controls) {
  Trajectory tr;
  tr.u = controls;
  tr.x.resize(oc.horizon + 1);
  tr.x[0] = oc.x0;
  Vec z(oc.state_dim + oc.control_dim);
  for (int i = 0; i < oc.horizon; ++i) {
    z.head(oc.state_dim) = tr.x[i];
    z.tail(oc.control_dim) = controls[i];
    tr.x[i + 1] = oc.dynamics->value(z);
  }
  return tr;
}

double trajectory_cost(const OcProblem& oc, const Trajectory& tr) {
  double total = 0.0;
  Vec z(oc.state_dim + oc.control_dim);
  for (int i = 0; i < oc.horizon; ++i) {
    if (!oc.stage_loss[i]) continue;
    z.head(oc.state_dim) = tr.x[i];
    z.tail(oc.control_dim) = tr.u[i];
    total += oc.stage_loss[i]->value(z);
  }
  if (oc.terminal_loss) total += oc.terminal_loss->value(tr.x[oc.horizon]);
  return total;
}

BackwardPassResult ddp_backward(const OcProblem& oc, const Trajectory& tr, DdpVariant variant,
                                double reg) {
  const int n = oc.horizon;
  const int nx = oc.state_dim, nu = oc.control_dim;
  BackwardPassResult bp;
  bp.Qxx.resize(n);
  bp.Qux.resize(n);
  bp.Quu.resize(n);
  bp.qx.resize(n);
  bp.qu.resize(n);
  bp.K.resize(n);
  bp.kff.resize(n);
  bp.Vxx.resize(n + 1);
  bp.vx.resize(n + 1);

  // Total-derivative multipliers for the stagewise-Newton pair come from
  // reverse-mode AD on the lifted chain; duals[x_{i+1}] = dJ/dx_{i+1}.
  std::vector<Vec> total_dual(n + 1);
  if (variant == DdpVariant::StagewiseNewton || variant == DdpVariant::NonlinearStagewiseNewton) {
    CompGraph g = build_chain(oc);
    StateAssignment s = forward_eval(g, stack_controls(oc, tr.u));
    DualAssignment duals = reverse_grad(g, s);
    for (int i = 1; i <= n; ++i) total_dual[i] = duals[g.index(xid(i))];
  }

  bp.Vxx[n] = oc.terminal_loss ? oc.terminal_loss->hessian(tr.x[n]) : Mat::Zero(nx, nx);
  bp.vx[n] = oc.terminal_loss ? oc.terminal_loss->gradient(tr.x[n]) : Vec::Zero(nx);

  Vec z(nx + nu);
  for (int i = n - 1; i >= 0; --i) {
    z.head(nx) = tr.x[i];
    z.tail(nu) = tr.u[i];
    Mat J = oc.dynamics->jacobian(z);
    Mat A = J.leftCols(nx), B = J.rightCols(nu);

    Vec lambda;
    switch (variant) {
      case DdpVariant::Ddp:
        lambda = bp.vx[i + 1];
        break;
      case DdpVariant::StagewiseNewton:
      case DdpVariant::NonlinearStagewiseNewton:
        lambda = total_dual[i + 1];
        break;
      case DdpVariant::Ilqr:
        lambda = Vec::Zero(nx);
        break;
    }
    Mat H = oc.dynamics->weighted_hessian(z, lambda);
    Mat lH = Mat::Zero(nx + nu, nx + nu);
    Vec lg = Vec::Zero(nx + nu);
    if (oc.stage_loss[i]) {
      lH = oc.stage_loss[i]->hessian(z);
      lg = oc.stage_loss[i]->gradient(z);
    }
    bp.Qxx[i] = lH.topLeftCorner(nx, nx) + H.topLeftCorner(nx, nx) +
                A.transpose() * bp.Vxx[i + 1] * A;
    bp.Qux[i] = lH.bottomLeftCorner(nu, nx) + H.bottomLeftCorner(nu, nx) +
                B.transpose() * bp.Vxx[i + 1] * A;
    bp.Quu[i] = lH.bottomRightCorner(nu, nu) + H.bottomRightCorner(nu, nu) +
                B.transpose() * bp.Vxx[i + 1] * B;
    bp.qx[i] = lg.head(nx) + A.transpose() * bp.vx[i + 1];
    bp.qu[i] = lg.tail(nu) + B.transpose() * bp.vx[i + 1];

    Mat Quu_r = bp.Quu[i] + reg * Mat::Identity(nu, nu);
    Eigen::LLT<Mat> llt(Quu_r);
    if (llt.info() != Eigen::Success)
      throw SingularQuuError("ddp_backward: Quu not positive definite at stage " + std::to_string(i),
                             i);
    bp.K[i] = -llt.solve(bp.Qux[i]);
    bp.kff[i] = -llt.solve(bp.qu[i]);
    bp.Vxx[i] = bp.Qxx[i] + bp.Qux[i].transpose() * bp.K[i];
    bp.Vxx[i] = 0.5 * (bp.Vxx[i] + bp.Vxx[i].transpose().eval());
    bp.vx[i] = bp.qx[i] + bp.Qux[i].transpose() * bp.kff[i];
  }
  return bp;
}

ForwardResult ddp_forward(const OcProblem& oc, const Trajectory& tr, const BackwardPassResult& bp,
                          ForwardMode mode, double eta) {
  const int n = oc.horizon;
  ForwardResult fr;
  fr.du.resize(n);
  fr.dx.resize(n + 1);
  fr.dx[0] = Vec::Zero(oc.state_dim);
  if (mode == ForwardMode::Linear) {
    // Full Newton-direction computation; eta scales the returned step.
    Vec z(oc.state_dim + oc.control_dim);
    std::vector<Vec> dir(n);
    Vec dx = fr.dx[0];
    for (int i = 0; i < n; ++i) {
      dir[i] = bp.kff[i] + bp.K[i] * dx;
      z.head(oc.state_dim) = tr.x[i];
      z.tail(oc.control_dim) = tr.u[i];
      Mat J = oc.dynamics->jacobian(z);
      fr.dx[i + 1] = J.leftCols(oc.state_dim) * dx + J.rightCols(oc.control_dim) * dir[i];
      dx = fr.dx[i + 1];
    }
    std::vector<Vec> u_new(n);
    for (int i = 0; i < n; ++i) {
      fr.du[i] = eta * dir[i];
      u_new[i] = tr.u[i] + fr.du[i];
    }
    fr.traj = rollout(oc, u_new);
    // Report the unscaled direction in dx/du? du carries the applied step;
    // dx carries the linearized propagation of the unscaled direction.
    fr.du = std::move(dir);
    return fr;
  }
  // Nonlinear back-substitution: roll the true dynamics with scaled offsets.
  fr.traj.x.resize(n + 1);
  fr.traj.u.resize(n);
  fr.traj.x[0] = oc.x0;
  Vec z(oc.state_dim + oc.control_dim);
  for (int i = 0; i < n; ++i) {
    Vec dxi = fr.traj.x[i] - tr.x[i];
    fr.dx[i] = dxi;
    fr.du[i] = eta * bp.kff[i] + bp.K[i] * dxi;
    fr.traj.u[i] = tr.u[i] + fr.du[i];
    z.head(oc.state_dim) = fr.traj.x[i];
    z.tail(oc.control_dim) = fr.traj.u[i];
    fr.traj.x[i + 1] = oc.dynamics->value(z);
  }
  fr.dx[n] = fr.traj.x[n] - tr.x[n];
  return fr;
}

DdpResult run_ddp(const OcProblem& oc, const std::vector<Vec>& controls0, DdpVariant variant,
                  const NewtonConfig& cfg) {
  const int n = oc.horizon;
  ForwardMode mode =
      (variant == DdpVariant::StagewiseNewton) ? ForwardMode::Linear : ForwardMode::Nonlinear;
  CompGraph g = build_chain(oc);
  DdpResult res;
  res.controls = controls0;
  for (int it = 0; it < cfg.max_iters; ++it) {
    Trajectory tr = rollout(oc, res.controls);
    StateAssignment s = forward_eval(g, stack_controls(oc, res.controls));
    Vec grad = stack_input_duals(g, reverse_grad(g, s));
    IterRecord rec;
    rec.iter = it;
    rec.objective = trajectory_cost(oc, tr);
    rec.grad_inf = grad.lpNorm<Eigen::Infinity>();
    if (rec.grad_inf <= cfg.tol) {
      res.trace.push_back(rec);
      res.status = NewtonStatus::Converged;
      return res;
    }

    double reg = 0.0;
    while (true) {
      BackwardPassResult bp;
      double gd = 0.0;
      bool ok = false;
      try {
        bp = ddp_backward(oc, tr, variant, reg);
        ForwardResult dir = ddp_forward(oc, tr, bp, ForwardMode::Linear, 1.0);
        for (int i = 0; i < n; ++i)
          gd += grad.segment(i * oc.control_dim, oc.control_dim).dot(dir.du[i]);
        ok = gd < 0.0;
      } catch (const SingularQuuError&) {
      }
      if (ok) {
        rec.mu = reg;
        double eta = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < cfg.max_backtracks; ++bt) {
          ForwardResult fr = ddp_forward(oc, tr, bp, mode, eta);
          double J = trajectory_cost(oc, fr.traj);
          if (J <= rec.objective + cfg.armijo_c * eta * gd) {
            res.controls = fr.traj.u;
            rec.eta = eta;
            accepted = true;
            break;
          }
          eta *= cfg.shrink;
        }
        if (!accepted) throw LinesearchFailError("run_ddp: backtrack limit reached");
        break;
      }
      reg = (reg == 0.0) ? cfg.reg_init : reg * cfg.reg_growth;
      if (reg > cfg.reg_max) throw NonDescentError("run_ddp: no descent direction");
    }
    res.trace.push_back(rec);
  }
  res.status = NewtonStatus::MaxIters;
  return res;
}

OcProblem make_lqr_scalar(int horizon) {
  OcProblem oc;
  oc.horizon = horizon;
  oc.state_dim = 1;
  oc.control_dim = 1;
  oc.x0 = Vec::Ones(1);
  Mat A(1, 2);
  A << 1.0, 1.0;
  oc.dynamics = make_affine(A, Vec::Zero(1));
  for (int i = 0; i < horizon; ++i)
    oc.stage_loss.push_back(make_quadratic_objective(Mat::Identity(2, 2), Vec::Zero(2)));
  oc.terminal_loss = make_quadratic_objective(Mat::Identity(1, 1), Vec::Zero(1));
  return oc;
}

OcProblem make_lqr_mimo(int horizon, int state_dim, int control_dim) {
  OcProblem oc;
  oc.horizon = horizon;
  oc.state_dim = state_dim;
  oc.control_dim = control_dim;
  oc.x0 = Vec::Ones(state_dim);
  Mat A(state_dim, state_dim + control_dim);
  // Fixed, mildly coupled system.
  for (int i = 0; i < state_dim; ++i)
    for (int j = 0; j < state_dim; ++j)
      A(i, j) = (i == j) ? 0.9 : 0.1 / (1.0 + std::abs(i - j));
  for (int i = 0; i < state_dim; ++i)
    for (int j = 0; j < control_dim; ++j) A(i, state_dim + j) = ((i + j) % 2 == 0) ? 1.0 : 0.5;
  oc.dynamics = make_affine(A, Vec::Zero(state_dim));
  Mat W = Mat::Identity(state_dim + control_dim, state_dim + control_dim);
  W.bottomRightCorner(control_dim, control_dim) *= 0.1;
  for (int i = 0; i < horizon; ++i)
    oc.stage_loss.push_back(make_quadratic_objective(W, Vec::Zero(state_dim + control_dim)));
  oc.terminal_loss =
      make_quadratic_objective(10.0 * Mat::Identity(state_dim, state_dim), Vec::Zero(state_dim));
  return oc;
}

OcProblem make_pendulum_swingup(int horizon, double dt) {
  OcProblem oc;
  oc.horizon = horizon;
  oc.state_dim = 2;
  oc.control_dim = 1;
  oc.x0 = Vec::Zero(2);
  oc.dynamics = make_pendulum(dt);
  const double pi = 3.14159265358979323846;
  const double q = 0.1, r = 0.01, wt = 10.0;
  Mat Ws = Mat::Zero(3, 3);
  Ws.diagonal() << q, q, r;
  Vec rs(3);
  rs << -q * pi, 0.0, 0.0;
  for (int i = 0; i < horizon; ++i)
    oc.stage_loss.push_back(make_quadratic_objective(Ws, rs, 0.5 * q * pi * pi));
  Mat Wt = wt * Mat::Identity(2, 2);
  Vec rt(2);
  rt << -wt * pi, 0.0;
  oc.terminal_loss = make_quadratic_objective(Wt, rt, 0.5 * wt * pi * pi);
  return oc;
}

}  // namespace gn
