#pragma once

#include "graphnewton/newton.hpp"

namespace gn {

/// Canonical optimal-control chain: x_{i+1} <- f(x_i, u_i), stage losses
/// l_i(x_i, u_i) and terminal loss l_n(x_n). x0 is a fixed datum.
struct OcProblem {
  int horizon = 0;  // n
  int state_dim = 0;
  int control_dim = 0;
  Vec x0;
  std::shared_ptr<const NodeFunction> dynamics;  // (x, u) -> x'
  /// Stage losses over (x_i, u_i); size horizon.
  std::vector<std::shared_ptr<const LocalObjective>> stage_loss;
  std::shared_ptr<const LocalObjective> terminal_loss;  // over x_n
};

/// Inputs u_0..u_{n-1}; node x_{i+1} has parents {x_i, u_i} (x_1: {u_0} with
/// x0 bound into the stage-0 function). Node ids "u0".."x1"..
CompGraph build_chain(const OcProblem& oc);

/// Stacks controls (u_0..u_{n-1}) for build_chain's input layout.
Vec stack_controls(const OcProblem& oc, const std::vector<Vec>& controls);

struct Trajectory {
  std::vector<Vec> x;  // x_0..x_n (x_0 = x0)
  std::vector<Vec> u;  // u_0..u_{n-1}
};

/// Independent rollout, x_{i+1} = f(x_i, u_i).
Trajectory rollout(const OcProblem& oc, const std::vector<Vec>& controls);
double trajectory_cost(const OcProblem& oc, const Trajectory& tr);

enum class DdpVariant { Ddp, StagewiseNewton, NonlinearStagewiseNewton, Ilqr };

struct BackwardPassResult {
  // Per stage i = 0..n-1.
  std::vector<Mat> Qxx, Qux, Quu;
  std::vector<Vec> qx, qu;
  std::vector<Mat> K;  // feedback gains -Quu^{-1} Qux
  std::vector<Vec> kff;  // feedforward -Quu^{-1} qu
  // Value model per stage i = 0..n (index i: V_i).
  std::vector<Mat> Vxx;
  std::vector<Vec> vx;
};

struct SingularQuuError : GraphError {
  int stage;
  SingularQuuError(const std::string& msg, int stage_) : GraphError(msg), stage(stage_) {}
};

/// Value recursion from V_n = l_n down to stage 0. The lambda weighting the
/// dynamics curvature follows the variant: value-gradient for Ddp, the total
/// derivative dJ/dx_{i+1} for the stagewise-Newton pair, zero for Ilqr.
/// reg is added to Quu before inversion.
BackwardPassResult ddp_backward(const OcProblem& oc, const Trajectory& tr, DdpVariant variant,
                                double reg = 0.0);

enum class ForwardMode { Linear, Nonlinear };

struct ForwardResult {
  Trajectory traj;          // new trajectory (nonlinear mode) or nominal + deltas applied
  std::vector<Vec> du;      // control steps
  std::vector<Vec> dx;      // state deltas (linear mode propagation)
};

/// Linear mode propagates dx by the linearized dynamics and returns the
/// stacked Newton-direction control step; nonlinear mode rolls the true
/// dynamics with u_i + eta*kff_i + K_i dx_i.
ForwardResult ddp_forward(const OcProblem& oc, const Trajectory& tr, const BackwardPassResult& bp,
                          ForwardMode mode, double eta = 1.0);

struct DdpResult {
  std::vector<Vec> controls;
  IterationTrace trace;
  NewtonStatus status = NewtonStatus::MaxIters;
};

DdpResult run_ddp(const OcProblem& oc, const std::vector<Vec>& controls0, DdpVariant variant,
                  const NewtonConfig& cfg);

// Presets.
OcProblem make_lqr_scalar(int horizon);
OcProblem make_lqr_mimo(int horizon, int state_dim = 4, int control_dim = 2);
OcProblem make_pendulum_swingup(int horizon, double dt = 0.1);

}  // namespace gn
