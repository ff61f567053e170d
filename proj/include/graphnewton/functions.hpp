#pragma once

#include <functional>
#include <memory>

#include <nlohmann/json.hpp>

#include "graphnewton/graph.hpp"

namespace gn {

// --- built-in node functions -------------------------------------------------

/// y = A x + c
std::shared_ptr<const NodeFunction> make_affine(const Mat& A, const Vec& c);
/// elementwise tanh, y_i = tanh(x_i)
std::shared_ptr<const NodeFunction> make_tanh(int dim);
/// elementwise square, y_i = x_i^2
std::shared_ptr<const NodeFunction> make_square(int dim);
/// y = sum_k coeff_k * x_k over equally sized parent blocks
std::shared_ptr<const NodeFunction> make_scaled_sum(int block_dim, const Vec& coeffs);
/// y_k = x[coords_k]^2
std::shared_ptr<const NodeFunction> make_coord_square(int input_dim, const std::vector<int>& coords);
/// Pendulum step over x = (theta, omega, u):
///   theta' = theta + dt*omega
///   omega' = omega + dt*(-(gravity/length)*sin(theta) - damping*omega + u)
std::shared_ptr<const NodeFunction> make_pendulum(double dt, double gravity = 9.81,
                                                  double length = 1.0, double damping = 0.0);
/// Fixes the leading coordinates of `inner` to `prefix`.
std::shared_ptr<const NodeFunction> make_bound_prefix(std::shared_ptr<const NodeFunction> inner,
                                                      const Vec& prefix);

/// Wraps a value-only function; derivatives by central finite differences.
std::shared_ptr<const NodeFunction> make_finite_difference(
    int input_dim, int output_dim, std::function<Vec(const Vec&)> value, double h = 1e-5);

// --- built-in local objectives -----------------------------------------------

/// l(z) = 0.5 z^T Q z + r^T z + c
std::shared_ptr<const LocalObjective> make_quadratic_objective(const Mat& Q, const Vec& r,
                                                               double c = 0.0);
/// Objective from a value-only function, derivatives by central finite differences.
std::shared_ptr<const LocalObjective> make_fd_objective(int dim,
                                                        std::function<double(const Vec&)> value,
                                                        double h = 1e-5);

// --- registry (extension point for the problem file format) -------------------

/// Builds a node function from a registry name and JSON params.
/// Known names: "affine", "tanh", "square", "scaled_sum", "coord_square",
/// "pendulum", "bound" (params: {inner: {name, params}, prefix: [...]}).
std::shared_ptr<const NodeFunction> make_function(const std::string& name,
                                                  const nlohmann::json& params);
/// Known names: "quadratic".
std::shared_ptr<const LocalObjective> make_objective(const std::string& name,
                                                     const nlohmann::json& params);

}  // namespace gn
