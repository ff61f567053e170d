#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace gn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using NodeId = std::string;

struct GraphError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : GraphError {
  using GraphError::GraphError;
};

// Assembly at an infeasible point (||h||_inf above tolerance).
struct InfeasibleError : GraphError {
  using GraphError::GraphError;
};

struct SingularMatrixError : GraphError {
  int pivot;
  SingularMatrixError(const std::string& msg, int pivot_) : GraphError(msg), pivot(pivot_) {}
};

// A bag's eliminate-block could not be pivoted; carries the bag id.
struct SingularPivotError : GraphError {
  int bag;
  SingularPivotError(const std::string& msg, int bag_) : GraphError(msg), bag(bag_) {}
};

struct NonDescentError : GraphError {
  using GraphError::GraphError;
};

struct LinesearchFailError : GraphError {
  using GraphError::GraphError;
};

}  // namespace gn
