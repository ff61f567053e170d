#include "graphnewton/functions.hpp"

#include <cmath>
#include <utility>

namespace gn {

namespace {

class AffineFn final : public NodeFunction {
 public:
  AffineFn(Mat A, Vec c) : A_(std::move(A)), c_(std::move(c)) {}
  int input_dim() const override { return static_cast<int>(A_.cols()); }
  int output_dim() const override { return static_cast<int>(A_.rows()); }
  Vec value(const Vec& x) const override { return A_ * x + c_; }
  Mat jacobian(const Vec&) const override { return A_; }
  Mat weighted_hessian(const Vec&, const Vec&) const override {
    return Mat::Zero(A_.cols(), A_.cols());
  }

 private:
  Mat A_;
  Vec c_;
};

class TanhFn final : public NodeFunction {
 public:
  explicit TanhFn(int dim) : dim_(dim) {}
  int input_dim() const override { return dim_; }
  int output_dim() const override { return dim_; }
  Vec value(const Vec& x) const override { return x.array().tanh(); }
  Mat jacobian(const Vec& x) const override {
    return Vec(1.0 - x.array().tanh().square()).asDiagonal();
  }
  Mat weighted_hessian(const Vec& x, const Vec& lambda) const override {
    // d2/dx2 tanh(x) = -2 tanh(x) (1 - tanh(x)^2)
    Eigen::ArrayXd t = x.array().tanh();
    return Vec(lambda.array() * (-2.0 * t * (1.0 - t.square()))).asDiagonal();
  }

 private:
  int dim_;
};

class SquareFn final : public NodeFunction {
 public:
  explicit SquareFn(int dim) : dim_(dim) {}
  int input_dim() const override { return dim_; }
  int output_dim() const override { return dim_; }
  Vec value(const Vec& x) const override { return x.array().square(); }
  Mat jacobian(const Vec& x) const override { return Vec(2.0 * x).asDiagonal(); }
  Mat weighted_hessian(const Vec&, const Vec& lambda) const override {
    return Vec(2.0 * lambda).asDiagonal();
  }

 private:
  int dim_;
};

class ScaledSumFn final : public NodeFunction {
 public:
  ScaledSumFn(int block_dim, Vec coeffs) : bd_(block_dim), coeffs_(std::move(coeffs)) {}
  int input_dim() const override { return bd_ * static_cast<int>(coeffs_.size()); }
  int output_dim() const override { return bd_; }
  Vec value(const Vec& x) const override {
    Vec y = Vec::Zero(bd_);
    for (int k = 0; k < coeffs_.size(); ++k) y += coeffs_[k] * x.segment(k * bd_, bd_);
    return y;
  }
  Mat jacobian(const Vec&) const override {
    Mat J(bd_, input_dim());
    for (int k = 0; k < coeffs_.size(); ++k)
      J.middleCols(k * bd_, bd_) = coeffs_[k] * Mat::Identity(bd_, bd_);
    return J;
  }
  Mat weighted_hessian(const Vec&, const Vec&) const override {
    return Mat::Zero(input_dim(), input_dim());
  }

 private:
  int bd_;
  Vec coeffs_;
};

class CoordSquareFn final : public NodeFunction {
 public:
  CoordSquareFn(int input_dim, std::vector<int> coords)
      : in_(input_dim), coords_(std::move(coords)) {}
  int input_dim() const override { return in_; }
  int output_dim() const override { return static_cast<int>(coords_.size()); }
  Vec value(const Vec& x) const override {
    Vec y(output_dim());
    for (size_t k = 0; k < coords_.size(); ++k) y[static_cast<int>(k)] = x[coords_[k]] * x[coords_[k]];
    return y;
  }
  Mat jacobian(const Vec& x) const override {
    Mat J = Mat::Zero(output_dim(), in_);
    for (size_t k = 0; k < coords_.size(); ++k) J(static_cast<int>(k), coords_[k]) = 2.0 * x[coords_[k]];
    return J;
  }
  Mat weighted_hessian(const Vec&, const Vec& lambda) const override {
    Mat W = Mat::Zero(in_, in_);
    for (size_t k = 0; k < coords_.size(); ++k)
      W(coords_[k], coords_[k]) += 2.0 * lambda[static_cast<int>(k)];
    return W;
  }

 private:
  int in_;
  std::vector<int> coords_;
};

class PendulumFn final : public NodeFunction {
 public:
  PendulumFn(double dt, double gravity, double length, double damping)
      : dt_(dt), gl_(gravity / length), damping_(damping) {}
  int input_dim() const override { return 3; }
  int output_dim() const override { return 2; }
  Vec value(const Vec& x) const override {
    Vec y(2);
    y[0] = x[0] + dt_ * x[1];
    y[1] = x[1] + dt_ * (-gl_ * std::sin(x[0]) - damping_ * x[1] + x[2]);
    return y;
  }
  Mat jacobian(const Vec& x) const override {
    Mat J(2, 3);
    J << 1.0, dt_, 0.0, -dt_ * gl_ * std::cos(x[0]), 1.0 - dt_ * damping_, dt_;
    return J;
  }
  Mat weighted_hessian(const Vec& x, const Vec& lambda) const override {
    Mat W = Mat::Zero(3, 3);
    W(0, 0) = lambda[1] * dt_ * gl_ * std::sin(x[0]);
    return W;
  }

 private:
  double dt_, gl_, damping_;
};

class BoundPrefixFn final : public NodeFunction {
 public:
  BoundPrefixFn(std::shared_ptr<const NodeFunction> inner, Vec prefix)
      : inner_(std::move(inner)), prefix_(std::move(prefix)) {}
  int input_dim() const override { return inner_->input_dim() - static_cast<int>(prefix_.size()); }
  int output_dim() const override { return inner_->output_dim(); }
  Vec value(const Vec& x) const override { return inner_->value(full(x)); }
  Mat jacobian(const Vec& x) const override {
    return inner_->jacobian(full(x)).rightCols(input_dim());
  }
  Mat weighted_hessian(const Vec& x, const Vec& lambda) const override {
    return inner_->weighted_hessian(full(x), lambda)
        .bottomRightCorner(input_dim(), input_dim());
  }

 private:
  Vec full(const Vec& x) const {
    Vec z(inner_->input_dim());
    z.head(prefix_.size()) = prefix_;
    z.tail(x.size()) = x;
    return z;
  }
  std::shared_ptr<const NodeFunction> inner_;
  Vec prefix_;
};

class FiniteDiffFn final : public NodeFunction {
 public:
  FiniteDiffFn(int in, int out, std::function<Vec(const Vec&)> f, double h)
      : in_(in), out_(out), f_(std::move(f)), h_(h) {}
  int input_dim() const override { return in_; }
  int output_dim() const override { return out_; }
  Vec value(const Vec& x) const override { return f_(x); }
  Mat jacobian(const Vec& x) const override {
    Mat J(out_, in_);
    Vec xp = x, xm = x;
    for (int j = 0; j < in_; ++j) {
      double h = h_ * (1.0 + std::abs(x[j]));
      xp[j] = x[j] + h;
      xm[j] = x[j] - h;
      J.col(j) = (f_(xp) - f_(xm)) / (2.0 * h);
      xp[j] = xm[j] = x[j];
    }
    return J;
  }
  Mat weighted_hessian(const Vec& x, const Vec& lambda) const override {
    auto g = [&](const Vec& z) { return Vec(jac_times(z).transpose() * lambda); };
    Mat W(in_, in_);
    Vec xp = x, xm = x;
    for (int j = 0; j < in_; ++j) {
      double h = h_ * (1.0 + std::abs(x[j]));
      xp[j] = x[j] + h;
      xm[j] = x[j] - h;
      W.col(j) = (g(xp) - g(xm)) / (2.0 * h);
      xp[j] = xm[j] = x[j];
    }
    return 0.5 * (W + W.transpose());
  }

 private:
  Mat jac_times(const Vec& x) const { return jacobian(x); }
  int in_, out_;
  std::function<Vec(const Vec&)> f_;
  double h_;
};

class QuadraticObj final : public LocalObjective {
 public:
  QuadraticObj(Mat Q, Vec r, double c) : Q_(std::move(Q)), r_(std::move(r)), c_(c) {
    Q_ = 0.5 * (Q_ + Q_.transpose().eval());
  }
  int dim() const override { return static_cast<int>(Q_.rows()); }
  double value(const Vec& z) const override {
    return 0.5 * z.dot(Q_ * z) + r_.dot(z) + c_;
  }
  Vec gradient(const Vec& z) const override { return Q_ * z + r_; }
  Mat hessian(const Vec&) const override { return Q_; }

 private:
  Mat Q_;
  Vec r_;
  double c_;
};

class FdObj final : public LocalObjective {
 public:
  FdObj(int dim, std::function<double(const Vec&)> f, double h)
      : dim_(dim), f_(std::move(f)), h_(h) {}
  int dim() const override { return dim_; }
  double value(const Vec& z) const override { return f_(z); }
  Vec gradient(const Vec& z) const override {
    Vec g(dim_);
    Vec zp = z, zm = z;
    for (int j = 0; j < dim_; ++j) {
      double h = h_ * (1.0 + std::abs(z[j]));
      zp[j] = z[j] + h;
      zm[j] = z[j] - h;
      g[j] = (f_(zp) - f_(zm)) / (2.0 * h);
      zp[j] = zm[j] = z[j];
    }
    return g;
  }
  Mat hessian(const Vec& z) const override {
    Mat H(dim_, dim_);
    Vec zp = z, zm = z;
    for (int j = 0; j < dim_; ++j) {
      double h = h_ * (1.0 + std::abs(z[j]));
      zp[j] = z[j] + h;
      zm[j] = z[j] - h;
      H.col(j) = (gradient(zp) - gradient(zm)) / (2.0 * h);
      zp[j] = zm[j] = z[j];
    }
    return 0.5 * (H + H.transpose());
  }

 private:
  int dim_;
  std::function<double(const Vec&)> f_;
  double h_;
};

Mat json_to_mat(const nlohmann::json& j) {
  const int rows = static_cast<int>(j.size());
  const int cols = rows > 0 ? static_cast<int>(j.at(0).size()) : 0;
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int k = 0; k < cols; ++k) m(i, k) = j.at(i).at(k).get<double>();
  return m;
}

Vec json_to_vec(const nlohmann::json& j) {
  Vec v(static_cast<int>(j.size()));
  for (int i = 0; i < v.size(); ++i) v[i] = j.at(i).get<double>();
  return v;
}

}  // namespace

std::shared_ptr<const NodeFunction> make_affine(const Mat& A, const Vec& c) {
  return std::make_shared<AffineFn>(A, c);
}
std::shared_ptr<const NodeFunction> make_tanh(int dim) { return std::make_shared<TanhFn>(dim); }
std::shared_ptr<const NodeFunction> make_square(int dim) { return std::make_shared<SquareFn>(dim); }
std::shared_ptr<const NodeFunction> make_scaled_sum(int block_dim, const Vec& coeffs) {
  return std::make_shared<ScaledSumFn>(block_dim, coeffs);
}
std::shared_ptr<const NodeFunction> make_coord_square(int input_dim, const std::vector<int>& coords) {
  return std::make_shared<CoordSquareFn>(input_dim, coords);
}
std::shared_ptr<const NodeFunction> make_pendulum(double dt, double gravity, double length,
                                                  double damping) {
  return std::make_shared<PendulumFn>(dt, gravity, length, damping);
}
std::shared_ptr<const NodeFunction> make_bound_prefix(std::shared_ptr<const NodeFunction> inner,
                                                      const Vec& prefix) {
  return std::make_shared<BoundPrefixFn>(std::move(inner), prefix);
}
std::shared_ptr<const NodeFunction> make_finite_difference(int input_dim, int output_dim,
                                                           std::function<Vec(const Vec&)> value,
                                                           double h) {
  return std::make_shared<FiniteDiffFn>(input_dim, output_dim, std::move(value), h);
}

std::shared_ptr<const LocalObjective> make_quadratic_objective(const Mat& Q, const Vec& r,
                                                               double c) {
  return std::make_shared<QuadraticObj>(Q, r, c);
}
std::shared_ptr<const LocalObjective> make_fd_objective(int dim,
                                                        std::function<double(const Vec&)> value,
                                                        double h) {
  return std::make_shared<FdObj>(dim, std::move(value), h);
}

std::shared_ptr<const NodeFunction> make_function(const std::string& name,
                                                  const nlohmann::json& params) {
  if (name == "affine") return make_affine(json_to_mat(params.at("A")), json_to_vec(params.at("c")));
  if (name == "tanh") return make_tanh(params.at("dim").get<int>());
  if (name == "square") return make_square(params.at("dim").get<int>());
  if (name == "scaled_sum")
    return make_scaled_sum(params.at("block_dim").get<int>(), json_to_vec(params.at("coeffs")));
  if (name == "coord_square")
    return make_coord_square(params.at("input_dim").get<int>(),
                             params.at("coords").get<std::vector<int>>());
  if (name == "pendulum")
    return make_pendulum(params.at("dt").get<double>(), params.value("gravity", 9.81),
                         params.value("length", 1.0), params.value("damping", 0.0));
  if (name == "bound")
    return make_bound_prefix(
        make_function(params.at("inner").at("name").get<std::string>(), params.at("inner").at("params")),
        json_to_vec(params.at("prefix")));
  throw GraphError("unknown node function: " + name);
}

std::shared_ptr<const LocalObjective> make_objective(const std::string& name,
                                                     const nlohmann::json& params) {
  if (name == "quadratic")
    return make_quadratic_objective(json_to_mat(params.at("Q")), json_to_vec(params.at("r")),
                                    params.value("c", 0.0));
  throw GraphError("unknown local objective: " + name);
}

}  // namespace gn
