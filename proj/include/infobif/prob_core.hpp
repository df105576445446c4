#pragma once

// Discrete joint distributions, soft quantizers, and the information
// functionals (with gradients and Hessians) used throughout the library.
//
// Units are nats. Matrices use the layout
//   p(x_i, y_k)  : K_X x K   (rows index X, columns index Y)
//   q(nu | y_k)  : N x K     (rows index the class nu, columns index Y)
// Flattened vectors and Hessians use index = nu * K + k.

#include <Eigen/Dense>

#include <string_view>

namespace infobif {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Floor applied to arguments of logarithms and to denominators.
inline constexpr double kProbFloor = 1e-15;

enum class ObjectiveKind {
  InformationDistortion,   // G(q) = H(Y_N|Y)
  InformationBottleneck,   // G(q) = -I(Y;Y_N)
};

std::string_view to_string(ObjectiveKind kind);
ObjectiveKind objective_from_string(std::string_view name);

/// Fixed problem data: p(X,Y) with cached marginals and I(X;Y).
class JointDistribution {
 public:
  /// Validates entries >= 0, total mass 1 within 1e-12 and every column
  /// mass p_k > 0. Throws InvalidArgument otherwise.
  explicit JointDistribution(Matrix p);

  const Matrix& matrix() const noexcept { return p_; }
  /// p(x_i)
  const Vector& px() const noexcept { return px_; }
  /// p(y_k), written p_k
  const Vector& py() const noexcept { return py_; }
  double mutual_information() const noexcept { return mi_; }

  Eigen::Index kx() const noexcept { return p_.rows(); }
  Eigen::Index k() const noexcept { return p_.cols(); }

 private:
  Matrix p_;
  Vector px_;
  Vector py_;
  double mi_ = 0.0;
};

/// Column-stochastic conditional probability q(Y_N = nu | Y = y_k).
class Quantizer {
 public:
  /// Validates entries >= 0 and column sums 1 within 1e-10.
  explicit Quantizer(Matrix q);

  static Quantizer uniform(Eigen::Index n, Eigen::Index k);
  /// Clamps negatives to zero and rescales every column to sum 1.
  static Quantizer normalized(Matrix q);

  const Matrix& matrix() const noexcept { return q_; }
  Eigen::Index classes() const noexcept { return q_.rows(); }
  Eigen::Index k() const noexcept { return q_.cols(); }

 private:
  struct Unchecked {};
  Quantizer(Matrix q, Unchecked) : q_(std::move(q)) {}

  Matrix q_;
};

/// Induced joint p(x_i, nu) = sum_k p(x_i, y_k) q_{nu k}, size K_X x N.
Matrix induced_joint(const JointDistribution& p, const Quantizer& q);
/// p(nu) = sum_k p_k q_{nu k}
Vector class_marginal(const JointDistribution& p, const Quantizer& q);

double mutual_information_xyn(const JointDistribution& p, const Quantizer& q);
double conditional_entropy_yn_given_y(const JointDistribution& p, const Quantizer& q);
double mutual_information_yyn(const JointDistribution& p, const Quantizer& q);

/// Objective value G(q): H(Y_N|Y) or -I(Y;Y_N).
double objective(ObjectiveKind kind, const JointDistribution& p, const Quantizer& q);

/// d I(X;Y_N) / d q_{nu k}, an N x K matrix.
Matrix grad_I(const JointDistribution& p, const Quantizer& q);
/// Gradient of G(q) for the chosen objective.
Matrix grad_G(ObjectiveKind kind, const JointDistribution& p, const Quantizer& q);

/// Hessian of I(X;Y_N); block diagonal across classes.
Matrix hessian_I(const JointDistribution& p, const Quantizer& q);
Matrix hessian_G(ObjectiveKind kind, const JointDistribution& p, const Quantizer& q);
/// Hessian of G(q) + beta * I(X;Y_N), size NK x NK, symmetric.
Matrix hessian_F(ObjectiveKind kind, const JointDistribution& p, const Quantizer& q,
                 double beta);

// Overloads on a bare N x K matrix. The formulas extend smoothly off the
// simplex (p(x) stays the data marginal), which is what Newton iterates and
// finite-difference probes need. Only dimensions are checked.
Matrix induced_joint(const JointDistribution& p, const Matrix& q);
Vector class_marginal(const JointDistribution& p, const Matrix& q);
double mutual_information_xyn(const JointDistribution& p, const Matrix& q);
double conditional_entropy_yn_given_y(const JointDistribution& p, const Matrix& q);
double mutual_information_yyn(const JointDistribution& p, const Matrix& q);
double objective(ObjectiveKind kind, const JointDistribution& p, const Matrix& q);
Matrix grad_I(const JointDistribution& p, const Matrix& q);
Matrix grad_G(ObjectiveKind kind, const JointDistribution& p, const Matrix& q);
Matrix hessian_I(const JointDistribution& p, const Matrix& q);
Matrix hessian_G(ObjectiveKind kind, const JointDistribution& p, const Matrix& q);
Matrix hessian_F(ObjectiveKind kind, const JointDistribution& p, const Matrix& q, double beta);

/// Row-major (nu-major) flattening of an N x K matrix and its inverse.
Vector flatten(const Matrix& m);
Matrix unflatten(const Vector& v, Eigen::Index n, Eigen::Index k);

}  // namespace infobif
