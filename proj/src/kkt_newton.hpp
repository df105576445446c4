#pragma once

// Damped Newton iteration on the KKT system of
//   max G(q) + beta I(q)  s.t.  sum_nu q_{nu k} = 1  [, I(q) = target]
// Unknowns are (q, lambda) at fixed beta, or (q, lambda, beta) when an
// information target is imposed. Internal to the library.

#include "infobif/prob_core.hpp"

#include <optional>

namespace infobif::detail {

struct KktState {
  Matrix q;
  Vector lambda;
  double beta = 0.0;
};

struct KktResult {
  KktState state;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct KktOptions {
  double tol = 1e-11;
  int max_iters = 60;
  int max_halvings = 30;
  /// Fraction of the distance to the simplex boundary a step may use.
  double boundary_fraction = 0.99;
};

/// Sup-norm of the stacked KKT residual.
double kkt_system_residual(ObjectiveKind kind, const JointDistribution& p, const KktState& s,
                           std::optional<double> target_info);

KktResult kkt_newton(ObjectiveKind kind, const JointDistribution& p, KktState start,
                     std::optional<double> target_info, const KktOptions& options);

/// Least-squares beta and lambda for a given q: minimizes
/// ||grad G + beta grad I + lambda|| over (beta, lambda). Falls back to
/// beta_default when grad I has no component in the normalization kernel.
KktState least_squares_multipliers(ObjectiveKind kind, const JointDistribution& p, const Matrix& q,
                                   double beta_default);

}  // namespace infobif::detail
