#pragma once

// Deterministic annealing in beta for
//   max_q  G(q) + beta * I(X;Y_N)   subject to   sum_nu q_{nu k} = 1.
//
// Stationary points are found with the self-consistent fixed-point map and
// polished with a Newton step on the KKT system at fixed beta. The beta loop
// perturbs each solution slightly before re-solving so that symmetry breaking
// is numerically reachable, and delegates stability checks to spectral.hpp.

#include "infobif/types.hpp"

#include <cstdint>
#include <vector>

namespace infobif {

struct AnnealSchedule {
  double beta_start = 0.0;
  double beta_max = 2.0;
  double step = 0.01;
  double step_min = 1e-6;
  /// Size of the random tangent perturbation applied before each solve.
  double perturbation = 1e-4;
  int max_fixed_point_iters = 5000;
  double convergence_tol = 1e-10;
  std::uint64_t seed = 0;
  /// Largest sup-norm change of q allowed between consecutive branch points.
  double max_step_dq = 0.02;
  /// Rows of q closer than this are treated as the same class.
  double symmetry_tol = 1e-3;
  /// Eigenvalues above -tol_eig do not count as negative.
  double tol_eig = 1e-8;
  /// Target sup-norm of the Lagrangian gradient after Newton polishing.
  double kkt_tol = 1e-11;

  /// Throws InvalidArgument when an invariant is violated.
  void validate() const;
};

/// One application of the self-consistent map at the given beta.
Quantizer fixed_point_update(ObjectiveKind kind, const JointDistribution& p, const Quantizer& q,
                             double beta);

/// Multipliers lambda_k of the normalization constraints.
///
/// Information Distortion uses the closed form
///   lambda_k = p_k (1 - ln sum_nu exp(beta (grad I)_{nu k} / p_k)),
/// evaluated with per-column max subtraction. Information Bottleneck uses the
/// row-wise least-squares value -mean_nu (grad G + beta grad I)_{nu k}.
Vector lagrange_multipliers(ObjectiveKind kind, const JointDistribution& p, const Quantizer& q,
                            double beta);

/// -mean_nu (grad G + beta grad I)_{nu k}: the multipliers that best cancel
/// the Lagrangian gradient column by column. Exact at stationary points.
Vector rowwise_multipliers(ObjectiveKind kind, const JointDistribution& p, const Quantizer& q,
                           double beta);

/// grad G + beta grad I + lambda (lambda broadcast down each column).
Matrix lagrangian_gradient(ObjectiveKind kind, const JointDistribution& p, const Quantizer& q,
                           double beta, const Vector& lambda);

/// Evaluates lambda, KKT residual, G and I at q (no spectral data).
StationaryPoint make_stationary_point(ObjectiveKind kind, const JointDistribution& p,
                                      const Quantizer& q, double beta);

/// Newton iteration on the KKT system at fixed beta, starting from q0.
/// Converges to the nearest stationary point, stable or not. Throws
/// NonConvergence when the residual does not fall below tol.
StationaryPoint newton_at_beta(ObjectiveKind kind, const JointDistribution& p, const Quantizer& q0,
                               double beta, double tol = 1e-11, int max_iters = 60);

/// Fixed-point iteration from q0 until the sup-norm update falls below
/// schedule.convergence_tol, then Newton polishing of the KKT residual.
/// Throws NonConvergence after schedule.max_fixed_point_iters.
StationaryPoint solve_at_beta(ObjectiveKind kind, const JointDistribution& p, const Quantizer& q0,
                              double beta, const AnnealSchedule& schedule);

/// Anneals from the uniform quantizer with N classes over
/// [schedule.beta_start, schedule.beta_max]. Every returned point carries
/// its spectral classification; bifurcation events are attached to the
/// branch they were detected on.
std::vector<Branch> anneal(ObjectiveKind kind, const JointDistribution& p, Eigen::Index classes,
                           const AnnealSchedule& schedule);

/// Random tangent direction (column sums zero, unit sup-norm).
Matrix random_tangent(Eigen::Index n, Eigen::Index k, std::uint64_t seed);

}  // namespace infobif
