#pragma once

// Kernel-projected Hessian tests for stationary points and bifurcation
// detection along branches.
//
// The normalization kernel ker[I_K I_K ... I_K] consists of N x K directions
// whose columns sum to zero. The constrained kernel additionally removes the
// direction of grad I(X;Y_N). A stationary point solves the annealed problem
// if the Hessian of G + beta I is negative definite on the first kernel and
// solves the constrained problem if it is negative definite on the second.

#include "infobif/types.hpp"

#include <optional>
#include <vector>

namespace infobif {

struct KernelBasis {
  /// NK x dim, orthonormal columns in nu-major flattened coordinates.
  Matrix basis;
  bool constrained = false;
};

/// Orthonormal basis of the normalization kernel, or of the constrained
/// kernel when grad_d is given. Deterministic (Helmert vectors per column of
/// q followed by one Householder reflection). Throws DegenerateKernel when
/// the projection of grad_d onto the normalization kernel has norm < 1e-12.
KernelBasis kernel_basis(Eigen::Index k, Eigen::Index n, const std::optional<Matrix>& grad_d = {});

/// Eigenvalues (descending) and eigenvectors of B^T H B.
struct ProjectedSpectrum {
  Vector eigenvalues;
  Matrix eigenvectors;  // columns in basis coordinates
};
ProjectedSpectrum projected_spectrum(const Matrix& hessian, const KernelBasis& basis);

inline constexpr double kDefaultTolEig = 1e-8;
/// Below this tangent-space norm of grad I the point is treated as the
/// uniform quantizer and the constrained test is not applicable.
inline constexpr double kNumericallyUniformGrad = 1e-8;

SpectralClassification classify_stationary_point(ObjectiveKind kind, const JointDistribution& p,
                                                 const StationaryPoint& sp,
                                                 double tol_eig = kDefaultTolEig);

/// Number of Lagrangian-kernel eigenvalues that are not below -tol_eig.
int unstable_count(const SpectralClassification& c, double tol_eig);

/// True when v differs between two classes that q treats as identical.
bool breaks_symmetry(const Matrix& q, const Matrix& v, double symmetry_tol);

struct DetectOptions {
  double tol_eig = kDefaultTolEig;
  double beta_resolution = 1e-6;
  double symmetry_tol = 1e-3;
};

/// Refines the beta at which the unstable count of the branch through
/// `stable` changes, by bisection between stable.beta and beta_hi using
/// Newton continuation. Returns the refined beta, the crossing direction and
/// I(X;Y_N) on the branch there.
struct CrossingRefinement {
  double beta = 0.0;
  Matrix direction;
  double information = 0.0;
  bool symmetry_breaking = false;
};
CrossingRefinement refine_crossing(ObjectiveKind kind, const JointDistribution& p,
                                   const StationaryPoint& stable, double beta_hi,
                                   const DetectOptions& options);

/// Scans consecutive classified points of a branch.
///
/// A change in the number of non-negative Lagrangian-kernel eigenvalues whose
/// crossing direction breaks a symmetry of q is a pitchfork-like event
/// (refined by bisection). A reversal of the direction of beta along the
/// branch is a saddle-node (refined by a parabola through the three points
/// around the turn, parameterized by I(X;Y_N)). Points without spectral data
/// are classified on the fly.
std::vector<BifurcationEvent> detect_bifurcations(ObjectiveKind kind, const JointDistribution& p,
                                                  const Branch& branch,
                                                  const DetectOptions& options = {});

/// The saddle-node half of detect_bifurcations: beta reversals along the
/// branch order, needing no spectral data. crossing_vector is the leading
/// direction when the middle point carries a classification, else empty.
std::vector<BifurcationEvent> turning_points(const Branch& branch);

}  // namespace infobif
