#pragma once

#include "infobif/prob_core.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace infobif {

/// Outcome of the two kernel-projected Hessian tests at a stationary point.
///
/// Both tests are sufficient conditions only. A point that fails both is
/// indeterminate, not a non-solution.
struct SpectralClassification {
  /// Eigenvalues of B^T H B on ker[I_K ... I_K], sorted descending.
  std::vector<double> lagrangian_eigenvalues;
  /// Eigenvalues on the kernel that is additionally orthogonal to grad I.
  /// Empty when that kernel is degenerate (grad I = 0, e.g. uniform q).
  std::vector<double> constrained_eigenvalues;
  /// Negative definite on the normalization kernel: solves the annealed problem.
  bool solves_lagrangian = false;
  /// Negative definite on the constrained kernel: solves the I >= I0 problem.
  /// Empty when the constrained test is not applicable.
  std::optional<bool> solves_constrained;
  double lagrangian_margin = 0.0;
  std::optional<double> constrained_margin;
  /// Eigenvectors (N x K) of the largest Lagrangian-kernel eigenvalue.
  Matrix leading_direction;
};

struct StationaryPoint {
  Quantizer q = Quantizer::uniform(1, 1);
  double beta = 0.0;
  Vector lambda;
  double kkt_residual = 0.0;
  double objective_value = 0.0;
  double constraint_value = 0.0;  // I(X;Y_N)
  std::optional<SpectralClassification> spectral;
};

enum class BifurcationKind { PitchforkLike, SaddleNode };

std::string_view to_string(BifurcationKind kind);

struct BifurcationEvent {
  double beta = 0.0;
  BifurcationKind kind = BifurcationKind::PitchforkLike;
  /// N x K direction whose eigenvalue crosses zero.
  Matrix crossing_vector;
  int parent_branch = -1;
  std::vector<int> child_branches;
  /// I(X;Y_N) on the parent at the event.
  double information = 0.0;
};

enum class BranchProvenance { UniformRoot, PitchforkChild, JumpChild, ConstrainedRecovery };

std::string_view to_string(BranchProvenance provenance);

struct Branch {
  int id = 0;
  std::vector<StationaryPoint> points;
  /// Sizes of groups of identical classes, descending. {N} is the uniform
  /// (fully symmetric) branch, {1, 1, ..., 1} has no symmetry left.
  std::vector<int> symmetry;
  BranchProvenance provenance = BranchProvenance::UniformRoot;
  int parent = -1;
  /// Events found while following this branch.
  std::vector<BifurcationEvent> events;
};

/// Groups of classes whose rows of q agree within tol (sup-norm). Each group
/// lists class indices in increasing order; groups are ordered by first index.
std::vector<std::vector<int>> symmetry_groups(const Matrix& q, double tol);
/// Group sizes of symmetry_groups, sorted descending.
std::vector<int> symmetry_signature(const Matrix& q, double tol);

/// Canonical relabeling: rows of q sorted lexicographically (descending),
/// so quantizers equal up to class permutation map to the same matrix.
Matrix canonical_form(const Matrix& q);

}  // namespace infobif
