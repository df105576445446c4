#pragma once

// Relevance-compression curves R(I0) = max { G(q) : q in Delta, I(X;Y_N) >= I0 }.
//
// The constraint is active at every maximizer, so each point is found by
// Newton's method on the extended KKT system in (q, lambda, beta):
//   grad G + beta grad I + lambda = 0,   sum_nu q_{nu k} = 1,   I(q) = I0.
// The recovered beta is the Lagrange multiplier of the information
// constraint, which makes beta(I0) and dR/dI0 = -beta checkable.

#include "infobif/anneal.hpp"
#include "infobif/types.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace infobif {

struct CurvePoint {
  double I0 = 0.0;
  double R = 0.0;
  double beta = 0.0;
  int branch_id = 0;
  double kkt_residual = 0.0;
  Quantizer q = Quantizer::uniform(1, 1);
  Vector lambda;
  /// I(X;Y_N) at q; equals I0 to solver precision.
  double information = 0.0;
};

struct ConstrainedOptions {
  Eigen::Index classes = 2;
  /// Structured and random restarts from perturbations of the uniform
  /// quantizer, tried in addition to any warm start.
  int restarts = 8;
  std::uint64_t seed = 0;
  double tol = 1e-11;
  int max_iters = 80;
  /// Worker threads for restarts; results do not depend on it.
  int jobs = 1;
};

/// Initial guess for the constrained Newton solve.
struct WarmStart {
  Quantizer q;
  std::optional<double> beta;
  std::optional<Vector> lambda;
};

/// Maximum of I(X;Y_N) over quantizers with N classes. The maximum of a
/// convex function over Delta sits at a deterministic quantizer; it is
/// enumerated exactly when N^K is small and estimated by seeded local search
/// otherwise (then `exact` is false and the value is a lower bound).
struct InformationBound {
  double value = 0.0;
  bool exact = false;
};
InformationBound achievable_information(const JointDistribution& p, Eigen::Index classes,
                                        std::uint64_t seed = 0);

/// Solves max G s.t. I(X;Y_N) = I0 from the warm start (if any) and the
/// configured restarts, returning the converged candidate with largest R.
/// Throws InfeasibleI0 when I0 cannot be reached and NonConvergence when no
/// candidate converges.
CurvePoint solve_constrained(ObjectiveKind kind, const JointDistribution& p, double I0,
                             const std::optional<WarmStart>& warm_start,
                             const ConstrainedOptions& options);

struct CurveSpec {
  double I0_min = 1e-3;
  double I0_max = 0.1;
  int points = 100;
  ObjectiveKind kind = ObjectiveKind::InformationDistortion;
  Eigen::Index classes = 2;
  int restarts = 8;
  std::uint64_t seed = 0;
  double tol = 1e-11;
  int jobs = 1;
  double tol_mono = 1e-6;

  void validate() const;
};

/// Evenly spaced I0 values of the spec.
std::vector<double> curve_grid(const CurveSpec& spec);

/// Sweeps I0 upward with warm starts from the previous point, extra seeds
/// from annealed branches and multi-start restarts. Points are labeled with
/// branch ids: consecutive points share an id when Newton continuation from
/// one lands on the other. R is enforced non-increasing within tol_mono by
/// re-solving earlier points from later ones. I0 values where no candidate
/// converged are omitted.
std::vector<CurvePoint> build_curve(const CurveSpec& spec, const JointDistribution& p,
                                    const std::vector<Branch>& seeds = {});

/// (I0, beta) pairs in curve order.
std::vector<std::pair<double, double>> beta_of_I0(const std::vector<CurvePoint>& curve);

/// Stationary point view of a curve point (for spectral classification).
StationaryPoint to_stationary_point(ObjectiveKind kind, const JointDistribution& p,
                                    const CurvePoint& point);

/// Consecutive curve points with the same branch id, as a Branch ordered by I0.
std::vector<Branch> curve_branches(ObjectiveKind kind, const JointDistribution& p,
                                   const std::vector<CurvePoint>& curve);

/// R + c + beta I0 + sum_k lambda_k, which vanishes at constrained
/// stationary points. c = -1 for the conditional entropy (q . grad H = H - 1)
/// and c = 0 for -I(Y;Y_N).
double identity_residual(ObjectiveKind kind, const CurvePoint& point);

struct Theorem3Check {
  double I0 = 0.0;
  double beta = 0.0;
  double dR_dI0 = 0.0;
  double rel_err = 0.0;
  double d2R_dI02 = 0.0;
  double dbeta_dI0 = 0.0;
  double second_abs_err = 0.0;
};

struct Theorem3Report {
  /// max |dR/dI0 + beta| / max(beta, 1e-6) over interior points of smooth segments.
  double max_rel_err = 0.0;
  /// max |d2R/dI0^2 + dbeta/dI0|.
  double max_second_abs_err = 0.0;
  /// I0 locations where dbeta/dI0 changes sign (convexity changes of R).
  std::vector<double> sign_changes;
  int segments_checked = 0;
  std::vector<Theorem3Check> checks;
};

/// Centered finite differences of R and beta along each smooth segment
/// (maximal run of a single branch id) with at least `min_points` points.
/// Throws SegmentTooShort when no segment qualifies.
Theorem3Report verify_theorem3(const std::vector<CurvePoint>& curve, int min_points = 5);

}  // namespace infobif
