#pragma once

// Synthetic Gaussian-mixture joints, the joint CSV format, and the
// branch/curve/report writers.
//
// Joint CSV: first line "K_X,K", then K_X rows of K comma-separated values,
// row i column k holding p(x_i, y_k). Numbers are written with 17
// significant digits so a save/load round trip is bit-exact.

#include "infobif/curve.hpp"
#include "infobif/types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace infobif {

struct GaussianComponent {
  /// (x, y) in grid units on [0,1]^2; x indexes rows of p, y columns.
  std::array<double, 2> mean{0.5, 0.5};
  /// Row-major [[sxx, sxy], [sxy, syy]].
  std::array<double, 4> cov{0.01, 0.0, 0.0, 0.01};
  double weight = 1.0;
};

struct GaussianMixtureSpec {
  std::vector<GaussianComponent> components;
  Eigen::Index grid_x = 52;
  Eigen::Index grid_y = 52;
  std::uint64_t seed = 0;
  /// Standard deviation of seeded jitter added to each mean; 0 disables it.
  double jitter = 0.0;

  void validate() const;

  /// Four separated, anisotropic modes with unequal weights; the
  /// resulting joint carries I(X;Y) of about 0.969 nats.
  static GaussianMixtureSpec default_four();
  /// First `count` components of default_four() with weights renormalized.
  static GaussianMixtureSpec default_components(int count);
};

/// Mixture density at the cell centers ((i + 1/2)/K_X, (k + 1/2)/K),
/// normalized to total mass one.
JointDistribution gen_four_gaussian(const GaussianMixtureSpec& spec);

/// Throws ParseError on malformed input, InvalidArgument on invalid mass.
JointDistribution load_joint(const std::string& path);
void save_joint(const JointDistribution& p, const std::string& path);
JointDistribution parse_joint(const std::string& text);
std::string format_joint(const JointDistribution& p);

enum class Unit { Nats, Bits };
Unit unit_from_string(std::string_view name);
std::string_view to_string(Unit unit);
/// Multiplier turning nats into the display unit.
double unit_scale(Unit unit);

/// Columns: beta,branch_id,I_xyn,G,kkt_residual,solves_lagrangian,solves_constrained.
/// Boolean columns hold 1/0, or "na" when not applicable.
std::string format_branches_csv(const std::vector<Branch>& branches, Unit unit = Unit::Nats);
/// Columns: I0,R,beta,branch_id,kkt_residual.
std::string format_curve_csv(const std::vector<CurvePoint>& curve, Unit unit = Unit::Nats);

struct ReportEvent {
  double beta = 0.0;
  BifurcationKind kind = BifurcationKind::PitchforkLike;
  int parent_branch = 0;
  std::vector<int> child_branches;
  double information = 0.0;
};

struct ReportTheorem3 {
  double max_rel_err = 0.0;
  double max_second_abs_err = 0.0;
  std::vector<double> sign_changes;
  int segments_checked = 0;
};

struct ClassificationSummary {
  int points = 0;
  int solves_lagrangian = 0;
  int solves_constrained = 0;
  /// Points failing both tests; the kernel tests are only sufficient.
  int indeterminate = 0;
  /// solves_lagrangian without solves_constrained; must stay zero.
  int containment_violations = 0;
};

struct RunReport {
  Unit unit = Unit::Nats;
  std::vector<ReportEvent> bifurcations;
  std::optional<ReportTheorem3> theorem3;
  std::optional<ClassificationSummary> classification;
};

RunReport make_report(const std::vector<BifurcationEvent>& events);
ClassificationSummary summarize_classification(const std::vector<Branch>& branches);
ReportTheorem3 to_report(const Theorem3Report& t3);

/// Information-valued fields (event information, sign-change locations) are
/// scaled to report.unit on output and back to nats on input.
std::string format_report_json(const RunReport& report);
RunReport parse_report_json(const std::string& text);

void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

}  // namespace infobif
