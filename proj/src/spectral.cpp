#include "infobif/spectral.hpp"

#include "infobif/anneal.hpp"
#include "infobif/errors.hpp"

#include <algorithm>
#include <cmath>

namespace infobif {
namespace {

std::optional<StationaryPoint> try_newton(ObjectiveKind kind, const JointDistribution& p,
                                          const Quantizer& q, double beta) {
  try {
    return newton_at_beta(kind, p, q, beta);
  } catch (const NonConvergence&) {
    return std::nullopt;
  }
}

const SpectralClassification& spectral_of(ObjectiveKind kind, const JointDistribution& p,
                                          const StationaryPoint& sp,
                                          std::optional<SpectralClassification>& scratch,
                                          double tol_eig) {
  if (sp.spectral) return *sp.spectral;
  scratch = classify_stationary_point(kind, p, sp, tol_eig);
  return *scratch;
}

}  // namespace

KernelBasis kernel_basis(Eigen::Index k, Eigen::Index n, const std::optional<Matrix>& grad_d) {
  if (k < 1 || n < 1) throw InvalidArgument("kernel basis needs K >= 1 and N >= 1");
  const Eigen::Index dim = (n - 1) * k;
  Matrix b = Matrix::Zero(n * k, dim);
  // Helmert vectors h_j = (1, ..., 1, -j, 0, ...) / sqrt(j (j + 1)) in each column of q.
  for (Eigen::Index j = 1; j < n; ++j) {
    const double s = 1.0 / std::sqrt(static_cast<double>(j * (j + 1)));
    for (Eigen::Index col = 0; col < k; ++col) {
      const Eigen::Index c = (j - 1) * k + col;
      for (Eigen::Index r = 0; r < j; ++r) b(r * k + col, c) = s;
      b(j * k + col, c) = -static_cast<double>(j) * s;
    }
  }
  KernelBasis out;
  if (!grad_d) {
    out.basis = std::move(b);
    return out;
  }
  if (grad_d->rows() != n || grad_d->cols() != k) {
    throw DimensionMismatch("constraint gradient must be N x K");
  }
  const Vector c = b.transpose() * flatten(*grad_d);
  const double norm = c.norm();
  if (!(norm >= 1e-12)) {
    throw DegenerateKernel(
        "constraint gradient has no component in the normalization kernel (norm " +
        std::to_string(norm) + ")");
  }
  // Householder reflection mapping c / |c| to -sign(c_0) e_0; the remaining
  // columns span the orthogonal complement of c inside the kernel.
  Vector w = c / norm;
  w(0) += w(0) >= 0.0 ? 1.0 : -1.0;
  const Matrix householder = Matrix::Identity(dim, dim) - 2.0 * w * w.transpose() / w.squaredNorm();
  out.basis = b * householder.rightCols(dim - 1);
  out.constrained = true;
  return out;
}

ProjectedSpectrum projected_spectrum(const Matrix& hessian, const KernelBasis& basis) {
  ProjectedSpectrum out;
  const Eigen::Index dim = basis.basis.cols();
  if (dim == 0) {
    out.eigenvalues.resize(0);
    out.eigenvectors.resize(0, 0);
    return out;
  }
  Matrix m = basis.basis.transpose() * hessian * basis.basis;
  m = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  out.eigenvalues = es.eigenvalues().reverse();
  out.eigenvectors = es.eigenvectors().rowwise().reverse();
  return out;
}

SpectralClassification classify_stationary_point(ObjectiveKind kind, const JointDistribution& p,
                                                 const StationaryPoint& sp, double tol_eig) {
  const Eigen::Index n = sp.q.classes();
  const Eigen::Index k = sp.q.k();
  SpectralClassification out;
  const Matrix h = hessian_F(kind, p, sp.q, sp.beta);

  const KernelBasis lag = kernel_basis(k, n);
  const ProjectedSpectrum ls = projected_spectrum(h, lag);
  out.lagrangian_eigenvalues.assign(ls.eigenvalues.data(),
                                    ls.eigenvalues.data() + ls.eigenvalues.size());
  out.lagrangian_margin = ls.eigenvalues.size() ? ls.eigenvalues(0) : -1.0;
  out.solves_lagrangian = out.lagrangian_margin < -tol_eig;
  if (ls.eigenvalues.size()) {
    out.leading_direction = unflatten(lag.basis * ls.eigenvectors.col(0), n, k);
  } else {
    out.leading_direction = Matrix::Zero(n, k);
  }

  if (n < 2) {
    // Zero-dimensional kernels: negative definiteness holds vacuously.
    out.solves_constrained = true;
    out.constrained_margin = -1.0;
    return out;
  }
  const Matrix gi = grad_I(p, sp.q);
  Matrix tangent = gi;
  tangent.rowwise() -= gi.colwise().mean();
  if (tangent.norm() < kNumericallyUniformGrad) {
    // The direction of grad I is round-off here, and so is the constrained kernel.
    out.solves_constrained.reset();
    out.constrained_margin.reset();
    return out;
  }
  try {
    const KernelBasis con = kernel_basis(k, n, gi);
    const ProjectedSpectrum cs = projected_spectrum(h, con);
    out.constrained_eigenvalues.assign(cs.eigenvalues.data(),
                                       cs.eigenvalues.data() + cs.eigenvalues.size());
    out.constrained_margin = cs.eigenvalues.size() ? cs.eigenvalues(0) : -1.0;
    out.solves_constrained = *out.constrained_margin < -tol_eig;
  } catch (const DegenerateKernel&) {
    out.solves_constrained.reset();
    out.constrained_margin.reset();
  }
  return out;
}

int unstable_count(const SpectralClassification& c, double tol_eig) {
  return static_cast<int>(std::count_if(c.lagrangian_eigenvalues.begin(),
                                        c.lagrangian_eigenvalues.end(),
                                        [&](double v) { return v >= -tol_eig; }));
}

bool breaks_symmetry(const Matrix& q, const Matrix& v, double symmetry_tol) {
  const double scale = v.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) return false;
  for (const auto& group : symmetry_groups(q, symmetry_tol)) {
    for (std::size_t j = 1; j < group.size(); ++j) {
      if ((v.row(group[0]) - v.row(group[j])).cwiseAbs().maxCoeff() > 1e-6 * scale) return true;
    }
  }
  return false;
}

std::vector<BifurcationEvent> turning_points(const Branch& branch) {
  std::vector<BifurcationEvent> events;
  const auto& pts = branch.points;
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    const double d0 = pts[i].beta - pts[i - 1].beta;
    const double d1 = pts[i + 1].beta - pts[i].beta;
    if (!(d0 * d1 < 0.0)) continue;
    // beta as a parabola in I through the three points; its vertex is the turn.
    const double x0 = pts[i - 1].constraint_value, x1 = pts[i].constraint_value,
                 x2 = pts[i + 1].constraint_value;
    const double y0 = pts[i - 1].beta, y1 = pts[i].beta, y2 = pts[i + 1].beta;
    double beta_turn = y1;
    const double denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
    if (std::abs(denom) > 0.0) {
      const double a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
      const double b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
      const double c = (x1 * x2 * (x1 - x2) * y0 + x2 * x0 * (x2 - x0) * y1 +
                        x0 * x1 * (x0 - x1) * y2) /
                       denom;
      if (a != 0.0) {
        const double xv = -b / (2.0 * a);
        if (xv >= std::min(x0, x2) && xv <= std::max(x0, x2)) beta_turn = c - b * b / (4.0 * a);
      }
    }
    BifurcationEvent ev;
    ev.beta = beta_turn;
    ev.kind = BifurcationKind::SaddleNode;
    if (pts[i].spectral) ev.crossing_vector = pts[i].spectral->leading_direction;
    ev.parent_branch = branch.id;
    ev.information = x1;
    events.push_back(std::move(ev));
  }
  return events;
}

CrossingRefinement refine_crossing(ObjectiveKind kind, const JointDistribution& p,
                                   const StationaryPoint& stable, double beta_hi,
                                   const DetectOptions& options) {
  std::optional<SpectralClassification> scratch;
  const int base = unstable_count(spectral_of(kind, p, stable, scratch, options.tol_eig),
                                  options.tol_eig);
  StationaryPoint lo = stable;
  std::optional<StationaryPoint> hi;
  double beta_lo = stable.beta;
  double beta_up = beta_hi;
  while (std::abs(beta_up - beta_lo) > options.beta_resolution) {
    const double mid = 0.5 * (beta_lo + beta_up);
    auto sp = try_newton(kind, p, lo.q, mid);
    if (!sp) {
      beta_up = mid;
      continue;
    }
    sp->spectral = classify_stationary_point(kind, p, *sp, options.tol_eig);
    if (unstable_count(*sp->spectral, options.tol_eig) > base) {
      beta_up = mid;
      hi = std::move(sp);
    } else {
      beta_lo = mid;
      lo = std::move(*sp);
    }
  }
  if (!hi) {
    hi = try_newton(kind, p, lo.q, beta_up);
    if (hi) hi->spectral = classify_stationary_point(kind, p, *hi, options.tol_eig);
  }
  CrossingRefinement out;
  out.beta = 0.5 * (beta_lo + beta_up);
  out.information = lo.constraint_value;
  if (hi && hi->spectral) {
    // The newly non-negative eigenvalue is the one at position `base`.
    const auto& ev = hi->spectral->lagrangian_eigenvalues;
    const Eigen::Index n = hi->q.classes();
    const Eigen::Index k = hi->q.k();
    if (static_cast<int>(ev.size()) > base) {
      const KernelBasis lag = kernel_basis(k, n);
      const ProjectedSpectrum ps = projected_spectrum(hessian_F(kind, p, hi->q, hi->beta), lag);
      out.direction = unflatten(lag.basis * ps.eigenvectors.col(base), n, k);
    } else {
      out.direction = hi->spectral->leading_direction;
    }
  } else {
    std::optional<SpectralClassification> s2;
    out.direction = spectral_of(kind, p, lo, s2, options.tol_eig).leading_direction;
  }
  out.symmetry_breaking = breaks_symmetry(lo.q.matrix(), out.direction, options.symmetry_tol);
  return out;
}

std::vector<BifurcationEvent> detect_bifurcations(ObjectiveKind kind, const JointDistribution& p,
                                                  const Branch& branch,
                                                  const DetectOptions& options) {
  std::vector<BifurcationEvent> events;
  const auto& pts = branch.points;
  if (pts.size() < 2) return events;

  std::vector<SpectralClassification> spec;
  spec.reserve(pts.size());
  for (const auto& sp : pts) {
    spec.push_back(sp.spectral ? *sp.spectral
                               : classify_stationary_point(kind, p, sp, options.tol_eig));
  }

  for (std::size_t i = 1; i < pts.size(); ++i) {
    const int ca = unstable_count(spec[i - 1], options.tol_eig);
    const int cb = unstable_count(spec[i], options.tol_eig);
    if (ca == cb) continue;
    // Refine from the more stable side towards the other.
    const std::size_t from = ca < cb ? i - 1 : i;
    const std::size_t to = ca < cb ? i : i - 1;
    const Matrix& dir = spec[to].leading_direction;
    if (!breaks_symmetry(pts[to].q.matrix(), dir, options.symmetry_tol) &&
        !breaks_symmetry(pts[from].q.matrix(), dir, options.symmetry_tol)) {
      continue;  // symmetric crossing: a turning point, handled below
    }
    StationaryPoint start = pts[from];
    start.spectral = spec[from];
    CrossingRefinement ref = refine_crossing(kind, p, start, pts[to].beta, options);
    if (!ref.symmetry_breaking) continue;
    BifurcationEvent ev;
    ev.beta = ref.beta;
    ev.kind = BifurcationKind::PitchforkLike;
    ev.crossing_vector = std::move(ref.direction);
    ev.parent_branch = branch.id;
    ev.information = ref.information;
    events.push_back(std::move(ev));
  }

  Branch classified = branch;
  for (std::size_t i = 0; i < pts.size(); ++i) classified.points[i].spectral = spec[i];
  for (auto& ev : turning_points(classified)) events.push_back(std::move(ev));
  std::sort(events.begin(), events.end(),
            [](const BifurcationEvent& a, const BifurcationEvent& b) { return a.beta < b.beta; });
  return events;
}

}  // namespace infobif
