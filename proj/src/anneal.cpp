#include "infobif/anneal.hpp"

#include "infobif/errors.hpp"
#include "infobif/spectral.hpp"
#include "kkt_newton.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

namespace infobif {
namespace {

double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

/// Per-column exponent beta (grad I)_{nu k} / p_k.
Matrix exponents(const JointDistribution& p, const Quantizer& q, double beta) {
  Matrix e = grad_I(p, q);
  if (!e.allFinite()) throw InvalidArgument("grad I has non-finite entries");
  for (Eigen::Index k = 0; k < e.cols(); ++k) e.col(k) *= beta / p.py()(k);
  return e;
}

/// Keeps q strictly inside the simplex so Newton steps can move every entry.
Matrix interior(const Matrix& q, double floor = 1e-14) {
  return Quantizer::normalized(q.cwiseMax(floor)).matrix();
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (counter + 1);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Removes from a tangent v the part that moves the class marginals p(nu).
/// For the bottleneck objective every q with identical columns is stationary
/// with G = I = 0, so a kick along that family never relaxes back; it only
/// walks the quantizer along a flat valley. Subtracting the p_Y-weighted row
/// mean keeps the column sums at zero.
Matrix marginal_preserving(const Matrix& v, const Vector& py) {
  Matrix out = v;
  const Vector row_mean = v * py;
  out.colwise() -= row_mean;
  return out;
}

/// Bottleneck representative of q. Classes whose rows are proportional carry
/// the same p(x|nu) and p(y|nu), so G and I only see their merged mass and any
/// split between them is equally stationary. Replacing each such group by
/// equal rows picks one point of that flat family; for identical columns the
/// result is the uniform quantizer.
Matrix merge_proportional_rows(const Matrix& q, double tol) {
  const Eigen::Index n = q.rows();
  Matrix profile = q;
  for (Eigen::Index r = 0; r < n; ++r) {
    const double s = profile.row(r).sum();
    if (s > 0.0) profile.row(r) /= s;
  }
  Matrix out = q;
  std::vector<bool> done(static_cast<std::size_t>(n), false);
  for (Eigen::Index a = 0; a < n; ++a) {
    if (done[a]) continue;
    std::vector<Eigen::Index> group{a};
    for (Eigen::Index b = a + 1; b < n; ++b) {
      if (!done[b] && max_abs_diff(profile.row(a), profile.row(b)) < tol) group.push_back(b);
    }
    if (group.size() < 2) continue;
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(q.cols());
    for (Eigen::Index r : group) mean += q.row(r);
    mean /= static_cast<double>(group.size());
    for (Eigen::Index r : group) {
      out.row(r) = mean;
      done[r] = true;
    }
  }
  return out;
}

/// Moves a bottleneck stationary point to its representative when that is at
/// least as stationary; other objectives pass through.
void canonicalize(ObjectiveKind kind, const JointDistribution& p, StationaryPoint& sp) {
  if (kind != ObjectiveKind::InformationBottleneck || sp.q.classes() < 2) return;
  const Matrix merged = merge_proportional_rows(sp.q.matrix(), 1e-7);
  if (merged == sp.q.matrix()) return;
  StationaryPoint rep = make_stationary_point(kind, p, Quantizer(merged), sp.beta);
  if (rep.kkt_residual <= std::max(sp.kkt_residual, 1e-10)) sp = std::move(rep);
}

std::optional<StationaryPoint> try_newton(ObjectiveKind kind, const JointDistribution& p,
                                          const Quantizer& q, double beta) {
  try {
    return newton_at_beta(kind, p, q, beta);
  } catch (const NonConvergence&) {
    return std::nullopt;
  }
}

/// Bisection on the existence of the Newton continuation of `last` between
/// last.beta and beta_hi. Used to locate the turning point of a branch.
double locate_turning_point(ObjectiveKind kind, const JointDistribution& p,
                            const StationaryPoint& last, double beta_hi, double resolution,
                            double max_jump) {
  double lo = last.beta;
  double hi = beta_hi;
  Quantizer q = last.q;
  while (std::abs(hi - lo) > resolution) {
    const double mid = 0.5 * (lo + hi);
    auto sp = try_newton(kind, p, q, mid);
    if (sp && max_abs_diff(sp->q.matrix(), q.matrix()) < max_jump) {
      lo = mid;
      q = sp->q;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

void AnnealSchedule::validate() const {
  std::ostringstream os;
  if (!(beta_start >= 0.0)) os << "beta_start must be >= 0; ";
  if (!(beta_start < beta_max)) os << "beta_start must be < beta_max; ";
  if (!(step_min > 0.0)) os << "step_min must be > 0; ";
  if (!(step > step_min)) os << "step must exceed step_min; ";
  if (!(perturbation >= 0.0)) os << "perturbation must be >= 0; ";
  if (max_fixed_point_iters < 1) os << "max_fixed_point_iters must be >= 1; ";
  if (!(convergence_tol > 0.0)) os << "convergence_tol must be > 0; ";
  if (!(max_step_dq > 0.0)) os << "max_step_dq must be > 0; ";
  if (!(symmetry_tol > 0.0)) os << "symmetry_tol must be > 0; ";
  if (!(tol_eig > 0.0)) os << "tol_eig must be > 0; ";
  if (!(kkt_tol > 0.0)) os << "kkt_tol must be > 0; ";
  const std::string msg = os.str();
  if (!msg.empty()) throw InvalidArgument("invalid anneal schedule: " + msg);
}

Quantizer fixed_point_update(ObjectiveKind kind, const JointDistribution& p, const Quantizer& q,
                             double beta) {
  Matrix e = exponents(p, q, beta);
  const Vector pn = class_marginal(p, q);
  for (Eigen::Index k = 0; k < e.cols(); ++k) {
    const double m = e.col(k).maxCoeff();
    double z = 0.0;
    for (Eigen::Index n = 0; n < e.rows(); ++n) {
      double v = std::exp(e(n, k) - m);
      if (kind == ObjectiveKind::InformationBottleneck) v *= pn(n);
      e(n, k) = v;
      z += v;
    }
    e.col(k) /= z;
  }
  if (!e.allFinite()) throw InvalidArgument("fixed-point update produced non-finite values");
  return Quantizer::normalized(std::move(e));
}

Vector rowwise_multipliers(ObjectiveKind kind, const JointDistribution& p, const Quantizer& q,
                           double beta) {
  const Matrix g = grad_G(kind, p, q) + beta * grad_I(p, q);
  return -g.colwise().mean().transpose();
}

Vector lagrange_multipliers(ObjectiveKind kind, const JointDistribution& p, const Quantizer& q,
                            double beta) {
  if (kind == ObjectiveKind::InformationBottleneck) return rowwise_multipliers(kind, p, q, beta);
  const Matrix e = exponents(p, q, beta);
  Vector lambda(e.cols());
  for (Eigen::Index k = 0; k < e.cols(); ++k) {
    const double m = e.col(k).maxCoeff();
    const double lse = (e.col(k).array() - m).exp().sum();
    lambda(k) = p.py()(k) * (1.0 - m - std::log(lse));
  }
  return lambda;
}

Matrix lagrangian_gradient(ObjectiveKind kind, const JointDistribution& p, const Quantizer& q,
                           double beta, const Vector& lambda) {
  if (lambda.size() != q.k()) throw DimensionMismatch("lambda must have one entry per column");
  Matrix g = grad_G(kind, p, q) + beta * grad_I(p, q);
  g.rowwise() += lambda.transpose();
  return g;
}

StationaryPoint make_stationary_point(ObjectiveKind kind, const JointDistribution& p,
                                      const Quantizer& q, double beta) {
  StationaryPoint sp;
  sp.q = q;
  sp.beta = beta;
  sp.lambda = lagrange_multipliers(kind, p, q, beta);
  sp.kkt_residual = lagrangian_gradient(kind, p, q, beta, sp.lambda).cwiseAbs().maxCoeff();
  sp.objective_value = objective(kind, p, q);
  sp.constraint_value = mutual_information_xyn(p, q);
  return sp;
}

StationaryPoint newton_at_beta(ObjectiveKind kind, const JointDistribution& p, const Quantizer& q0,
                               double beta, double tol, int max_iters) {
  detail::KktState start;
  start.q = interior(q0.matrix());
  start.beta = beta;
  start.lambda = rowwise_multipliers(kind, p, Quantizer(start.q), beta);
  detail::KktOptions opts;
  opts.tol = tol;
  opts.max_iters = max_iters;
  const auto res = detail::kkt_newton(kind, p, std::move(start), std::nullopt, opts);
  if (!res.converged) {
    throw NonConvergence("Newton on the KKT system did not converge at beta = " +
                             std::to_string(beta),
                         res.residual);
  }
  return make_stationary_point(kind, p, Quantizer::normalized(res.state.q), beta);
}

StationaryPoint solve_at_beta(ObjectiveKind kind, const JointDistribution& p, const Quantizer& q0,
                              double beta, const AnnealSchedule& schedule) {
  if (q0.k() != p.k()) throw DimensionMismatch("initial quantizer does not match p(X,Y)");
  Quantizer q = q0;
  double diff = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < schedule.max_fixed_point_iters; ++it) {
    Quantizer next = fixed_point_update(kind, p, q, beta);
    diff = max_abs_diff(next.matrix(), q.matrix());
    q = std::move(next);
    if (diff < schedule.convergence_tol) break;
  }
  if (!(diff < schedule.convergence_tol)) {
    std::ostringstream os;
    os << "fixed point did not converge at beta = " << beta << " after "
       << schedule.max_fixed_point_iters << " iterations";
    throw NonConvergence(os.str(), diff);
  }
  StationaryPoint sp = make_stationary_point(kind, p, q, beta);
  if (sp.kkt_residual > schedule.kkt_tol && q.classes() > 1) {
    // Polish: the fixed point converges linearly, Newton finishes the job.
    auto polished = try_newton(kind, p, q, beta);
    if (polished && polished->kkt_residual < sp.kkt_residual &&
        max_abs_diff(polished->q.matrix(), q.matrix()) < 1e-4) {
      sp = std::move(*polished);
    }
  }
  return sp;
}

Matrix random_tangent(Eigen::Index n, Eigen::Index k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix v(n, k);
  for (Eigen::Index c = 0; c < k; ++c) {
    for (Eigen::Index r = 0; r < n; ++r) v(r, c) = gauss(rng);
  }
  v.rowwise() -= v.colwise().mean();
  const double m = v.cwiseAbs().maxCoeff();
  if (m > 0.0) v /= m;
  return v;
}

std::vector<Branch> anneal(ObjectiveKind kind, const JointDistribution& p, Eigen::Index classes,
                           const AnnealSchedule& schedule) {
  schedule.validate();
  if (classes < 1) throw InvalidArgument("number of classes must be >= 1");
  const Eigen::Index k = p.k();

  DetectOptions detect;
  detect.tol_eig = schedule.tol_eig;
  detect.symmetry_tol = schedule.symmetry_tol;

  auto classify = [&](StationaryPoint& sp) {
    sp.spectral = classify_stationary_point(kind, p, sp, schedule.tol_eig);
  };

  std::vector<Branch> branches;
  Branch root;
  root.id = 0;
  root.provenance = BranchProvenance::UniformRoot;
  root.symmetry = {static_cast<int>(classes)};
  StationaryPoint first =
      solve_at_beta(kind, p, Quantizer::uniform(classes, k), schedule.beta_start, schedule);
  classify(first);
  root.points.push_back(std::move(first));
  branches.push_back(std::move(root));

  int current = 0;
  // Index of the event on the current branch still waiting for its child.
  std::optional<std::size_t> pending_event;
  double beta = schedule.beta_start;
  double h = schedule.step;
  std::uint64_t draw = 0;

  while (beta < schedule.beta_max - 1e-14) {
    const double beta_next = std::min(beta + h, schedule.beta_max);
    const StationaryPoint prev = branches[current].points.back();
    const int prev_unstable = unstable_count(*prev.spectral, schedule.tol_eig);

    std::optional<StationaryPoint> cont;
    if (classes > 1) {
      cont = try_newton(kind, p, prev.q, beta_next);
      // A long Newton jump means the iteration fell into another basin, not
      // that the branch moved: shorten the step before trusting it.
      if (cont && max_abs_diff(cont->q.matrix(), prev.q.matrix()) > 2.0 * schedule.max_step_dq) {
        if (h * 0.5 >= schedule.step_min) {
          h *= 0.5;
          continue;
        }
        cont.reset();
      }
      if (cont) {
        canonicalize(kind, p, *cont);
        classify(*cont);
      }
    } else {
      cont = prev;
      cont->beta = beta_next;
    }
    const bool crossing =
        cont && unstable_count(*cont->spectral, schedule.tol_eig) > prev_unstable;
    // The bottleneck objective has zero modes wherever classes coincide, so
    // only a clearly positive eigenvalue marks its parent as unstable.
    const bool parent_unstable =
        cont && (kind == ObjectiveKind::InformationDistortion
                     ? unstable_count(*cont->spectral, schedule.tol_eig) > 0
                     : cont->spectral->lagrangian_margin > schedule.tol_eig);

    // Solve from a perturbed copy of the previous point. When the branch has
    // lost stability, kick along the unstable direction as well.
    std::optional<StationaryPoint> sp;
    double last_residual = 0.0;
    const std::vector<double> kicks =
        (crossing || parent_unstable) ? std::vector<double>{1e-3, 3e-2} : std::vector<double>{0.0};
    for (double kick : kicks) {
      Matrix start = prev.q.matrix();
      if (classes > 1 && schedule.perturbation > 0.0) {
        Matrix v = random_tangent(classes, k, mix_seed(schedule.seed, draw++));
        if (kind == ObjectiveKind::InformationBottleneck) v = marginal_preserving(v, p.py());
        start += schedule.perturbation * v;
      }
      if (kick > 0.0) {
        const Matrix& dir = cont->spectral->leading_direction;
        start += kick * dir / std::max(dir.cwiseAbs().maxCoeff(), 1e-300);
      }
      try {
        sp = solve_at_beta(kind, p, Quantizer::normalized(interior(start, 1e-300)), beta_next,
                           schedule);
        break;
      } catch (const NonConvergence& e) {
        last_residual = e.last_residual();
      }
    }
    const bool escaping = crossing || parent_unstable;
    if (!sp && cont && (escaping || last_residual < 1e5 * schedule.convergence_tol)) {
      // Slow dynamics near a bifurcation. Either the fixed point is still
      // contracting onto the continued branch, or it is escaping a parent
      // that has just lost stability too slowly to finish. Newton has located
      // the continuation; keep it and let later, larger steps leave. On a
      // stable branch a fixed point still taking large steps is not slow, so
      // it falls through to step halving.
      sp = cont;
    }
    if (!sp) {
      h *= 0.5;
      if (h < schedule.step_min) {
        std::ostringstream os;
        os << "annealing step fell below step_min near beta = " << beta_next;
        throw NonConvergence(os.str(), last_residual);
      }
      continue;
    }
    if (kind == ObjectiveKind::InformationBottleneck) {
      // Keep the branch from wandering along a flat family of equivalent points.
      const Matrix before = sp->q.matrix();
      canonicalize(kind, p, *sp);
      if (sp->q.matrix() != before) sp->spectral.reset();
    }
    if (!sp->spectral) classify(*sp);

    const double dq_prev = max_abs_diff(sp->q.matrix(), prev.q.matrix());
    const bool same_branch = cont && max_abs_diff(sp->q.matrix(), cont->q.matrix()) < 1e-6;

    if (same_branch) {
      if (dq_prev > schedule.max_step_dq && h * 0.5 >= schedule.step_min) {
        h *= 0.5;
        continue;
      }
      Branch& br = branches[current];
      if (crossing) {
        CrossingRefinement ref = refine_crossing(kind, p, prev, beta_next, detect);
        BifurcationEvent ev;
        ev.beta = ref.beta;
        ev.kind = ref.symmetry_breaking ? BifurcationKind::PitchforkLike
                                        : BifurcationKind::SaddleNode;
        ev.crossing_vector = std::move(ref.direction);
        ev.parent_branch = br.id;
        ev.information = ref.information;
        br.events.push_back(std::move(ev));
        pending_event = br.events.size() - 1;
      }
      br.points.push_back(std::move(*sp));
      beta = beta_next;
      if (dq_prev < 0.25 * schedule.max_step_dq) h = std::min(schedule.step, 2.0 * h);
      continue;
    }

    // The solution left the current branch.
    Branch& parent = branches[current];
    std::optional<std::size_t> event_index = pending_event;
    if (crossing) {
      CrossingRefinement ref = refine_crossing(kind, p, prev, beta_next, detect);
      BifurcationEvent ev;
      ev.beta = ref.beta;
      ev.kind =
          ref.symmetry_breaking ? BifurcationKind::PitchforkLike : BifurcationKind::SaddleNode;
      ev.crossing_vector = std::move(ref.direction);
      ev.parent_branch = parent.id;
      ev.information = ref.information;
      parent.events.push_back(std::move(ev));
      event_index = parent.events.size() - 1;
    } else if (!event_index && !cont) {
      // The branch ended: a turning point between prev.beta and beta_next.
      BifurcationEvent ev;
      ev.beta = locate_turning_point(kind, p, prev, beta_next, detect.beta_resolution, 0.5);
      ev.kind = BifurcationKind::SaddleNode;
      ev.crossing_vector = prev.spectral->leading_direction;
      ev.parent_branch = parent.id;
      ev.information = prev.constraint_value;
      parent.events.push_back(std::move(ev));
      event_index = parent.events.size() - 1;
    } else if (!event_index && h * 0.5 >= schedule.step_min) {
      // The continued branch is still stable; retry with a shorter step
      // before accepting an unexplained jump.
      h *= 0.5;
      continue;
    }

    Branch child;
    child.id = static_cast<int>(branches.size());
    child.parent = parent.id;
    child.symmetry = symmetry_signature(sp->q.matrix(), schedule.symmetry_tol);
    child.provenance = BranchProvenance::JumpChild;
    if (event_index) {
      BifurcationEvent& ev = parent.events[*event_index];
      ev.child_branches.push_back(child.id);
      if (ev.kind == BifurcationKind::PitchforkLike) {
        child.provenance = BranchProvenance::PitchforkChild;
      }
    }
    child.points.push_back(std::move(*sp));
    branches.push_back(std::move(child));
    current = static_cast<int>(branches.size()) - 1;
    pending_event.reset();
    beta = beta_next;
  }
  return branches;
}

}  // namespace infobif
