#include "infobif/curve.hpp"

#include "infobif/errors.hpp"
#include "kkt_newton.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace infobif {
namespace {

double sup_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

double deterministic_information(const JointDistribution& p, const std::vector<int>& assign,
                                 Eigen::Index classes) {
  const Eigen::Index kx = p.kx();
  Matrix pxn = Matrix::Zero(kx, classes);
  for (Eigen::Index k = 0; k < p.k(); ++k) pxn.col(assign[k]) += p.matrix().col(k);
  const Vector pn = pxn.colwise().sum().transpose();
  double mi = 0.0;
  for (Eigen::Index n = 0; n < classes; ++n) {
    for (Eigen::Index i = 0; i < kx; ++i) {
      const double v = pxn(i, n);
      if (v > 0.0) mi += v * std::log(v / (p.px()(i) * pn(n)));
    }
  }
  return mi;
}

/// Leading direction of instability of the uniform quantizer: the top
/// eigenvector u of P^{-1/2} (A - p p^T) P^{-1/2}, A = p^T diag(1/p(x)) p,
/// returned as u_k / sqrt(p_k) together with the critical beta = 1 / eigenvalue.
std::pair<Vector, double> uniform_critical_direction(const JointDistribution& p) {
  const Vector& py = p.py();
  const Vector inv_px = p.px().cwiseMax(kProbFloor).cwiseInverse();
  const Matrix a = p.matrix().transpose() * inv_px.asDiagonal() * p.matrix();
  const Vector s = py.cwiseSqrt().cwiseInverse();
  Matrix m = s.asDiagonal() * (a - py * py.transpose()) * s.asDiagonal();
  m = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  const Eigen::Index top = m.rows() - 1;
  Vector u = es.eigenvectors().col(top).cwiseProduct(s);
  u /= std::max(u.cwiseAbs().maxCoeff(), 1e-300);
  const double ev = es.eigenvalues()(top);
  return {u, ev > 1e-12 ? 1.0 / ev : 1.0};
}

/// Class patterns w (sum zero) used for structured restarts.
std::vector<Vector> class_patterns(Eigen::Index n) {
  std::vector<Vector> out;
  if (n < 2) return out;
  Vector one_vs_rest = Vector::Constant(n, -1.0);
  one_vs_rest(0) = static_cast<double>(n - 1);
  out.push_back(one_vs_rest);
  out.push_back(-one_vs_rest);
  if (n >= 4) {
    const Eigen::Index half = n / 2;
    Vector split(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      split(i) = i < half ? static_cast<double>(n - half) : -static_cast<double>(half);
    }
    out.push_back(split);
    if (n % 2 != 0) out.push_back(-split);
  }
  return out;
}

/// Moves from the uniform quantizer along d until I(X;Y_N) reaches I0 (or
/// the simplex boundary gets close).
Matrix start_on_level(const JointDistribution& p, const Matrix& d, double I0) {
  const Eigen::Index n = d.rows();
  const Matrix u = Matrix::Constant(n, d.cols(), 1.0 / static_cast<double>(n));
  const double most_negative = (-d).maxCoeff();
  double t_max = most_negative > 0.0 ? 0.95 / (static_cast<double>(n) * most_negative) : 1.0;
  if (mutual_information_xyn(p, Matrix(u + t_max * d)) <= I0) return u + t_max * d;
  double lo = 0.0, hi = t_max;
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mutual_information_xyn(p, Matrix(u + mid * d)) < I0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return u + hi * d;
}

std::optional<CurvePoint> newton_candidate(ObjectiveKind kind, const JointDistribution& p,
                                           double I0, const WarmStart& start,
                                           double beta_default, const ConstrainedOptions& opts) {
  const Matrix q0 = Quantizer::normalized(start.q.matrix().cwiseMax(1e-14)).matrix();
  detail::KktState s = detail::least_squares_multipliers(kind, p, q0, beta_default);
  if (start.beta) s.beta = *start.beta;
  if (start.lambda && start.lambda->size() == p.k()) {
    s.lambda = *start.lambda;
  } else if (start.beta) {
    s.lambda = -(grad_G(kind, p, q0) + s.beta * grad_I(p, q0)).colwise().mean().transpose();
  }
  detail::KktOptions ko;
  ko.tol = opts.tol;
  ko.max_iters = opts.max_iters;
  detail::KktResult r = detail::kkt_newton(kind, p, std::move(s), I0, ko);
  if (!r.converged) return std::nullopt;
  if (r.state.q.minCoeff() < 0.0 || !r.state.q.allFinite()) return std::nullopt;
  CurvePoint cp;
  cp.I0 = I0;
  cp.q = Quantizer::normalized(r.state.q);
  cp.beta = r.state.beta;
  cp.lambda = r.state.lambda;
  cp.R = objective(kind, p, cp.q);
  cp.information = mutual_information_xyn(p, cp.q);
  Matrix lag = grad_G(kind, p, cp.q) + cp.beta * grad_I(p, cp.q);
  lag.rowwise() += cp.lambda.transpose();
  cp.kkt_residual = lag.cwiseAbs().maxCoeff();
  if (std::abs(cp.information - I0) > 1e-8) return std::nullopt;
  return cp;
}

struct SolveOutcome {
  std::optional<CurvePoint> best;
  int best_index = -1;
  double last_residual = std::numeric_limits<double>::infinity();
};

/// Runs every warm start plus the configured restarts; picks the largest R
/// (earliest candidate on ties within 1e-12).
SolveOutcome solve_all(ObjectiveKind kind, const JointDistribution& p, double I0,
                       const std::vector<WarmStart>& warm, const ConstrainedOptions& opts) {
  const Eigen::Index n = opts.classes;
  const Eigen::Index k = p.k();
  std::vector<WarmStart> cands = warm;
  const auto [u, beta_crit] = uniform_critical_direction(p);
  if (opts.restarts > 0 && n >= 2) {
    int added = 0;
    for (const Vector& w : class_patterns(n)) {
      if (added >= opts.restarts) break;
      cands.push_back(WarmStart{Quantizer::normalized(start_on_level(p, w * u.transpose(), I0)),
                                std::nullopt, std::nullopt});
      ++added;
    }
    std::uint64_t draw = 0;
    while (added < opts.restarts) {
      const Matrix d = random_tangent(n, k, opts.seed * 7919 + 104729 * ++draw);
      cands.push_back(
          WarmStart{Quantizer::normalized(start_on_level(p, d, I0)), std::nullopt, std::nullopt});
      ++added;
    }
  }

  std::vector<std::optional<CurvePoint>> results(cands.size());
  auto run = [&](std::size_t i) {
    results[i] = newton_candidate(kind, p, I0, cands[i], beta_crit, opts);
  };
  if (opts.jobs > 1 && cands.size() > 1) {
    std::vector<std::future<void>> futures;
    std::size_t next = 0;
    while (next < cands.size()) {
      futures.clear();
      for (int j = 0; j < opts.jobs && next < cands.size(); ++j, ++next) {
        futures.push_back(std::async(std::launch::async, run, next));
      }
      for (auto& f : futures) f.get();
    }
  } else {
    for (std::size_t i = 0; i < cands.size(); ++i) run(i);
  }

  SolveOutcome out;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!results[i]) continue;
    if (!out.best || results[i]->R > out.best->R + 1e-12) {
      out.best = results[i];
      out.best_index = static_cast<int>(i);
    }
  }
  return out;
}

void check_I0(const JointDistribution& p, double I0, Eigen::Index classes) {
  if (!(I0 > 0.0)) throw InvalidArgument("I0 must be positive");
  if (classes < 2) throw InfeasibleI0("a single class carries no information about X");
  if (I0 >= p.mutual_information()) {
    std::ostringstream os;
    os << "I0 = " << I0 << " is not below I(X;Y) = " << p.mutual_information();
    throw InfeasibleI0(os.str());
  }
}

WarmStart warm_from(const CurvePoint& cp) { return WarmStart{cp.q, cp.beta, cp.lambda}; }

}  // namespace

InformationBound achievable_information(const JointDistribution& p, Eigen::Index classes,
                                        std::uint64_t seed) {
  const Eigen::Index k = p.k();
  if (classes < 1) throw InvalidArgument("number of classes must be >= 1");
  if (classes == 1) return {0.0, true};
  if (classes >= k) return {p.mutual_information(), true};

  double combos = std::pow(static_cast<double>(classes), static_cast<double>(k));
  if (combos <= 1 << 20) {
    std::vector<int> a(static_cast<std::size_t>(k), 0);
    double best = 0.0;
    while (true) {
      best = std::max(best, deterministic_information(p, a, classes));
      Eigen::Index pos = 0;
      while (pos < k && ++a[pos] == classes) a[pos++] = 0;
      if (pos == k) break;
    }
    return {best, true};
  }

  // Seeded coordinate ascent over hard assignments.
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(classes) - 1);
  double best = 0.0;
  for (int restart = 0; restart < 8; ++restart) {
    std::vector<int> a(static_cast<std::size_t>(k));
    for (auto& v : a) v = pick(rng);
    double cur = deterministic_information(p, a, classes);
    bool improved = true;
    while (improved) {
      improved = false;
      for (Eigen::Index col = 0; col < k; ++col) {
        const int keep = a[col];
        for (int c = 0; c < classes; ++c) {
          if (c == keep) continue;
          a[col] = c;
          const double v = deterministic_information(p, a, classes);
          if (v > cur + 1e-15) {
            cur = v;
            improved = true;
            break;
          }
          a[col] = keep;
        }
      }
    }
    best = std::max(best, cur);
  }
  return {best, false};
}

CurvePoint solve_constrained(ObjectiveKind kind, const JointDistribution& p, double I0,
                             const std::optional<WarmStart>& warm_start,
                             const ConstrainedOptions& options) {
  ConstrainedOptions opts = options;
  if (warm_start) opts.classes = warm_start->q.classes();
  check_I0(p, I0, opts.classes);
  const InformationBound bound = achievable_information(p, opts.classes, opts.seed);
  if (bound.exact && I0 >= bound.value) {
    std::ostringstream os;
    os << "I0 = " << I0 << " exceeds the maximum " << bound.value << " reachable with "
       << opts.classes << " classes";
    throw InfeasibleI0(os.str());
  }
  std::vector<WarmStart> warm;
  if (warm_start) warm.push_back(*warm_start);
  SolveOutcome out = solve_all(kind, p, I0, warm, opts);
  if (!out.best) {
    std::ostringstream os;
    os << "constrained solve did not converge at I0 = " << I0;
    throw NonConvergence(os.str(), out.last_residual);
  }
  return *out.best;
}

void CurveSpec::validate() const {
  std::ostringstream os;
  if (!(I0_min > 0.0)) os << "I0_min must be > 0; ";
  if (!(I0_min < I0_max)) os << "I0_min must be < I0_max; ";
  if (points < 2) os << "points must be >= 2; ";
  if (classes < 2) os << "classes must be >= 2; ";
  if (restarts < 0) os << "restarts must be >= 0; ";
  if (!(tol > 0.0)) os << "tol must be > 0; ";
  if (!(tol_mono > 0.0)) os << "tol_mono must be > 0; ";
  const std::string msg = os.str();
  if (!msg.empty()) throw InvalidArgument("invalid curve spec: " + msg);
}

std::vector<double> curve_grid(const CurveSpec& spec) {
  std::vector<double> g(static_cast<std::size_t>(spec.points));
  for (int i = 0; i < spec.points; ++i) {
    g[i] = spec.I0_min + (spec.I0_max - spec.I0_min) * i / (spec.points - 1);
  }
  return g;
}

std::vector<CurvePoint> build_curve(const CurveSpec& spec, const JointDistribution& p,
                                    const std::vector<Branch>& seeds) {
  spec.validate();
  if (spec.I0_max >= p.mutual_information()) {
    std::ostringstream os;
    os << "I0_max = " << spec.I0_max << " is not below I(X;Y) = " << p.mutual_information();
    throw InfeasibleI0(os.str());
  }
  const InformationBound bound = achievable_information(p, spec.classes, spec.seed);
  if (bound.exact && spec.I0_max >= bound.value) {
    std::ostringstream os;
    os << "I0_max = " << spec.I0_max << " exceeds the maximum " << bound.value
       << " reachable with " << spec.classes << " classes";
    throw InfeasibleI0(os.str());
  }

  ConstrainedOptions opts;
  opts.classes = spec.classes;
  opts.restarts = spec.restarts;
  opts.seed = spec.seed;
  opts.tol = spec.tol;
  opts.jobs = spec.jobs;

  const std::vector<double> grid = curve_grid(spec);
  std::vector<CurvePoint> curve;
  for (double I0 : grid) {
    std::vector<WarmStart> warm;
    if (!curve.empty()) warm.push_back(warm_from(curve.back()));
    for (const Branch& b : seeds) {
      const StationaryPoint* nearest = nullptr;
      for (const auto& sp : b.points) {
        if (sp.q.classes() != spec.classes || sp.constraint_value < 1e-8) continue;
        if (!nearest ||
            std::abs(sp.constraint_value - I0) < std::abs(nearest->constraint_value - I0)) {
          nearest = &sp;
        }
      }
      if (nearest) warm.push_back(WarmStart{nearest->q, nearest->beta, nearest->lambda});
    }
    SolveOutcome out = solve_all(spec.kind, p, I0, warm, opts);
    if (out.best) curve.push_back(std::move(*out.best));
  }

  // R must be non-increasing: a later point is feasible for every earlier I0,
  // so re-solve earlier points starting from later ones.
  ConstrainedOptions warm_only = opts;
  warm_only.restarts = 0;
  for (std::size_t pass = 0; pass < curve.size(); ++pass) {
    bool changed = false;
    for (std::size_t j = curve.size(); j-- > 1;) {
      if (curve[j].R <= curve[j - 1].R + spec.tol_mono) continue;
      std::vector<WarmStart> warm{warm_from(curve[j])};
      if (j >= 2) warm.push_back(warm_from(curve[j - 2]));
      SolveOutcome out = solve_all(spec.kind, p, curve[j - 1].I0, warm, warm_only);
      if (out.best && out.best->R > curve[j - 1].R + 1e-12) {
        curve[j - 1] = std::move(*out.best);
        changed = true;
      }
    }
    if (!changed) break;
  }

  // Branch labels: same branch when continuation from the previous point
  // reproduces the current one.
  int next_id = 0;
  for (std::size_t j = 0; j < curve.size(); ++j) {
    if (j == 0) {
      curve[j].branch_id = next_id++;
      continue;
    }
    auto cont = newton_candidate(spec.kind, p, curve[j].I0, warm_from(curve[j - 1]), 1.0,
                                 warm_only);
    const bool same = cont && sup_diff(canonical_form(cont->q.matrix()),
                                       canonical_form(curve[j].q.matrix())) < 1e-6;
    curve[j].branch_id = same ? curve[j - 1].branch_id : next_id++;
  }
  return curve;
}

std::vector<std::pair<double, double>> beta_of_I0(const std::vector<CurvePoint>& curve) {
  std::vector<std::pair<double, double>> out;
  out.reserve(curve.size());
  for (const auto& cp : curve) out.emplace_back(cp.I0, cp.beta);
  return out;
}

StationaryPoint to_stationary_point(ObjectiveKind kind, const JointDistribution& p,
                                    const CurvePoint& point) {
  StationaryPoint sp;
  sp.q = point.q;
  sp.beta = point.beta;
  sp.lambda = point.lambda;
  sp.kkt_residual = point.kkt_residual;
  sp.objective_value = objective(kind, p, point.q);
  sp.constraint_value = point.information;
  return sp;
}

std::vector<Branch> curve_branches(ObjectiveKind kind, const JointDistribution& p,
                                   const std::vector<CurvePoint>& curve) {
  std::vector<Branch> out;
  for (const auto& cp : curve) {
    if (out.empty() || out.back().id != cp.branch_id) {
      Branch b;
      b.id = cp.branch_id;
      b.provenance = BranchProvenance::ConstrainedRecovery;
      b.symmetry = symmetry_signature(cp.q.matrix(), 1e-3);
      out.push_back(std::move(b));
    }
    out.back().points.push_back(to_stationary_point(kind, p, cp));
  }
  return out;
}

double identity_residual(ObjectiveKind kind, const CurvePoint& point) {
  const double c = kind == ObjectiveKind::InformationDistortion ? -1.0 : 0.0;
  return point.R + c + point.beta * point.information + point.lambda.sum();
}

Theorem3Report verify_theorem3(const std::vector<CurvePoint>& curve, int min_points) {
  Theorem3Report rep;
  std::size_t start = 0;
  while (start < curve.size()) {
    std::size_t end = start;
    while (end + 1 < curve.size() && curve[end + 1].branch_id == curve[start].branch_id) ++end;
    const std::size_t len = end - start + 1;
    if (static_cast<int>(len) >= min_points) {
      ++rep.segments_checked;
      double prev_sign = 0.0;
      double prev_I0 = 0.0;
      for (std::size_t i = start + 1; i < end; ++i) {
        const double hm = curve[i].I0 - curve[i - 1].I0;
        const double hp = curve[i + 1].I0 - curve[i].I0;
        const double wm = -hp / (hm * (hm + hp));
        const double w0 = (hp - hm) / (hm * hp);
        const double wp = hm / (hp * (hm + hp));
        auto d1 = [&](auto f) {
          return wm * f(curve[i - 1]) + w0 * f(curve[i]) + wp * f(curve[i + 1]);
        };
        auto d2 = [&](auto f) {
          return 2.0 * (f(curve[i - 1]) / (hm * (hm + hp)) - f(curve[i]) / (hm * hp) +
                        f(curve[i + 1]) / (hp * (hm + hp)));
        };
        Theorem3Check c;
        c.I0 = curve[i].I0;
        c.beta = curve[i].beta;
        c.dR_dI0 = d1([](const CurvePoint& x) { return x.R; });
        c.rel_err = std::abs(c.dR_dI0 + c.beta) / std::max(c.beta, 1e-6);
        c.d2R_dI02 = d2([](const CurvePoint& x) { return x.R; });
        c.dbeta_dI0 = d1([](const CurvePoint& x) { return x.beta; });
        c.second_abs_err = std::abs(c.d2R_dI02 + c.dbeta_dI0);
        rep.max_rel_err = std::max(rep.max_rel_err, c.rel_err);
        rep.max_second_abs_err = std::max(rep.max_second_abs_err, c.second_abs_err);
        if (std::abs(c.dbeta_dI0) > 1e-6) {
          const double sign = c.dbeta_dI0 > 0.0 ? 1.0 : -1.0;
          if (prev_sign != 0.0 && sign != prev_sign) {
            rep.sign_changes.push_back(0.5 * (prev_I0 + c.I0));
          }
          prev_sign = sign;
          prev_I0 = c.I0;
        }
        rep.checks.push_back(c);
      }
    }
    start = end + 1;
  }
  if (rep.segments_checked == 0) {
    throw SegmentTooShort("no smooth curve segment has at least " + std::to_string(min_points) +
                          " points");
  }
  return rep;
}

}  // namespace infobif
