#include "infobif/verify.hpp"

#include "infobif/anneal.hpp"
#include "infobif/errors.hpp"
#include "infobif/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace infobif {
namespace {

CheckResult below(std::string name, double value, double threshold, std::string detail = {}) {
  return CheckResult{std::move(name), value, threshold, value < threshold, std::move(detail)};
}

double dot(const Matrix& a, const Matrix& b) { return a.cwiseProduct(b).sum(); }

using Ld = long double;

/// Central differences of f along the tangent directions e_{nu k} - e_{0 k}.
template <class F>
Vector tangent_fd(F f, const Matrix& q, double h) {
  const Eigen::Index n = q.rows(), k = q.cols();
  Vector out((n - 1) * k);
  for (Eigen::Index nu = 1; nu < n; ++nu) {
    for (Eigen::Index col = 0; col < k; ++col) {
      Matrix plus = q, minus = q;
      plus(nu, col) += h;
      plus(0, col) -= h;
      minus(nu, col) -= h;
      minus(0, col) += h;
      out((nu - 1) * k + col) = static_cast<double>((f(plus) - f(minus)) / (2.0L * h));
    }
  }
  return out;
}

Vector tangent_project(const Matrix& g) {
  const Eigen::Index n = g.rows(), k = g.cols();
  Vector out((n - 1) * k);
  for (Eigen::Index nu = 1; nu < n; ++nu) {
    for (Eigen::Index col = 0; col < k; ++col) out((nu - 1) * k + col) = g(nu, col) - g(0, col);
  }
  return out;
}

// Long-double re-evaluations of the functionals; the finite differences
// then lose far less to cancellation than the double versions would.

Ld induced(const JointDistribution& p, const Matrix& q, Eigen::Index i, Eigen::Index nu) {
  Ld s = 0;
  for (Eigen::Index k = 0; k < p.k(); ++k) s += Ld(p.matrix()(i, k)) * Ld(q(nu, k));
  return s;
}

Ld info_xyn_ld(const JointDistribution& p, const Matrix& q) {
  Ld total = 0;
  std::vector<Ld> pn(static_cast<std::size_t>(q.rows()), 0);
  for (Eigen::Index nu = 0; nu < q.rows(); ++nu) {
    for (Eigen::Index k = 0; k < p.k(); ++k) pn[nu] += Ld(p.py()(k)) * Ld(q(nu, k));
  }
  for (Eigen::Index i = 0; i < p.kx(); ++i) {
    for (Eigen::Index nu = 0; nu < q.rows(); ++nu) {
      const Ld v = induced(p, q, i, nu);
      if (v > 0) total += v * std::log(v / (Ld(p.px()(i)) * pn[nu]));
    }
  }
  return total;
}

Ld cond_entropy_ld(const JointDistribution& p, const Matrix& q) {
  Ld h = 0;
  for (Eigen::Index nu = 0; nu < q.rows(); ++nu) {
    for (Eigen::Index k = 0; k < p.k(); ++k) {
      const Ld v = q(nu, k);
      if (v > 0) h -= Ld(p.py()(k)) * v * std::log(v);
    }
  }
  return h;
}

Ld neg_info_yyn_ld(const JointDistribution& p, const Matrix& q) {
  Ld hn = 0;
  for (Eigen::Index nu = 0; nu < q.rows(); ++nu) {
    Ld pn = 0;
    for (Eigen::Index k = 0; k < p.k(); ++k) pn += Ld(p.py()(k)) * Ld(q(nu, k));
    if (pn > 0) hn -= pn * std::log(pn);
  }
  return -(hn - cond_entropy_ld(p, q));
}

double rel_err(const Vector& approx, const Vector& exact) {
  return (approx - exact).cwiseAbs().maxCoeff() / std::max(exact.cwiseAbs().maxCoeff(), 1e-300);
}

}  // namespace

bool SuiteResult::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

JointDistribution random_joint(Eigen::Index kx, Eigen::Index k, std::mt19937_64& rng) {
  // Log-normal entries give a clearly dependent joint.
  std::normal_distribution<double> z(0.0, 1.5);
  Matrix p(kx, k);
  for (Eigen::Index i = 0; i < kx; ++i) {
    for (Eigen::Index c = 0; c < k; ++c) p(i, c) = std::exp(z(rng));
  }
  p /= p.sum();
  Eigen::Index ri = 0, ci = 0;
  p.maxCoeff(&ri, &ci);
  p(ri, ci) += 1.0 - p.sum();
  return JointDistribution(std::move(p));
}

Quantizer random_quantizer(Eigen::Index n, Eigen::Index k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Matrix q(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < k; ++c) q(i, c) = u(rng);
  }
  return Quantizer::normalized(q);
}

JointDistribution concave_toy() {
  Matrix p(2, 2);
  p << 0.4, 0.1, 0.1, 0.4;
  return JointDistribution(p);
}

SuiteResult verify_euler(const VerifyOptions& options) {
  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<int> dim_k(1, 10), dim_n(1, 5);
  double e_i = 0.0, e_yyn = 0.0, e_h = 0.0, e_dpi = 0.0;
  auto check = [&](const JointDistribution& p, const Quantizer& q) {
    const double i_xyn = mutual_information_xyn(p, q);
    e_i = std::max(e_i, std::abs(dot(q.matrix(), grad_I(p, q)) - i_xyn));
    const Matrix gib = grad_G(ObjectiveKind::InformationBottleneck, p, q);
    e_yyn = std::max(e_yyn, std::abs(dot(q.matrix(), gib) + mutual_information_yyn(p, q)));
    const Matrix gh = grad_G(ObjectiveKind::InformationDistortion, p, q);
    e_h = std::max(e_h,
                   std::abs(dot(q.matrix(), gh) - (conditional_entropy_yn_given_y(p, q) - 1.0)));
    e_dpi = std::max(e_dpi, i_xyn - p.mutual_information());
  };
  for (int t = 0; t < options.euler_instances; ++t) {
    const JointDistribution p = random_joint(dim_k(rng), dim_k(rng), rng);
    check(p, random_quantizer(dim_n(rng), p.k(), rng));
  }
  if (options.data) {
    for (int t = 0; t < 10; ++t) check(*options.data, random_quantizer(dim_n(rng), options.data->k(), rng));
  }
  SuiteResult r{"euler", {}};
  r.checks.push_back(below("q.gradI - I", e_i, 1e-10));
  r.checks.push_back(below("q.grad(-I(Y;YN)) + I(Y;YN)", e_yyn, 1e-10));
  r.checks.push_back(below("q.gradH - (H - 1)", e_h, 1e-10));
  r.checks.push_back(below("I(X;YN) - I(X;Y)", e_dpi, 1e-10));
  return r;
}

SuiteResult verify_gradients(const VerifyOptions& options) {
  std::mt19937_64 rng(options.seed + 1);
  std::uniform_int_distribution<int> dim_k(2, 8), dim_n(2, 4);
  std::uniform_real_distribution<double> beta_dist(0.0, 5.0);
  double e_gi = 0.0, e_gid = 0.0, e_gib = 0.0, e_hd = 0.0, e_hb = 0.0;
  const double h = 1e-6;
  auto check = [&](const JointDistribution& p, const Quantizer& qz) {
    const Matrix& q = qz.matrix();
    e_gi = std::max(e_gi, rel_err(tangent_fd([&](const Matrix& x) { return info_xyn_ld(p, x); }, q, h),
                                    tangent_project(grad_I(p, q))));
    e_gid = std::max(e_gid, rel_err(tangent_fd([&](const Matrix& x) { return cond_entropy_ld(p, x); }, q, h),
                                      tangent_project(grad_G(ObjectiveKind::InformationDistortion, p, q))));
    e_gib = std::max(e_gib, rel_err(tangent_fd([&](const Matrix& x) { return neg_info_yyn_ld(p, x); }, q, h),
                                      tangent_project(grad_G(ObjectiveKind::InformationBottleneck, p, q))));
    const double beta = beta_dist(rng);
    for (ObjectiveKind kind : {ObjectiveKind::InformationDistortion, ObjectiveKind::InformationBottleneck}) {
      const Matrix hess = hessian_F(kind, p, q, beta);
      const Eigen::Index n = q.rows(), k = q.cols();
      double err = 0.0;
      for (Eigen::Index j = 0; j < n * k; ++j) {
        Matrix plus = q, minus = q;
        plus(j / k, j % k) += h;
        minus(j / k, j % k) -= h;
        const Vector col = flatten((grad_G(kind, p, plus) + beta * grad_I(p, plus)) -
                                   (grad_G(kind, p, minus) + beta * grad_I(p, minus))) /
                           (2.0 * h);
        err = std::max(err, (col - hess.col(j)).cwiseAbs().maxCoeff());
      }
      (kind == ObjectiveKind::InformationDistortion ? e_hd : e_hb) =
          std::max(kind == ObjectiveKind::InformationDistortion ? e_hd : e_hb, err);
    }
  };
  for (int t = 0; t < options.gradient_instances; ++t) {
    const JointDistribution p = random_joint(dim_k(rng), dim_k(rng), rng);
    check(p, random_quantizer(dim_n(rng), p.k(), rng));
  }
  if (options.data && options.data->k() <= 16) {
    check(*options.data, random_quantizer(2, options.data->k(), rng));
  }
  SuiteResult r{"gradients", {}};
  r.checks.push_back(below("gradI rel err", e_gi, 1e-6));
  r.checks.push_back(below("gradH rel err", e_gid, 1e-6));
  r.checks.push_back(below("grad(-I(Y;YN)) rel err", e_gib, 1e-6));
  r.checks.push_back(below("hessian (distortion) abs err", e_hd, 1e-5));
  r.checks.push_back(below("hessian (bottleneck) abs err", e_hb, 1e-5));
  return r;
}

SuiteResult verify_theorem1(const VerifyOptions& options) {
  SuiteResult r{"theorem1", {}};
  JointDistribution p = [&] {
    if (options.data) return *options.data;
    std::mt19937_64 rng(options.seed + 2);
    return random_joint(5, 6, rng);
  }();
  const Eigen::Index n = std::max<Eigen::Index>(options.classes, 2);
  AnnealSchedule sched;
  sched.beta_max = 3.0;
  sched.step = 0.05;
  sched.seed = options.seed;
  std::vector<Branch> branches;
  try {
    branches = anneal(ObjectiveKind::InformationDistortion, p, n, sched);
  } catch (const NonConvergence& e) {
    r.checks.push_back(CheckResult{"anneal converged", e.last_residual(), 0.0, false, e.what()});
    return r;
  }
  int violations = 0, points = 0;
  double perm_err = 0.0, sym_err = 0.0;
  for (const auto& b : branches) {
    for (const auto& sp : b.points) {
      if (!sp.spectral) continue;
      ++points;
      const auto& s = *sp.spectral;
      if (s.solves_lagrangian && s.solves_constrained.has_value() && !*s.solves_constrained) {
        ++violations;
      }
      const Matrix hess = hessian_F(ObjectiveKind::InformationDistortion, p, sp.q, sp.beta);
      const KernelBasis kb = kernel_basis(sp.q.k(), n);
      const Matrix m = kb.basis.transpose() * hess * kb.basis;
      sym_err = std::max(sym_err, (m - m.transpose()).cwiseAbs().maxCoeff());
      // Reverse the class order and reclassify.
      StationaryPoint perm = sp;
      perm.q = Quantizer(sp.q.matrix().colwise().reverse());
      perm.spectral.reset();
      const SpectralClassification ps =
          classify_stationary_point(ObjectiveKind::InformationDistortion, p, perm, sched.tol_eig);
      // Relative to the spectral scale: near the simplex boundary entries of
      // the Hessian grow like 1/q and round-off grows with them.
      double scale = 1.0;
      for (double v : s.lagrangian_eigenvalues) scale = std::max(scale, std::abs(v));
      for (std::size_t j = 0; j < s.lagrangian_eigenvalues.size(); ++j) {
        perm_err = std::max(perm_err, std::abs(ps.lagrangian_eigenvalues[j] -
                                               s.lagrangian_eigenvalues[j]) / scale);
      }
      for (std::size_t j = 0; j < s.constrained_eigenvalues.size() &&
                              j < ps.constrained_eigenvalues.size();
           ++j) {
        perm_err = std::max(perm_err, std::abs(ps.constrained_eigenvalues[j] -
                                               s.constrained_eigenvalues[j]) / scale);
      }
    }
  }
  r.checks.push_back(CheckResult{"lagrangian => constrained violations",
                                 static_cast<double>(violations), 0.0, violations == 0,
                                 std::to_string(points) + " points"});
  r.checks.push_back(below("projected hessian asymmetry", sym_err, 1e-10));
  r.checks.push_back(below("eigenvalue change under class permutation (rel)", perm_err, 1e-10));
  return r;
}

SuiteResult verify_theorem3_suite(const VerifyOptions& options) {
  SuiteResult r{"theorem3", {}};
  const bool toy = !options.data;
  const JointDistribution p = toy ? concave_toy() : *options.data;
  CurveSpec spec;
  spec.classes = std::max<Eigen::Index>(options.classes, 2);
  spec.seed = options.seed;
  const double reach = achievable_information(p, spec.classes, spec.seed).value;
  spec.I0_min = 0.01 * reach;
  spec.I0_max = 0.6 * reach;
  spec.points = 1 + static_cast<int>(std::lround((spec.I0_max - spec.I0_min) / 1e-3));
  spec.points = std::clamp(spec.points, 5, 201);
  std::vector<CurvePoint> curve;
  try {
    curve = build_curve(spec, p);
  } catch (const NonConvergence& e) {
    r.checks.push_back(CheckResult{"curve converged", e.last_residual(), 0.0, false, e.what()});
    return r;
  }
  double active = 0.0, mono = 0.0, ident = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    active = std::max(active, std::abs(curve[i].information - curve[i].I0));
    ident = std::max(ident, std::abs(identity_residual(spec.kind, curve[i])));
    if (i) mono = std::max(mono, curve[i].R - curve[i - 1].R);
  }
  r.checks.push_back(below("active constraint |I - I0|", active, 1e-8));
  r.checks.push_back(below("monotonicity R(I0') - R(I0)", mono, 1e-6));
  r.checks.push_back(below("identity R - 1 + beta I0 + sum lambda", ident, 1e-6));
  try {
    const Theorem3Report t3 = verify_theorem3(curve);
    r.checks.push_back(below("|dR/dI0 + beta| / beta", t3.max_rel_err, 1e-2,
                             std::to_string(t3.segments_checked) + " segments"));
    const double changes = static_cast<double>(t3.sign_changes.size());
    if (toy) {
      r.checks.push_back(CheckResult{"convexity changes (concave toy)", changes, 0.0, changes == 0,
                                     ""});
    } else {
      r.checks.push_back(CheckResult{"convexity changes", changes, 0.0, true, "informational"});
    }
  } catch (const SegmentTooShort& e) {
    r.checks.push_back(CheckResult{"smooth segment", 0.0, 0.0, false, e.what()});
  }
  return r;
}

std::vector<SuiteResult> run_verify(const std::string& suite, const VerifyOptions& options) {
  std::vector<SuiteResult> out;
  const bool all = suite == "all";
  if (!all && suite != "euler" && suite != "gradients" && suite != "theorem1" &&
      suite != "theorem3") {
    throw InvalidArgument("unknown suite '" + suite +
                          "' (expected all, euler, gradients, theorem1 or theorem3)");
  }
  if (all || suite == "euler") out.push_back(verify_euler(options));
  if (all || suite == "gradients") out.push_back(verify_gradients(options));
  if (all || suite == "theorem1") out.push_back(verify_theorem1(options));
  if (all || suite == "theorem3") out.push_back(verify_theorem3_suite(options));
  return out;
}

std::string format_table(const std::vector<SuiteResult>& results) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-10s %-44s %12s %10s  %s\n", "suite", "check", "value",
                "threshold", "status");
  out += line;
  for (const auto& s : results) {
    for (const auto& c : s.checks) {
      std::snprintf(line, sizeof line, "%-10s %-44s %12.3e %10.1e  %s%s%s\n", s.suite.c_str(),
                    c.name.c_str(), c.value, c.threshold, c.pass ? "PASS" : "FAIL",
                    c.detail.empty() ? "" : "  ", c.detail.c_str());
      out += line;
    }
  }
  return out;
}

}  // namespace infobif
