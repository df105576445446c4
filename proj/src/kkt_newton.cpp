#include "kkt_newton.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace infobif::detail {
namespace {

struct Evaluated {
  Vector f;
  Matrix grad_i;
};

Evaluated evaluate(ObjectiveKind kind, const JointDistribution& p, const KktState& s,
                   std::optional<double> target_info) {
  const Eigen::Index n = s.q.rows();
  const Eigen::Index k = s.q.cols();
  const Eigen::Index nk = n * k;
  Evaluated e;
  e.grad_i = grad_I(p, s.q);
  Matrix lag = grad_G(kind, p, s.q) + s.beta * e.grad_i;
  lag.rowwise() += s.lambda.transpose();
  e.f.resize(nk + k + (target_info ? 1 : 0));
  e.f.head(nk) = flatten(lag);
  e.f.segment(nk, k) = s.q.colwise().sum().transpose().array() - 1.0;
  if (target_info) e.f(nk + k) = mutual_information_xyn(p, s.q) - *target_info;
  return e;
}

double sup_norm(const Vector& v) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v(i))) return std::numeric_limits<double>::infinity();
    m = std::max(m, std::abs(v(i)));
  }
  return m;
}

Vector solve_linear(const Matrix& a, const Vector& b, bool rank_revealing) {
  if (rank_revealing) {
    // Near-singular rather than singular: LU would return a huge step along
    // the neutral direction, so cut it with a relative rank threshold.
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
    cod.setThreshold(1e-12);
    return cod.solve(b);
  }
  Eigen::PartialPivLU<Matrix> lu(a);
  Vector x = lu.solve(b);
  const double scale = std::max(1.0, b.norm());
  if (x.allFinite() && (a * x - b).norm() <= 1e-8 * scale) return x;
  // Singular directions (e.g. the neutral modes of the bottleneck objective
  // on its trivial branch): take the minimum-norm least-squares step.
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
  return cod.solve(b);
}

}  // namespace

double kkt_system_residual(ObjectiveKind kind, const JointDistribution& p, const KktState& s,
                           std::optional<double> target_info) {
  return sup_norm(evaluate(kind, p, s, target_info).f);
}

KktState least_squares_multipliers(ObjectiveKind kind, const JointDistribution& p, const Matrix& q,
                                   double beta_default) {
  const Matrix gg = grad_G(kind, p, q);
  const Matrix gi = grad_I(p, q);
  // Remove column means: what remains lives in the normalization kernel.
  const Matrix gg_t = gg.rowwise() - gg.colwise().mean();
  const Matrix gi_t = gi.rowwise() - gi.colwise().mean();
  const double denom = gi_t.squaredNorm();
  KktState s;
  s.q = q;
  s.beta = denom > 1e-24 ? -(gg_t.cwiseProduct(gi_t)).sum() / denom : beta_default;
  s.lambda = -(gg + s.beta * gi).colwise().mean().transpose();
  return s;
}

KktResult kkt_newton(ObjectiveKind kind, const JointDistribution& p, KktState s,
                     std::optional<double> target_info, const KktOptions& options) {
  const Eigen::Index n = s.q.rows();
  const Eigen::Index k = s.q.cols();
  const Eigen::Index nk = n * k;
  const Eigen::Index dim = nk + k + (target_info ? 1 : 0);

  KktResult result;
  Evaluated cur = evaluate(kind, p, s, target_info);
  double merit = sup_norm(cur.f);

  for (int it = 0; it < options.max_iters; ++it) {
    result.iterations = it;
    if (merit < options.tol) {
      result.converged = true;
      break;
    }
    Matrix jac = Matrix::Zero(dim, dim);
    jac.topLeftCorner(nk, nk) = hessian_F(kind, p, s.q, s.beta);
    for (Eigen::Index c = 0; c < n; ++c) {
      for (Eigen::Index col = 0; col < k; ++col) {
        jac(c * k + col, nk + col) = 1.0;
        jac(nk + col, c * k + col) = 1.0;
      }
    }
    if (target_info) {
      const Vector gi = flatten(cur.grad_i);
      jac.block(0, nk + k, nk, 1) = gi;
      jac.block(nk + k, 0, 1, nk) = gi.transpose();
    }

    // Symmetric diagonal scaling by sqrt(q) tames the -p_k/q entries.
    Vector scale = Vector::Ones(dim);
    const Vector qf = flatten(s.q);
    for (Eigen::Index i = 0; i < nk; ++i) scale(i) = std::sqrt(std::max(qf(i), 1e-300));
    const Matrix scaled = scale.asDiagonal() * jac * scale.asDiagonal();
    const bool neutral_modes = kind == ObjectiveKind::InformationBottleneck;
    const Vector step =
        scale.cwiseProduct(solve_linear(scaled, -scale.cwiseProduct(cur.f), neutral_modes));
    if (!step.allFinite()) break;

    const Vector dq = step.head(nk);
    double t = 1.0;
    for (Eigen::Index i = 0; i < nk; ++i) {
      if (dq(i) < 0.0) t = std::min(t, options.boundary_fraction * qf(i) / -dq(i));
    }

    bool accepted = false;
    for (int h = 0; h <= options.max_halvings; ++h, t *= 0.5) {
      KktState trial;
      trial.q = unflatten(qf + t * dq, n, k);
      trial.lambda = s.lambda + t * step.segment(nk, k);
      trial.beta = target_info ? s.beta + t * step(nk + k) : s.beta;
      Evaluated ev = evaluate(kind, p, trial, target_info);
      const double m = sup_norm(ev.f);
      if (m < (1.0 - 1e-4 * t) * merit) {
        s = std::move(trial);
        cur = std::move(ev);
        merit = m;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  if (merit < options.tol) result.converged = true;
  result.state = std::move(s);
  result.residual = merit;
  return result;
}

}  // namespace infobif::detail
