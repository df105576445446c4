#include "infobif/prob_core.hpp"

#include "infobif/errors.hpp"

#include <cmath>
#include <sstream>

namespace infobif {
namespace {

inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

inline double safe_log(double x) { return std::log(std::max(x, kProbFloor)); }

void check_dims(const JointDistribution& p, const Matrix& q) {
  if (p.k() != q.cols() || q.rows() < 1) {
    std::ostringstream os;
    os << "quantizer has " << q.cols() << " columns but p(X,Y) has " << p.k();
    throw DimensionMismatch(os.str());
  }
}

}  // namespace

std::string_view to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::InformationDistortion:
      return "distortion";
    case ObjectiveKind::InformationBottleneck:
      return "bottleneck";
  }
  return "unknown";
}

ObjectiveKind objective_from_string(std::string_view name) {
  if (name == "distortion" || name == "id" || name == "information-distortion") {
    return ObjectiveKind::InformationDistortion;
  }
  if (name == "bottleneck" || name == "ib" || name == "information-bottleneck") {
    return ObjectiveKind::InformationBottleneck;
  }
  throw InvalidArgument("unknown objective '" + std::string(name) +
                        "' (expected distortion or bottleneck)");
}

JointDistribution::JointDistribution(Matrix p) : p_(std::move(p)) {
  if (p_.rows() < 1 || p_.cols() < 1) {
    throw InvalidArgument("joint distribution must be non-empty");
  }
  for (Eigen::Index i = 0; i < p_.rows(); ++i) {
    for (Eigen::Index k = 0; k < p_.cols(); ++k) {
      const double v = p_(i, k);
      if (!std::isfinite(v) || v < 0.0) {
        std::ostringstream os;
        os << "negative or non-finite entry " << v << " at row " << i << ", column " << k;
        throw InvalidArgument(os.str());
      }
    }
  }
  const double total = p_.sum();
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream os;
    os.precision(15);
    os << "joint distribution sums to " << total << ", expected 1";
    throw InvalidArgument(os.str());
  }
  px_ = p_.rowwise().sum();
  py_ = p_.colwise().sum().transpose();
  for (Eigen::Index k = 0; k < py_.size(); ++k) {
    if (!(py_(k) > 0.0)) {
      throw InvalidArgument("column " + std::to_string(k) + " of p(X,Y) has zero mass");
    }
  }
  double mi = 0.0;
  for (Eigen::Index i = 0; i < p_.rows(); ++i) {
    for (Eigen::Index k = 0; k < p_.cols(); ++k) {
      const double v = p_(i, k);
      if (v > 0.0) mi += v * std::log(v / (px_(i) * py_(k)));
    }
  }
  mi_ = std::max(mi, 0.0);
}

Quantizer::Quantizer(Matrix q) : q_(std::move(q)) {
  if (q_.rows() < 1 || q_.cols() < 1) throw InvalidArgument("quantizer must be non-empty");
  for (Eigen::Index k = 0; k < q_.cols(); ++k) {
    double s = 0.0;
    for (Eigen::Index n = 0; n < q_.rows(); ++n) {
      const double v = q_(n, k);
      if (!std::isfinite(v) || v < 0.0) {
        std::ostringstream os;
        os << "quantizer entry " << v << " at class " << n << ", column " << k
           << " is not a probability";
        throw InvalidArgument(os.str());
      }
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-10) {
      std::ostringstream os;
      os.precision(17);
      os << "quantizer column " << k << " sums to " << s;
      throw InvalidArgument(os.str());
    }
  }
}

Quantizer Quantizer::uniform(Eigen::Index n, Eigen::Index k) {
  if (n < 1 || k < 1) throw InvalidArgument("uniform quantizer needs N >= 1 and K >= 1");
  return Quantizer(Matrix::Constant(n, k, 1.0 / static_cast<double>(n)), Unchecked{});
}

Quantizer Quantizer::normalized(Matrix q) {
  if (q.rows() < 1 || q.cols() < 1) throw InvalidArgument("quantizer must be non-empty");
  q = q.cwiseMax(0.0);
  for (Eigen::Index k = 0; k < q.cols(); ++k) {
    const double s = q.col(k).sum();
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw InvalidArgument("cannot normalize quantizer column " + std::to_string(k));
    }
    q.col(k) /= s;
  }
  return Quantizer(std::move(q), Unchecked{});
}

Matrix induced_joint(const JointDistribution& p, const Matrix& q) {
  check_dims(p, q);
  return p.matrix() * q.transpose();
}

Vector class_marginal(const JointDistribution& p, const Matrix& q) {
  check_dims(p, q);
  return q * p.py();
}

double mutual_information_xyn(const JointDistribution& p, const Matrix& q) {
  const Matrix pxn = induced_joint(p, q);
  const Vector pn = pxn.colwise().sum().transpose();
  double mi = 0.0;
  for (Eigen::Index n = 0; n < pxn.cols(); ++n) {
    for (Eigen::Index i = 0; i < pxn.rows(); ++i) {
      const double v = pxn(i, n);
      if (v > 0.0) mi += v * std::log(v / (p.px()(i) * pn(n)));
    }
  }
  return mi;
}

double conditional_entropy_yn_given_y(const JointDistribution& p, const Matrix& q) {
  check_dims(p, q);
  double h = 0.0;
  for (Eigen::Index k = 0; k < q.cols(); ++k) {
    double col = 0.0;
    for (Eigen::Index n = 0; n < q.rows(); ++n) col += xlogx(q(n, k));
    h -= p.py()(k) * col;
  }
  return h;
}

double mutual_information_yyn(const JointDistribution& p, const Matrix& q) {
  const Vector pn = class_marginal(p, q);
  double h_yn = 0.0;
  for (Eigen::Index n = 0; n < pn.size(); ++n) h_yn -= xlogx(pn(n));
  return h_yn - conditional_entropy_yn_given_y(p, q);
}

double objective(ObjectiveKind kind, const JointDistribution& p, const Matrix& q) {
  return kind == ObjectiveKind::InformationDistortion ? conditional_entropy_yn_given_y(p, q)
                                                      : -mutual_information_yyn(p, q);
}

Matrix grad_I(const JointDistribution& p, const Matrix& q) {
  const Matrix pxn = induced_joint(p, q);
  const Vector pn = pxn.colwise().sum().transpose();
  // log p(x_i | nu) / p(x_i), floored
  Matrix log_ratio(pxn.rows(), pxn.cols());
  for (Eigen::Index n = 0; n < pxn.cols(); ++n) {
    for (Eigen::Index i = 0; i < pxn.rows(); ++i) {
      log_ratio(i, n) = safe_log(pxn(i, n)) - safe_log(p.px()(i)) - safe_log(pn(n));
    }
  }
  // (grad I)_{nu k} = sum_i p(x_i, y_k) log_ratio(i, nu)
  return log_ratio.transpose() * p.matrix();
}

Matrix grad_G(ObjectiveKind kind, const JointDistribution& p, const Matrix& q) {
  check_dims(p, q);
  const Eigen::Index n_cls = q.rows();
  const Eigen::Index k_cols = q.cols();
  Matrix g(n_cls, k_cols);
  if (kind == ObjectiveKind::InformationDistortion) {
    for (Eigen::Index k = 0; k < k_cols; ++k) {
      for (Eigen::Index n = 0; n < n_cls; ++n) {
        g(n, k) = -p.py()(k) * (safe_log(q(n, k)) + 1.0);
      }
    }
  } else {
    const Vector pn = class_marginal(p, q);
    for (Eigen::Index k = 0; k < k_cols; ++k) {
      for (Eigen::Index n = 0; n < n_cls; ++n) {
        g(n, k) = -p.py()(k) * (safe_log(q(n, k)) - safe_log(pn(n)));
      }
    }
  }
  return g;
}

Matrix hessian_I(const JointDistribution& p, const Matrix& q) {
  const Matrix pxn = induced_joint(p, q);
  const Vector pn = pxn.colwise().sum().transpose();
  const Eigen::Index n_cls = q.rows();
  const Eigen::Index k_cols = q.cols();
  const Vector& py = p.py();
  Matrix h = Matrix::Zero(n_cls * k_cols, n_cls * k_cols);
  for (Eigen::Index n = 0; n < n_cls; ++n) {
    const Vector inv = pxn.col(n).cwiseMax(kProbFloor).cwiseInverse();
    const Matrix weighted = inv.asDiagonal() * p.matrix();
    h.block(n * k_cols, n * k_cols, k_cols, k_cols) =
        p.matrix().transpose() * weighted - (py * py.transpose()) / std::max(pn(n), kProbFloor);
  }
  return h;
}

Matrix hessian_G(ObjectiveKind kind, const JointDistribution& p, const Matrix& q) {
  check_dims(p, q);
  const Eigen::Index n_cls = q.rows();
  const Eigen::Index k_cols = q.cols();
  const Vector& py = p.py();
  Matrix h = Matrix::Zero(n_cls * k_cols, n_cls * k_cols);
  for (Eigen::Index n = 0; n < n_cls; ++n) {
    for (Eigen::Index k = 0; k < k_cols; ++k) {
      h(n * k_cols + k, n * k_cols + k) = -py(k) / std::max(q(n, k), kProbFloor);
    }
  }
  if (kind == ObjectiveKind::InformationBottleneck) {
    const Vector pn = class_marginal(p, q);
    for (Eigen::Index n = 0; n < n_cls; ++n) {
      h.block(n * k_cols, n * k_cols, k_cols, k_cols) +=
          (py * py.transpose()) / std::max(pn(n), kProbFloor);
    }
  }
  return h;
}

Matrix hessian_F(ObjectiveKind kind, const JointDistribution& p, const Matrix& q,
                 double beta) {
  Matrix h = hessian_G(kind, p, q);
  if (beta != 0.0) h += beta * hessian_I(p, q);
  return 0.5 * (h + h.transpose());
}

Matrix induced_joint(const JointDistribution& p, const Quantizer& q) {
  return induced_joint(p, q.matrix());
}
Vector class_marginal(const JointDistribution& p, const Quantizer& q) {
  return class_marginal(p, q.matrix());
}
// On the simplex the information values are non-negative; round-off near
// the uniform quantizer is clipped.
double mutual_information_xyn(const JointDistribution& p, const Quantizer& q) {
  return std::max(0.0, mutual_information_xyn(p, q.matrix()));
}
double conditional_entropy_yn_given_y(const JointDistribution& p, const Quantizer& q) {
  return conditional_entropy_yn_given_y(p, q.matrix());
}
double mutual_information_yyn(const JointDistribution& p, const Quantizer& q) {
  return std::max(0.0, mutual_information_yyn(p, q.matrix()));
}
double objective(ObjectiveKind kind, const JointDistribution& p, const Quantizer& q) {
  return objective(kind, p, q.matrix());
}
Matrix grad_I(const JointDistribution& p, const Quantizer& q) { return grad_I(p, q.matrix()); }
Matrix grad_G(ObjectiveKind kind, const JointDistribution& p, const Quantizer& q) {
  return grad_G(kind, p, q.matrix());
}
Matrix hessian_I(const JointDistribution& p, const Quantizer& q) {
  return hessian_I(p, q.matrix());
}
Matrix hessian_G(ObjectiveKind kind, const JointDistribution& p, const Quantizer& q) {
  return hessian_G(kind, p, q.matrix());
}
Matrix hessian_F(ObjectiveKind kind, const JointDistribution& p, const Quantizer& q,
                 double beta) {
  return hessian_F(kind, p, q.matrix(), beta);
}

Vector flatten(const Matrix& m) {
  Vector v(m.size());
  for (Eigen::Index n = 0; n < m.rows(); ++n) {
    v.segment(n * m.cols(), m.cols()) = m.row(n).transpose();
  }
  return v;
}

Matrix unflatten(const Vector& v, Eigen::Index n, Eigen::Index k) {
  if (v.size() != n * k) throw DimensionMismatch("flattened vector has the wrong length");
  Matrix m(n, k);
  for (Eigen::Index r = 0; r < n; ++r) m.row(r) = v.segment(r * k, k).transpose();
  return m;
}

}  // namespace infobif
