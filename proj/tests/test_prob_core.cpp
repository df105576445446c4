#include "infobif/errors.hpp"
#include "infobif/prob_core.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace infobif;

namespace {

JointDistribution jd(const Matrix& m) { return JointDistribution(m); }

Quantizer perm_rows(const Quantizer& q, const std::vector<int>& perm) {
  Matrix m(q.classes(), q.k());
  for (std::size_t r = 0; r < perm.size(); ++r) m.row(static_cast<Eigen::Index>(r)) = q.matrix().row(perm[r]);
  return Quantizer(m);
}

}  // namespace

TEST_CASE("joint distribution validation") {
  Matrix p(2, 2);
  p << 0.5, 0.0, 0.0, 0.5;
  const JointDistribution j(p);
  CHECK(j.px()(0) == doctest::Approx(0.5));
  CHECK(j.py()(1) == doctest::Approx(0.5));
  CHECK(j.mutual_information() == doctest::Approx(std::numbers::ln2).epsilon(1e-14));

  Matrix neg = p;
  neg(0, 1) = -0.1;
  neg(0, 0) = 0.6;
  CHECK_THROWS_AS(jd(neg), InvalidArgument);

  Matrix short_sum = p * 0.98;
  try {
    jd(short_sum);
    FAIL("expected rejection");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("0.98") != std::string::npos);
  }

  Matrix zero_col(2, 2);
  zero_col << 0.5, 0.0, 0.5, 0.0;
  CHECK_THROWS_AS(jd(zero_col), InvalidArgument);
}

TEST_CASE("quantizer validation and constructors") {
  Matrix bad(2, 2);
  bad << 0.5, 0.3, 0.5, 0.3;
  CHECK_THROWS_AS(Quantizer{bad}, InvalidArgument);
  Matrix neg(2, 1);
  neg << 1.2, -0.2;
  CHECK_THROWS_AS(Quantizer{neg}, InvalidArgument);

  const Quantizer u = Quantizer::uniform(3, 4);
  CHECK(u.classes() == 3);
  CHECK(u.k() == 4);
  CHECK(u.matrix()(2, 3) == doctest::Approx(1.0 / 3.0));

  Matrix raw(2, 2);
  raw << 2.0, -1e-3, 2.0, 1.0;
  const Quantizer nq = Quantizer::normalized(raw);
  CHECK((nq.matrix().colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-15);
  CHECK(nq.matrix().minCoeff() >= 0.0);
}

TEST_CASE("objective names") {
  CHECK(objective_from_string("distortion") == ObjectiveKind::InformationDistortion);
  CHECK(objective_from_string("ib") == ObjectiveKind::InformationBottleneck);
  CHECK(to_string(ObjectiveKind::InformationBottleneck) == "bottleneck");
  CHECK_THROWS_AS(objective_from_string("rate"), InvalidArgument);
}

TEST_CASE("mutual_information_xyn examples") {
  Matrix d(2, 2);
  d << 0.5, 0.0, 0.0, 0.5;
  const JointDistribution p(d);
  CHECK(mutual_information_xyn(p, Quantizer(Matrix::Identity(2, 2))) ==
        doctest::Approx(std::numbers::ln2).epsilon(1e-14));

  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    const JointDistribution r(oracle::random_joint(3, 3, rng));
    CHECK(mutual_information_xyn(r, Quantizer::uniform(1 + t % 4, 3)) == doctest::Approx(0.0));
    const Matrix q = oracle::random_quantizer(2, 3, rng);
    const double ref = static_cast<double>(oracle::mutual_information_xyn(r.matrix(), q));
    CHECK(std::abs(mutual_information_xyn(r, Quantizer(q)) - ref) <= 1e-12 * ref);
  }
  CHECK_THROWS_AS(mutual_information_xyn(p, Quantizer::uniform(2, 3)), DimensionMismatch);
}

TEST_CASE("conditional entropy examples") {
  std::mt19937_64 rng(12);
  const JointDistribution p(oracle::random_joint(4, 5, rng));
  CHECK(conditional_entropy_yn_given_y(p, Quantizer::uniform(3, 5)) ==
        doctest::Approx(std::log(3.0)).epsilon(1e-14));
  Matrix det = Matrix::Zero(3, 5);
  for (int k = 0; k < 5; ++k) det(k % 3, k) = 1.0;
  CHECK(conditional_entropy_yn_given_y(p, Quantizer(det)) == 0.0);
  CHECK(conditional_entropy_yn_given_y(p, Quantizer::uniform(1, 5)) == 0.0);
  const Matrix q = oracle::random_quantizer(3, 5, rng);
  CHECK(conditional_entropy_yn_given_y(p, Quantizer(q)) ==
        doctest::Approx(static_cast<double>(oracle::conditional_entropy(p.matrix(), q))).epsilon(1e-13));
}

TEST_CASE("mutual_information_yyn examples") {
  std::mt19937_64 rng(13);
  const JointDistribution p(oracle::random_joint(3, 4, rng));
  CHECK(mutual_information_yyn(p, Quantizer::uniform(2, 4)) == doctest::Approx(0.0));

  Matrix flat = Matrix::Constant(2, 3, 1.0 / 6.0);
  CHECK(mutual_information_yyn(JointDistribution(flat), Quantizer(Matrix::Identity(3, 3))) ==
        doctest::Approx(std::log(3.0)).epsilon(1e-14));

  for (int t = 0; t < 10; ++t) {
    const Matrix q = oracle::random_quantizer(3, 4, rng);
    const double ref = static_cast<double>(oracle::mutual_information_yyn(p.matrix(), q));
    CHECK(std::abs(mutual_information_yyn(p, Quantizer(q)) - ref) <= 1e-12 * ref);
  }
}

TEST_CASE("gradients: examples and Euler identities") {
  std::mt19937_64 rng(14);
  const JointDistribution p(oracle::random_joint(3, 3, rng));
  const Quantizer u = Quantizer::uniform(2, 3);
  CHECK(grad_I(p, u).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(grad_G(ObjectiveKind::InformationBottleneck, p, u).cwiseAbs().maxCoeff() < 1e-15);
  const Matrix gid = grad_G(ObjectiveKind::InformationDistortion, p, u);
  for (Eigen::Index k = 0; k < 3; ++k) {
    const double expect = -p.py()(k) * (std::log(0.5) + 1.0);
    CHECK(gid(0, k) == doctest::Approx(expect).epsilon(1e-14));
    CHECK(gid(1, k) == doctest::Approx(expect).epsilon(1e-14));
  }

  for (int t = 0; t < 50; ++t) {
    const JointDistribution r(oracle::random_joint(2 + t % 5, 2 + t % 7, rng));
    const Quantizer q(oracle::random_quantizer(1 + t % 4, r.k(), rng));
    const double i = mutual_information_xyn(r, q);
    CHECK(std::abs(q.matrix().cwiseProduct(grad_I(r, q)).sum() - i) < 1e-10);
    const double iy = mutual_information_yyn(r, q);
    CHECK(std::abs(q.matrix().cwiseProduct(grad_G(ObjectiveKind::InformationBottleneck, r, q)).sum() + iy) < 1e-10);
    const double h = conditional_entropy_yn_given_y(r, q);
    CHECK(std::abs(q.matrix().cwiseProduct(grad_G(ObjectiveKind::InformationDistortion, r, q)).sum() - (h - 1.0)) < 1e-10);
  }
}

TEST_CASE("gradients match tangent-space finite differences") {
  std::mt19937_64 rng(15);
  for (int t = 0; t < 10; ++t) {
    const Matrix p = oracle::random_joint(3, 3, rng);
    const JointDistribution jp(p);
    const Matrix q = oracle::random_quantizer(2 + t % 2, 3, rng);
    const Eigen::Index n = q.rows();
    const Matrix gi = grad_I(jp, q);
    const Matrix gh = grad_G(ObjectiveKind::InformationDistortion, jp, q);
    const Matrix gb = grad_G(ObjectiveKind::InformationBottleneck, jp, q);
    double scale_i = 0, scale_h = 0, scale_b = 0, err_i = 0, err_h = 0, err_b = 0;
    for (Eigen::Index a = 1; a < n; ++a) {
      for (Eigen::Index c = 0; c < 3; ++c) {
        const Matrix v = oracle::tangent(n, 3, a, 0, c);
        const double ai = gi(a, c) - gi(0, c), ah = gh(a, c) - gh(0, c), ab = gb(a, c) - gb(0, c);
        scale_i = std::max(scale_i, std::abs(ai));
        scale_h = std::max(scale_h, std::abs(ah));
        scale_b = std::max(scale_b, std::abs(ab));
        err_i = std::max(err_i, std::abs(ai - oracle::directional_fd([&](const Matrix& x) {
                                  return oracle::mutual_information_xyn(p, x);
                                }, q, v)));
        err_h = std::max(err_h, std::abs(ah - oracle::directional_fd([&](const Matrix& x) {
                                  return oracle::conditional_entropy(p, x);
                                }, q, v)));
        err_b = std::max(err_b, std::abs(ab - oracle::directional_fd([&](const Matrix& x) {
                                  return -oracle::mutual_information_yyn(p, x);
                                }, q, v)));
      }
    }
    CHECK(err_i < 1e-6 * scale_i);
    CHECK(err_h < 1e-6 * scale_h);
    CHECK(err_b < 1e-6 * scale_b);
  }
}

TEST_CASE("hessian_F") {
  std::mt19937_64 rng(16);
  const JointDistribution p(oracle::random_joint(4, 3, rng));
  const Quantizer q(oracle::random_quantizer(2, 3, rng));

  const Matrix h0 = hessian_F(ObjectiveKind::InformationDistortion, p, q, 0.0);
  for (Eigen::Index j = 0; j < 6; ++j) {
    CHECK(h0(j, j) == doctest::Approx(-p.py()(j % 3) / q.matrix()(j / 3, j % 3)).epsilon(1e-14));
    for (Eigen::Index l = 0; l < 6; ++l) {
      if (l != j) CHECK(h0(j, l) == 0.0);
    }
  }

  for (ObjectiveKind kind : {ObjectiveKind::InformationDistortion, ObjectiveKind::InformationBottleneck}) {
    const double beta = 1.7;
    const Matrix h = hessian_F(kind, p, q, beta);
    CHECK((h - h.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    const double step = 1e-6;
    double err = 0.0;
    for (Eigen::Index j = 0; j < 6; ++j) {
      Matrix plus = q.matrix(), minus = q.matrix();
      plus(j / 3, j % 3) += step;
      minus(j / 3, j % 3) -= step;
      const Vector fd = flatten((grad_G(kind, p, plus) + beta * grad_I(p, plus)) -
                                (grad_G(kind, p, minus) + beta * grad_I(p, minus))) /
                        (2 * step);
      err = std::max(err, (fd - h.col(j)).cwiseAbs().maxCoeff());
    }
    CHECK(err < 1e-5);
    // The I part is block diagonal across classes.
    const Matrix hi = hessian_I(p, q);
    CHECK(hi.block(0, 3, 3, 3).cwiseAbs().maxCoeff() == 0.0);
  }

  const Quantizer u = Quantizer::uniform(3, 3);
  const Matrix hu = hessian_F(ObjectiveKind::InformationBottleneck, p, u, 2.0);
  const std::vector<int> perm{2, 0, 1};
  Matrix permuted(9, 9);
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      permuted.block(3 * a, 3 * b, 3, 3) = hu.block(3 * perm[a], 3 * perm[b], 3, 3);
    }
  }
  CHECK((permuted - hu).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("properties: convexity, data processing, permutation invariance") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    const JointDistribution p(oracle::random_joint(2 + t % 6, 2 + t % 5, rng));
    const Matrix q1 = oracle::random_quantizer(3, p.k(), rng);
    const Matrix q2 = oracle::random_quantizer(3, p.k(), rng);
    const double s = u01(rng);
    const double mix = mutual_information_xyn(p, Quantizer::normalized(s * q1 + (1 - s) * q2));
    CHECK(mix <= s * mutual_information_xyn(p, Quantizer(q1)) +
                     (1 - s) * mutual_information_xyn(p, Quantizer(q2)) + 1e-10);
    CHECK(mutual_information_xyn(p, Quantizer(q1)) <= p.mutual_information() + 1e-10);
    const Quantizer qq(q1);
    const Quantizer qp = perm_rows(qq, {2, 0, 1});
    CHECK(mutual_information_xyn(p, qp) == doctest::Approx(mutual_information_xyn(p, qq)).epsilon(1e-13));
    CHECK(objective(ObjectiveKind::InformationBottleneck, p, qp) ==
          doctest::Approx(objective(ObjectiveKind::InformationBottleneck, p, qq)).epsilon(1e-13));
  }
}

TEST_CASE("flatten order is class-major") {
  Matrix q(2, 3);
  q << 1, 2, 3, 4, 5, 6;
  const Vector v = flatten(q);
  CHECK(v(1) == 2);
  CHECK(v(3) == 4);
  CHECK(unflatten(v, 2, 3) == q);
  CHECK_THROWS_AS(unflatten(v, 3, 3), DimensionMismatch);
}
