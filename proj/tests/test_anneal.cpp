#include "fixtures.hpp"
#include "infobif/anneal.hpp"
#include "infobif/dataset_io.hpp"
#include "infobif/errors.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace infobif;

namespace {

constexpr auto ID = ObjectiveKind::InformationDistortion;
constexpr auto IB = ObjectiveKind::InformationBottleneck;

double max_I_grid_2x4(const JointDistribution& p, double step) {
  // Fast double-precision sweep of q_{0k} over {0, step, ..., 1}^4 with N = 2.
  const int m = static_cast<int>(std::lround(1.0 / step));
  const Matrix& pm = p.matrix();
  double best = 0.0;
  for (int a = 0; a <= m; ++a) {
    for (int b = 0; b <= m; ++b) {
      for (int c = 0; c <= m; ++c) {
        for (int d = 0; d <= m; ++d) {
          const double q0[4] = {a * step, b * step, c * step, d * step};
          double j[2][2];
          for (int i = 0; i < 2; ++i) {
            j[i][0] = pm(i, 0) * q0[0] + pm(i, 1) * q0[1] + pm(i, 2) * q0[2] + pm(i, 3) * q0[3];
            j[i][1] = p.px()(i) - j[i][0];
          }
          const double pn0 = j[0][0] + j[1][0], pn1 = j[0][1] + j[1][1];
          double mi = 0.0;
          for (int i = 0; i < 2; ++i) {
            if (j[i][0] > 0) mi += j[i][0] * std::log(j[i][0] / (p.px()(i) * pn0));
            if (j[i][1] > 0) mi += j[i][1] * std::log(j[i][1] / (p.px()(i) * pn1));
          }
          best = std::max(best, mi);
        }
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("schedule validation") {
  AnnealSchedule s;
  CHECK_NOTHROW(s.validate());
  s.beta_max = s.beta_start;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  s = AnnealSchedule{};
  s.step_min = s.step;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  s = AnnealSchedule{};
  s.perturbation = -1.0;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  s = AnnealSchedule{};
  s.convergence_tol = 0.0;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
}

TEST_CASE("fixed_point_update examples") {
  std::mt19937_64 rng(21);
  const JointDistribution p(oracle::random_joint(4, 5, rng));
  const Quantizer q(oracle::random_quantizer(3, 5, rng));
  const Quantizer u = Quantizer::uniform(3, 5);

  CHECK((fixed_point_update(ID, p, q, 0.0).matrix() - u.matrix()).cwiseAbs().maxCoeff() < 1e-15);
  for (double beta : {0.5, 3.0, 40.0}) {
    CHECK((fixed_point_update(ID, p, u, beta).matrix() - u.matrix()).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((fixed_point_update(IB, p, u, beta).matrix() - u.matrix()).cwiseAbs().maxCoeff() < 1e-15);
    const Quantizer next = fixed_point_update(ID, p, q, beta);
    CHECK((next.matrix().colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-15);
  }
  // Huge exponents stay finite thanks to the max subtraction.
  const Quantizer hot = fixed_point_update(ID, p, q, 1e6);
  CHECK(hot.matrix().allFinite());
}

TEST_CASE("lagrange_multipliers examples") {
  std::mt19937_64 rng(22);
  const JointDistribution p(oracle::random_joint(3, 4, rng));
  const Quantizer q(oracle::random_quantizer(2, 4, rng));
  const Vector expect = p.py() * (1.0 - std::log(2.0));
  CHECK((lagrange_multipliers(ID, p, q, 0.0) - expect).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((lagrange_multipliers(ID, p, Quantizer::uniform(2, 4), 2.5) - expect).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(lagrange_multipliers(ID, p, q, 1.0).size() == 4);
}

TEST_CASE("uniform quantizer is stationary for every beta") {
  const JointDistribution p = gen_four_gaussian(GaussianMixtureSpec::default_four());
  for (ObjectiveKind kind : {ID, IB}) {
    for (double beta : {0.0, 0.7, 1.3, 5.0}) {
      const StationaryPoint sp = make_stationary_point(kind, p, Quantizer::uniform(4, p.k()), beta);
      CHECK(sp.kkt_residual < 1e-10);
    }
  }
}

TEST_CASE("solve_at_beta") {
  const JointDistribution p = fixtures::two_cluster();
  AnnealSchedule s;
  std::mt19937_64 rng(23);
  const Quantizer q0(oracle::random_quantizer(2, 4, rng));

  const StationaryPoint z = solve_at_beta(ID, p, q0, 0.0, s);
  CHECK((z.q.matrix().array() - 0.5).abs().maxCoeff() < 1e-12);
  CHECK(z.objective_value == doctest::Approx(std::log(2.0)).epsilon(1e-14));

  for (double beta : {1.0, 4.0, 9.0}) {
    const StationaryPoint sp = solve_at_beta(ID, p, q0, beta, s);
    CHECK(sp.kkt_residual < 1e-8);
    CHECK((sp.lambda - rowwise_multipliers(ID, p, sp.q, beta)).cwiseAbs().maxCoeff() < 1e-8);
    const StationaryPoint again = solve_at_beta(ID, p, sp.q, beta, s);
    CHECK((again.q.matrix() - sp.q.matrix()).cwiseAbs().maxCoeff() < 1e-10);

    const StationaryPoint ib = solve_at_beta(IB, p, q0, beta, s);
    CHECK(ib.kkt_residual < 1e-8);
  }

  // Far past the split the quantizer is nearly deterministic and keeps
  // (almost) all the information a two-class quantizer can.
  const StationaryPoint hot = solve_at_beta(ID, p, q0, 40.0, s);
  const double grid_best = max_I_grid_2x4(p, 0.01);
  CHECK(std::abs(hot.constraint_value - grid_best) < 1e-3);
  CHECK((hot.q.matrix().array() - 0.5).abs().minCoeff() > 0.45);

  AnnealSchedule tight = s;
  tight.max_fixed_point_iters = 1;
  CHECK_THROWS_AS(solve_at_beta(ID, p, q0, 0.9, tight), NonConvergence);
}

TEST_CASE("random_tangent is seeded and tangent") {
  const Matrix a = random_tangent(3, 5, 7), b = random_tangent(3, 5, 7), c = random_tangent(3, 5, 8);
  CHECK(a == b);
  CHECK(a != c);
  CHECK(a.colwise().sum().cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("anneal: single symmetric split with N = 2") {
  const JointDistribution p = fixtures::two_cluster();
  AnnealSchedule s;
  s.beta_max = 6.0;
  s.step = 0.05;
  const auto branches = anneal(ID, p, 2, s);
  std::vector<BifurcationEvent> events;
  for (const auto& b : branches) events.insert(events.end(), b.events.begin(), b.events.end());
  REQUIRE(events.size() == 1);
  CHECK(events[0].kind == BifurcationKind::PitchforkLike);
  CHECK(events[0].parent_branch == 0);
  const double beta_star = oracle::uniform_critical_beta(p.matrix());
  CHECK(std::abs(events[0].beta - beta_star) < 1e-6);

  for (const auto& sp : branches[0].points) {
    if (sp.beta < beta_star) CHECK((sp.q.matrix().array() - 0.5).abs().maxCoeff() < s.perturbation);
  }
  // Every stored point satisfies the KKT condition.
  for (const auto& b : branches) {
    for (const auto& sp : b.points) {
      CHECK(sp.kkt_residual < 1e-9);
      CHECK(sp.lambda.size() == p.k());
    }
  }
}

TEST_CASE("anneal: bottleneck objective also splits") {
  const JointDistribution p = fixtures::two_cluster();
  AnnealSchedule s;
  s.beta_max = 6.0;
  s.step = 0.05;
  const auto branches = anneal(IB, p, 2, s);
  std::vector<BifurcationEvent> events;
  for (const auto& b : branches) events.insert(events.end(), b.events.begin(), b.events.end());
  REQUIRE(events.size() == 1);
  CHECK(events[0].kind == BifurcationKind::PitchforkLike);
  // Binary symmetric channel with correlation 0.6: beta* = 1 / 0.36.
  const double beta_star = oracle::uniform_critical_beta(p.matrix(), true);
  CHECK(beta_star == doctest::Approx(1.0 / 0.36).epsilon(1e-9));
  CHECK(std::abs(events[0].beta - beta_star) < 1e-6);
  for (const auto& b : branches) {
    for (const auto& sp : b.points) CHECK(sp.kkt_residual < 1e-9);
  }
  const auto& last = branches.back().points.back();
  CHECK(last.constraint_value > 0.5 * p.mutual_information());

  // Four modes: every split of the bottleneck path stays on tracked branches.
  const JointDistribution g = gen_four_gaussian(GaussianMixtureSpec::default_four());
  const auto gb = anneal(IB, g, 4, AnnealSchedule{});
  int pitchforks = 0;
  for (const auto& b : gb) {
    for (const auto& e : b.events) pitchforks += e.kind == BifurcationKind::PitchforkLike;
  }
  CHECK(gb.size() == 4);
  CHECK(pitchforks == 3);
}

TEST_CASE("anneal: one class gives a single trivial branch") {
  const JointDistribution p = fixtures::two_cluster();
  const auto branches = anneal(ID, p, 1, AnnealSchedule{});
  REQUIRE(branches.size() == 1);
  CHECK(branches[0].events.empty());
  for (const auto& sp : branches[0].points) CHECK(sp.constraint_value == 0.0);
}

TEST_CASE("anneal: dLambda/dbeta = -I and determinism") {
  const JointDistribution p = fixtures::two_cluster();
  AnnealSchedule s;
  s.beta_max = 5.0;
  s.step = 0.01;
  s.max_step_dq = 0.005;
  const auto branches = anneal(ID, p, 2, s);
  int checked = 0;
  double worst = 0.0;
  for (const auto& b : branches) {
    for (std::size_t i = 1; i + 1 < b.points.size(); ++i) {
      const auto &a = b.points[i - 1], &m = b.points[i], &c = b.points[i + 1];
      if (m.constraint_value < 1e-3) continue;
      const double hm = m.beta - a.beta, hp = c.beta - m.beta;
      const double la = a.lambda.sum(), lm = m.lambda.sum(), lc = c.lambda.sum();
      const double d = (-hp / (hm * (hm + hp))) * la + ((hp - hm) / (hm * hp)) * lm +
                       (hm / (hp * (hm + hp))) * lc;
      worst = std::max(worst, std::abs(d + m.constraint_value) / m.constraint_value);
      ++checked;
    }
  }
  CHECK(checked > 20);
  CHECK(worst < 1e-3);

  const auto again = anneal(ID, p, 2, s);
  CHECK(format_branches_csv(branches) == format_branches_csv(again));
}
