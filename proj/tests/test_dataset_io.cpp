#include "fixtures.hpp"
#include "infobif/anneal.hpp"
#include "infobif/dataset_io.hpp"
#include "infobif/errors.hpp"

#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace infobif;

namespace {

std::string tmp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "infobif_io_tests";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

int count_lines(const std::string& s) {
  return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_CASE("mixture spec validation") {
  GaussianMixtureSpec s = GaussianMixtureSpec::default_four();
  CHECK_NOTHROW(s.validate());
  s.components[1].weight = 0.0;
  s.components[0].weight = 0.55;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);

  GaussianMixtureSpec w = GaussianMixtureSpec::default_four();
  for (std::size_t c = 0; c < w.components.size(); ++c) w.components[c].weight = c == 0 ? 1.0 : 0.0;
  CHECK_THROWS_AS(gen_four_gaussian(w), InvalidArgument);

  GaussianMixtureSpec cov = GaussianMixtureSpec::default_components(1);
  cov.components[0].cov = {0.01, 0.02, 0.02, 0.01};
  CHECK_THROWS_AS(gen_four_gaussian(cov), InvalidArgument);
  cov.components[0].cov = {0.01, 0.001, 0.002, 0.01};
  CHECK_THROWS_AS(cov.validate(), InvalidArgument);

  GaussianMixtureSpec g = GaussianMixtureSpec::default_four();
  g.grid_x = 1;
  CHECK_THROWS_AS(g.validate(), InvalidArgument);
  CHECK_THROWS_AS(GaussianMixtureSpec::default_components(0), InvalidArgument);
  CHECK_THROWS_AS(GaussianMixtureSpec::default_components(5), InvalidArgument);
  const auto two = GaussianMixtureSpec::default_components(2);
  CHECK(two.components.size() == 2);
  CHECK(two.components[0].weight + two.components[1].weight == doctest::Approx(1.0));
}

TEST_CASE("single centered component is symmetric") {
  GaussianMixtureSpec s;
  s.components = {GaussianComponent{{0.5, 0.5}, {0.02, 0.0, 0.0, 0.02}, 1.0}};
  s.grid_x = 17;
  s.grid_y = 12;
  const JointDistribution p = gen_four_gaussian(s);
  const Matrix& m = p.matrix();
  // The largest entry absorbs the normalization residue; compare the rest.
  Eigen::Index ri = 0, ci = 0;
  m.maxCoeff(&ri, &ci);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      const Eigen::Index i2 = m.rows() - 1 - i, k2 = m.cols() - 1 - k;
      if ((i == ri && k == ci) || (i2 == ri && k2 == ci)) continue;
      worst = std::max(worst, std::abs(m(i, k) - m(i2, k2)));
    }
  }
  CHECK(worst < 1e-12);
  GaussianMixtureSpec tiny = s;
  tiny.grid_x = tiny.grid_y = 2;
  const JointDistribution t = gen_four_gaussian(tiny);
  CHECK(t.kx() == 2);
  CHECK(t.k() == 2);
}

TEST_CASE("default dataset: informative and deterministic") {
  const JointDistribution a = gen_four_gaussian(GaussianMixtureSpec::default_four());
  const JointDistribution b = gen_four_gaussian(GaussianMixtureSpec::default_four());
  CHECK(a.kx() == 52);
  CHECK(a.k() == 52);
  CHECK(a.mutual_information() > 0.5);
  CHECK(a.matrix() == b.matrix());
  CHECK(std::abs(a.matrix().sum() - 1.0) < 1e-14);

  GaussianMixtureSpec j = GaussianMixtureSpec::default_four();
  j.jitter = 0.01;
  j.seed = 5;
  const JointDistribution c = gen_four_gaussian(j);
  const JointDistribution d = gen_four_gaussian(j);
  CHECK(c.matrix() == d.matrix());
  CHECK(c.matrix() != a.matrix());
}

TEST_CASE("default dataset: four classes recover the four modes") {
  const GaussianMixtureSpec spec = GaussianMixtureSpec::default_four();
  const JointDistribution p = gen_four_gaussian(spec);
  AnnealSchedule s;
  s.beta_max = 8.0;
  s.step = 0.05;
  const auto branches = anneal(ObjectiveKind::InformationDistortion, p, 4, s);
  const Quantizer& q = branches.back().points.back().q;

  // Component label of each Y cell: the component with the largest marginal
  // density along y.
  const Eigen::Index k = p.k();
  std::vector<int> label(static_cast<std::size_t>(k));
  for (Eigen::Index c = 0; c < k; ++c) {
    const double y = (c + 0.5) / static_cast<double>(k);
    double best = -1.0;
    for (std::size_t m = 0; m < spec.components.size(); ++m) {
      const auto& g = spec.components[m];
      const double sd = std::sqrt(g.cov[3]);
      const double dens = g.weight / sd * std::exp(-0.5 * std::pow((y - g.mean[1]) / sd, 2));
      if (dens > best) {
        best = dens;
        label[c] = static_cast<int>(m);
      }
    }
  }
  // Purity: mass of cells whose argmax class is the majority class of their
  // component.
  Eigen::MatrixXd votes = Eigen::MatrixXd::Zero(4, 4);
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::Index cls = 0;
    q.matrix().col(c).maxCoeff(&cls);
    votes(label[c], cls) += p.py()(c);
  }
  double pure = 0.0;
  std::vector<Eigen::Index> majority(4);
  for (int m = 0; m < 4; ++m) pure += votes.row(m).maxCoeff(&majority[m]);
  CHECK(pure > 0.95);
  std::sort(majority.begin(), majority.end());
  CHECK(std::unique(majority.begin(), majority.end()) == majority.end());
}

TEST_CASE("joint file round trip and rejections") {
  const JointDistribution p = gen_four_gaussian(GaussianMixtureSpec::default_four());
  const std::string path = tmp_path("joint.csv");
  save_joint(p, path);
  const JointDistribution back = load_joint(path);
  CHECK(back.matrix() == p.matrix());

  CHECK(format_joint(JointDistribution(Matrix::Constant(1, 2, 0.5))) ==
        "1,2\n0.5,0.5\n");

  try {
    parse_joint("2,2\n0.5,0.1\n-0.1,0.5\n");
    FAIL("expected rejection");
  } catch (const InvalidArgument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 1") != std::string::npos);
    CHECK(msg.find("column 0") != std::string::npos);
  }
  try {
    parse_joint("2,2\n0.245,0.245\n0.245,0.245\n");
    FAIL("expected rejection");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("0.98") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_joint("2,2\n0.5,0\n0.5,0\n"), InvalidArgument);
  CHECK_THROWS_AS(parse_joint(""), ParseError);
  CHECK_THROWS_AS(parse_joint("2\n0.5\n0.5\n"), ParseError);
  CHECK_THROWS_AS(parse_joint("2,2\n0.25,0.25\n"), ParseError);
  CHECK_THROWS_AS(parse_joint("2,2\n0.25,0.25,0.1\n0.25,0.15\n"), ParseError);
  CHECK_THROWS_AS(parse_joint("2,2\n0.25,abc\n0.25,0.25\n"), ParseError);
  CHECK_THROWS_AS(parse_joint("1,2\n0.5,0.5\n0.1,0.1\n"), ParseError);
  CHECK_THROWS_AS(load_joint(tmp_path("missing.csv")), ParseError);
  CHECK(parse_joint("1,2\r\n0.5, 0.5\r\n\n").k() == 2);
}

TEST_CASE("csv writers") {
  CHECK(format_branches_csv({}) ==
        "beta,branch_id,I_xyn,G,kkt_residual,solves_lagrangian,solves_constrained\n");

  std::vector<CurvePoint> curve(3);
  for (int i = 0; i < 3; ++i) {
    curve[i].I0 = 0.1 * (i + 1);
    curve[i].R = 1.0 - 0.1 * i;
    curve[i].beta = 1.0 / 3.0;
  }
  const std::string csv = format_curve_csv(curve);
  CHECK(count_lines(csv) == 4);
  CHECK(csv.rfind("I0,R,beta,branch_id,kkt_residual\n", 0) == 0);
  CHECK(csv.find("0.33333333333333331") != std::string::npos);

  const std::string bits = format_curve_csv(curve, Unit::Bits);
  CHECK(bits.find("1.4426950408889634") != std::string::npos);

  const JointDistribution p = fixtures::two_cluster();
  AnnealSchedule s;
  s.beta_max = 0.1;
  s.step = 0.05;
  const auto branches = anneal(ObjectiveKind::InformationDistortion, p, 2, s);
  const std::string b = format_branches_csv(branches);
  CHECK(count_lines(b) == 1 + static_cast<int>(branches[0].points.size()));
  CHECK(b.find(",1,na\n") != std::string::npos);
}

TEST_CASE("report json round trip") {
  RunReport r;
  r.unit = Unit::Bits;
  r.bifurcations.push_back({1.25, BifurcationKind::PitchforkLike, 0, {1, 2}, 0.0});
  r.bifurcations.push_back({1.2, BifurcationKind::SaddleNode, 1, {}, 0.01});
  r.theorem3 = ReportTheorem3{1e-4, 2e-3, {0.0065}, 1};
  r.classification = ClassificationSummary{10, 7, 10, 0, 0};
  const std::string text = format_report_json(r);
  const auto j = nlohmann::json::parse(text);
  CHECK(j["bifurcations"][0]["kind"] == "pitchfork_like");
  CHECK(j["bifurcations"][1]["information"].get<double>() ==
        doctest::Approx(0.01 / std::numbers::ln2));

  const RunReport back = parse_report_json(text);
  CHECK(back.unit == Unit::Bits);
  REQUIRE(back.bifurcations.size() == 2);
  CHECK(back.bifurcations[0].beta == 1.25);
  CHECK(back.bifurcations[0].child_branches == std::vector<int>{1, 2});
  CHECK(back.bifurcations[1].kind == BifurcationKind::SaddleNode);
  CHECK(back.bifurcations[1].information == doctest::Approx(0.01).epsilon(1e-15));
  REQUIRE(back.theorem3.has_value());
  CHECK(back.theorem3->sign_changes[0] == doctest::Approx(0.0065).epsilon(1e-15));
  REQUIRE(back.classification.has_value());
  CHECK(back.classification->solves_lagrangian == 7);

  CHECK_THROWS_AS(parse_report_json("{"), ParseError);
  CHECK_THROWS_AS(parse_report_json(R"({"bifurcations":[{"beta":1,"kind":"hopf"}]})"), ParseError);
  CHECK(parse_report_json(R"({"bifurcations":[]})").bifurcations.empty());
}

TEST_CASE("units") {
  CHECK(unit_from_string("bits") == Unit::Bits);
  CHECK(unit_scale(Unit::Nats) == 1.0);
  CHECK(unit_scale(Unit::Bits) * std::numbers::ln2 == doctest::Approx(1.0));
  CHECK_THROWS_AS(unit_from_string("bans"), InvalidArgument);
}
