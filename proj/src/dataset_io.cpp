#include "infobif/dataset_io.hpp"

#include "infobif/errors.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace infobif {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string flag(std::optional<bool> b) {
  if (!b) return "na";
  return *b ? "1" : "0";
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
T parse_number(std::string_view field, const std::string& where) {
  T v{};
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end || field.empty()) {
    throw ParseError("cannot parse '" + std::string(field) + "' " + where);
  }
  return v;
}

}  // namespace

void GaussianMixtureSpec::validate() const {
  if (components.empty()) throw InvalidArgument("mixture needs at least one component");
  if (grid_x < 2 || grid_y < 2) throw InvalidArgument("grid must be at least 2 x 2");
  if (!(jitter >= 0.0)) throw InvalidArgument("jitter must be >= 0");
  double total = 0.0;
  for (std::size_t c = 0; c < components.size(); ++c) {
    const auto& g = components[c];
    if (!(g.weight > 0.0)) {
      throw InvalidArgument("component " + std::to_string(c) + " has non-positive weight");
    }
    total += g.weight;
    const double sxx = g.cov[0], sxy = g.cov[1], syx = g.cov[2], syy = g.cov[3];
    if (std::abs(sxy - syx) > 1e-12 * std::max(1.0, std::abs(sxy))) {
      throw InvalidArgument("component " + std::to_string(c) + " covariance is not symmetric");
    }
    if (!(sxx > 0.0) || !(sxx * syy - sxy * sxy > 0.0)) {
      throw InvalidArgument("component " + std::to_string(c) +
                            " covariance is not positive definite");
    }
  }
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "mixture weights sum to " << total << ", expected 1";
    throw InvalidArgument(os.str());
  }
}

GaussianMixtureSpec GaussianMixtureSpec::default_four() {
  GaussianMixtureSpec s;
  auto iso = [](double sigma) {
    return std::array<double, 4>{sigma * sigma, 0.0, 0.0, sigma * sigma};
  };
  s.components = {
      {{0.2, 0.35}, iso(0.05), 0.30},
      {{0.4, 0.80}, iso(0.07), 0.25},
      {{0.6, 0.15}, iso(0.06), 0.25},
      {{0.8, 0.60}, iso(0.08), 0.20},
  };
  return s;
}

GaussianMixtureSpec GaussianMixtureSpec::default_components(int count) {
  GaussianMixtureSpec s = default_four();
  if (count < 1 || count > static_cast<int>(s.components.size())) {
    throw InvalidArgument("component count must be between 1 and " +
                          std::to_string(s.components.size()));
  }
  s.components.resize(static_cast<std::size_t>(count));
  double total = 0.0;
  for (const auto& g : s.components) total += g.weight;
  for (auto& g : s.components) g.weight /= total;
  return s;
}

JointDistribution gen_four_gaussian(const GaussianMixtureSpec& spec) {
  spec.validate();
  std::vector<GaussianComponent> comps = spec.components;
  if (spec.jitter > 0.0) {
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, spec.jitter);
    for (auto& g : comps) {
      g.mean[0] += noise(rng);
      g.mean[1] += noise(rng);
    }
  }
  Matrix p = Matrix::Zero(spec.grid_x, spec.grid_y);
  for (const auto& g : comps) {
    const double sxx = g.cov[0], sxy = g.cov[1], syy = g.cov[3];
    const double det = sxx * syy - sxy * sxy;
    const double norm = g.weight / (2.0 * std::numbers::pi * std::sqrt(det));
    for (Eigen::Index i = 0; i < spec.grid_x; ++i) {
      const double dx = (static_cast<double>(i) + 0.5) / static_cast<double>(spec.grid_x) - g.mean[0];
      for (Eigen::Index k = 0; k < spec.grid_y; ++k) {
        const double dy =
            (static_cast<double>(k) + 0.5) / static_cast<double>(spec.grid_y) - g.mean[1];
        const double quad = (syy * dx * dx - 2.0 * sxy * dx * dy + sxx * dy * dy) / det;
        p(i, k) += norm * std::exp(-0.5 * quad);
      }
    }
  }
  const double total = p.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw InvalidArgument("mixture density vanishes on the grid");
  }
  p /= total;
  // Normalizing by the sum can leave it a few ulps away from 1; absorb that
  // into the largest entry so the sum check holds tightly.
  Eigen::Index ri = 0, ci = 0;
  p.maxCoeff(&ri, &ci);
  p(ri, ci) += 1.0 - p.sum();
  return JointDistribution(std::move(p));
}

std::string format_joint(const JointDistribution& p) {
  const Matrix& m = p.matrix();
  std::string out = std::to_string(m.rows()) + "," + std::to_string(m.cols()) + "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      if (k) out += ',';
      out += num(m(i, k));
    }
    out += '\n';
  }
  return out;
}

JointDistribution parse_joint(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!trim(line).empty()) return true;
    }
    return false;
  };
  if (!next_line()) throw ParseError("empty joint distribution file");
  const auto header = split_commas(line);
  if (header.size() != 2) throw ParseError("header must be 'K_X,K' (line 1)");
  const auto kx = parse_number<long>(header[0], "in header");
  const auto k = parse_number<long>(header[1], "in header");
  if (kx < 1 || k < 1) throw ParseError("header dimensions must be positive");
  Matrix p(kx, k);
  for (long i = 0; i < kx; ++i) {
    if (!next_line()) {
      throw ParseError("expected " + std::to_string(kx) + " data rows, found " + std::to_string(i));
    }
    const auto fields = split_commas(line);
    if (static_cast<long>(fields.size()) != k) {
      throw ParseError("row " + std::to_string(i) + " has " + std::to_string(fields.size()) +
                       " values, expected " + std::to_string(k));
    }
    for (long c = 0; c < k; ++c) {
      const double v = parse_number<double>(
          fields[c], "at row " + std::to_string(i) + ", column " + std::to_string(c));
      if (v < 0.0) {
        std::ostringstream os;
        os << "negative entry " << v << " at row " << i << ", column " << c;
        throw InvalidArgument(os.str());
      }
      p(i, c) = v;
    }
  }
  if (next_line()) throw ParseError("unexpected data after row " + std::to_string(kx - 1));
  return JointDistribution(std::move(p));
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out << content;
  if (!out) throw Error("write to '" + path + "' failed");
}

JointDistribution load_joint(const std::string& path) { return parse_joint(read_text(path)); }

void save_joint(const JointDistribution& p, const std::string& path) {
  write_text(path, format_joint(p));
}

Unit unit_from_string(std::string_view name) {
  if (name == "nats") return Unit::Nats;
  if (name == "bits") return Unit::Bits;
  throw InvalidArgument("unknown unit '" + std::string(name) + "' (expected nats or bits)");
}

std::string_view to_string(Unit unit) { return unit == Unit::Bits ? "bits" : "nats"; }

double unit_scale(Unit unit) { return unit == Unit::Bits ? 1.0 / std::numbers::ln2 : 1.0; }

std::string format_branches_csv(const std::vector<Branch>& branches, Unit unit) {
  const double s = unit_scale(unit);
  std::string out = "beta,branch_id,I_xyn,G,kkt_residual,solves_lagrangian,solves_constrained\n";
  for (const auto& b : branches) {
    for (const auto& sp : b.points) {
      std::optional<bool> lag, con;
      if (sp.spectral) {
        lag = sp.spectral->solves_lagrangian;
        con = sp.spectral->solves_constrained;
      }
      out += num(sp.beta) + "," + std::to_string(b.id) + "," + num(s * sp.constraint_value) + "," +
             num(s * sp.objective_value) + "," + num(sp.kkt_residual) + "," + flag(lag) + "," +
             flag(con) + "\n";
    }
  }
  return out;
}

std::string format_curve_csv(const std::vector<CurvePoint>& curve, Unit unit) {
  const double s = unit_scale(unit);
  std::string out = "I0,R,beta,branch_id,kkt_residual\n";
  for (const auto& cp : curve) {
    out += num(s * cp.I0) + "," + num(s * cp.R) + "," + num(cp.beta) + "," +
           std::to_string(cp.branch_id) + "," + num(cp.kkt_residual) + "\n";
  }
  return out;
}

RunReport make_report(const std::vector<BifurcationEvent>& events) {
  RunReport r;
  for (const auto& e : events) {
    r.bifurcations.push_back(
        ReportEvent{e.beta, e.kind, e.parent_branch, e.child_branches, e.information});
  }
  return r;
}

ClassificationSummary summarize_classification(const std::vector<Branch>& branches) {
  ClassificationSummary s;
  for (const auto& b : branches) {
    for (const auto& sp : b.points) {
      if (!sp.spectral) continue;
      ++s.points;
      const bool lag = sp.spectral->solves_lagrangian;
      const std::optional<bool> con = sp.spectral->solves_constrained;
      if (lag) ++s.solves_lagrangian;
      if (con.value_or(false)) ++s.solves_constrained;
      if (!lag && !con.value_or(false)) ++s.indeterminate;
      if (lag && con.has_value() && !*con) ++s.containment_violations;
    }
  }
  return s;
}

ReportTheorem3 to_report(const Theorem3Report& t3) {
  return ReportTheorem3{t3.max_rel_err, t3.max_second_abs_err, t3.sign_changes,
                        t3.segments_checked};
}

std::string format_report_json(const RunReport& report) {
  using nlohmann::ordered_json;
  const double s = unit_scale(report.unit);
  ordered_json j;
  j["unit"] = std::string(to_string(report.unit));
  j["bifurcations"] = ordered_json::array();
  for (const auto& e : report.bifurcations) {
    j["bifurcations"].push_back({{"beta", e.beta},
                                 {"kind", std::string(to_string(e.kind))},
                                 {"parent_branch", e.parent_branch},
                                 {"child_branches", e.child_branches},
                                 {"information", s * e.information}});
  }
  if (report.theorem3) {
    std::vector<double> changes;
    for (double v : report.theorem3->sign_changes) changes.push_back(s * v);
    j["theorem3"] = {{"max_rel_err", report.theorem3->max_rel_err},
                     {"max_second_abs_err", report.theorem3->max_second_abs_err},
                     {"sign_changes", changes},
                     {"segments_checked", report.theorem3->segments_checked}};
  }
  if (report.classification) {
    const auto& c = *report.classification;
    j["classification"] = {{"points", c.points},
                           {"solves_lagrangian", c.solves_lagrangian},
                           {"solves_constrained", c.solves_constrained},
                           {"indeterminate", c.indeterminate},
                           {"containment_violations", c.containment_violations}};
  }
  return j.dump(2) + "\n";
}

RunReport parse_report_json(const std::string& text) {
  using nlohmann::json;
  RunReport r;
  try {
    const json j = json::parse(text);
    r.unit = unit_from_string(j.value("unit", std::string("nats")));
    const double inv = 1.0 / unit_scale(r.unit);
    for (const auto& e : j.at("bifurcations")) {
      ReportEvent ev;
      ev.beta = e.at("beta").get<double>();
      const std::string kind = e.at("kind").get<std::string>();
      if (kind == "pitchfork_like") {
        ev.kind = BifurcationKind::PitchforkLike;
      } else if (kind == "saddle_node") {
        ev.kind = BifurcationKind::SaddleNode;
      } else {
        throw ParseError("unknown bifurcation kind '" + kind + "'");
      }
      ev.parent_branch = e.value("parent_branch", 0);
      ev.child_branches = e.value("child_branches", std::vector<int>{});
      ev.information = inv * e.value("information", 0.0);
      r.bifurcations.push_back(std::move(ev));
    }
    if (j.contains("theorem3")) {
      const auto& t = j.at("theorem3");
      ReportTheorem3 t3;
      t3.max_rel_err = t.at("max_rel_err").get<double>();
      t3.max_second_abs_err = t.value("max_second_abs_err", 0.0);
      for (double v : t.at("sign_changes").get<std::vector<double>>()) {
        t3.sign_changes.push_back(inv * v);
      }
      t3.segments_checked = t.value("segments_checked", 0);
      r.theorem3 = std::move(t3);
    }
    if (j.contains("classification")) {
      const auto& c = j.at("classification");
      r.classification = ClassificationSummary{
          c.at("points").get<int>(), c.at("solves_lagrangian").get<int>(),
          c.at("solves_constrained").get<int>(), c.at("indeterminate").get<int>(),
          c.at("containment_violations").get<int>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed report JSON: ") + e.what());
  }
  return r;
}

}  // namespace infobif
