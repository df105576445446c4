#include "cli_app.hpp"

#include "infobif/anneal.hpp"
#include "infobif/curve.hpp"
#include "infobif/dataset_io.hpp"
#include "infobif/errors.hpp"
#include "infobif/spectral.hpp"
#include "infobif/verify.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <ostream>

namespace infobif::cli {
namespace {

struct RunConfig {
  std::string unit = "nats";
  std::uint64_t seed = 0;
  int jobs = 1;

  // gen-data
  int components = 4;
  std::vector<Eigen::Index> grid{52, 52};
  double jitter = 0.0;
  std::string out_file;

  // anneal / curve / verify
  std::string data;
  std::string objective = "distortion";
  Eigen::Index classes = 4;
  std::string out_dir;
  AnnealSchedule schedule;

  double i0_min = 1e-3;
  double i0_max = 0.1;
  int points = 100;
  int restarts = 8;
  bool anneal_seeds = true;

  std::string suite = "all";
};

std::string fmt(double v, const char* f = "%.10g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

JointDistribution dataset(const RunConfig& cfg) {
  if (!cfg.data.empty()) return load_joint(cfg.data);
  return gen_four_gaussian(GaussianMixtureSpec::default_four());
}

std::filesystem::path prepare_dir(const std::string& dir) {
  std::filesystem::path p(dir);
  std::filesystem::create_directories(p);
  return p;
}

int cmd_gen_data(const RunConfig& cfg, std::ostream& out) {
  if (cfg.grid.size() != 2) throw InvalidArgument("--grid takes two sizes");
  GaussianMixtureSpec spec = GaussianMixtureSpec::default_components(cfg.components);
  spec.grid_x = cfg.grid[0];
  spec.grid_y = cfg.grid[1];
  spec.seed = cfg.seed;
  spec.jitter = cfg.jitter;
  const JointDistribution p = gen_four_gaussian(spec);
  save_joint(p, cfg.out_file);
  const Unit unit = unit_from_string(cfg.unit);
  out << "wrote " << cfg.out_file << " (" << p.kx() << "x" << p.k() << ")\n";
  out << "I(X;Y) = " << fmt(p.mutual_information() * unit_scale(unit)) << " " << to_string(unit)
      << "\n";
  return kOk;
}

int cmd_anneal(RunConfig cfg, std::ostream& out) {
  const Unit unit = unit_from_string(cfg.unit);
  const ObjectiveKind kind = objective_from_string(cfg.objective);
  if (cfg.classes < 1) throw InvalidArgument("--classes must be >= 1");
  cfg.schedule.seed = cfg.seed;
  cfg.schedule.validate();
  const JointDistribution p = dataset(cfg);
  const auto dir = prepare_dir(cfg.out_dir);

  const std::vector<Branch> branches = anneal(kind, p, cfg.classes, cfg.schedule);
  std::vector<BifurcationEvent> events;
  for (const auto& b : branches) events.insert(events.end(), b.events.begin(), b.events.end());
  std::stable_sort(events.begin(), events.end(),
                   [](const auto& a, const auto& b) { return a.beta < b.beta; });

  RunReport report = make_report(events);
  report.unit = unit;
  report.classification = summarize_classification(branches);
  write_text((dir / "branches.csv").string(), format_branches_csv(branches, unit));
  write_text((dir / "bifurcations.json").string(), format_report_json(report));

  std::size_t npts = 0;
  for (const auto& b : branches) npts += b.points.size();
  out << branches.size() << " branches, " << npts << " points, " << events.size()
      << " bifurcation events\n";
  for (const auto& e : events) {
    out << "  " << to_string(e.kind) << " at beta = " << fmt(e.beta) << " (branch "
        << e.parent_branch << ")\n";
  }
  return kOk;
}

int cmd_curve(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Unit unit = unit_from_string(cfg.unit);
  CurveSpec spec;
  spec.I0_min = cfg.i0_min;
  spec.I0_max = cfg.i0_max;
  spec.points = cfg.points;
  spec.kind = objective_from_string(cfg.objective);
  spec.classes = cfg.classes;
  spec.restarts = cfg.restarts;
  spec.seed = cfg.seed;
  spec.jobs = cfg.jobs;
  spec.validate();
  const JointDistribution p = dataset(cfg);
  const auto dir = prepare_dir(cfg.out_dir);

  std::vector<Branch> seeds;
  if (cfg.anneal_seeds) {
    AnnealSchedule sched = cfg.schedule;
    sched.seed = cfg.seed;
    try {
      sched.validate();
      seeds = anneal(spec.kind, p, spec.classes, sched);
    } catch (const NonConvergence& e) {
      err << "warning: seeding anneal stopped early: " << e.what() << "\n";
    }
  }
  const std::vector<CurvePoint> curve = build_curve(spec, p, seeds);
  if (curve.empty()) throw NonConvergence("no curve point converged", 0.0);

  RunReport report;
  report.unit = unit;
  std::vector<Branch> cb = curve_branches(spec.kind, p, curve);
  for (auto& b : cb) {
    for (auto& sp : b.points) sp.spectral = classify_stationary_point(spec.kind, p, sp, kDefaultTolEig);
  }
  for (const auto& b : cb) {
    for (const auto& e : turning_points(b)) report.bifurcations.push_back({e.beta, e.kind, e.parent_branch, {}, e.information});
  }
  report.classification = summarize_classification(cb);
  try {
    report.theorem3 = to_report(verify_theorem3(curve));
  } catch (const SegmentTooShort& e) {
    err << "warning: " << e.what() << "; derivative checks skipped\n";
  }
  write_text((dir / "curve.csv").string(), format_curve_csv(curve, unit));
  write_text((dir / "report.json").string(), format_report_json(report));

  out << curve.size() << " of " << spec.points << " curve points converged, " << cb.size()
      << " smooth segments\n";
  if (report.theorem3) {
    out << "max |dR/dI0 + beta| / beta = " << fmt(report.theorem3->max_rel_err, "%.3e")
        << ", sign changes of dbeta/dI0: " << report.theorem3->sign_changes.size() << "\n";
  }
  return kOk;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out) {
  VerifyOptions opts;
  opts.seed = cfg.seed;
  opts.classes = std::max<Eigen::Index>(cfg.classes, 2);
  if (!cfg.data.empty()) opts.data = load_joint(cfg.data);
  const auto results = run_verify(cfg.suite, opts);
  out << format_table(results);
  const bool ok = std::all_of(results.begin(), results.end(), [](const auto& r) { return r.pass(); });
  out << (ok ? "all checks passed\n" : "verification FAILED\n");
  return ok ? kOk : kVerifyFailed;
}

}  // namespace

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Annealing, bifurcation analysis and relevance-compression curves"};
  app.name(argv.empty() ? "infobif" : std::filesystem::path(argv[0]).filename().string());
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value file; command line flags take precedence");
  app.add_option("--unit", cfg.unit, "Display unit for information values")
      ->check(CLI::IsMember({"nats", "bits"}))
      ->capture_default_str();
  app.add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  app.add_option("--jobs", cfg.jobs, "Worker threads for curve restarts")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  auto* gen = app.add_subcommand("gen-data", "Write the Gaussian-mixture joint distribution");
  gen->add_option("--components", cfg.components, "Mixture components (1-4)")
      ->check(CLI::Range(1, 4))
      ->capture_default_str();
  gen->add_option("--grid", cfg.grid, "Grid size K_X K")->expected(2)->capture_default_str();
  gen->add_option("--jitter", cfg.jitter, "Seeded jitter on the means")->capture_default_str();
  gen->add_option("--out", cfg.out_file, "Output CSV path")->required();

  auto add_data_options = [&](CLI::App* sub) {
    sub->add_option("--data", cfg.data, "Joint CSV (default: generated mixture)");
    sub->add_option("--objective", cfg.objective, "distortion or bottleneck")
        ->check(CLI::IsMember({"distortion", "bottleneck", "id", "ib"}))
        ->capture_default_str();
    sub->add_option("--classes,-N", cfg.classes, "Number of classes N")->capture_default_str();
  };
  auto add_schedule_options = [&](CLI::App* sub) {
    auto& s = cfg.schedule;
    sub->add_option("--beta-start", s.beta_start)->capture_default_str();
    sub->add_option("--beta-max", s.beta_max)->capture_default_str();
    sub->add_option("--step", s.step, "Initial beta step")->capture_default_str();
    sub->add_option("--step-min", s.step_min)->capture_default_str();
    sub->add_option("--perturbation", s.perturbation)->capture_default_str();
    sub->add_option("--max-iters", s.max_fixed_point_iters)->capture_default_str();
    sub->add_option("--tol", s.convergence_tol)->capture_default_str();
  };

  auto* ann = app.add_subcommand("anneal", "Anneal in beta; write branches and bifurcations");
  add_data_options(ann);
  add_schedule_options(ann);
  ann->add_option("--out", cfg.out_dir, "Output directory")->required();

  auto* crv = app.add_subcommand("curve", "Build R(I0) and check dR/dI0 = -beta");
  add_data_options(crv);
  add_schedule_options(crv);
  crv->add_option("--i0-min", cfg.i0_min)->capture_default_str();
  crv->add_option("--i0-max", cfg.i0_max)->capture_default_str();
  crv->add_option("--points", cfg.points)->check(CLI::Range(2, 1000000))->capture_default_str();
  crv->add_option("--restarts", cfg.restarts)->check(CLI::NonNegativeNumber)->capture_default_str();
  crv->add_flag("--anneal-seeds,!--no-anneal-seeds", cfg.anneal_seeds,
                "Seed the sweep from annealed branches");
  crv->add_option("--out", cfg.out_dir, "Output directory")->required();

  auto* ver = app.add_subcommand("verify", "Run property suites");
  ver->add_option("--suite", cfg.suite)
      ->check(CLI::IsMember({"all", "euler", "gradients", "theorem1", "theorem3"}))
      ->capture_default_str();
  ver->add_option("--data", cfg.data, "Joint CSV used in addition to random instances");
  ver->add_option("--classes,-N", cfg.classes, "Classes for the annealing and curve suites")
      ->default_val(2);

  try {
    std::vector<std::string> args(argv.rbegin(), argv.rend());
    if (!args.empty()) args.pop_back();
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*gen) return cmd_gen_data(cfg, out);
    if (*ann) return cmd_anneal(cfg, out);
    if (*crv) return cmd_curve(cfg, out, err);
    if (*ver) return cmd_verify(cfg, out);
  } catch (const NonConvergence& e) {
    err << "error: " << e.what() << " (last residual " << e.last_residual() << ")\n";
    return kNonConvergence;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InfeasibleI0& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return kUsage;
}

}  // namespace infobif::cli
