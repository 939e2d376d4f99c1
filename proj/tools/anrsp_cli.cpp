#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "anrsp/anrsp.hpp"

namespace fs = std::filesystem;
using namespace anrsp;

namespace {

struct Options {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<double> delta;
  std::optional<double> mean_perturbation;
  std::optional<int> trials;
  std::optional<long> seed;
  std::optional<int> quiver;
  std::size_t threads = 0;
};

RunConfig resolve(const Options& o) {
  RunConfig cfg = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
  if (o.delta) cfg.delta = *o.delta;
  if (o.mean_perturbation) cfg.mean_perturbation = *o.mean_perturbation;
  if (o.trials) {
    if (*o.trials < 0) throw ConfigError("--trials must be non-negative");
    cfg.trials = *o.trials;
  }
  if (o.seed) {
    if (*o.seed < 0) throw ConfigError("--seed must be non-negative");
    cfg.seed = std::uint64_t(*o.seed);
  }
  if (o.quiver) {
    if (*o.quiver < 1) throw ConfigError("--quiver must be >= 1");
    cfg.quiver = *o.quiver;
  }
  return cfg;
}

std::string out_path(const Options& o, const std::string& name) {
  fs::create_directories(o.out_dir);
  return (fs::path(o.out_dir) / name).string();
}

void describe(io::Summary& s, const RunConfig& cfg) {
  s.add("map", cfg.map.name);
  s.add("observable", cfg.objective.label);
  s.add("n", cfg.spectral.n);
  s.add("N", cfg.spectral.N);
  s.add("gamma", cfg.spectral.gamma);
}

void describe_srb(io::Summary& s, const SRBEstimate& srb, int N) {
  s.add("eigenvalue_re", srb.eigenvalue.real());
  s.add("eigenvalue_im", srb.eigenvalue.imag());
  s.add("iterations", srb.iterations);
  s.add("second_modulus", srb.second_modulus);
  s.add("hermitian_defect", srb.hermitian_defect);
  s.add("residual", srb.residual);
  const Undershoot u = density_undershoot(srb.density, N);
  s.add("positive_fraction", u.positive_fraction);
  s.add("min_density", u.min_value);
}

void write_srb(const Options& o, const SRBEstimate& srb, int N) {
  io::write_file(out_path(o, "srb_coeffs.csv"), spectral_field_csv(srb.density));
  io::write_file(out_path(o, "srb_grid.csv"), density_grid_csv(srb.density, N));
}

int cmd_srb(const Options& o) {
  const RunConfig cfg = resolve(o);
  const auto t0 = std::chrono::steady_clock::now();
  const SrbRun run = run_srb(cfg.map, cfg.spectral);
  write_srb(o, run.srb, cfg.spectral.N);
  io::Summary s;
  describe(s, cfg);
  describe_srb(s, run.srb, cfg.spectral.N);
  s.add("build_seconds", run.build_seconds);
  s.add("wall_seconds", detail::seconds_since(t0));
  io::write_file(out_path(o, "summary.txt"), s.str());
  std::cout << s.str();
  return 0;
}

void describe_field(io::Summary& s, const OptimalRun& run, int N) {
  s.add("nu", run.field.nu);
  s.add("J", objective_value(run.field));
  s.add("J_imag_residue", objective_value_complex(run.field.a1, run.field.a2, run.field.raw1, run.field.raw2).imag());
  s.add("pre_symmetry_defect", run.field.pre_symmetry_defect);
  s.add("mean_field_norm", mean_field_norm(run.field, N));
  s.add("min_pivot", run.solver.min_pivot());
  s.add("seconds_per_coefficient", run.field.seconds_per_coefficient());
}

int cmd_optimal(const Options& o) {
  const RunConfig cfg = resolve(o);
  const OptimalRun run = run_optimal(cfg);
  io::write_file(out_path(o, "field_coeffs.csv"), optimal_field_csv(run.field));
  io::write_file(out_path(o, "field_quiver.csv"), quiver_csv(run.field, cfg.quiver));
  io::Summary s;
  describe(s, cfg);
  describe_field(s, run, cfg.spectral.N);
  io::write_file(out_path(o, "summary.txt"), s.str());
  std::cout << s.str();
  return 0;
}

int cmd_validate(const Options& o) {
  const RunConfig cfg = resolve(o);
  const OptimalRun run = run_optimal(cfg);
  const ResponseProbe probe =
      finite_difference_response(cfg.map, run.field, run.objective, cfg.spectral, cfg.deltas);
  io::write_file(out_path(o, "probe.csv"), probe_csv(probe));
  io::Summary s;
  describe(s, cfg);
  describe_field(s, run, cfg.spectral.N);
  s.add("probe", probe_summary_line(probe, run.field.nu));
  s.add("secant_slope", probe.secant_slope);
  s.add("curvature", probe.curvature);
  const SpotCheckReport spot = optimality_spot_check(run.field, cfg.trials, cfg.seed);
  s.add("spot_trials", spot.trials);
  s.add("spot_seed", long(cfg.seed));
  s.add("spot_max_ratio", spot.max_ratio);
  io::write_file(out_path(o, "summary.txt"), s.str());
  std::cout << s.str();
  return 0;
}

int cmd_perturbed_srb(const Options& o) {
  const RunConfig cfg = resolve(o);
  if (!cfg.delta && !cfg.mean_perturbation) {
    throw ConfigError("perturbed-srb needs --delta or --mean-perturbation (or delta/mean_perturbation in the config)");
  }
  const OptimalRun run = run_optimal(cfg);
  const int N = cfg.spectral.N;
  const double mean = mean_field_norm(run.field, N);
  const double delta = cfg.delta ? *cfg.delta : delta_for_mean_perturbation(run.field, N, *cfg.mean_perturbation);
  io::Summary s;
  describe(s, cfg);
  s.add("delta", delta);
  s.add("mean_field_norm", mean);
  s.add("mean_perturbation", delta * mean);
  const SRBEstimate pert = srb_of_perturbed(cfg.map, run.field, delta, cfg.spectral);
  write_srb(o, pert, N);
  describe_srb(s, pert, N);
  const double e0 = run.objective.expectation(run.base.srb.density);
  const double ed = run.objective.expectation(pert.density);
  s.add("expectation_base", e0);
  s.add("expectation_perturbed", ed);
  s.add("expectation_increased", ed > e0 ? "yes" : "no");
  io::write_file(out_path(o, "summary.txt"), s.str());
  std::cout << s.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal linear response of SRB expectations for torus maps"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "run configuration file");
    sub->add_option("--out", o.out_dir, "output directory")->capture_default_str();
    sub->add_option("--threads", o.threads, "worker threads (0 = all cores)");
  };
  auto* srb = app.add_subcommand("srb", "SRB density of the unperturbed map");
  auto* opt = app.add_subcommand("optimal", "optimal perturbation field");
  auto* val = app.add_subcommand("validate", "finite-difference probe and optimality spot check");
  auto* pert = app.add_subcommand("perturbed-srb", "SRB density of T + delta * V");
  for (auto* sub : {srb, opt, val, pert}) add_common(sub);
  opt->add_option("--quiver", o.quiver, "quiver grid size per axis (default 24)");
  val->add_option("--trials", o.trials, "random fields in the spot check (default 100)");
  val->add_option("--seed", o.seed, "spot-check seed (default 0)");
  pert->add_option("--delta", o.delta, "perturbation size");
  pert->add_option("--mean-perturbation", o.mean_perturbation, "choose delta so that delta * mean|V| matches");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  worker_count_override() = o.threads;

  try {
    if (srb->parsed()) return cmd_srb(o);
    if (opt->parsed()) return cmd_optimal(o);
    if (val->parsed()) return cmd_validate(o);
    if (pert->parsed()) return cmd_perturbed_srb(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
