// Command-line driver: simulate, check-inequalities, analyze.
//
// Exit codes: 0 success (any flow termination reason counts), 1 usage or
// configuration error, 2 internal invariant violation.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "caflow/experiment.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 1;
constexpr int exit_invariant = 2;

struct SimulateArgs {
  std::string config;
  std::optional<int> n;
  std::optional<double> t_end;
  std::optional<std::string> output;
  std::optional<std::string> format;
  std::optional<std::uint64_t> seed;
  std::optional<int> monitor_every;
  bool normalize_sl2 = false;
};

void warn_if_asymmetric(const caflow::CurveDiagnostics& d) {
  if (!d.origin_symmetric()) {
    std::fprintf(stderr,
                 "warning: initial curve is not origin-symmetric (defect %.3g); convergence results assume "
                 "symmetry and inequalities use the origin as centre\n",
                 static_cast<double>(d.symmetry_defect));
  }
}

int simulate(const SimulateArgs& a) {
  caflow::ExperimentConfig cfg = caflow::load_config(a.config);
  if (a.n) cfg.n = *a.n;
  if (a.t_end) cfg.flow.t_end = *a.t_end;
  if (a.output) cfg.output_path = *a.output;
  if (a.format) cfg.format = caflow::parse_format(*a.format);
  if (a.seed) cfg.seed = *a.seed;
  if (a.monitor_every) cfg.monitor_every = *a.monitor_every;
  if (a.normalize_sl2) cfg.normalize_sl2 = true;

  std::ofstream file;
  if (!cfg.output_path.empty()) {
    file.open(cfg.output_path);
    if (!file) throw caflow::ConfigError("output", "cannot write '" + cfg.output_path + "'");
  }
  std::ostream& table = cfg.output_path.empty() ? std::cout : file;
  const caflow::ExperimentResult result = caflow::run_experiment(cfg, table);
  warn_if_asymmetric(result.initial_diagnostics);

  const std::string summary = caflow::summary_json(cfg, result).dump(2) + "\n";
  if (cfg.output_path.empty()) {
    std::cerr << summary;
  } else {
    std::ofstream out(cfg.output_path + ".summary.json");
    if (!out) throw caflow::ConfigError("output", "cannot write summary next to '" + cfg.output_path + "'");
    out << summary;
    std::fprintf(stderr, "%s: %s after %ld steps, t = %.6g\n", cfg.output_path.c_str(),
                 caflow::to_string(result.trajectory.termination), result.trajectory.steps,
                 static_cast<double>(result.trajectory.final_record().t));
  }
  // Records must be finite; anything else is a solver defect.
  for (const auto& rec : result.trajectory.records) {
    if (!std::isfinite(rec.invariants.energy) || !std::isfinite(rec.invariants.area)) {
      std::fprintf(stderr, "error: non-finite invariants at t = %.17g\n", static_cast<double>(rec.t));
      return exit_invariant;
    }
  }
  return exit_ok;
}

int check_inequalities(int count, std::uint64_t seed, int n) {
  if (count < 1) {
    std::fprintf(stderr, "error: --count must be >= 1\n");
    return exit_usage;
  }
  const caflow::InequalityReport report = caflow::run_inequality_suite(count, seed, n);
  for (std::size_t i = 0; i < report.curves.size(); ++i) {
    const caflow::CurveCheck& c = report.curves[i];
    for (const std::string& v : c.violations) {
      std::printf("VIOLATION curve %zu %s: %s\n", i, caflow::describe(c.spec).c_str(), v.c_str());
    }
    if (c.equality_case) std::printf("equality case curve %zu %s\n", i, caflow::describe(c.spec).c_str());
  }
  std::printf("checked %d curves (seed %llu, n = %d): %d with violations, %d equality cases, min slack %.3e\n",
              count, static_cast<unsigned long long>(seed), n, report.violations, report.equality_cases,
              static_cast<double>(report.min_slack));
  return report.violations == 0 ? exit_ok : exit_invariant;
}

int analyze(const std::string& path, std::optional<int> n, std::optional<std::uint64_t> seed) {
  caflow::ExperimentConfig cfg = caflow::load_config(path);
  if (n) cfg.n = *n;
  if (seed) cfg.seed = *seed;
  caflow::validate_config(cfg);
  const caflow::CurveSpec spec = caflow::resolved_curve(cfg);
  std::optional<caflow::SupportCurve> curve;
  try {
    curve.emplace(caflow::make_curve(spec, cfg.n));
  } catch (const caflow::Error& e) {
    throw caflow::ConfigError("curve", e.what());
  }
  const caflow::CurveDiagnostics diag = caflow::validate(*curve);
  warn_if_asymmetric(diag);
  const caflow::AffineAnalysis a = caflow::analyze(*curve);
  const caflow::InequalitySlacks slacks = caflow::check_inequalities(a.invariants);
  const caflow::InfSupCheck infsup = caflow::check_infsup(a.invariants, a.state);
  const caflow::OscillationBounds osc = caflow::check_oscillation_bounds(a.invariants, a.state);
  const caflow::ScriptQuantities script = caflow::script_quantities(a.invariants, a.invariants.script_L);
  const caflow::SigmaBounds bounds = caflow::sigma_bounds_from_initial(a.invariants.area, a.invariants.script_L);
  const caflow::NormalizationResult norm = caflow::normalize(*curve);
  auto d = [](caflow::real v) { return static_cast<double>(v); };
  nlohmann::json out = {
      {"curve", caflow::describe(spec)},
      {"n", cfg.n},
      {"diagnostics",
       {{"min_h", d(diag.min_h)}, {"min_r", d(diag.min_r)}, {"mean_r", d(diag.mean_r)},
        {"symmetry_defect", d(diag.symmetry_defect)}}},
      {"invariants", caflow::invariants_json(a.invariants)},
      {"structure_residual", d(caflow::structure_residual(a.state))},
      {"slacks",
       {{"isoperimetric", d(slacks.isoperimetric)},
        {"blaschke_santalo", d(slacks.blaschke_santalo)},
        {"aleksandrov_fenchel", d(slacks.aleksandrov_fenchel)}}},
      {"infsup",
       {{"target", d(infsup.target)}, {"lower_margin", d(infsup.lower_margin)},
        {"upper_margin", d(infsup.upper_margin)}}},
      {"totalcur_residual", d(caflow::check_totalcur_identity(a.state))},
      {"oscillation_bounds",
       {{"lower", d(osc.lower_bound)}, {"upper", d(osc.upper_bound)}, {"lower_margin", d(osc.lower_margin)},
        {"upper_margin", d(osc.upper_margin)}}},
      {"script", {{"L", d(script.L)}, {"M", d(script.M)}, {"Q", d(script.Q)}, {"B", d(script.B)}}},
      {"flow_sigma_bounds", {{"lower", d(bounds.lower)}, {"upper", d(bounds.upper)}}},
      {"sup_ht", d(caflow::rhs(*curve, cfg.flow.dealias).sup_norm())},
      {"normalization",
       {{"m", d(norm.m)}, {"phi", d(norm.phi)}, {"roundness", d(norm.roundness)},
        {"euclidean_length", d(norm.euclidean_length)}, {"input_length", d(norm.input_length)}}}};
  std::cout << out.dump(2) << "\n";
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Centro-equiaffine area-preserving curve flow: simulator and verifier"};
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* simulate_cmd = app.add_subcommand("simulate", "integrate the flow and write a time series table");
  simulate_cmd->add_option("--config", sim.config, "JSON config file")->required();
  simulate_cmd->add_option("--n", sim.n, "grid size (even, >= 16)");
  simulate_cmd->add_option("--t-end", sim.t_end, "final time");
  simulate_cmd->add_option("--output", sim.output, "table path (default: stdout)");
  simulate_cmd->add_option("--format", sim.format, "csv or jsonl");
  simulate_cmd->add_flag("--normalize-sl2", sim.normalize_sl2, "add SL(2)-normalized roundness columns");
  simulate_cmd->add_option("--seed", sim.seed, "seed for random curve harmonics");
  simulate_cmd->add_option("--monitor-every", sim.monitor_every, "record every k accepted steps");

  int count = 100;
  std::uint64_t ineq_seed = 7;
  int ineq_n = 256;
  CLI::App* ineq_cmd = app.add_subcommand("check-inequalities", "verify the inequalities on random curves");
  ineq_cmd->add_option("--count", count, "number of random curves");
  ineq_cmd->add_option("--seed", ineq_seed, "generator seed");
  ineq_cmd->add_option("--n", ineq_n, "grid size");

  std::string analyze_config;
  std::optional<int> analyze_n;
  std::optional<std::uint64_t> analyze_seed;
  CLI::App* analyze_cmd = app.add_subcommand("analyze", "dump invariants of the configured initial curve");
  analyze_cmd->add_option("--config", analyze_config, "JSON config file")->required();
  analyze_cmd->add_option("--n", analyze_n, "grid size");
  analyze_cmd->add_option("--seed", analyze_seed, "seed for random curve harmonics");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_usage;
  }

  try {
    if (*simulate_cmd) return simulate(sim);
    if (*ineq_cmd) return check_inequalities(count, ineq_seed, ineq_n);
    if (*analyze_cmd) return analyze(analyze_config, analyze_n, analyze_seed);
  } catch (const caflow::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_usage;
  } catch (const caflow::InvalidArgument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_usage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return exit_invariant;
  }
  return exit_usage;
}
