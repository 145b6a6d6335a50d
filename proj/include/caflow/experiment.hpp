#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <future>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <json.hpp>

#include "caflow/flow.hpp"
#include "caflow/sl2.hpp"

/// \file experiment.hpp
/// Configuration, seeded random curves, table output and the batch
/// inequality suite behind the command-line tool.

namespace caflow {

class ConfigError : public Error {
public:
  ConfigError(const std::string& field, const std::string& what)
      : Error("config field '" + field + "': " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

// ---------------------------------------------------------------------------
// Random curves
//
// The generator is part of the output contract: std::mt19937_64 (its output
// sequence is fixed by the standard), uniforms as (x >> 11) * 2^-53, and no
// std distribution objects, whose algorithms are implementation-defined.

class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  /// Uniform on [0, 1).
  real uniform() { return static_cast<real>(engine_() >> 11) * 0x1.0p-53L; }
  /// Uniform on [-1, 1).
  real symmetric() { return 2 * uniform() - 1; }
  int below(int bound) { return std::min(bound - 1, static_cast<int>(uniform() * bound)); }

private:
  std::mt19937_64 engine_;
};

/// base 1, 1..max_harmonics even harmonics with coefficients uniform in
/// +-0.1 / (4k^2 - 1) for cos 2k theta and sin 2k theta.
inline FourierSpec random_fourier_spec(Rng& rng, int max_harmonics = 4) {
  if (max_harmonics < 1) throw InvalidArgument("max_harmonics must be >= 1");
  FourierSpec spec;
  spec.base = 1;
  const int count = 1 + rng.below(max_harmonics);
  for (int k = 1; k <= count; ++k) {
    const real amp = real{0.1} / static_cast<real>(4 * k * k - 1);
    const real a = rng.symmetric() * amp;
    const real b = rng.symmetric() * amp;
    spec.harmonics.push_back({a, b});
  }
  return spec;
}

inline std::string describe(const CurveSpec& spec) {
  char buf[64];
  return std::visit(
      [&](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, CircleSpec>) {
          std::snprintf(buf, sizeof buf, "circle(R=%.17g)", static_cast<double>(s.radius));
          return buf;
        } else if constexpr (std::is_same_v<T, EllipseSpec>) {
          std::snprintf(buf, sizeof buf, "ellipse(a=%.17g, b=%.17g)", static_cast<double>(s.a),
                        static_cast<double>(s.b));
          return buf;
        } else {
          std::snprintf(buf, sizeof buf, "fourier(base=%.17g", static_cast<double>(s.base));
          std::string out = buf;
          for (std::size_t k = 0; k < s.harmonics.size(); ++k) {
            std::snprintf(buf, sizeof buf, ", [%.17g, %.17g]", static_cast<double>(s.harmonics[k].cos_coeff),
                          static_cast<double>(s.harmonics[k].sin_coeff));
            out += buf;
          }
          return out + ")";
        }
      },
      spec);
}

// ---------------------------------------------------------------------------
// Configuration

enum class OutputFormat { csv, jsonl };

struct ExperimentConfig {
  CurveSpec curve = FourierSpec{1, {{real{0.1}, 0}}};
  /// When > 0 the fourier harmonics are drawn from `seed` at run time
  /// (random_fourier_spec with this many harmonics at most).
  int random_harmonics = 0;
  int n = 256;
  FlowParams flow{};
  int monitor_every = 10;
  bool normalize_sl2 = false;
  std::uint64_t seed = 42;
  std::string output_path;  ///< empty: standard output
  OutputFormat format = OutputFormat::csv;
};

namespace detail {

using json = nlohmann::json;

inline real number(const json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError(field, "expected a number");
  return static_cast<real>(j.get<double>());
}

inline long long integer(const json& j, const std::string& field) {
  if (!j.is_number_integer()) throw ConfigError(field, "expected an integer");
  return j.get<long long>();
}

inline void reject_unknown(const json& obj, const std::string& prefix, std::initializer_list<const char*> known) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError(prefix + it.key(), "unknown key");
  }
}

inline CurveSpec parse_curve(const json& j, int& random_harmonics) {
  if (!j.is_object()) throw ConfigError("curve", "expected an object");
  if (!j.contains("kind") || !j["kind"].is_string()) throw ConfigError("curve.kind", "expected a string");
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "circle") {
    reject_unknown(j, "curve.", {"kind", "radius"});
    CircleSpec c;
    if (j.contains("radius")) c.radius = number(j["radius"], "curve.radius");
    if (!(c.radius > 0)) throw ConfigError("curve.radius", "must be positive");
    return c;
  }
  if (kind == "ellipse") {
    reject_unknown(j, "curve.", {"kind", "a", "b"});
    EllipseSpec e;
    if (j.contains("a")) e.a = number(j["a"], "curve.a");
    if (j.contains("b")) e.b = number(j["b"], "curve.b");
    if (!(e.a > 0)) throw ConfigError("curve.a", "must be positive");
    if (!(e.b > 0)) throw ConfigError("curve.b", "must be positive");
    return e;
  }
  if (kind == "fourier") {
    reject_unknown(j, "curve.", {"kind", "base", "coefficients", "random_harmonics"});
    if (j.contains("coefficients") && j.contains("random_harmonics")) {
      throw ConfigError("curve.coefficients", "give either coefficients or random_harmonics, not both");
    }
    FourierSpec f;
    if (j.contains("random_harmonics")) {
      const long long m = integer(j["random_harmonics"], "curve.random_harmonics");
      if (m < 1 || m > 64) throw ConfigError("curve.random_harmonics", "must lie in 1..64");
      random_harmonics = static_cast<int>(m);
    }
    if (j.contains("base")) f.base = number(j["base"], "curve.base");
    if (!(f.base > 0)) throw ConfigError("curve.base", "must be positive");
    if (j.contains("coefficients")) {
      const json& cs = j["coefficients"];
      if (!cs.is_array()) throw ConfigError("curve.coefficients", "expected an array of [cos, sin] pairs");
      for (std::size_t k = 0; k < cs.size(); ++k) {
        const std::string field = "curve.coefficients[" + std::to_string(k) + "]";
        if (!cs[k].is_array() || cs[k].size() != 2) throw ConfigError(field, "expected a [cos, sin] pair");
        f.harmonics.push_back({number(cs[k][0], field), number(cs[k][1], field)});
      }
    }
    return f;
  }
  throw ConfigError("curve.kind", "expected circle, ellipse or fourier, got '" + kind + "'");
}

inline void parse_flow(const json& j, FlowParams& p) {
  if (!j.is_object()) throw ConfigError("flow", "expected an object");
  reject_unknown(j, "flow.",
                 {"t_end", "dt_init", "dt_min", "dt_max", "safety", "r_floor", "stop_energy", "step_tol",
                  "step_rel_tol", "step_err_floor", "richardson_levels", "dealias", "max_steps"});
  auto set = [&](const char* key, real& out) {
    if (j.contains(key)) out = number(j[key], std::string("flow.") + key);
  };
  set("t_end", p.t_end);
  set("dt_init", p.dt_init);
  set("dt_min", p.dt_min);
  set("dt_max", p.dt_max);
  set("safety", p.safety);
  set("r_floor", p.r_floor);
  set("stop_energy", p.stop_energy);
  set("step_tol", p.step_tol);
  set("step_rel_tol", p.step_rel_tol);
  set("step_err_floor", p.step_err_floor);
  if (j.contains("richardson_levels")) {
    p.richardson_levels = static_cast<int>(integer(j["richardson_levels"], "flow.richardson_levels"));
  }
  if (j.contains("max_steps")) p.max_steps = static_cast<long>(integer(j["max_steps"], "flow.max_steps"));
  if (j.contains("dealias")) {
    if (!j["dealias"].is_boolean()) throw ConfigError("flow.dealias", "expected a boolean");
    p.dealias = j["dealias"].get<bool>();
  }
}

}  // namespace detail

inline OutputFormat parse_format(const std::string& s) {
  if (s == "csv") return OutputFormat::csv;
  if (s == "jsonl") return OutputFormat::jsonl;
  throw ConfigError("format", "expected csv or jsonl, got '" + s + "'");
}

/// Parses a JSON config document. Keys: curve, n, flow, monitor_every,
/// normalize_sl2, seed, output, format. Unknown keys are errors.
inline ExperimentConfig parse_config(const std::string& text) {
  using detail::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<document>", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("<document>", "expected a JSON object");
  detail::reject_unknown(j, "", {"curve", "n", "flow", "monitor_every", "normalize_sl2", "seed", "output", "format"});
  ExperimentConfig c;
  if (j.contains("seed")) {
    // Non-negative literals parse as unsigned; anything else is rejected.
    if (!j["seed"].is_number_unsigned()) throw ConfigError("seed", "expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("curve")) c.curve = detail::parse_curve(j["curve"], c.random_harmonics);
  if (j.contains("n")) c.n = static_cast<int>(detail::integer(j["n"], "n"));
  if (j.contains("flow")) detail::parse_flow(j["flow"], c.flow);
  if (j.contains("monitor_every")) c.monitor_every = static_cast<int>(detail::integer(j["monitor_every"], "monitor_every"));
  if (j.contains("normalize_sl2")) {
    if (!j["normalize_sl2"].is_boolean()) throw ConfigError("normalize_sl2", "expected a boolean");
    c.normalize_sl2 = j["normalize_sl2"].get<bool>();
  }
  if (j.contains("output")) {
    if (!j["output"].is_string()) throw ConfigError("output", "expected a string");
    c.output_path = j["output"].get<std::string>();
  }
  if (j.contains("format")) {
    if (!j["format"].is_string()) throw ConfigError("format", "expected a string");
    c.format = parse_format(j["format"].get<std::string>());
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot read '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text);
}

/// The curve spec with any seeded harmonics filled in.
inline CurveSpec resolved_curve(const ExperimentConfig& c) {
  if (c.random_harmonics <= 0) return c.curve;
  Rng rng(c.seed);
  FourierSpec f = random_fourier_spec(rng, c.random_harmonics);
  if (const auto* given = std::get_if<FourierSpec>(&c.curve)) f.base = given->base;
  return f;
}

/// Checks the cross-field invariants; throws ConfigError naming the field.
inline void validate_config(const ExperimentConfig& c) {
  if (c.n < 16 || c.n % 2 != 0) throw ConfigError("n", "must be even and >= 16");
  if (c.monitor_every < 1) throw ConfigError("monitor_every", "must be >= 1");
  try {
    c.flow.check();
  } catch (const InvalidArgument& e) {
    throw ConfigError("flow", e.what());
  }
}

// ---------------------------------------------------------------------------
// Table output

inline constexpr int table_schema_version = 1;

inline std::vector<std::string> table_columns(bool normalize_sl2) {
  std::vector<std::string> cols = {"t",          "dt",         "area",      "area_drift_rel", "affine_length",
                                   "energy",     "energy_n2",  "energy_n3", "santalo",        "total_curv",
                                   "min_sigma",  "max_sigma",  "min_r",     "minkowski_residual",
                                   "script_L",   "script_M",   "script_Q",  "sup_ht"};
  if (normalize_sl2) {
    cols.push_back("roundness");
    cols.push_back("norm_m");
    cols.push_back("norm_phi");
  }
  return cols;
}

/// %.17g of the value rounded to double: round-trip exact for double readers.
inline std::string format_number(real v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(v));
  return buf;
}

inline std::vector<real> table_row(const MonitorRecord& rec, const std::optional<NormalizationResult>& norm) {
  const ScalarInvariants& inv = rec.invariants;
  std::vector<real> row = {rec.t,           rec.dt,         inv.area,          rec.area_drift_rel, inv.affine_length,
                           inv.energy,      inv.energy_n2,  inv.energy_n3,     inv.santalo,        inv.total_curv,
                           inv.min_sigma,   inv.max_sigma,  inv.min_r,         inv.minkowski_residual,
                           rec.script.L,    rec.script.M,   rec.script.Q,      rec.sup_ht};
  if (norm) {
    row.push_back(norm->roundness);
    row.push_back(norm->m);
    row.push_back(norm->phi);
  }
  return row;
}

class TableWriter {
public:
  TableWriter(std::ostream& out, OutputFormat format, bool normalize_sl2)
      : out_(out), format_(format), columns_(table_columns(normalize_sl2)) {
    if (format_ == OutputFormat::csv) {
      out_ << "# caflow table schema " << table_schema_version << "\n";
      for (std::size_t i = 0; i < columns_.size(); ++i) out_ << (i ? "," : "") << columns_[i];
      out_ << "\n";
    } else {
      out_ << "{\"schema\":\"caflow-table\",\"version\":" << table_schema_version << ",\"columns\":[";
      for (std::size_t i = 0; i < columns_.size(); ++i) out_ << (i ? "," : "") << '"' << columns_[i] << '"';
      out_ << "]}\n";
    }
  }

  void write(const std::vector<real>& row) {
    if (row.size() != columns_.size()) throw InvalidArgument("row width does not match table columns");
    if (format_ == OutputFormat::csv) {
      for (std::size_t i = 0; i < row.size(); ++i) out_ << (i ? "," : "") << format_number(row[i]);
    } else {
      out_ << '{';
      for (std::size_t i = 0; i < row.size(); ++i) {
        out_ << (i ? "," : "") << '"' << columns_[i] << "\":";
        // JSON has no literal for inf/nan.
        out_ << (std::isfinite(row[i]) ? format_number(row[i]) : std::string("null"));
      }
      out_ << '}';
    }
    out_ << '\n';
  }

private:
  std::ostream& out_;
  OutputFormat format_;
  std::vector<std::string> columns_;
};

// ---------------------------------------------------------------------------
// Experiments

struct ExperimentResult {
  FlowTrajectory trajectory;
  CurveDiagnostics initial_diagnostics;
  std::optional<NormalizationResult> final_normalization;
  double wall_seconds = 0;
};

/// Integrates the configured curve and streams the table to `table`.
/// Throws ConfigError for invalid configuration (including an initial curve
/// that is not strictly convex); flow terminations are data, not errors.
inline ExperimentResult run_experiment(const ExperimentConfig& config, std::ostream& table) {
  validate_config(config);
  const auto start = std::chrono::steady_clock::now();
  std::optional<SupportCurve> curve0;
  try {
    curve0.emplace(make_curve(resolved_curve(config), config.n));
  } catch (const Error& e) {
    throw ConfigError("curve", e.what());
  }
  ExperimentResult result{run(*curve0, config.flow, config.monitor_every), validate(*curve0), std::nullopt, 0};
  TableWriter writer(table, config.format, config.normalize_sl2);
  const FlowTrajectory& tr = result.trajectory;
  for (std::size_t i = 0; i < tr.records.size(); ++i) {
    std::optional<NormalizationResult> norm;
    if (config.normalize_sl2) norm = normalize(tr.snapshots[i]);
    writer.write(table_row(tr.records[i], norm));
    if (i + 1 == tr.records.size()) result.final_normalization = std::move(norm);
  }
  table.flush();
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

inline nlohmann::json invariants_json(const ScalarInvariants& inv) {
  auto d = [](real v) { return static_cast<double>(v); };
  return {{"area", d(inv.area)},
          {"affine_length", d(inv.affine_length)},
          {"energy", d(inv.energy)},
          {"energy_n2", d(inv.energy_n2)},
          {"energy_n3", d(inv.energy_n3)},
          {"santalo", d(inv.santalo)},
          {"total_curv", d(inv.total_curv)},
          {"inv_sigma", d(inv.inv_sigma)},
          {"log_oscillation", d(inv.log_oscillation)},
          {"script_L", d(inv.script_L)},
          {"script_M", d(inv.script_M)},
          {"minkowski_residual", d(inv.minkowski_residual)},
          {"min_sigma", d(inv.min_sigma)},
          {"max_sigma", d(inv.max_sigma)},
          {"min_r", d(inv.min_r)},
          {"mean_r", d(inv.mean_r)}};
}

inline nlohmann::json summary_json(const ExperimentConfig& config, const ExperimentResult& r) {
  const FlowTrajectory& tr = r.trajectory;
  const MonitorRecord& last = tr.final_record();
  nlohmann::json s = {{"schema", "caflow-summary"},
                      {"version", table_schema_version},
                      {"curve", describe(resolved_curve(config))},
                      {"n", config.n},
                      {"seed", config.seed},
                      {"symmetric", r.initial_diagnostics.origin_symmetric()},
                      {"termination", to_string(tr.termination)},
                      {"t_final", static_cast<double>(last.t)},
                      {"steps", tr.steps},
                      {"rejected_steps", tr.rejected_steps},
                      {"records", tr.records.size()},
                      {"area0", static_cast<double>(tr.area0)},
                      {"script_L0", static_cast<double>(tr.script_L0)},
                      {"B", static_cast<double>(last.script.B)},
                      {"final", invariants_json(last.invariants)},
                      {"final_sup_ht", static_cast<double>(last.sup_ht)},
                      {"sigma_limit", static_cast<double>(sigma_limit_value(tr.area0))},
                      {"wall_time_s", r.wall_seconds}};
  if (r.final_normalization) {
    s["final_normalization"] = {{"m", static_cast<double>(r.final_normalization->m)},
                                {"phi", static_cast<double>(r.final_normalization->phi)},
                                {"roundness", static_cast<double>(r.final_normalization->roundness)},
                                {"euclidean_length", static_cast<double>(r.final_normalization->euclidean_length)}};
  }
  return s;
}

/// Runs independent experiments on up to `workers` threads. Each config owns
/// its output path; results come back in input order.
inline std::vector<ExperimentResult> run_sweep(const std::vector<ExperimentConfig>& configs, unsigned workers) {
  if (workers == 0) workers = 1;
  std::vector<ExperimentResult> out;
  out.reserve(configs.size());
  for (std::size_t begin = 0; begin < configs.size(); begin += workers) {
    std::vector<std::future<ExperimentResult>> batch;
    for (std::size_t i = begin; i < std::min(configs.size(), begin + workers); ++i) {
      batch.push_back(std::async(std::launch::async, [&config = configs[i]] {
        if (config.output_path.empty()) throw ConfigError("output", "sweep experiments need an output path");
        std::ofstream file(config.output_path);
        if (!file) throw ConfigError("output", "cannot write '" + config.output_path + "'");
        return run_experiment(config, file);
      }));
    }
    for (auto& f : batch) out.push_back(f.get());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Inequality suite

struct CurveCheck {
  FourierSpec spec;
  InequalitySlacks slacks;
  InfSupCheck infsup;
  real totalcur_residual = 0;
  OscillationBounds oscillation;
  std::vector<std::string> violations;
  bool equality_case = false;
};

struct InequalityTolerances {
  real slack = 1e-10;
  real infsup = 1e-10;
  real totalcur = 1e-7;
  real oscillation = 1e-10;
  real equality = 1e-9;
};

inline CurveCheck check_curve(const FourierSpec& spec, int n, const InequalityTolerances& tol = {}) {
  const AffineAnalysis a = analyze(make_fourier(spec, n));
  CurveCheck c;
  c.spec = spec;
  c.slacks = check_inequalities(a.invariants);
  c.infsup = check_infsup(a.invariants, a.state);
  c.totalcur_residual = check_totalcur_identity(a.state);
  c.oscillation = check_oscillation_bounds(a.invariants, a.state);
  auto flag = [&](bool bad, const std::string& what, real value) {
    if (bad) c.violations.push_back(what + " = " + format_number(value));
  };
  flag(c.slacks.isoperimetric < -tol.slack, "isoperimetric slack", c.slacks.isoperimetric);
  flag(c.slacks.blaschke_santalo < -tol.slack, "blaschke_santalo slack", c.slacks.blaschke_santalo);
  flag(c.slacks.aleksandrov_fenchel < -tol.slack, "aleksandrov_fenchel slack", c.slacks.aleksandrov_fenchel);
  flag(c.infsup.lower_margin < -tol.infsup, "inf-sup lower margin", c.infsup.lower_margin);
  flag(c.infsup.upper_margin < -tol.infsup, "inf-sup upper margin", c.infsup.upper_margin);
  flag(!(c.totalcur_residual < tol.totalcur), "total-curvature identity residual", c.totalcur_residual);
  flag(c.oscillation.lower_margin < -tol.oscillation, "oscillation lower margin", c.oscillation.lower_margin);
  flag(c.oscillation.upper_margin < -tol.oscillation, "oscillation upper margin", c.oscillation.upper_margin);
  c.equality_case = c.slacks.equality(tol.equality);
  return c;
}

struct InequalityReport {
  std::vector<CurveCheck> curves;
  int violations = 0;
  int equality_cases = 0;
  real min_slack = 0;
};

inline InequalityReport run_inequality_suite(int count, std::uint64_t seed, int n = 256) {
  if (count < 1) throw InvalidArgument("count must be >= 1");
  Rng rng(seed);
  InequalityReport report;
  report.min_slack = std::numeric_limits<real>::infinity();
  for (int i = 0; i < count; ++i) {
    CurveCheck c = check_curve(random_fourier_spec(rng), n);
    report.violations += c.violations.empty() ? 0 : 1;
    report.equality_cases += c.equality_case ? 1 : 0;
    report.min_slack = std::min(report.min_slack, c.slacks.min());
    report.curves.push_back(std::move(c));
  }
  return report;
}

}  // namespace caflow
