#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "caflow/experiment.hpp"

using namespace caflow;

namespace {

double d(real v) { return static_cast<double>(v); }

std::string field_of(const std::string& text) {
  try {
    validate_config(parse_config(text));
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<none>";
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string cell; std::getline(in, cell, sep);) out.push_back(cell);
  return out;
}

std::string run_to_string(const ExperimentConfig& cfg) {
  std::ostringstream out;
  run_experiment(cfg, out);
  return out.str();
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("caflow_test_" + std::to_string(::getpid()) + "_" + name);
}

ExperimentConfig short_config() {
  ExperimentConfig c = parse_config(R"({"n": 64, "monitor_every": 2, "flow": {"t_end": 0.002}})");
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------
// Random generation

TEST(Rng, PlatformStableSequence) {
  // First output of mt19937_64 with the standard default seed 5489.
  Rng rng(5489);
  EXPECT_EQ(rng.uniform(), static_cast<real>(14514284786278117030ULL >> 11) * 0x1.0p-53L);
  Rng a(99), b(99);
  for (int i = 0; i < 100; ++i) {
    const real u = a.uniform();
    EXPECT_EQ(u, b.uniform());
    EXPECT_GE(u, 0);
    EXPECT_LT(u, 1);
  }
  Rng c(3);
  for (int i = 0; i < 1000; ++i) {
    const int k = c.below(4);
    EXPECT_GE(k, 0);
    EXPECT_LT(k, 4);
  }
}

TEST(RandomFourierSpec, ShapeAndDeterminism) {
  Rng rng(7);
  int seen[5] = {0, 0, 0, 0, 0};
  for (int i = 0; i < 200; ++i) {
    const FourierSpec s = random_fourier_spec(rng);
    ASSERT_GE(s.harmonics.size(), 1u);
    ASSERT_LE(s.harmonics.size(), 4u);
    ++seen[s.harmonics.size()];
    EXPECT_EQ(s.base, 1);
    for (std::size_t k = 0; k < s.harmonics.size(); ++k) {
      const real amp = real{0.1} / static_cast<real>(4 * (k + 1) * (k + 1) - 1);
      EXPECT_LE(std::abs(s.harmonics[k].cos_coeff), amp);
      EXPECT_LE(std::abs(s.harmonics[k].sin_coeff), amp);
    }
  }
  for (int k = 1; k <= 4; ++k) EXPECT_GT(seen[k], 20) << k;
  Rng x(11), y(11);
  EXPECT_EQ(describe(random_fourier_spec(x)), describe(random_fourier_spec(y)));
  EXPECT_THROW(random_fourier_spec(x, 0), InvalidArgument);
}

// ---------------------------------------------------------------------------
// Configuration

TEST(Config, Defaults) {
  const ExperimentConfig c = parse_config("{}");
  EXPECT_EQ(c.n, 256);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.monitor_every, 10);
  EXPECT_FALSE(c.normalize_sl2);
  EXPECT_EQ(c.format, OutputFormat::csv);
  EXPECT_TRUE(c.output_path.empty());
  const auto* f = std::get_if<FourierSpec>(&c.curve);
  ASSERT_NE(f, nullptr);
  ASSERT_EQ(f->harmonics.size(), 1u);
  EXPECT_EQ(f->harmonics[0].cos_coeff, real{0.1});
}

TEST(Config, ParsesEveryField) {
  const ExperimentConfig c = parse_config(R"({
    "curve": {"kind": "ellipse", "a": 2, "b": 0.5},
    "n": 128, "monitor_every": 3, "normalize_sl2": true, "seed": 18446744073709551615,
    "output": "x.jsonl", "format": "jsonl",
    "flow": {"t_end": 3, "dt_init": 1e-6, "dt_min": 1e-13, "dt_max": 0.1, "safety": 0.8, "r_floor": 0.05,
             "stop_energy": 1e-9, "step_tol": 1e-8, "step_rel_tol": 1e-3, "step_err_floor": 1e-13,
             "richardson_levels": 2, "dealias": false, "max_steps": 1000}
  })");
  const auto* e = std::get_if<EllipseSpec>(&c.curve);
  ASSERT_NE(e, nullptr);
  EXPECT_EQ(e->a, 2);
  EXPECT_EQ(e->b, 0.5L);
  EXPECT_EQ(c.n, 128);
  EXPECT_EQ(c.monitor_every, 3);
  EXPECT_TRUE(c.normalize_sl2);
  EXPECT_EQ(c.seed, 18446744073709551615ULL);
  EXPECT_EQ(c.output_path, "x.jsonl");
  EXPECT_EQ(c.format, OutputFormat::jsonl);
  EXPECT_EQ(c.flow.t_end, 3);
  EXPECT_EQ(c.flow.r_floor, static_cast<real>(0.05));
  EXPECT_EQ(c.flow.richardson_levels, 2);
  EXPECT_FALSE(c.flow.dealias);
  EXPECT_EQ(c.flow.max_steps, 1000);
  EXPECT_NO_THROW(validate_config(c));

  const ExperimentConfig f = parse_config(R"({"curve": {"kind": "fourier", "base": 2, "coefficients": [[0.1, 0.02], [0, -0.01]]}})");
  const auto* fs = std::get_if<FourierSpec>(&f.curve);
  ASSERT_NE(fs, nullptr);
  EXPECT_EQ(fs->base, 2);
  ASSERT_EQ(fs->harmonics.size(), 2u);
  EXPECT_EQ(fs->harmonics[1].sin_coeff, static_cast<real>(-0.01));
  EXPECT_NO_THROW(parse_config(R"({"curve": {"kind": "circle", "radius": 3}})"));
}

TEST(Config, ErrorsNameTheField) {
  EXPECT_EQ(field_of("not json"), "<document>");
  EXPECT_EQ(field_of("[1, 2]"), "<document>");
  EXPECT_EQ(field_of(R"({"bogus": 1})"), "bogus");
  EXPECT_EQ(field_of(R"({"n": "big"})"), "n");
  EXPECT_EQ(field_of(R"({"n": 15})"), "n");
  EXPECT_EQ(field_of(R"({"n": 8})"), "n");
  EXPECT_EQ(field_of(R"({"monitor_every": 0})"), "monitor_every");
  EXPECT_EQ(field_of(R"({"seed": -1})"), "seed");
  EXPECT_EQ(field_of(R"({"seed": 1.5})"), "seed");
  EXPECT_EQ(field_of(R"({"format": "xml"})"), "format");
  EXPECT_EQ(field_of(R"({"normalize_sl2": 1})"), "normalize_sl2");
  EXPECT_EQ(field_of(R"({"output": 3})"), "output");
  EXPECT_EQ(field_of(R"({"curve": 3})"), "curve");
  EXPECT_EQ(field_of(R"({"curve": {"radius": 1}})"), "curve.kind");
  EXPECT_EQ(field_of(R"({"curve": {"kind": "square"}})"), "curve.kind");
  EXPECT_EQ(field_of(R"({"curve": {"kind": "circle", "radius": 0}})"), "curve.radius");
  EXPECT_EQ(field_of(R"({"curve": {"kind": "circle", "a": 1}})"), "curve.a");
  EXPECT_EQ(field_of(R"({"curve": {"kind": "ellipse", "a": 2, "b": -1}})"), "curve.b");
  EXPECT_EQ(field_of(R"({"curve": {"kind": "fourier", "base": 0}})"), "curve.base");
  EXPECT_EQ(field_of(R"({"curve": {"kind": "fourier", "coefficients": [[0.1]]}})"), "curve.coefficients[0]");
  EXPECT_EQ(field_of(R"({"curve": {"kind": "fourier", "coefficients": [[0.1, 0], [0, "x"]]}})"),
            "curve.coefficients[1]");
  EXPECT_EQ(field_of(R"({"curve": {"kind": "fourier", "coefficients": 1}})"), "curve.coefficients");
  EXPECT_EQ(field_of(R"({"curve": {"kind": "fourier", "random_harmonics": 0}})"), "curve.random_harmonics");
  EXPECT_EQ(field_of(R"({"curve": {"kind": "fourier", "random_harmonics": 2, "coefficients": []}})"),
            "curve.coefficients");
  EXPECT_EQ(field_of(R"({"flow": {"t_end": "long"}})"), "flow.t_end");
  EXPECT_EQ(field_of(R"({"flow": {"dt": 1}})"), "flow.dt");
  EXPECT_EQ(field_of(R"({"flow": {"dealias": 1}})"), "flow.dealias");
  EXPECT_EQ(field_of(R"({"flow": {"richardson_levels": 2.5}})"), "flow.richardson_levels");
  EXPECT_EQ(field_of(R"({"flow": {"t_end": -1}})"), "flow");
  EXPECT_EQ(field_of(R"({"flow": {"safety": 2}})"), "flow");
  EXPECT_EQ(field_of("{}"), "<none>");
}

TEST(Config, MissingFile) {
  try {
    load_config("/nonexistent/caflow.json");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "--config");
  }
}

TEST(Config, ShippedConfigsParse) {
  for (const char* name : {"standard.json", "circle.json", "ellipse.json", "random.json"}) {
    const std::filesystem::path p = std::filesystem::path(CAFLOW_SOURCE_DIR) / "configs" / name;
    EXPECT_NO_THROW(validate_config(load_config(p.string()))) << name;
  }
}

TEST(Config, SeededHarmonics) {
  ExperimentConfig c = parse_config(R"({"curve": {"kind": "fourier", "base": 1.5, "random_harmonics": 3}, "seed": 5})");
  const std::string a = describe(resolved_curve(c));
  EXPECT_EQ(a, describe(resolved_curve(c)));
  const auto f = std::get<FourierSpec>(resolved_curve(c));
  EXPECT_EQ(f.base, 1.5L);
  EXPECT_LE(f.harmonics.size(), 3u);
  c.seed = 6;
  EXPECT_NE(a, describe(resolved_curve(c)));
}

// ---------------------------------------------------------------------------
// Output

TEST(Output, FormatNumberRoundTrips) {
  for (double v : {0.1, 1.0 / 3, 3.141592653589793, 1e-300, -2.5e17}) {
    EXPECT_EQ(std::strtod(format_number(v).c_str(), nullptr), v);
  }
  EXPECT_EQ(format_number(0.1L), "0.10000000000000001");
}

TEST(Output, CsvSchema) {
  const std::vector<std::string> rows = lines(run_to_string(short_config()));
  ASSERT_GE(rows.size(), 4u);
  EXPECT_EQ(rows[0], "# caflow table schema 1");
  EXPECT_EQ(rows[1],
            "t,dt,area,area_drift_rel,affine_length,energy,energy_n2,energy_n3,santalo,total_curv,min_sigma,max_sigma,"
            "min_r,minkowski_residual,script_L,script_M,script_Q,sup_ht");
  for (std::size_t i = 2; i < rows.size(); ++i) EXPECT_EQ(split(rows[i], ',').size(), 18u);
  EXPECT_EQ(split(rows[2], ',')[0], "0");
}

TEST(Output, JsonLinesMirrorsColumns) {
  ExperimentConfig c = short_config();
  c.format = OutputFormat::jsonl;
  c.normalize_sl2 = true;
  const std::vector<std::string> rows = lines(run_to_string(c));
  ASSERT_GE(rows.size(), 3u);
  const auto header = nlohmann::json::parse(rows[0]);
  EXPECT_EQ(header["schema"], "caflow-table");
  EXPECT_EQ(header["version"], 1);
  const std::vector<std::string> cols = header["columns"];
  EXPECT_EQ(cols, table_columns(true));
  EXPECT_EQ(cols.back(), "norm_phi");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto row = nlohmann::json::parse(rows[i]);
    EXPECT_EQ(row.size(), cols.size());
    for (const std::string& k : cols) EXPECT_TRUE(row.contains(k)) << k;
    EXPECT_LT(row["roundness"].get<double>(), 0.1);
  }
}

TEST(Output, NonFiniteBecomesNullInJson) {
  std::ostringstream out;
  TableWriter w(out, OutputFormat::jsonl, false);
  std::vector<real> row(table_columns(false).size(), 1);
  row[3] = std::numeric_limits<real>::quiet_NaN();
  w.write(row);
  const auto parsed = nlohmann::json::parse(lines(out.str())[1]);
  EXPECT_TRUE(parsed["area_drift_rel"].is_null());
  EXPECT_THROW(w.write({1, 2}), InvalidArgument);
}

// ---------------------------------------------------------------------------
// Experiments

TEST(RunExperiment, CircleAreaColumn) {
  ExperimentConfig c = load_config((std::filesystem::path(CAFLOW_SOURCE_DIR) / "configs" / "circle.json").string());
  std::ostringstream out;
  const ExperimentResult r = run_experiment(c, out);
  EXPECT_EQ(r.trajectory.termination, Termination::reached_t_end);
  const std::vector<std::string> rows = lines(out.str());
  ASSERT_GE(rows.size(), 3u);
  for (std::size_t i = 2; i < rows.size(); ++i) {
    EXPECT_NEAR(std::stod(split(rows[i], ',')[2]), 3.141592653589793, 1e-12);
  }
  const nlohmann::json s = summary_json(c, r);
  EXPECT_EQ(s["termination"], "reached_t_end");
  EXPECT_EQ(s["symmetric"], true);
  EXPECT_NEAR(s["t_final"].get<double>(), 1.0, 1e-14);
  EXPECT_TRUE(s.contains("wall_time_s"));
  EXPECT_TRUE(s["final"].contains("energy"));
}

TEST(RunExperiment, ByteIdenticalReruns) {
  ExperimentConfig c = parse_config(R"({"curve": {"kind": "fourier", "random_harmonics": 4}, "seed": 123, "n": 64,
                                        "monitor_every": 3, "normalize_sl2": true, "flow": {"t_end": 0.003}})");
  const std::string a = run_to_string(c);
  const std::string b = run_to_string(c);
  EXPECT_EQ(a, b);
  c.seed = 124;
  EXPECT_NE(a, run_to_string(c));
}

TEST(RunExperiment, InvalidCurveIsAConfigError) {
  ExperimentConfig c;
  c.curve = FourierSpec{1, std::vector<Harmonic>(20, Harmonic{0.01L, 0})};
  c.n = 32;
  std::ostringstream out;
  try {
    run_experiment(c, out);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "curve");
  }
}

TEST(RunExperiment, ConvexityLossIsDataNotError) {
  ExperimentConfig c = parse_config(R"({"curve": {"kind": "fourier", "coefficients": [[0.5, 0]]}, "n": 128,
                                        "flow": {"t_end": 0.01, "r_floor": 0.11}})");
  std::ostringstream out;
  const ExperimentResult r = run_experiment(c, out);
  EXPECT_EQ(r.trajectory.termination, Termination::convexity_lost);
  EXPECT_EQ(summary_json(c, r)["termination"], "convexity_lost");
}

TEST(RunSweep, ParallelMatchesSequential) {
  std::vector<ExperimentConfig> configs;
  for (int i = 0; i < 3; ++i) {
    ExperimentConfig c = short_config();
    c.curve = FourierSpec{1, {{real{0.02} * (i + 1), 0}}};
    c.output_path = temp_path("sweep" + std::to_string(i) + ".csv").string();
    configs.push_back(c);
  }
  const std::vector<ExperimentResult> results = run_sweep(configs, 2);
  ASSERT_EQ(results.size(), 3u);
  for (std::size_t i = 0; i < configs.size(); ++i) {
    std::ifstream in(configs[i].output_path);
    const std::string file((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    ExperimentConfig seq = configs[i];
    EXPECT_EQ(file, run_to_string(seq)) << i;
    EXPECT_EQ(results[i].trajectory.area0, run(make_curve(seq.curve, seq.n), seq.flow, seq.monitor_every).area0);
    std::filesystem::remove(configs[i].output_path);
  }
  ExperimentConfig no_path = short_config();
  EXPECT_THROW(run_sweep({no_path}, 1), ConfigError);
}

// ---------------------------------------------------------------------------
// Inequality suite

TEST(InequalitySuite, HundredCurvesNoViolations) {
  const InequalityReport r = run_inequality_suite(100, 7);
  EXPECT_EQ(r.curves.size(), 100u);
  EXPECT_EQ(r.violations, 0);
  EXPECT_EQ(r.equality_cases, 0);
  EXPECT_GT(r.min_slack, 0);
  for (const CurveCheck& c : r.curves) EXPECT_TRUE(c.violations.empty()) << describe(c.spec);
}

TEST(InequalitySuite, ZeroCoefficientsAreAnEqualityCase) {
  const CurveCheck c = check_curve(FourierSpec{1, {{0, 0}}}, 256);
  EXPECT_TRUE(c.violations.empty());
  EXPECT_TRUE(c.equality_case);
  EXPECT_LT(std::abs(d(c.slacks.min())), 1e-12);
}

TEST(InequalitySuite, CountMustBePositive) {
  EXPECT_THROW(run_inequality_suite(0, 7), InvalidArgument);
  EXPECT_THROW(run_inequality_suite(-3, 7), InvalidArgument);
}

TEST(InequalitySuite, ViolationsAreReportedWithValues) {
  InequalityTolerances strict;
  strict.totalcur = 0;  // forces the identity check to fail
  const CurveCheck c = check_curve(FourierSpec{1, {{0.05L, 0}}}, 64, strict);
  ASSERT_EQ(c.violations.size(), 1u);
  EXPECT_NE(c.violations[0].find("total-curvature identity residual"), std::string::npos);
}
