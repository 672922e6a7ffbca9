#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "beamupdate/errors.hpp"
#include "beamupdate/harness.hpp"
#include "beamupdate/report.hpp"

using namespace beamupdate;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("beamupdate_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int exit_code_of(const std::string& command) {
  const int status = std::system((command + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string cli() { return BEAMUPDATE_CLI; }

CaseStudy short_case(const std::string& name, SamplerKind kind, int samples, const fs::path& out) {
  CaseStudy cs = builtin_case(name);
  cs.sampler.kind = kind;
  cs.n_samples = samples;
  cs.output_dir = out;
  return cs;
}

}  // namespace

TEST(BuiltinCase, YoungFive) {
  const CaseStudy cs = builtin_case("young5");
  ASSERT_EQ(cs.space.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(cs.space[i].kind, QuantityKind::youngs_modulus);
    EXPECT_EQ(cs.space[i].first_element, 10 * static_cast<int>(i));
    EXPECT_EQ(cs.space[i].last_element, 10 * static_cast<int>(i) + 10);
    EXPECT_DOUBLE_EQ(cs.space[i].initial, 2.4e11);
    EXPECT_DOUBLE_EQ(cs.space[i].sigma, 2e11);
    EXPECT_DOUBLE_EQ(cs.space[i].lower, 1.7e11);
    EXPECT_DOUBLE_EQ(cs.space[i].upper, 2.5e11);
  }
  EXPECT_EQ(cs.data.frequencies_hz, (std::vector<double>{31.9, 197.9, 553, 1082.2, 1781.5}));
  EXPECT_EQ(cs.data.beta, std::vector<double>{1.0});
  EXPECT_EQ(cs.n_samples, 1000);
  EXPECT_EQ(cs.effective_burn_in(), 100);
}

TEST(BuiltinCase, InertiaAreaFour) {
  const CaseStudy cs = builtin_case("inertia_area4");
  ASSERT_EQ(cs.space.size(), 4u);
  const Vector sigma = cs.space.sigma();
  EXPECT_TRUE(sigma.isApprox((Vector(4) << 5e-9, 5e-9, 5e-4, 5e-4).finished()));
  EXPECT_TRUE(cs.space.upper().isApprox((Vector(4) << 7.5e-9, 7.5e-9, 9e-4, 9e-4).finished()));
  EXPECT_TRUE(cs.space.lower().isApprox((Vector(4) << 3.5e-9, 3.5e-9, 4.5e-4, 4.5e-4).finished()));
  EXPECT_DOUBLE_EQ(cs.beam.youngs_modulus_nominal, 2.1e11);
  EXPECT_DOUBLE_EQ(cs.space[0].initial, 5e-9);
  EXPECT_EQ(cs.space[0].last_element, 25);
  EXPECT_EQ(cs.space[1].first_element, 25);
  EXPECT_FALSE(cs.notes.empty());
}

TEST(BuiltinCase, UnknownNameIsUsageError) {
  try {
    builtin_case("bogus");
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("young5"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("inertia_area4"), std::string::npos);
  }
  EXPECT_THROW(load_case("bogus"), UsageError);
}

TEST(Config, SeedOnlyOverride) {
  const CaseStudy base = builtin_case("young5");
  const CaseStudy cs = parse_config_text("base: young5\nrun:\n  seed: 42\n");
  EXPECT_EQ(cs.seed, 42u);
  CaseStudy expected = base;
  expected.seed = 42;
  EXPECT_EQ(dump_config(cs), dump_config(expected));
}

TEST(Config, LowerNotBelowUpperIsNamed) {
  const std::string text =
      "base: young5\n"
      "parameters:\n"
      "  - {name: E, kind: youngs_modulus, elements: [0, 50], sigma: 2e11, lower: 2.5e11, upper: 2.5e11, "
      "initial: 2.5e11}\n";
  try {
    parse_config_text(text);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "parameters[0].lower");
    EXPECT_EQ(e.line(), 3);
  }
}

TEST(Config, VectorBeta) {
  const CaseStudy cs = parse_config_text("base: young5\ndata:\n  beta: [3, 1, 1, 1, 1]\n");
  EXPECT_EQ(cs.data.beta, (std::vector<double>{3, 1, 1, 1, 1}));
  EXPECT_DOUBLE_EQ(cs.data.beta_for(0), 3.0);
  EXPECT_THROW(parse_config_text("base: young5\ndata:\n  beta: [3, 1]\n"), ConfigError);
}

TEST(Config, MalformedNumberNamesKeyAndLine) {
  try {
    parse_config_text("base: young5\nbeam:\n  length: 0.5\n  density: seven\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "beam.density");
    EXPECT_EQ(e.line(), 4);
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos);
  }
}

TEST(Config, MissingKeysAndUnknownKeys) {
  EXPECT_THROW(parse_config_text("name: x\n"), ConfigError);
  try {
    parse_config_text("base: young5\nrun:\n  sedd: 3\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "run.sedd");
  }
  EXPECT_THROW(parse_config_text("base: nope\n"), ConfigError);
  EXPECT_THROW(parse_config_text("base: young5\nsampler:\n  kind: gibbs\n"), InvalidInput);
}

TEST(Config, DumpParseRoundTrip) {
  for (auto name : kBuiltinCaseNames) {
    CaseStudy cs = builtin_case(name);
    cs.seed = 99;
    cs.burn_in = 17;
    cs.sampler.kind = SamplerKind::hmc;
    cs.sampler.gradient.delta = {1.0, 0.5, 2.0, 1.0, 1.0};
    cs.sampler.gradient.delta.resize(cs.space.size(), 1.0);
    cs.data.beta = {1.0, 2.0, 3.0, 4.0, 5.0};
    const CaseStudy back = parse_config_text(dump_config(cs));
    EXPECT_EQ(dump_config(back), dump_config(cs));
    EXPECT_EQ(back.space, cs.space);
    EXPECT_EQ(back.data, cs.data);
    EXPECT_EQ(back.seed, cs.seed);
    EXPECT_EQ(back.burn_in, cs.burn_in);
    EXPECT_TRUE(back.beam.point_masses.size() == 1 && back.beam.point_masses[0].mass == 0.12);
  }
}

TEST(Config, FullCaseWithoutBase) {
  const std::string text = R"(name: bare
beam:
  length: 0.5
  width: 0.06
  thickness: 0.01
  youngs_modulus: 2.1e11
  poisson_ratio: 0.3
  density: 7850
  n_elements: 20
parameters:
  - {name: E, kind: youngs_modulus, elements: [0, 20], sigma: 2e11, lower: 1.5e11, upper: 2.5e11, initial: 2.0e11}
data:
  frequencies_hz: [33.0, 207.0]
  metric: absolute
run:
  samples: 10
)";
  const CaseStudy cs = parse_config_text(text);
  EXPECT_EQ(cs.name, "bare");
  EXPECT_EQ(cs.beam.n_elements, 20);
  EXPECT_TRUE(cs.beam.point_masses.empty());
  EXPECT_EQ(cs.metric, ErrorMetric::absolute_frequency_hz);
  EXPECT_EQ(cs.n_samples, 10);
}

TEST(Report, PercentageError) {
  EXPECT_NEAR(percentage_error(541.1, 553.0), 2.15, 0.005);
  EXPECT_DOUBLE_EQ(percentage_error(553.0, 553.0), 0.0);
  EXPECT_NEAR(percentage_error(564.9, 553.0), 2.15, 0.005);
}

TEST(Report, JsonRoundTripIsExact) {
  Report r;
  r.case_name = "young5";
  r.sampler = "hmc";
  r.seed = 12345678901234ULL;
  r.n_samples = 10;
  r.retained = 10;
  r.burn_in = 1;
  r.metric = "relative";
  r.prior_mean = "zero";
  r.parameters = {{"E1", 2.4e11, 2.1234567890123457e11, 1.0 / 3.0}};
  r.modes = {{1, 31.9, 32.7, 2.5078369905956115, 0.1 + 0.2, std::numeric_limits<double>::quiet_NaN()}};
  r.diagnostics = {0.4, {12.5}, {false}, 1234, 99};
  r.notes = {"note"};
  r.error = "boom";
  Report back = report_from_json(nlohmann::json::parse(to_json(r).dump()));
  EXPECT_TRUE(std::isnan(back.modes[0].updated_error_pct));
  r.modes[0].updated_error_pct = back.modes[0].updated_error_pct = 0.0;
  EXPECT_EQ(back, r);
}

TEST(Report, TableHasThePaperColumns) {
  Report r;
  r.modes = {{3, 553.0, 594.8, 7.55, 541.1, 2.15}};
  const std::string t = format_report_table(r);
  for (const char* col : {"Mode", "Measured", "Initial", "Error", "Updated"}) {
    EXPECT_NE(t.find(col), std::string::npos) << col;
  }
  EXPECT_NE(t.find("541.1"), std::string::npos);
  EXPECT_THROW(emit_report(r, ReportFormat::text_table, "/nonexistent_dir/x/report.txt"), IoError);
}

TEST(RunCase, SingleSampleMeanIsThatSample) {
  const fs::path out = scratch("single");
  CaseStudy cs = short_case("young5", SamplerKind::mh, 1, out);
  const RunResult r = run_case(cs);
  ASSERT_EQ(r.chain.size(), 1);
  EXPECT_EQ(r.report.burn_in, 0);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(r.report.parameters[i].mean, r.chain.samples(0, static_cast<Eigen::Index>(i)));
  }
  const Vector f = make_posterior(cs).model_frequencies(r.chain.samples.row(0).transpose());
  for (int i = 0; i < 5; ++i) EXPECT_EQ(r.report.modes[static_cast<std::size_t>(i)].updated, f(i));
}

TEST(RunCase, ReportIsConsistentWithArtifacts) {
  const fs::path out = scratch("consistency");
  const CaseStudy cs = short_case("young5", SamplerKind::mh, 60, out);
  const RunResult r = run_case(cs);
  for (const char* f : {"chain.csv", "config.yaml", "report.txt", "report.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const Report from_disk = report_from_json(nlohmann::json::parse(slurp(out / "report.json")));
  EXPECT_EQ(from_disk, r.report);

  // Recompute the updated frequencies from the reported posterior mean.
  Vector mean(5);
  for (int i = 0; i < 5; ++i) mean(i) = from_disk.parameters[static_cast<std::size_t>(i)].mean;
  const Vector f = make_posterior(cs).model_frequencies(mean);
  for (const ModeRow& m : from_disk.modes) {
    EXPECT_EQ(m.measured, cs.data.frequencies_hz[static_cast<std::size_t>(m.mode - 1)]);
    EXPECT_EQ(m.updated, f(m.mode - 1));
    EXPECT_DOUBLE_EQ(m.updated_error_pct, 100.0 * std::abs(m.updated - m.measured) / m.measured);
    EXPECT_DOUBLE_EQ(m.initial_error_pct, 100.0 * std::abs(m.initial - m.measured) / m.measured);
  }
  // The chain on disk has N_s rows plus the header, and the echoed config
  // reproduces the case.
  const std::string csv = slurp(out / "chain.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 61);
  EXPECT_EQ(dump_config(parse_config(out / "config.yaml")), dump_config(cs));
}

TEST(RunCase, InitialColumnMatchesTable) {
  const double table[] = {32.7, 209.4, 594.8, 1237.2, 1961.7};
  const RunResult r = execute_case(short_case("young5", SamplerKind::mh, 2, "unused"));
  for (int i : {0, 1, 2, 4}) {
    EXPECT_NEAR(r.report.modes[static_cast<std::size_t>(i)].initial / table[i], 1.0, 0.03) << "mode " << i + 1;
  }
}

TEST(RunCase, ByteIdenticalRepeats) {
  for (SamplerKind k : {SamplerKind::mh, SamplerKind::slice, SamplerKind::hmc}) {
    const fs::path a = scratch("repeat_a");
    const fs::path b = scratch("repeat_b");
    run_case(short_case("inertia_area4", k, 30, a));
    run_case(short_case("inertia_area4", k, 30, b));
    EXPECT_EQ(slurp(a / "chain.csv"), slurp(b / "chain.csv"));
    EXPECT_EQ(slurp(a / "report.json"), slurp(b / "report.json"));
  }
}

TEST(RunCase, SamplerFailureKeepsPartialChain) {
  const fs::path out = scratch("failure");
  CaseStudy cs = short_case("young5", SamplerKind::slice, 200, out);
  cs.sampler.slice.max_shrink = 1;
  const RunResult r = run_case(cs);
  ASSERT_TRUE(r.report.error.has_value());
  EXPECT_LT(r.chain.size(), 200);
  EXPECT_EQ(r.report.retained, r.chain.size());
  EXPECT_TRUE(fs::exists(out / "chain.csv"));
  EXPECT_NE(slurp(out / "report.json").find("\"error\""), std::string::npos);
}

TEST(RunCase, CompareWritesAllSamplers) {
  const fs::path out = scratch("compare");
  const auto results = compare_samplers(short_case("young5", SamplerKind::mh, 5, out));
  ASSERT_EQ(results.size(), 3u);
  for (const char* s : {"mh", "slice", "hmc"}) EXPECT_TRUE(fs::exists(out / s / "report.json")) << s;
  const std::string table = slurp(out / "compare.txt");
  for (const char* s : {"mh", "slice", "hmc"}) EXPECT_NE(table.find(s), std::string::npos);
}

TEST(Cli, ExitCodes) {
  const fs::path out = scratch("cli");
  EXPECT_EQ(exit_code_of(cli() + " run --case young5 --sampler mh --samples 3 --seed 2 --out " + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "report.json"));
  EXPECT_EQ(exit_code_of(cli() + " modes --case inertia_area4"), 0);
  EXPECT_EQ(exit_code_of(cli() + " run --case bogus --samples 3 --out " + out.string()), 64);
  EXPECT_NE(exit_code_of(cli() + " run --case young5 --sampler gibbs"), 0);
  EXPECT_NE(exit_code_of(cli() + " run --case young5 --samples 0 --out " + out.string()), 0);
  EXPECT_NE(exit_code_of(cli()), 0);

  const fs::path bad = out / "bad.yaml";
  std::ofstream(bad) << "base: young5\nbeam:\n  density: seven\n";
  EXPECT_EQ(exit_code_of(cli() + " run --case " + bad.string() + " --out " + out.string()), 1);

  const fs::path failing = out / "failing.yaml";
  std::ofstream(failing) << "base: young5\nsampler:\n  kind: slice\n  slice:\n    max_shrink: 1\n";
  EXPECT_EQ(exit_code_of(cli() + " run --case " + failing.string() + " --sampler slice --samples 200 --out " +
                         (out / "f").string()),
            2);
}
