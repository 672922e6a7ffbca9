// beamupdate: Bayesian model updating of the cantilever test beam.
//
//   beamupdate run --case young5 --sampler hmc --samples 1000 --seed 7 --out runs/hmc
//   beamupdate compare --case inertia_area4 --samples 1000 --seed 7 --out runs/cmp
//   beamupdate modes --case young5

#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "beamupdate/errors.hpp"
#include "beamupdate/harness.hpp"

namespace bu = beamupdate;

namespace {

struct CommonOptions {
  std::string case_name;
  std::optional<int> samples;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> metric;
  std::optional<std::string> prior_mean;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_out) {
  cmd->add_option("--case", o.case_name, "Builtin case (young5, inertia_area4) or path to a YAML case file")
      ->required();
  cmd->add_option("--samples", o.samples, "Number of retained samples N_s");
  cmd->add_option("--seed", o.seed, "RNG seed");
  if (with_out) cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--metric", o.metric, "Frequency error metric")->check(CLI::IsMember({"relative", "absolute"}));
  cmd->add_option("--prior-mean", o.prior_mean, "Prior centre")->check(CLI::IsMember({"zero", "nominal"}));
}

bu::CaseStudy resolve(const CommonOptions& o) {
  bu::CaseStudy cs = bu::load_case(o.case_name);
  if (o.samples) cs.n_samples = *o.samples;
  if (o.seed) cs.seed = *o.seed;
  if (o.out) cs.output_dir = *o.out;
  if (o.metric) cs.metric = bu::error_metric_from_string(*o.metric);
  if (o.prior_mean) cs.prior_mean = bu::prior_mean_from_string(*o.prior_mean);
  // The builtin burn-in follows N_s unless the case file pinned it.
  if (o.samples && cs.burn_in && *cs.burn_in >= cs.n_samples) cs.burn_in.reset();
  cs.validate();
  return cs;
}

int print_modes(const bu::CaseStudy& cs) {
  const bu::PosteriorDensity pd = bu::make_posterior(cs);
  const bu::Vector f = pd.model_frequencies(cs.space.initial());
  std::printf("%-5s %14s %14s %9s\n", "Mode", "Measured (Hz)", "Model (Hz)", "Error (%)");
  for (int i = 0; i < cs.data.n_modes(); ++i) {
    const double m = cs.data.frequencies_hz[static_cast<std::size_t>(i)];
    std::printf("%-5d %14.2f %14.2f %9.2f\n", i + 1, m, f(i), bu::percentage_error(f(i), m));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian finite element model updating of a cantilever beam"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  std::string sampler = "mh";
  auto* run = app.add_subcommand("run", "Sample one case with one sampler and write chain + report");
  add_common(run, run_opts, true);
  run->add_option("--sampler", sampler, "Sampler")->check(CLI::IsMember({"mh", "slice", "hmc"}));

  CommonOptions cmp_opts;
  auto* compare = app.add_subcommand("compare", "Run mh, slice and hmc on one case and tabulate errors");
  add_common(compare, cmp_opts, true);

  CommonOptions modes_opts;
  auto* modes = app.add_subcommand("modes", "Print the model frequencies at the initial parameters");
  add_common(modes, modes_opts, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      bu::CaseStudy cs = resolve(run_opts);
      cs.sampler.kind = bu::sampler_kind_from_string(sampler);
      const bu::RunResult r = bu::run_case(cs);
      std::cout << bu::format_report_table(r.report, r.wall_time_seconds);
      std::cout << "Outputs written to " << cs.output_dir.string() << '\n';
      return r.report.error ? 2 : 0;
    }
    if (*compare) {
      const bu::CaseStudy cs = resolve(cmp_opts);
      const auto results = bu::compare_samplers(cs);
      std::vector<bu::Report> reports;
      bool failed = false;
      for (const auto& r : results) {
        reports.push_back(r.report);
        failed = failed || r.report.error.has_value();
      }
      std::cout << bu::format_comparison(reports);
      std::cout << "Outputs written to " << cs.output_dir.string() << '\n';
      return failed ? 2 : 0;
    }
    if (*modes) return print_modes(resolve(modes_opts));
  } catch (const bu::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 64;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
