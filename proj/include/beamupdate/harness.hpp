#pragma once

// Case-study configuration and end-to-end runs: build the posterior, sample
// it, persist the chain, and summarise updated parameters and frequencies.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "beamupdate/fem_beam.hpp"
#include "beamupdate/posterior.hpp"
#include "beamupdate/report.hpp"
#include "beamupdate/samplers.hpp"

namespace beamupdate {

enum class SamplerKind { mh, slice, hmc };

std::string_view to_string(SamplerKind k);
SamplerKind sampler_kind_from_string(std::string_view s);

struct SamplerSettings {
  SamplerKind kind = SamplerKind::mh;
  MhConfig mh;
  SliceConfig slice;
  HmcConfig hmc;
  GradientOptions gradient;
};

struct CaseStudy {
  std::string name;
  BeamModel beam;
  ParameterSpace space;
  ModalData data;
  ErrorMetric metric = ErrorMetric::relative_frequency;
  PriorMean prior_mean = PriorMean::zero;
  SamplerSettings sampler;
  int n_samples = 1000;
  std::uint64_t seed = 1;
  std::optional<int> burn_in;  // default: 10% of n_samples
  std::filesystem::path output_dir = "out";
  std::vector<std::string> notes;

  void validate() const;
  int effective_burn_in() const { return burn_in.value_or(n_samples / 10); }
};

inline constexpr std::string_view kBuiltinCaseNames[] = {"young5", "inertia_area4"};

/// The 500 x 60 x 10 mm steel cantilever, 50 elements, 0.12 kg at 490 mm.
BeamModel reference_beam();
std::vector<double> reference_measured_frequencies();

/// Throws UsageError listing the valid names when `name` is unknown.
CaseStudy builtin_case(std::string_view name);

/// Builtin name, or a path to a YAML case file.
CaseStudy load_case(const std::string& name_or_path);

CaseStudy parse_config(const std::filesystem::path& path);
CaseStudy parse_config_text(const std::string& text);
/// Fully resolved case as YAML; parse_config_text(dump_config(c)) reproduces c.
std::string dump_config(const CaseStudy& cs);

PosteriorDensity make_posterior(const CaseStudy& cs);

struct RunResult {
  Report report;
  Chain chain;
  double wall_time_seconds = 0.0;
};

/// Samples the case and writes chain.csv, config.yaml, report.txt and
/// report.json into cs.output_dir. Sampler failures are recorded in the
/// report (with the partial chain persisted) rather than thrown.
RunResult run_case(const CaseStudy& cs);

/// Samples without touching the filesystem.
RunResult execute_case(const CaseStudy& cs);

/// Runs mh, slice and hmc on `cs`, each into <output_dir>/<sampler>, and
/// writes compare.txt alongside.
std::vector<RunResult> compare_samplers(const CaseStudy& cs);

}  // namespace beamupdate
