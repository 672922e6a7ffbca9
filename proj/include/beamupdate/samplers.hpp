#pragma once

// Metropolis-Hastings, slice and Hybrid Monte Carlo samplers over a bounded
// log-density, plus Monte Carlo estimates and chain diagnostics.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "beamupdate/errors.hpp"
#include "beamupdate/fem_beam.hpp"
#include "beamupdate/posterior.hpp"

namespace beamupdate {

struct TargetDensity {
  Vector lower;
  Vector upper;
  // Per-coordinate unit for proposal widths, step sizes and stencils (σ_i for
  // the FEM posterior).
  Vector scale;
  // May return kNegInf; never called outside [lower, upper] by the samplers.
  std::function<double(const Vector&)> log_density;
  // ∇V with V = −log_density. Empty → central differences on log_density.
  std::function<Vector(const Vector&)> grad_potential;
  GradientOptions gradient;

  Eigen::Index dimension() const { return lower.size(); }
  bool in_bounds(const Vector& theta) const;
  void validate() const;
};

/// Bounded target for the FEM posterior. Numerical FEM failures read as −∞.
TargetDensity make_target(const PosteriorDensity& pd, GradientOptions gradient = {});

struct Chain {
  std::string sampler;
  std::uint64_t seed = 0;
  Matrix samples;  // N_s × Q, physical units
  std::vector<double> log_density;
  std::vector<std::uint8_t> accepted;
  std::vector<std::int64_t> evaluations_cumulative;
  std::int64_t proposals = 0;
  std::int64_t target_evaluations = 0;
  std::vector<double> slice_log_heights;  // slice only
  std::vector<double> energy_errors;      // hmc only: H(θ*,p*) − H(θ,p)

  Eigen::Index size() const { return static_cast<Eigen::Index>(log_density.size()); }
};

struct MhConfig {
  std::vector<double> widths;  // σ-units; empty → 0.1 per coordinate
};

struct SliceConfig {
  std::vector<double> widths;  // σ-units; empty → full bound range
  int max_shrink = 1000;
};

struct HmcConfig {
  double step_size = 0.05;  // σ-scaled coordinates
  int leapfrog_steps = 10;
  // Mass preconditioner in σ-scaled coordinates; empty → identity.
  Matrix mass;
};

/// Thrown when a sampler cannot continue; carries the states retained so far.
class SamplerFailure : public NumericalError {
 public:
  SamplerFailure(const std::string& what, Chain partial) : NumericalError(what), partial_(std::move(partial)) {}
  const Chain& partial() const noexcept { return partial_; }

 private:
  Chain partial_;
};

/// Accept iff u <= min(1, exp(log_ratio)).
bool metropolis_accept(double log_ratio, double u);

Chain mh_sample(const TargetDensity& target, const MhConfig& cfg, const Vector& theta0, int n_samples,
                std::uint64_t seed);

Chain slice_sample(const TargetDensity& target, const SliceConfig& cfg, const Vector& theta0, int n_samples,
                   std::uint64_t seed);

struct HmcState {
  Vector position;
  Vector momentum;
  Matrix mass;  // physical-unit preconditioner M of W(p) = pᵀM⁻¹p/2
  double step_size = 0.0;
  int leapfrog_steps = 1;
};

/// One half-kick / drift / half-kick step. Throws StencilOutOfBounds when
/// the gradient cannot be formed at the new position.
HmcState leapfrog(const TargetDensity& target, const HmcState& state);

/// Physical-unit preconditioner corresponding to `cfg` (S⁻¹ M_scaled S⁻¹, S = diag(scale)).
Matrix physical_mass(const TargetDensity& target, const HmcConfig& cfg);

Chain hmc_sample(const TargetDensity& target, const HmcConfig& cfg, const Vector& theta0, int n_samples,
                 std::uint64_t seed);

/// Mean of g over samples [burn_in, N_s).
Vector estimate(const Chain& chain, const std::function<Vector(const Vector&)>& g, int burn_in);
Vector posterior_mean(const Chain& chain, int burn_in);
Vector posterior_stddev(const Chain& chain, int burn_in);

/// Effective sample size from the initial-positive-sequence autocorrelation sum.
/// Returns std::nullopt when the series has zero variance.
std::optional<double> effective_sample_size(const Vector& series);

struct Diagnostics {
  double acceptance_rate = 0.0;
  Matrix running_mean;  // N_s × Q
  Vector ess;
  std::vector<bool> ess_degenerate;
  std::int64_t target_evaluations = 0;
};

Diagnostics diagnose(const Chain& chain);

/// sample_index, <names…>, log_posterior, accepted, n_target_evals_cumulative
void write_chain_csv(const Chain& chain, const std::vector<std::string>& names, std::ostream& out);

}  // namespace beamupdate
