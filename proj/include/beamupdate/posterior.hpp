#pragma once

// Bayesian posterior over beam updating parameters: Gaussian likelihood on
// frequency errors, truncated Gaussian prior, normalising constants, and the
// HMC potential with its central-difference gradient.

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "beamupdate/fem_beam.hpp"

namespace beamupdate {

enum class QuantityKind { youngs_modulus, inertia, area };

std::string_view to_string(QuantityKind kind);
QuantityKind quantity_kind_from_string(std::string_view s);

/// One updating parameter: a physical quantity shared by a contiguous block
/// of elements [first_element, last_element).
struct Parameter {
  std::string name;
  QuantityKind kind = QuantityKind::youngs_modulus;
  int first_element = 0;
  int last_element = 0;
  double sigma = 1.0;
  double lower = 0.0;
  double upper = 0.0;
  double initial = 0.0;

  friend bool operator==(const Parameter&, const Parameter&) = default;
};

class ParameterSpace {
 public:
  ParameterSpace() = default;
  explicit ParameterSpace(std::vector<Parameter> entries) : entries_(std::move(entries)) {}

  /// Throws InvalidInput on bad bounds, σ, or overlapping element ranges.
  void validate(int n_elements) const;

  std::size_t size() const { return entries_.size(); }
  const std::vector<Parameter>& entries() const { return entries_; }
  const Parameter& operator[](std::size_t i) const { return entries_[i]; }

  Vector lower() const;
  Vector upper() const;
  Vector sigma() const;
  Vector initial() const;
  std::vector<std::string> names() const;
  bool contains(const Vector& theta) const;

  friend bool operator==(const ParameterSpace&, const ParameterSpace&) = default;

 private:
  std::vector<Parameter> entries_;
};

struct ModalData {
  std::vector<double> frequencies_hz;
  int measurement_points = 1;  // F
  std::vector<double> beta{1.0};  // scalar (size 1) or one per mode

  void validate() const;
  int n_modes() const { return static_cast<int>(frequencies_hz.size()); }
  double beta_for(int mode) const { return beta.size() == 1 ? beta[0] : beta[static_cast<std::size_t>(mode)]; }

  friend bool operator==(const ModalData&, const ModalData&) = default;
};

enum class ErrorMetric { relative_frequency, absolute_frequency_hz };
enum class PriorMean { zero, nominal };

std::string_view to_string(ErrorMetric m);
std::string_view to_string(PriorMean m);
ErrorMetric error_metric_from_string(std::string_view s);
PriorMean prior_mean_from_string(std::string_view s);

/// Z_D(β) = (π/β)^{F·N_m/2}.
double z_data(double beta, int measurement_points, int n_modes);
/// ln Z_D for a per-mode β: Σ_i (F/2)·ln(π/β_i).
double log_z_data(const ModalData& data);

/// Z_E(α) = (2π)^{Q/2} Π α_i^{-1/2}.
double z_prior(std::span<const double> alpha);
double log_z_prior(std::span<const double> alpha);

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct GradientOptions {
  double h = 1e-4;                 // in units of the per-parameter scale
  std::vector<double> delta;       // perturbation vector Δ; empty → all ones
};

/// Central-difference gradient of `f`, one coordinate at a time:
///   ∂f/∂θ_i ≈ [f(θ + hΔ_i s_i e_i) − f(θ − hΔ_i s_i e_i)] / (2 h Δ_i s_i).
/// Throws StencilOutOfBounds if a stencil point leaves [lower, upper].
Vector central_difference_gradient(const std::function<double(const Vector&)>& f, const Vector& theta,
                                   const Vector& scale, const Vector& lower, const Vector& upper,
                                   const GradientOptions& opts);

class PosteriorDensity {
 public:
  PosteriorDensity(BeamModel model, ParameterSpace space, ModalData data,
                   ErrorMetric metric = ErrorMetric::relative_frequency,
                   PriorMean prior_mean = PriorMean::zero);

  const BeamModel& model() const { return model_; }
  const ParameterSpace& space() const { return space_; }
  const ModalData& data() const { return data_; }
  ErrorMetric metric() const { return metric_; }
  PriorMean prior_mean() const { return prior_mean_; }
  std::size_t dimension() const { return space_.size(); }

  /// Elements outside every group keep their nominal properties.
  std::vector<ElementProperties> element_properties(const Vector& theta) const;
  SystemMatrices system(const Vector& theta) const;
  Vector model_frequencies(const Vector& theta) const;

  /// N_m × F matrix of errors; frequency-only data repeats ε_i across the F columns.
  Matrix error_terms(const Vector& theta) const;
  Matrix error_terms_from_frequencies(const Vector& model_hz) const;

  double log_likelihood(const Vector& theta) const;
  double log_prior(const Vector& theta) const;
  double log_posterior(const Vector& theta) const;
  double potential(const Vector& theta) const { return -log_posterior(theta); }
  Vector grad_potential(const Vector& theta, const GradientOptions& opts = {}) const;

  double log_z_data() const { return log_z_data_; }
  double log_z_prior() const { return log_z_prior_; }
  double log_z_posterior() const { return log_z_data_ + log_z_prior_; }
  Vector prior_center() const;

 private:
  double data_misfit(const Vector& theta) const;   // β-weighted Σ ε²
  double prior_quadratic(const Vector& theta) const;

  BeamModel model_;
  ParameterSpace space_;
  ModalData data_;
  ErrorMetric metric_;
  PriorMean prior_mean_;
  double log_z_data_ = 0.0;
  double log_z_prior_ = 0.0;
};

}  // namespace beamupdate
