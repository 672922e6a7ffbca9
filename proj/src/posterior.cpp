#include "beamupdate/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "beamupdate/errors.hpp"

namespace beamupdate {

std::string_view to_string(QuantityKind kind) {
  switch (kind) {
    case QuantityKind::youngs_modulus: return "youngs_modulus";
    case QuantityKind::inertia: return "inertia";
    case QuantityKind::area: return "area";
  }
  return "?";
}

QuantityKind quantity_kind_from_string(std::string_view s) {
  if (s == "youngs_modulus") return QuantityKind::youngs_modulus;
  if (s == "inertia") return QuantityKind::inertia;
  if (s == "area") return QuantityKind::area;
  throw InvalidInput("unknown quantity kind '" + std::string(s) + "' (expected youngs_modulus, inertia or area)");
}

std::string_view to_string(ErrorMetric m) {
  return m == ErrorMetric::relative_frequency ? "relative" : "absolute";
}

std::string_view to_string(PriorMean m) { return m == PriorMean::zero ? "zero" : "nominal"; }

ErrorMetric error_metric_from_string(std::string_view s) {
  if (s == "relative") return ErrorMetric::relative_frequency;
  if (s == "absolute") return ErrorMetric::absolute_frequency_hz;
  throw InvalidInput("unknown error metric '" + std::string(s) + "' (expected relative or absolute)");
}

PriorMean prior_mean_from_string(std::string_view s) {
  if (s == "zero") return PriorMean::zero;
  if (s == "nominal") return PriorMean::nominal;
  throw InvalidInput("unknown prior mean '" + std::string(s) + "' (expected zero or nominal)");
}

void ParameterSpace::validate(int n_elements) const {
  if (entries_.empty()) throw InvalidInput("parameter space is empty");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const Parameter& p = entries_[i];
    std::ostringstream where;
    where << "parameter '" << p.name << "'";
    if (!(std::isfinite(p.sigma) && p.sigma > 0.0)) throw InvalidInput(where.str() + ": sigma must be > 0");
    if (!(std::isfinite(p.lower) && std::isfinite(p.upper) && p.lower < p.upper)) {
      throw InvalidInput(where.str() + ": lower bound must be < upper bound");
    }
    if (!(p.initial >= p.lower && p.initial <= p.upper)) {
      throw InvalidInput(where.str() + ": initial value outside [lower, upper]");
    }
    if (p.first_element < 0 || p.first_element >= p.last_element || p.last_element > n_elements) {
      throw InvalidInput(where.str() + ": element range must satisfy 0 <= first < last <= n_elements");
    }
    for (std::size_t j = 0; j < i; ++j) {
      const Parameter& q = entries_[j];
      if (q.kind == p.kind && p.first_element < q.last_element && q.first_element < p.last_element) {
        throw InvalidInput(where.str() + ": element range overlaps parameter '" + q.name + "' of the same kind");
      }
    }
  }
}

namespace {
template <class Get>
Vector collect(const std::vector<Parameter>& entries, Get get) {
  Vector v(static_cast<Eigen::Index>(entries.size()));
  for (std::size_t i = 0; i < entries.size(); ++i) v(static_cast<Eigen::Index>(i)) = get(entries[i]);
  return v;
}
}  // namespace

Vector ParameterSpace::lower() const { return collect(entries_, [](const Parameter& p) { return p.lower; }); }
Vector ParameterSpace::upper() const { return collect(entries_, [](const Parameter& p) { return p.upper; }); }
Vector ParameterSpace::sigma() const { return collect(entries_, [](const Parameter& p) { return p.sigma; }); }
Vector ParameterSpace::initial() const { return collect(entries_, [](const Parameter& p) { return p.initial; }); }

std::vector<std::string> ParameterSpace::names() const {
  std::vector<std::string> out;
  for (const auto& p : entries_) out.push_back(p.name);
  return out;
}

bool ParameterSpace::contains(const Vector& theta) const {
  if (theta.size() != static_cast<Eigen::Index>(entries_.size())) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const double v = theta(static_cast<Eigen::Index>(i));
    if (!(v >= entries_[i].lower && v <= entries_[i].upper)) return false;
  }
  return true;
}

void ModalData::validate() const {
  if (frequencies_hz.empty()) throw InvalidInput("modal data: at least one measured frequency is required");
  for (std::size_t i = 0; i < frequencies_hz.size(); ++i) {
    if (!(std::isfinite(frequencies_hz[i]) && frequencies_hz[i] > 0.0)) {
      throw InvalidInput("modal data: measured frequencies must be positive");
    }
    if (i > 0 && !(frequencies_hz[i] > frequencies_hz[i - 1])) {
      throw InvalidInput("modal data: measured frequencies must be strictly ascending");
    }
  }
  if (measurement_points < 1) throw InvalidInput("modal data: measurement point count F must be >= 1");
  if (beta.size() != 1 && beta.size() != frequencies_hz.size()) {
    throw InvalidInput("modal data: beta must be a scalar or have one entry per measured mode");
  }
  for (double b : beta) {
    if (!(std::isfinite(b) && b > 0.0)) throw InvalidInput("modal data: beta entries must be > 0");
  }
}

double z_data(double beta, int measurement_points, int n_modes) {
  if (!(beta > 0.0)) throw InvalidInput("z_data: beta must be > 0");
  return std::pow(std::numbers::pi / beta, 0.5 * measurement_points * n_modes);
}

double log_z_data(const ModalData& data) {
  double acc = 0.0;
  for (int i = 0; i < data.n_modes(); ++i) {
    const double b = data.beta_for(i);
    if (!(b > 0.0)) throw InvalidInput("log_z_data: beta must be > 0");
    acc += 0.5 * data.measurement_points * std::log(std::numbers::pi / b);
  }
  return acc;
}

double log_z_prior(std::span<const double> alpha) {
  double acc = 0.5 * static_cast<double>(alpha.size()) * std::log(2.0 * std::numbers::pi);
  for (double a : alpha) {
    if (!(std::isfinite(a) && a > 0.0)) throw InvalidInput("z_prior: alpha entries must be > 0");
    acc -= 0.5 * std::log(a);
  }
  return acc;
}

double z_prior(std::span<const double> alpha) { return std::exp(log_z_prior(alpha)); }

Vector central_difference_gradient(const std::function<double(const Vector&)>& f, const Vector& theta,
                                   const Vector& scale, const Vector& lower, const Vector& upper,
                                   const GradientOptions& opts) {
  const Eigen::Index q = theta.size();
  if (!(opts.h > 0.0)) throw InvalidInput("gradient: step h must be > 0");
  if (!opts.delta.empty() && static_cast<Eigen::Index>(opts.delta.size()) != q) {
    throw InvalidInput("gradient: perturbation vector has the wrong dimension");
  }
  Vector grad(q);
  Vector probe = theta;
  for (Eigen::Index i = 0; i < q; ++i) {
    const double d = opts.delta.empty() ? 1.0 : opts.delta[static_cast<std::size_t>(i)];
    if (d == 0.0) throw InvalidInput("gradient: perturbation entries must be non-zero");
    const double step = opts.h * d * scale(i);
    const double lo = theta(i) - std::abs(step);
    const double hi = theta(i) + std::abs(step);
    if (lo < lower(i) || hi > upper(i)) {
      std::ostringstream os;
      os << "gradient stencil for coordinate " << i << " leaves the bounds; reduce the step size h";
      throw StencilOutOfBounds(os.str());
    }
    probe(i) = theta(i) + step;
    const double fp = f(probe);
    probe(i) = theta(i) - step;
    const double fm = f(probe);
    probe(i) = theta(i);
    grad(i) = (fp - fm) / (2.0 * step);
  }
  return grad;
}

PosteriorDensity::PosteriorDensity(BeamModel model, ParameterSpace space, ModalData data, ErrorMetric metric,
                                   PriorMean prior_mean)
    : model_(std::move(model)),
      space_(std::move(space)),
      data_(std::move(data)),
      metric_(metric),
      prior_mean_(prior_mean) {
  model_.validate();
  space_.validate(model_.n_elements);
  data_.validate();
  if (data_.n_modes() > 2 * model_.n_elements) throw InvalidInput("more measured modes than model dofs");
  log_z_data_ = beamupdate::log_z_data(data_);
  std::vector<double> alpha;
  for (const auto& p : space_.entries()) alpha.push_back(1.0 / (p.sigma * p.sigma));
  log_z_prior_ = beamupdate::log_z_prior(alpha);
}

Vector PosteriorDensity::prior_center() const {
  Vector c = Vector::Zero(static_cast<Eigen::Index>(space_.size()));
  if (prior_mean_ == PriorMean::zero) return c;
  for (std::size_t i = 0; i < space_.size(); ++i) {
    double v = 0.0;
    switch (space_[i].kind) {
      case QuantityKind::youngs_modulus: v = model_.youngs_modulus_nominal; break;
      case QuantityKind::inertia: v = model_.nominal_inertia(); break;
      case QuantityKind::area: v = model_.nominal_area(); break;
    }
    c(static_cast<Eigen::Index>(i)) = v;
  }
  return c;
}

std::vector<ElementProperties> PosteriorDensity::element_properties(const Vector& theta) const {
  if (theta.size() != static_cast<Eigen::Index>(space_.size())) {
    throw InvalidInput("parameter vector has the wrong dimension");
  }
  if (!theta.allFinite()) throw InvalidInput("parameter vector must be finite");
  std::vector<ElementProperties> props = nominal_properties(model_);
  for (std::size_t i = 0; i < space_.size(); ++i) {
    const Parameter& p = space_[i];
    const double v = theta(static_cast<Eigen::Index>(i));
    for (int e = p.first_element; e < p.last_element; ++e) {
      auto& ep = props[static_cast<std::size_t>(e)];
      switch (p.kind) {
        case QuantityKind::youngs_modulus: ep.youngs_modulus = v; break;
        case QuantityKind::inertia: ep.inertia = v; break;
        case QuantityKind::area: ep.area = v; break;
      }
    }
  }
  return props;
}

SystemMatrices PosteriorDensity::system(const Vector& theta) const {
  const auto props = element_properties(theta);
  for (const auto& p : props) {
    if (!(p.youngs_modulus > 0.0 && p.inertia > 0.0 && p.area > 0.0)) {
      throw NumericalError("element properties became non-positive at the requested parameters");
    }
  }
  return assemble(model_, props);
}

Vector PosteriorDensity::model_frequencies(const Vector& theta) const {
  return natural_frequencies(system(theta), data_.n_modes());
}

Matrix PosteriorDensity::error_terms_from_frequencies(const Vector& model_hz) const {
  const int nm = data_.n_modes();
  Matrix eps(nm, data_.measurement_points);
  for (int i = 0; i < nm; ++i) {
    const double measured = data_.frequencies_hz[static_cast<std::size_t>(i)];
    double e = measured - model_hz(i);
    if (metric_ == ErrorMetric::relative_frequency) e /= measured;
    eps.row(i).setConstant(e);
  }
  return eps;
}

Matrix PosteriorDensity::error_terms(const Vector& theta) const {
  return error_terms_from_frequencies(model_frequencies(theta));
}

double PosteriorDensity::data_misfit(const Vector& theta) const {
  const Matrix eps = error_terms(theta);
  double acc = 0.0;
  for (int i = 0; i < data_.n_modes(); ++i) acc += data_.beta_for(i) * eps.row(i).squaredNorm();
  return acc;
}

double PosteriorDensity::prior_quadratic(const Vector& theta) const {
  const Vector d = theta - prior_center();
  const Vector sigma = space_.sigma();
  return 0.5 * (d.array() / sigma.array()).square().sum();
}

double PosteriorDensity::log_likelihood(const Vector& theta) const { return -data_misfit(theta) - log_z_data_; }

double PosteriorDensity::log_prior(const Vector& theta) const {
  if (theta.size() != static_cast<Eigen::Index>(space_.size())) {
    throw InvalidInput("parameter vector has the wrong dimension");
  }
  if (!space_.contains(theta)) return kNegInf;
  return -prior_quadratic(theta) - log_z_prior_;
}

double PosteriorDensity::log_posterior(const Vector& theta) const {
  const double lp = log_prior(theta);
  if (lp == kNegInf) return kNegInf;
  return log_likelihood(theta) + lp + log_z_data_ + log_z_prior_ - log_z_posterior();
}

Vector PosteriorDensity::grad_potential(const Vector& theta, const GradientOptions& opts) const {
  return central_difference_gradient([this](const Vector& x) { return potential(x); }, theta, space_.sigma(),
                                     space_.lower(), space_.upper(), opts);
}

}  // namespace beamupdate
