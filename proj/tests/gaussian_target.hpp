#pragma once

// Analytic Gaussian targets shared by the sampler tests and the acceptance
// suite.

#include "beamupdate/samplers.hpp"

namespace beamupdate::oracle {

struct Gaussian {
  Vector mean;
  Matrix covariance;
};

// Mean (1, −1) with a moderate correlation.
inline Gaussian reference_gaussian() {
  Gaussian g;
  g.mean = (Vector(2) << 1.0, -1.0).finished();
  g.covariance = (Matrix(2, 2) << 1.0, 0.3, 0.3, 0.5).finished();
  return g;
}

/// Bounded target with the analytic gradient; the box spans ±half_width
/// around the mean, wide enough that truncation is negligible by default.
inline TargetDensity gaussian_target(const Gaussian& g, double half_width = 12.0, bool analytic_gradient = true) {
  const Matrix precision = g.covariance.inverse();
  TargetDensity t;
  t.lower = g.mean.array() - half_width;
  t.upper = g.mean.array() + half_width;
  t.scale = g.covariance.diagonal().cwiseSqrt();
  t.log_density = [g, precision](const Vector& x) {
    const Vector d = x - g.mean;
    return -0.5 * d.dot(precision * d);
  };
  if (analytic_gradient) {
    t.grad_potential = [g, precision](const Vector& x) -> Vector { return precision * (x - g.mean); };
  }
  return t;
}

/// Sample covariance of rows [burn_in, N).
inline Matrix sample_covariance(const Chain& chain, int burn_in) {
  const Matrix x = chain.samples.bottomRows(chain.size() - burn_in);
  const Matrix centred = x.rowwise() - x.colwise().mean();
  return centred.transpose() * centred / static_cast<double>(x.rows() - 1);
}

}  // namespace beamupdate::oracle
