#include "beamupdate/samplers.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <sstream>

namespace beamupdate {

namespace {

using Rng = std::mt19937_64;

// Uniform on (0, 1]; keeps log(u) finite.
double uniform_open0(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return 1.0 - u(rng);
}

double uniform01(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng);
}

Vector std_normal(Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> z(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = z(rng);
  return v;
}

Vector widths_or(const std::vector<double>& widths, const Vector& fallback, const char* what) {
  if (widths.empty()) return fallback;
  if (static_cast<Eigen::Index>(widths.size()) == 1) return Vector::Constant(fallback.size(), widths[0]);
  if (static_cast<Eigen::Index>(widths.size()) != fallback.size()) {
    throw InvalidInput(std::string(what) + ": width vector has the wrong dimension");
  }
  return Eigen::Map<const Vector>(widths.data(), fallback.size());
}

// Counts every call into the target density so chains can report their
// evaluation budget.
class CountingTarget {
 public:
  explicit CountingTarget(const TargetDensity& t) : t_(t) {}

  double log_density(const Vector& theta) {
    if (!t_.in_bounds(theta)) return kNegInf;
    ++evaluations_;
    const double v = t_.log_density(theta);
    return std::isnan(v) ? kNegInf : v;
  }

  Vector grad_potential(const Vector& theta) {
    if (t_.grad_potential) return t_.grad_potential(theta);
    return central_difference_gradient([this](const Vector& x) { return -log_density(x); }, theta, t_.scale,
                                       t_.lower, t_.upper, t_.gradient);
  }

  std::int64_t evaluations() const { return evaluations_; }
  const TargetDensity& target() const { return t_; }

 private:
  const TargetDensity& t_;
  std::int64_t evaluations_ = 0;
};

Chain start_chain(const TargetDensity& target, const Vector& theta0, int n_samples, std::uint64_t seed,
                  const char* label) {
  target.validate();
  if (n_samples < 1) throw InvalidInput(std::string(label) + ": number of samples must be >= 1");
  if (theta0.size() != target.dimension()) throw InvalidInput(std::string(label) + ": θ0 has the wrong dimension");
  if (!target.in_bounds(theta0)) throw InvalidInput(std::string(label) + ": initial state lies outside the bounds");
  Chain c;
  c.sampler = label;
  c.seed = seed;
  c.samples.resize(n_samples, target.dimension());
  c.log_density.reserve(static_cast<std::size_t>(n_samples));
  c.accepted.reserve(static_cast<std::size_t>(n_samples));
  c.evaluations_cumulative.reserve(static_cast<std::size_t>(n_samples));
  return c;
}

void record(Chain& c, const Vector& theta, double lp, bool accepted, std::int64_t evaluations) {
  const auto row = static_cast<Eigen::Index>(c.log_density.size());
  c.samples.row(row) = theta.transpose();
  c.log_density.push_back(lp);
  c.accepted.push_back(accepted ? 1 : 0);
  c.evaluations_cumulative.push_back(evaluations);
  c.target_evaluations = evaluations;
}

Chain truncated(Chain c) {
  c.samples.conservativeResize(c.size(), c.samples.cols());
  return c;
}

double initial_log_density(CountingTarget& ct, const Vector& theta0, const char* label) {
  const double lp = ct.log_density(theta0);
  if (!std::isfinite(lp)) {
    throw InvalidInput(std::string(label) + ": target density is zero (or not finite) at the initial state");
  }
  return lp;
}

}  // namespace

bool TargetDensity::in_bounds(const Vector& theta) const {
  if (theta.size() != lower.size()) return false;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    if (!(theta(i) >= lower(i) && theta(i) <= upper(i))) return false;
  }
  return true;
}

void TargetDensity::validate() const {
  const Eigen::Index q = lower.size();
  if (q < 1 || upper.size() != q || scale.size() != q) throw InvalidInput("target: inconsistent dimensions");
  if (!log_density) throw InvalidInput("target: log-density evaluator is missing");
  for (Eigen::Index i = 0; i < q; ++i) {
    if (!(lower(i) < upper(i))) throw InvalidInput("target: lower bound must be < upper bound");
    if (!(scale(i) > 0.0)) throw InvalidInput("target: scales must be > 0");
  }
}

TargetDensity make_target(const PosteriorDensity& pd, GradientOptions gradient) {
  TargetDensity t;
  t.lower = pd.space().lower();
  t.upper = pd.space().upper();
  t.scale = pd.space().sigma();
  t.gradient = std::move(gradient);
  t.log_density = [&pd](const Vector& theta) {
    try {
      return pd.log_posterior(theta);
    } catch (const NumericalError&) {
      return kNegInf;
    }
  };
  return t;
}

bool metropolis_accept(double log_ratio, double u) {
  if (std::isnan(log_ratio)) return false;
  if (log_ratio >= 0.0) return true;
  return u <= std::exp(log_ratio);
}

Chain mh_sample(const TargetDensity& target, const MhConfig& cfg, const Vector& theta0, int n_samples,
                std::uint64_t seed) {
  Chain chain = start_chain(target, theta0, n_samples, seed, "mh");
  const Vector widths = widths_or(cfg.widths, Vector::Constant(target.dimension(), 0.1), "mh");
  if (!(widths.array() > 0.0).all()) throw InvalidInput("mh: proposal widths must be > 0");
  const Vector step = widths.cwiseProduct(target.scale);

  Rng rng(seed);
  CountingTarget ct(target);
  Vector current = theta0;
  double lp = initial_log_density(ct, theta0, "mh");

  for (int t = 0; t < n_samples; ++t) {
    const Vector proposal = current + step.cwiseProduct(std_normal(rng, target.dimension()));
    ++chain.proposals;
    const double lp_prop = ct.log_density(proposal);
    const double u = uniform_open0(rng);
    const bool accept = metropolis_accept(lp_prop - lp, u);
    if (accept) {
      current = proposal;
      lp = lp_prop;
    }
    record(chain, current, lp, accept, ct.evaluations());
  }
  return chain;
}

Chain slice_sample(const TargetDensity& target, const SliceConfig& cfg, const Vector& theta0, int n_samples,
                   std::uint64_t seed) {
  Chain chain = start_chain(target, theta0, n_samples, seed, "slice");
  const Vector range = (target.upper - target.lower).cwiseQuotient(target.scale);
  const Vector widths = widths_or(cfg.widths, range, "slice").cwiseProduct(target.scale);
  if (!(widths.array() > 0.0).all()) throw InvalidInput("slice: widths must be > 0");
  if (cfg.max_shrink < 1) throw InvalidInput("slice: max_shrink must be >= 1");
  const Eigen::Index q = target.dimension();

  Rng rng(seed);
  CountingTarget ct(target);
  Vector current = theta0;
  double lp = initial_log_density(ct, theta0, "slice");
  chain.slice_log_heights.reserve(static_cast<std::size_t>(n_samples));

  for (int t = 0; t < n_samples; ++t) {
    const double log_height = lp + std::log(uniform_open0(rng));

    // Randomly placed box of widths w around the current point, clipped to
    // the support.
    Vector left(q), right(q);
    for (Eigen::Index i = 0; i < q; ++i) {
      left(i) = current(i) - widths(i) * uniform01(rng);
      right(i) = left(i) + widths(i);
      left(i) = std::max(left(i), target.lower(i));
      right(i) = std::min(right(i), target.upper(i));
    }

    bool found = false;
    Vector candidate(q);
    double lp_cand = kNegInf;
    for (int it = 0; it < cfg.max_shrink; ++it) {
      for (Eigen::Index i = 0; i < q; ++i) candidate(i) = left(i) + uniform01(rng) * (right(i) - left(i));
      ++chain.proposals;
      lp_cand = ct.log_density(candidate);
      if (lp_cand >= log_height) {
        found = true;
        break;
      }
      for (Eigen::Index i = 0; i < q; ++i) {
        if (candidate(i) < current(i)) {
          left(i) = candidate(i);
        } else {
          right(i) = candidate(i);
        }
      }
    }
    if (!found) {
      Eigen::Index stuck = 0;
      (right - left).cwiseQuotient(widths).maxCoeff(&stuck);
      std::ostringstream os;
      os << "slice: shrinkage did not terminate after " << cfg.max_shrink << " candidates at sample " << t
         << " (coordinate " << stuck << " retains the widest interval)";
      throw SamplerFailure(os.str(), truncated(std::move(chain)));
    }
    current = candidate;
    lp = lp_cand;
    chain.slice_log_heights.push_back(log_height);
    record(chain, current, lp, true, ct.evaluations());
  }
  return chain;
}

namespace {

// One leapfrog step with the gradient at the start supplied and the gradient
// at the end returned through `grad`.
void leapfrog_step(CountingTarget& ct, Vector& position, Vector& momentum, Vector& grad,
                   const Eigen::LLT<Matrix>& mass, double dt) {
  momentum -= 0.5 * dt * grad;
  position += dt * mass.solve(momentum);
  if (!ct.target().in_bounds(position)) {
    throw StencilOutOfBounds("leapfrog: trajectory left the parameter bounds");
  }
  grad = ct.grad_potential(position);
  momentum -= 0.5 * dt * grad;
}

Eigen::LLT<Matrix> factor_mass(const Matrix& mass, Eigen::Index q) {
  if (mass.rows() != q || mass.cols() != q) throw InvalidInput("hmc: mass preconditioner has the wrong size");
  if (!mass.isApprox(mass.transpose(), 1e-12)) throw InvalidInput("hmc: mass preconditioner must be symmetric");
  Eigen::LLT<Matrix> llt(mass);
  if (llt.info() != Eigen::Success) throw InvalidInput("hmc: mass preconditioner must be positive definite");
  return llt;
}

}  // namespace

HmcState leapfrog(const TargetDensity& target, const HmcState& state) {
  if (!(state.step_size > 0.0)) throw InvalidInput("leapfrog: step size must be > 0");
  if (state.leapfrog_steps < 1) throw InvalidInput("leapfrog: step count must be >= 1");
  const auto llt = factor_mass(state.mass, state.position.size());
  CountingTarget ct(target);
  HmcState next = state;
  Vector grad = ct.grad_potential(state.position);
  leapfrog_step(ct, next.position, next.momentum, grad, llt, state.step_size);
  return next;
}

Matrix physical_mass(const TargetDensity& target, const HmcConfig& cfg) {
  const Eigen::Index q = target.dimension();
  const Matrix scaled = cfg.mass.size() == 0 ? Matrix::Identity(q, q) : cfg.mass;
  if (scaled.rows() != q || scaled.cols() != q) throw InvalidInput("hmc: mass preconditioner has the wrong size");
  const Vector inv_scale = target.scale.cwiseInverse();
  return inv_scale.asDiagonal() * scaled * inv_scale.asDiagonal();
}

Chain hmc_sample(const TargetDensity& target, const HmcConfig& cfg, const Vector& theta0, int n_samples,
                 std::uint64_t seed) {
  Chain chain = start_chain(target, theta0, n_samples, seed, "hmc");
  if (!(cfg.step_size > 0.0)) throw InvalidInput("hmc: step size must be > 0");
  if (cfg.leapfrog_steps < 1) throw InvalidInput("hmc: leapfrog step count must be >= 1");
  const Eigen::Index q = target.dimension();
  const Matrix mass = physical_mass(target, cfg);
  const auto llt = factor_mass(mass, q);
  const Matrix mass_chol = llt.matrixL();

  Rng rng(seed);
  CountingTarget ct(target);
  Vector current = theta0;
  double lp = initial_log_density(ct, theta0, "hmc");
  Vector grad;
  try {
    grad = ct.grad_potential(current);
  } catch (const StencilOutOfBounds& e) {
    throw InvalidInput(std::string("hmc: cannot form the gradient at the initial state: ") + e.what());
  }
  chain.energy_errors.reserve(static_cast<std::size_t>(n_samples));

  for (int t = 0; t < n_samples; ++t) {
    Vector momentum = mass_chol * std_normal(rng, q);
    const double h0 = -lp + 0.5 * momentum.dot(llt.solve(momentum));

    Vector position = current;
    Vector g = grad;
    double lp_new = kNegInf;
    double h1 = std::numeric_limits<double>::infinity();
    ++chain.proposals;
    try {
      for (int s = 0; s < cfg.leapfrog_steps; ++s) leapfrog_step(ct, position, momentum, g, llt, cfg.step_size);
      lp_new = ct.log_density(position);
      h1 = -lp_new + 0.5 * momentum.dot(llt.solve(momentum));
    } catch (const StencilOutOfBounds&) {
      // Trajectory aborted; the proposal is rejected below.
    }
    const double u = uniform_open0(rng);
    const bool accept = std::isfinite(h1) && metropolis_accept(h0 - h1, u);
    chain.energy_errors.push_back(h1 - h0);
    if (accept) {
      current = position;
      lp = lp_new;
      grad = g;
    }
    record(chain, current, lp, accept, ct.evaluations());
  }
  return chain;
}

Vector estimate(const Chain& chain, const std::function<Vector(const Vector&)>& g, int burn_in) {
  if (burn_in < 0 || burn_in >= chain.size()) {
    throw InvalidInput("estimate: burn-in leaves no samples to average");
  }
  Vector acc;
  for (Eigen::Index i = burn_in; i < chain.size(); ++i) {
    const Vector v = g(chain.samples.row(i).transpose());
    if (acc.size() == 0) {
      acc = v;
    } else {
      acc += v;
    }
  }
  return acc / static_cast<double>(chain.size() - burn_in);
}

Vector posterior_mean(const Chain& chain, int burn_in) {
  return estimate(chain, [](const Vector& x) { return x; }, burn_in);
}

Vector posterior_stddev(const Chain& chain, int burn_in) {
  const Vector mean = posterior_mean(chain, burn_in);
  const Vector second = estimate(chain, [](const Vector& x) -> Vector { return x.array().square(); }, burn_in);
  return (second - mean.cwiseAbs2()).cwiseMax(0.0).cwiseSqrt();
}

std::optional<double> effective_sample_size(const Vector& series) {
  const Eigen::Index n = series.size();
  if (n < 2) return std::nullopt;
  const Vector centered = series.array() - series.mean();
  const double gamma0 = centered.squaredNorm() / static_cast<double>(n);
  if (!(gamma0 > 0.0) || gamma0 <= 1e-28 * series.cwiseAbs2().mean()) return std::nullopt;

  auto rho = [&](Eigen::Index lag) {
    return centered.head(n - lag).dot(centered.tail(n - lag)) / static_cast<double>(n) / gamma0;
  };
  // Geyer's initial positive sequence over pairs (ρ_{2m} + ρ_{2m+1}).
  double tau = -1.0;
  for (Eigen::Index m = 0; 2 * m + 1 < n; ++m) {
    const double pair = (m == 0 ? 1.0 : rho(2 * m)) + rho(2 * m + 1);
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1.0 / static_cast<double>(n));
  return static_cast<double>(n) / tau;
}

Diagnostics diagnose(const Chain& chain) {
  Diagnostics d;
  const Eigen::Index n = chain.size();
  const Eigen::Index q = chain.samples.cols();
  d.target_evaluations = chain.target_evaluations;
  if (n == 0) return d;
  std::int64_t accepted = 0;
  for (auto a : chain.accepted) accepted += a;
  d.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(n);

  d.running_mean.resize(n, q);
  Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(q);
  for (Eigen::Index i = 0; i < n; ++i) {
    acc += chain.samples.row(i);
    d.running_mean.row(i) = acc / static_cast<double>(i + 1);
  }
  d.ess.resize(q);
  d.ess_degenerate.assign(static_cast<std::size_t>(q), false);
  for (Eigen::Index j = 0; j < q; ++j) {
    const auto ess = effective_sample_size(chain.samples.col(j).head(n));
    d.ess(j) = ess.value_or(1.0);
    d.ess_degenerate[static_cast<std::size_t>(j)] = !ess.has_value();
  }
  return d;
}

void write_chain_csv(const Chain& chain, const std::vector<std::string>& names, std::ostream& out) {
  const Eigen::Index q = chain.samples.cols();
  out << "sample_index";
  for (Eigen::Index j = 0; j < q; ++j) {
    out << ',' << (static_cast<std::size_t>(j) < names.size() ? names[static_cast<std::size_t>(j)]
                                                               : "theta_" + std::to_string(j + 1));
  }
  out << ",log_posterior,accepted,n_target_evals_cumulative\n";
  char buf[64];
  for (Eigen::Index i = 0; i < chain.size(); ++i) {
    out << i;
    for (Eigen::Index j = 0; j < q; ++j) {
      std::snprintf(buf, sizeof buf, ",%.17e", chain.samples(i, j));
      out << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.17e", chain.log_density[static_cast<std::size_t>(i)]);
    out << buf << ',' << static_cast<int>(chain.accepted[static_cast<std::size_t>(i)]) << ','
        << chain.evaluations_cumulative[static_cast<std::size_t>(i)] << '\n';
  }
}

}  // namespace beamupdate
