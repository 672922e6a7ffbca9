#include "beamupdate/fem_beam.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "beamupdate/errors.hpp"

#include <lapacke.h>

namespace beamupdate {

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

void require_positive(double v, const char* name) {
  if (!positive_finite(v)) {
    std::ostringstream os;
    os << name << " must be strictly positive (got " << v << ")";
    throw InvalidInput(os.str());
  }
}

// Cholesky of M, then the symmetric standard problem L⁻¹ K L⁻ᵀ y = λ y.
struct StandardForm {
  Eigen::LLT<Matrix> chol;
  Matrix reduced;
};

StandardForm to_standard_form(const SystemMatrices& sys) {
  if (sys.mass.rows() != sys.stiffness.rows() || sys.mass.rows() == 0) {
    throw InvalidInput("mass and stiffness matrices must be non-empty and of equal size");
  }
  StandardForm sf;
  sf.chol.compute(sys.mass);
  if (sf.chol.info() != Eigen::Success) {
    throw NumericalError("eigen-solve: mass matrix is not positive definite (Cholesky failed)");
  }
  const auto lower = sf.chol.matrixL();
  Matrix tmp = lower.solve(sys.stiffness);
  sf.reduced = lower.solve(tmp.transpose());
  // Remove round-off asymmetry before the symmetric solver reads one triangle.
  sf.reduced = 0.5 * (sf.reduced + sf.reduced.transpose()).eval();
  return sf;
}

void check_mode_count(const SystemMatrices& sys, int n_modes) {
  if (n_modes < 1 || n_modes > sys.size()) {
    std::ostringstream os;
    os << "n_modes must be in [1, " << sys.size() << "] (got " << n_modes << ")";
    throw InvalidInput(os.str());
  }
}

double to_hz(double eigenvalue) {
  // Tiny negative eigenvalues are round-off around rigid-body modes.
  return std::sqrt(std::max(eigenvalue, 0.0)) / (2.0 * std::numbers::pi);
}

}  // namespace

void BeamModel::validate() const {
  require_positive(length, "beam length");
  require_positive(width, "beam width");
  require_positive(thickness, "beam thickness");
  require_positive(density, "beam density");
  require_positive(youngs_modulus_nominal, "nominal Young's modulus");
  if (n_elements < 1) throw InvalidInput("n_elements must be at least 1");
  for (const auto& pm : point_masses) {
    if (!(pm.position >= 0.0 && pm.position <= length)) {
      std::ostringstream os;
      os << "point mass position " << pm.position << " m lies outside [0, " << length << "]";
      throw InvalidInput(os.str());
    }
    if (!(std::isfinite(pm.mass) && pm.mass >= 0.0)) {
      throw InvalidInput("point mass must be finite and non-negative");
    }
  }
}

void ElementProperties::validate() const {
  require_positive(youngs_modulus, "element Young's modulus");
  require_positive(inertia, "element area moment of inertia");
  require_positive(area, "element cross-section area");
  require_positive(density, "element density");
  require_positive(length, "element length");
}

ElementMatrices element_matrices(const ElementProperties& props) {
  props.validate();
  const double l = props.length;
  const double l2 = l * l;
  ElementMatrices em;
  em.stiffness << 12.0, 6.0 * l, -12.0, 6.0 * l,
                  6.0 * l, 4.0 * l2, -6.0 * l, 2.0 * l2,
                  -12.0, -6.0 * l, 12.0, -6.0 * l,
                  6.0 * l, 2.0 * l2, -6.0 * l, 4.0 * l2;
  em.stiffness *= props.youngs_modulus * props.inertia / (l2 * l);
  em.mass << 156.0, 22.0 * l, 54.0, -13.0 * l,
             22.0 * l, 4.0 * l2, 13.0 * l, -3.0 * l2,
             54.0, 13.0 * l, 156.0, -22.0 * l,
             -13.0 * l, -3.0 * l2, -22.0 * l, 4.0 * l2;
  em.mass *= props.density * props.area * l / 420.0;
  return em;
}

std::vector<ElementProperties> nominal_properties(const BeamModel& model) {
  model.validate();
  ElementProperties p{model.youngs_modulus_nominal, model.nominal_inertia(), model.nominal_area(),
                      model.density, model.element_length()};
  return std::vector<ElementProperties>(static_cast<std::size_t>(model.n_elements), p);
}

std::vector<int> SystemMatrices::translational_dofs() const {
  std::vector<int> dofs;
  for (int d : node_translation) {
    if (d >= 0) dofs.push_back(d);
  }
  return dofs;
}

SystemMatrices assemble(const BeamModel& model, std::span<const ElementProperties> per_element) {
  model.validate();
  if (per_element.size() != static_cast<std::size_t>(model.n_elements)) {
    std::ostringstream os;
    os << "expected " << model.n_elements << " element property sets, got " << per_element.size();
    throw InvalidInput(os.str());
  }

  const int n_nodes = model.n_elements + 1;
  const int offset = model.clamped_end ? 2 : 0;
  const int n_dofs = 2 * n_nodes - offset;
  auto global = [offset](int unconstrained) { return unconstrained - offset; };

  SystemMatrices sys;
  sys.mass = Matrix::Zero(n_dofs, n_dofs);
  sys.stiffness = Matrix::Zero(n_dofs, n_dofs);
  sys.dof_map.resize(per_element.size());
  sys.node_translation.resize(static_cast<std::size_t>(n_nodes));
  for (int node = 0; node < n_nodes; ++node) {
    sys.node_translation[static_cast<std::size_t>(node)] = global(2 * node);
  }

  for (int e = 0; e < model.n_elements; ++e) {
    const ElementMatrices em = element_matrices(per_element[static_cast<std::size_t>(e)]);
    auto& map = sys.dof_map[static_cast<std::size_t>(e)];
    for (int a = 0; a < 4; ++a) map[static_cast<std::size_t>(a)] = global(2 * e + a);
    for (int a = 0; a < 4; ++a) {
      const int ga = map[static_cast<std::size_t>(a)];
      if (ga < 0) continue;
      for (int b = 0; b < 4; ++b) {
        const int gb = map[static_cast<std::size_t>(b)];
        if (gb < 0) continue;
        sys.stiffness(ga, gb) += em.stiffness(a, b);
        sys.mass(ga, gb) += em.mass(a, b);
      }
    }
  }

  const double h = model.element_length();
  for (const auto& pm : model.point_masses) {
    const int node = static_cast<int>(std::lround(pm.position / h));
    const int dof = sys.node_translation[static_cast<std::size_t>(node)];
    // A mass sitting on the clamp does not participate.
    if (dof >= 0) sys.mass(dof, dof) += pm.mass;
  }
  return sys;
}

ModalSolution solve_modes(const SystemMatrices& sys, int n_modes) {
  check_mode_count(sys, n_modes);
  const StandardForm sf = to_standard_form(sys);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sf.reduced);
  if (eig.info() != Eigen::Success) throw NumericalError("eigen-solve: symmetric QR iteration did not converge");

  ModalSolution sol;
  sol.frequencies_hz.resize(n_modes);
  sol.mode_shapes = sf.chol.matrixU().solve(Matrix(eig.eigenvectors().leftCols(n_modes)));
  for (int i = 0; i < n_modes; ++i) {
    auto phi = sol.mode_shapes.col(i);
    double lambda = eig.eigenvalues()(i);
    // The low end of a stiff spectrum carries absolute error ~ eps·λ_max;
    // one shifted inverse-iteration step plus a Rayleigh quotient restores
    // full relative accuracy.
    if (lambda > 0.0) {
      const Matrix shifted = sys.stiffness - lambda * sys.mass;
      const Vector x = shifted.partialPivLu().solve(sys.mass * phi);
      const double xmx = x.dot(sys.mass * x);
      if (x.allFinite() && xmx > 0.0) {
        phi = x / std::sqrt(xmx);
        lambda = phi.dot(sys.stiffness * phi);
      }
    }
    sol.frequencies_hz(i) = to_hz(lambda);
    Eigen::Index peak = 0;
    phi.cwiseAbs().maxCoeff(&peak);
    if (phi(peak) < 0.0) phi = -phi;
  }
  return sol;
}

static Eigen::Index bandwidth(const Matrix& a) {
  Eigen::Index kd = 0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < j - kd; ++i) {
      if (a(i, j) != 0.0) {
        kd = j - i;
        break;
      }
    }
  }
  return kd;
}

Vector natural_frequencies(const SystemMatrices& sys, int n_modes) {
  check_mode_count(sys, n_modes);
  const auto n = static_cast<lapack_int>(sys.size());
  const auto kd = static_cast<lapack_int>(std::max(bandwidth(sys.stiffness), bandwidth(sys.mass)));
  const lapack_int ld = kd + 1;

  // Upper band storage, column-major: ab(kd + i - j, j) = A(i, j).
  std::vector<double> kb(static_cast<std::size_t>(ld * n), 0.0);
  std::vector<double> mb(kb.size(), 0.0);
  for (lapack_int j = 0; j < n; ++j) {
    for (lapack_int i = std::max<lapack_int>(0, j - kd); i <= j; ++i) {
      kb[static_cast<std::size_t>(kd + i - j + j * ld)] = sys.stiffness(i, j);
      mb[static_cast<std::size_t>(kd + i - j + j * ld)] = sys.mass(i, j);
    }
  }

  // Banded split-Cholesky reduction plus bisection for the lowest n_modes.
  std::vector<double> q(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  std::vector<double> w(static_cast<std::size_t>(n));
  std::vector<double> z(1);
  std::vector<lapack_int> ifail(static_cast<std::size_t>(n));
  lapack_int found = 0;
  const lapack_int info = LAPACKE_dsbgvx(LAPACK_COL_MAJOR, 'N', 'I', 'U', n, kd, kd, kb.data(), ld, mb.data(), ld,
                                         q.data(), n, 0.0, 0.0, 1, n_modes, 2.0 * LAPACKE_dlamch('S'), &found,
                                         w.data(), z.data(), 1, ifail.data());
  if (info > n) throw NumericalError("eigen-solve: mass matrix is not positive definite (banded Cholesky failed)");
  if (info != 0 || found != n_modes) {
    std::ostringstream os;
    os << "eigen-solve: banded generalized solver failed (info " << info << ", found " << found << " of "
       << n_modes << " eigenvalues)";
    throw NumericalError(os.str());
  }
  Vector f(n_modes);
  for (int i = 0; i < n_modes; ++i) f(i) = to_hz(w[static_cast<std::size_t>(i)]);
  return f;
}

SystemMatrices guyan_reduce(const SystemMatrices& sys, std::span<const int> master_dofs) {
  const auto n = static_cast<int>(sys.size());
  if (master_dofs.empty()) throw InvalidInput("guyan_reduce: master dof set is empty");
  std::vector<int> position(static_cast<std::size_t>(n), -1);
  for (std::size_t k = 0; k < master_dofs.size(); ++k) {
    const int d = master_dofs[k];
    if (d < 0 || d >= n) throw InvalidInput("guyan_reduce: master dof index out of range");
    if (position[static_cast<std::size_t>(d)] >= 0) throw InvalidInput("guyan_reduce: duplicate master dof");
    position[static_cast<std::size_t>(d)] = static_cast<int>(k);
  }
  const auto n_master = static_cast<int>(master_dofs.size());

  SystemMatrices out;
  out.node_translation = sys.node_translation;
  for (int& d : out.node_translation) d = d >= 0 ? position[static_cast<std::size_t>(d)] : -1;

  std::vector<int> order(master_dofs.begin(), master_dofs.end());
  for (int d = 0; d < n; ++d) {
    if (position[static_cast<std::size_t>(d)] < 0) order.push_back(d);
  }
  const Eigen::VectorXi idx = Eigen::Map<const Eigen::VectorXi>(order.data(), n);
  const Matrix k_perm = sys.stiffness(idx, idx);
  const Matrix m_perm = sys.mass(idx, idx);
  if (n_master == n) {
    out.stiffness = k_perm;
    out.mass = m_perm;
    return out;
  }

  const Eigen::Index n_slave = n - n_master;
  const Matrix k_ss = k_perm.bottomRightCorner(n_slave, n_slave);
  const Matrix k_sm = k_perm.bottomLeftCorner(n_slave, n_master);
  Eigen::LDLT<Matrix> k_ss_fact(k_ss);
  if (k_ss_fact.info() != Eigen::Success || !k_ss_fact.isPositive() ||
      k_ss_fact.vectorD().cwiseAbs().minCoeff() <= 1e-14 * k_ss_fact.vectorD().cwiseAbs().maxCoeff()) {
    throw NumericalError("guyan_reduce: slave-partition stiffness is singular");
  }

  // One step of iterative refinement keeps the condensed stiffness accurate
  // on long, slender meshes where K_ss is poorly conditioned.
  Matrix x = k_ss_fact.solve(k_sm);
  x += k_ss_fact.solve(k_sm - k_ss * x);
  Matrix transform(n, n_master);
  transform.topRows(n_master).setIdentity();
  transform.bottomRows(n_slave) = -x;

  out.stiffness = k_perm.topLeftCorner(n_master, n_master) - k_perm.topRightCorner(n_master, n_slave) * x;
  out.mass = transform.transpose() * m_perm * transform;
  out.stiffness = 0.5 * (out.stiffness + out.stiffness.transpose()).eval();
  out.mass = 0.5 * (out.mass + out.mass.transpose()).eval();
  return out;
}

Vector modal_residual(const SystemMatrices& sys, double omega, const Vector& shape) {
  if (shape.size() != sys.size()) {
    std::ostringstream os;
    os << "modal_residual: shape has " << shape.size() << " entries, system has " << sys.size()
       << " dofs (reduce the model onto the measured coordinates first)";
    throw InvalidInput(os.str());
  }
  return sys.stiffness * shape - omega * omega * (sys.mass * shape);
}

}  // namespace beamupdate
