#pragma once

// Planar Euler-Bernoulli cantilever: element matrices, assembly, modal
// solution, Guyan condensation and the modal equation residual.

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace beamupdate {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct PointMass {
  double position = 0.0;  // m from the root
  double mass = 0.0;      // kg
};

struct BeamModel {
  double length = 0.0;
  double width = 0.0;
  double thickness = 0.0;
  double youngs_modulus_nominal = 0.0;
  double poisson_ratio = 0.0;
  double density = 0.0;
  int n_elements = 0;
  std::vector<PointMass> point_masses;
  bool clamped_end = true;

  void validate() const;
  double element_length() const { return length / n_elements; }
  double nominal_inertia() const { return width * thickness * thickness * thickness / 12.0; }
  double nominal_area() const { return width * thickness; }
};

struct ElementProperties {
  double youngs_modulus = 0.0;
  double inertia = 0.0;
  double area = 0.0;
  double density = 0.0;
  double length = 0.0;

  void validate() const;
};

struct ElementMatrices {
  Eigen::Matrix4d stiffness;
  Eigen::Matrix4d mass;
};

/// Hermite-cubic bending element with (w, θ) at each node and consistent mass.
ElementMatrices element_matrices(const ElementProperties& props);

/// Per-element properties from the beam's nominal geometry and material.
std::vector<ElementProperties> nominal_properties(const BeamModel& model);

struct SystemMatrices {
  Matrix mass;
  Matrix stiffness;
  // Global dof of each element-local dof; -1 where the dof was constrained.
  std::vector<std::array<int, 4>> dof_map;
  // Global dof carrying the transverse displacement of each node (-1 if fixed).
  std::vector<int> node_translation;

  Eigen::Index size() const { return stiffness.rows(); }
  std::vector<int> translational_dofs() const;
};

SystemMatrices assemble(const BeamModel& model, std::span<const ElementProperties> per_element);

struct ModalSolution {
  Vector frequencies_hz;  // ascending
  Matrix mode_shapes;     // mass-normalised columns
};

/// Lowest `n_modes` eigenpairs of K φ = ω² M φ.
ModalSolution solve_modes(const SystemMatrices& sys, int n_modes);

/// Eigenvalue-only variant of solve_modes (same factorisation, no vectors).
Vector natural_frequencies(const SystemMatrices& sys, int n_modes);

/// Static condensation onto `master_dofs` (kept in the given order).
SystemMatrices guyan_reduce(const SystemMatrices& sys, std::span<const int> master_dofs);

/// (K - ω² M) φ for a measured pair (ω in rad/s).
Vector modal_residual(const SystemMatrices& sys, double omega, const Vector& shape);

}  // namespace beamupdate
