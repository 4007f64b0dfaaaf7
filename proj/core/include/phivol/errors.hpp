#pragma once

#include <stdexcept>
#include <string>

namespace phivol {

// Raised when a configuration file or CLI flag set cannot be interpreted.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a point fails the membership test of the ambient model.
struct OffManifoldError : std::domain_error {
  explicit OffManifoldError(const std::string& what) : std::domain_error(what) {}
};

// Raised when the frame (e_i, phi e_i, xi) fails to span the ambient tangent
// space at some grid node.  Carries the offending node and the smallest
// singular value of the change of basis matrix.
struct NotAffineLegendrianError : std::runtime_error {
  NotAffineLegendrianError(int node_, double min_singular_value_,
                           const std::string& what)
      : std::runtime_error(what), node(node_),
        min_singular_value(min_singular_value_) {}
  NotAffineLegendrianError(int node_, double min_singular_value_)
      : NotAffineLegendrianError(
            node_, min_singular_value_,
            "frame degenerate at node " + std::to_string(node_) +
                " (min singular value " + std::to_string(min_singular_value_) + ")") {}
  int node;
  double min_singular_value;
};

// Raised when the oriented volume of the frame comes out non positive.
struct OrientationError : std::runtime_error {
  OrientationError(int node_, double value_, const std::string& what)
      : std::runtime_error(what), node(node_), value(value_) {}
  OrientationError(int node_, double value_)
      : OrientationError(node_, value_,
                         "negative oriented frame volume " + std::to_string(value_) +
                             " at node " + std::to_string(node_)) {}
  int node;
  double value;
};

// Raised when an operation needs rho > 0 but the density is numerically zero.
struct DegenerateDensityError : std::runtime_error {
  DegenerateDensityError(int node_, double rho_, const std::string& what)
      : std::runtime_error(what), node(node_), rho(rho_) {}
  DegenerateDensityError(int node_, double rho_)
      : DegenerateDensityError(node_, rho_,
                               "calibration density " + std::to_string(rho_) +
                                   " vanishes at node " + std::to_string(node_)) {}
  int node;
  double rho;
};

// Raised when an operation is asked for on a model that does not support it,
// for example cone calibration over a base that is not Einstein.
struct UnsupportedModelError : std::domain_error {
  explicit UnsupportedModelError(const std::string& what)
      : std::domain_error(what) {}
};

// Raised when a linear solve, eigendecomposition or iteration fails for
// numerical reasons (singular mass matrix, no convergence).
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when the grid is too coarse to resolve a field, for example an
// angle that turns by more than pi between adjacent nodes.
struct ResolutionError : std::runtime_error {
  explicit ResolutionError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when the second variation quadratic form is requested away from a
// critical point of the volume functional.  Carries the measured mean
// curvature norm.
struct NotCriticalError : std::runtime_error {
  NotCriticalError(double h_norm_, double tol_)
      : std::runtime_error("mean curvature norm " + std::to_string(h_norm_) +
                           " exceeds the criticality gate " + std::to_string(tol_)),
        h_norm(h_norm_), tol(tol_) {}
  double h_norm;
  double tol;
};

}  // namespace phivol
