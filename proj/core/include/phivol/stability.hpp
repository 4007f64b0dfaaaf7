#pragma once

#include <vector>

#include "phivol/variation.hpp"

namespace phivol {

// Second variation quadratic form at a critical point of the volume
// functional, over the nodal frame coefficients of Y (block j*N + node).
// Only valid where the mean curvature vanishes; assembly refuses otherwise.
struct QuadraticForm {
  Mat q;
  double a_constant = 0.0;  // eta-Einstein constant of the ambient model
  double h_norm = 0.0;      // measured mean curvature norm at assembly time
  int n = 0;
  int nodes = 0;
};

QuadraticForm assemble_quadratic_form(const DiscretizedImmersion& imm,
                                      const std::vector<NodeFrame>& frames,
                                      double minimality_tol = 1e-5);

// dof vector layout of the form, dof = j * nodes + node
Vec flatten_coefficients(const Mat& y_coeff);
Mat unflatten_coefficients(const Vec& dof, int n, int nodes);

// evaluates y^T Q y for a frame-coefficient field (n x nodes)
double quadratic_value(const QuadraticForm& form, const Mat& y_coeff);

struct StabilityVerdict {
  double a_constant = 0.0;
  double lambda_min = 0.0;
  Vec witness;                    // eigenvector of the smallest eigenvalue
  double eigen_residual = 0.0;    // |Q w - lambda w|
  bool stable = false;            // lambda_min >= -tol
  Mat coclosed_y;                 // divergence-free witness, n x nodes
  double coclosed_value = 0.0;    // Q on that witness
  double coclosed_divergence = 0.0;  // measured |div(rho Y)| on the witness
};

// Tangent field Y with div(rho Y) = 0 built from a coclosed 1-form: constant
// flux on curves, a stream function on 2-tori.
Mat coclosed_witness(const DiscretizedImmersion& imm,
                     const std::vector<NodeFrame>& frames);

// Dense symmetric eigendecomposition of the quadratic form plus the
// explicit divergence-free witness direction; stable when lambda_min >= -tol.
StabilityVerdict stability_check(const DiscretizedImmersion& imm,
                                 const std::vector<NodeFrame>& frames,
                                 double minimality_tol = 1e-5,
                                 double tol = 1e-6);

struct ConvexityReport {
  std::vector<double> times;
  std::vector<double> volumes;
  std::vector<double> second_differences;
  double min_second_difference = 0.0;
  double commutator_residual = 0.0;
};

// Samples the volume along the geodesic family generated by (Y, f) over
// [0, T]; convex functionals keep all second differences nonnegative.
ConvexityReport convexity_check(const DiscretizedImmersion& imm,
                                const Mat& y_param, const Vec& f, double T,
                                int samples, double dt = 0.0);

// At a minimal Legendrian immersion the variation Z = phi Y + f xi with
// Y = -grad f / 2 keeps the family Legendrian to first order and the second
// variation reduces to int [ (Delta f)^2 / 4 - 2 g(Y,Y) - Ric(phi Y, phi Y) ].
// Returns |full formula - reduced formula|.
double legendrian_reduction_residual(const DiscretizedImmersion& imm,
                                     const std::vector<NodeFrame>& frames,
                                     const Vec& f);

}  // namespace phivol
