#pragma once

#include <complex>
#include <memory>
#include <vector>

#include "phivol/frame.hpp"
#include "phivol/immersion.hpp"

namespace phivol {

// Flat Kaehler cone over an odd sphere, C(S^{2n+1}) = C^{n+1} \ {0}.  The
// cone complex structure acts as multiplication by i on the coordinates
// w_j = x_j - i y_j adapted to the contact structure, and the holomorphic
// volume form is dw_1 ^ ... ^ dw_{n+1}.
struct ConeStructure {
  std::shared_ptr<const SasakianModel> base;
  int n = 0;
  int dim = 0;  // ambient chart dimension 2n+2

  // w coordinates of a real chart vector
  CVec complex_coordinates(const Vec& v) const;
  // the cone complex structure as a real chart matrix
  Mat complex_structure() const;
  // flat Kaehler form, omega(u, v) = <J u, v>
  double kaehler_form(const Vec& u, const Vec& v) const;
};

// Throws UnsupportedModelError unless the base declares a flat Kaehler cone.
ConeStructure make_cone(std::shared_ptr<const SasakianModel> base);

// holomorphic volume form on n+1 chart vectors (columns)
std::complex<double> holomorphic_volume(const ConeStructure& cone,
                                        const Mat& vectors);
// contraction of the volume form with the position, on n columns
std::complex<double> psi_eval(const ConeStructure& cone, const Vec& p,
                              const Mat& vectors);

// residual of omega^{n+1}/(n+1)! = (-1)^{n(n+1)/2} (i/2)^{n+1}
// Omega ^ conj(Omega) evaluated on the standard chart basis
double omega_normalization_residual(const ConeStructure& cone);
// residual of Omega = (dr - i eta) ^ psi at p on n+1 chart vectors
double reconstruction_residual(const ConeStructure& cone, const Vec& p,
                               const Mat& vectors);

struct AngleField {
  Vec theta;    // per node angle, unwrapped along the grid
  Vec psi_abs;  // |iota* psi| on the orthonormal frame
  Vec rho;      // calibration density per node
  double max_mismatch = 0.0;  // max node | |psi| - rho |
};

// d theta(d/dt_a) per grid direction, computed from the logarithmic
// derivative of iota*psi so winding angles need no unwrapping
Mat angle_differential(const ConeStructure& cone,
                       const DiscretizedImmersion& imm);

// Per node angle of iota*psi against the calibration measure, unwrapped by
// nearest-branch continuation from node 0.  Throws ResolutionError when the
// angle moves a quarter turn or more across one cell, the safety margin
// against picking a wrong branch.
AngleField legendrian_angle(const ConeStructure& cone,
                            const DiscretizedImmersion& imm,
                            const std::vector<NodeFrame>& frames);

struct CalibrationReport {
  Vec re_psi;  // Re iota*psi on the orthonormal frame
  Vec rho;
  double max_first_violation = 0.0;   // max node of Re psi - rho
  double max_second_violation = 0.0;  // max node of rho - 1
  bool first_equality = false;        // Re psi = rho everywhere (special)
  bool second_equality = false;       // rho = 1 everywhere (Legendrian)
};

// Node-wise calibration chain Re iota*psi <= rho <= 1 on the orthonormal
// frame, with the equality cases flagged within tol.
CalibrationReport calibration_check(const ConeStructure& cone,
                                    const DiscretizedImmersion& imm,
                                    const std::vector<NodeFrame>& frames,
                                    double tol = 1e-10);

// max node chart norm of (d theta)# - (-(n+1) xi^T + H_phi), the gradient
// side spectral, the right side from the frame pipeline
double angle_gradient_residual(const ConeStructure& cone,
                               const DiscretizedImmersion& imm,
                               const std::vector<NodeFrame>& frames);

struct SpecialDefect {
  double theta = 0.0;   // best constant phase, in (-pi, pi]
  double defect = 0.0;  // max node |Im(e^{-i theta} iota*psi)| at the optimum
};

// Scans for the constant phase minimizing the imaginary part of the rotated
// pullback; zero defect means special affine Legendrian up to phase.
SpecialDefect special_defect(const ConeStructure& cone,
                             const DiscretizedImmersion& imm,
                             const std::vector<NodeFrame>& frames);

}  // namespace phivol
