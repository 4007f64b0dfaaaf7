#pragma once

#include <vector>

#include "phivol/immersion.hpp"

namespace phivol {

// Pointwise adapted frame over one node of an immersed half dimensional
// submanifold L^n of M^{2n+1}.  e is the ascending Gram-Schmidt
// orthonormalisation of the parameter partials; B stacks [e | phi e | xi]
// plus the position for models embedded in a larger chart, so B is square
// exactly when L is affine Legendrian at the node.
struct NodeFrame {
  Vec p;
  Mat partials;  // chart_dim x n
  Mat e;         // chart_dim x n, g-orthonormal tangent frame
  Mat coeff;     // n x n, e_i = sum_a coeff(i, a) partials_a
  Mat phie;      // chart_dim x n
  Vec xi;
  Vec xi_top;    // tangential part of xi at the node
  double sqrt_gram = 0.0;  // induced volume density of the parametrisation
  double rho = 0.0;        // calibration density on the orthonormal frame
  Mat B;
  Mat Binv;
  double min_singular_value = 0.0;

  // projection onto the tangent bundle of L along phi TL + R xi
  Mat tangent_projection() const;
  // projection onto phi TL + R xi along TL
  Mat normal_projection() const;
  // g-transpose of a chart endomorphism at this node (metric passed in)
  static Mat g_transpose(const Mat& P, const Mat& metric);
};

struct FrameOptions {
  double frame_floor = 1e-8;  // min singular value of B below this is fatal
  double rho_floor = 1e-6;    // calibration density below this is fatal
  double orientation_tol = 1e-10;
};

// Builds the adapted frame at every node.  Throws NotAffineLegendrianError,
// DegenerateDensityError or OrientationError with the offending node.
std::vector<NodeFrame> build_frames(const DiscretizedImmersion& imm,
                                    const FrameOptions& opts = {});

struct PhiVolume {
  Vec node_density;  // rho * sqrt_gram per node
  double total = 0.0;
};

// total phi-volume: integral of the calibration density against the induced
// measure, spectral trapezoid quadrature on the periodic grid
PhiVolume phi_volume(const DiscretizedImmersion& imm,
                     const std::vector<NodeFrame>& frames);
PhiVolume phi_volume(const DiscretizedImmersion& imm);

}  // namespace phivol
