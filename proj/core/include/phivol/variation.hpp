#pragma once

#include <vector>

#include "phivol/frame.hpp"
#include "phivol/immersion.hpp"

namespace phivol {

// Variation field Z = phi Y + f xi with Y tangent to L.  Y is stored by its
// coefficients in the orthonormal frame e_1..e_n, one column per node.
struct HorizontalField {
  Mat y;  // n x nodes
  Vec f;  // nodes
};

// Oblique decomposition Z = X + phi Y + f xi in the adapted frame.  Any
// component outside the span of the frame (off-manifold) is dropped.
struct FrameDecomposition {
  Mat x;  // n x nodes, coefficients of the tangential part
  Mat y;  // n x nodes
  Vec f;  // nodes
};

struct MeanCurvatureData {
  Mat h_chart;  // chart_dim x nodes, tangent to L at every node
  Mat h_coeff;  // n x nodes, g(e_j, H)
  double max_norm = 0.0;
};

// Spectral partial derivatives of a periodic nodal field, one matrix per
// grid direction.
std::vector<Mat> field_partials(const DiscretizedImmersion& imm, const Mat& field);

// Covariant derivative of a nodal ambient field along the frame direction i.
Mat covariant_frame_derivative(const DiscretizedImmersion& imm,
                               const std::vector<NodeFrame>& frames,
                               const Mat& field, int i);

// Chart components of Y (from frame coefficients) and of Z = phi Y + f xi.
Mat tangent_chart(const std::vector<NodeFrame>& frames, const Mat& y_coeff);
Mat horizontal_chart(const DiscretizedImmersion& imm,
                     const std::vector<NodeFrame>& frames,
                     const HorizontalField& v);
FrameDecomposition decompose_in_frame(const std::vector<NodeFrame>& frames,
                                      const Mat& Z);

// Mean curvature of the calibration functional, assembled from the trace
// identity g(e_j, H) = (n+1) eta(e_j) + sum_i f^i(nabla_{e_i} e_j).
MeanCurvatureData h_phi(const DiscretizedImmersion& imm,
                        const std::vector<NodeFrame>& frames);
// Same vector through derivatives of the transposed tangential projector,
// g(e_j, H - xi^T) = sum_i g(phi e_j, nabla_{e_i}(pi_L^t e_i)).
MeanCurvatureData h_phi_projector(const DiscretizedImmersion& imm,
                                  const std::vector<NodeFrame>& frames);
// Weak-form recovery: finite differences of the total volume against a
// spanning family of Fourier test fields, then a mass matrix solve.  m_max
// truncates the Fourier order per direction (0 = full span, 1d grids only).
MeanCurvatureData h_phi_weak_oracle(const DiscretizedImmersion& imm,
                                    const std::vector<NodeFrame>& frames,
                                    double h = 1e-3, int m_max = 0);

// Riemannian mean curvature (g-orthogonal trace of the second fundamental
// form), used for the Legendrian cross check H_phi = -phi H.
Mat mean_curvature(const DiscretizedImmersion& imm,
                   const std::vector<NodeFrame>& frames);

// div(rho Y) on (L, iota^* g) for a tangent field given by frame
// coefficients; spectral differentiation of the flux components.
Vec rho_divergence(const DiscretizedImmersion& imm,
                   const std::vector<NodeFrame>& frames, const Mat& y_coeff);
// Laplace-Beltrami operator of the induced metric, div(grad f).
Vec laplace_beltrami(const DiscretizedImmersion& imm,
                     const std::vector<NodeFrame>& frames, const Vec& f);
// grad f in frame coefficients, g(e_j, grad f) = e_j(f).
Mat gradient_coefficients(const DiscretizedImmersion& imm,
                          const std::vector<NodeFrame>& frames, const Vec& f);

// integral of a nodal coefficient against the calibration measure
double integrate_density(const DiscretizedImmersion& imm,
                         const std::vector<NodeFrame>& frames,
                         const Vec& density);

// First variation of the total volume.  The density is the pointwise
// logarithmic derivative sum_i e^i(nabla_{e_i} Z) - eta^*(phi Z); the
// analytic total is the pairing -int g(Y, H) against the calibration
// measure, which drops the f and tangential parts of Z.
Vec first_variation_density(const DiscretizedImmersion& imm,
                            const std::vector<NodeFrame>& frames, const Mat& Z);
double first_variation_analytic(const DiscretizedImmersion& imm,
                                const std::vector<NodeFrame>& frames,
                                const MeanCurvatureData& mc, const Mat& y_coeff);
double first_variation_analytic(const DiscretizedImmersion& imm,
                                const std::vector<NodeFrame>& frames,
                                const Mat& Z);

// Node-wise geodesic push of the immersion along a fixed ambient field.
DiscretizedImmersion exponential_push(const DiscretizedImmersion& imm,
                                      const Mat& Z, double t);

// Richardson-extrapolated central differences of the total volume along the
// node-wise exponential family.
double first_variation_fd(const DiscretizedImmersion& imm, const Mat& Z,
                          double h = 1e-3);
double second_variation_fd_exponential(const DiscretizedImmersion& imm,
                                       const Mat& Z, double h = 1e-2);

// Family moving every point with velocity phi (iota_t)_* Y + f xi for a
// fixed parameter-component field Y and scalar f (a geodesic through the
// space of affine Legendrian embeddings).
struct GeodesicFamily {
  std::vector<double> times;
  std::vector<DiscretizedImmersion> members;
  Mat y_param;  // k x nodes, frozen parameter components of Y
  Vec f;
  double dt = 0.0;
};

// parameter components of a tangent field, Y = sum_a Y^a d/dt_a
Mat parameter_components(const std::vector<NodeFrame>& frames, const Mat& y_coeff);
// inverse map, frame coefficients from parameter components (node-wise solve)
Mat coefficients_from_parameters(const std::vector<NodeFrame>& frames,
                                 const Mat& y_param);

// RK4 integration of the geodesic equation from 0 to t (t may be negative);
// dt <= 0 picks min(1e-3, grid spacing / 4).  Points are reprojected to the
// model after every step.
DiscretizedImmersion geodesic_push(const DiscretizedImmersion& imm,
                                   const Mat& y_param, const Vec& f, double t,
                                   double dt = 0.0);
GeodesicFamily geodesic_evolve(const DiscretizedImmersion& imm,
                               const Mat& y_param, const Vec& f, double T,
                               int samples, double dt = 0.0);
// max node norm of [ (iota_t)_* Y, velocity ], measured by comparing the
// spectral derivative of the velocity along Y with a central difference of
// the pushforward across two micro steps
double geodesic_commutator_residual(const DiscretizedImmersion& member,
                                    const Mat& y_param, const Vec& f,
                                    double delta = 1e-3);

// Pointwise second derivative of the volume density for a general variation
// field Z; zz is the family acceleration (empty = geodesic exponential
// family).  Returns the coefficient relative to the density at t = 0.
Vec second_variation_density(const DiscretizedImmersion& imm,
                             const std::vector<NodeFrame>& frames, const Mat& Z,
                             const Mat& zz = Mat());

// Acceleration at t = 0 of the frozen-(Y, f) geodesic family, and the
// tangential bracket pi_L [Z, Y] of the node-wise exponential family.
Mat geodesic_acceleration(const DiscretizedImmersion& imm,
                          const std::vector<NodeFrame>& frames,
                          const HorizontalField& v);
Mat exponential_bracket(const DiscretizedImmersion& imm,
                        const std::vector<NodeFrame>& frames,
                        const HorizontalField& v);

enum class BracketMode { Zero, Supplied };

// Second variation of the total volume for Z = phi Y + f xi:
// int [ (2n+2) eta(Y)^2 - 2 g(Y,Y) - Ric(Y,Y) - g(pi_L[Z,Y], H)
//       + g(Y,H)^2 + (div(rho Y)/rho)^2 ] vol.
// BracketMode::Zero is exact along geodesic families.
Vec second_variation_integrand(const DiscretizedImmersion& imm,
                               const std::vector<NodeFrame>& frames,
                               const HorizontalField& v,
                               const MeanCurvatureData& mc,
                               BracketMode mode = BracketMode::Zero,
                               const Mat* bracket = nullptr);
double second_variation_analytic(const DiscretizedImmersion& imm,
                                 const std::vector<NodeFrame>& frames,
                                 const HorizontalField& v,
                                 BracketMode mode = BracketMode::Zero,
                                 const Mat* bracket = nullptr);

// FD oracles along geodesic families: total volume and nodal density second
// differences with Richardson extrapolation.
double second_variation_fd_geodesic(const DiscretizedImmersion& imm,
                                    const Mat& y_param, const Vec& f, double h,
                                    double dt = 0.0);
Vec density_second_derivative_fd_geodesic(const DiscretizedImmersion& imm,
                                          const Mat& y_param, const Vec& f,
                                          double h, double dt = 0.0);
Vec density_second_derivative_fd_exponential(const DiscretizedImmersion& imm,
                                             const Mat& Z, double h);

}  // namespace phivol
