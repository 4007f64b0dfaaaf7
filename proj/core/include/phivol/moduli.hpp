#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/LU>

#include "phivol/cone.hpp"
#include "phivol/frame.hpp"
#include "phivol/variation.hpp"

namespace phivol {

// Discrete de Rham complex of the parameter torus carrying the metric
// induced by an immersion.  Functions are nodal vectors, 1-forms store the
// coordinate components alpha(d/dt_a) per node.  d differentiates
// spectrally; d* is built so that <df, beta> = <f, d* beta> holds under the
// quadrature inner products to machine precision (the differentiation
// matrices are antisymmetric).
struct DiscreteComplex {
  int k = 0;
  int total = 0;
  double cell = 0.0;
  std::vector<Mat> diff;        // dense spectral derivative per direction
  Vec sqrt_det;                 // induced volume density per node
  std::vector<Mat> metric_inv;  // inverse induced metric per node, k x k

  Mat differential(const Vec& f) const;
  Vec codifferential(const Mat& alpha) const;
  // d* d
  Vec laplacian(const Vec& f) const;
  Mat laplacian_matrix() const;
  double inner(const Vec& f, const Vec& h) const;
  double inner(const Mat& alpha, const Mat& beta) const;
  // components of d(d f) over direction pairs a < b, empty on curve grids
  Vec dd_residual(const Vec& f) const;
};

DiscreteComplex make_discrete_complex(const DiscretizedImmersion& imm,
                                      const std::vector<NodeFrame>& frames);

// sorted eigenvalues of shift + d*d, symmetrised by the quadrature weight
Vec shifted_laplacian_spectrum(const DiscreteComplex& cx, double shift);

// alpha = d(potential) + coclosed, orthogonal under the quadrature pairing.
// Curve grids use the constant-flux closed form, surface grids conjugate
// gradient on the weighted Laplacian.
struct HodgeSplit {
  Vec potential;  // mean free against the induced measure
  Mat exact;
  Mat coclosed;
  double coclosed_residual = 0.0;  // max node |d* coclosed|
  double cross_inner = 0.0;        // quadrature pairing of the two parts
};

HodgeSplit hodge_split(const DiscreteComplex& cx, const Mat& alpha);

// Normal field phi iota_* Y + f xi encoded as the pair
// (g, alpha) = (rho f, iota^* g(rho Y, .)); in these coordinates the
// linearised defect operator is (g, alpha) -> -(n+1) g - d* alpha and its
// kernel directions are exactly representable.
struct NormalEncoding {
  Vec g;
  Mat alpha;  // k x nodes coordinate components
};

// Base point of the deformation problem: a special immersion (the pullback
// of psi is real and positive), its frames, cone structure, discrete
// complex and the frozen elliptic solver (n+1)^2 + d*d used by the
// Gauss-Newton corrector.
struct ModuliState {
  DiscretizedImmersion base;
  std::vector<NodeFrame> frames;
  ConeStructure cone;
  DiscreteComplex complex;
  double base_defect = 0.0;  // max node |Im iota*psi| on the frame
  Mat normal_operator;
  std::shared_ptr<const Eigen::PartialPivLU<Mat>> normal_solver;
  // dealiasing projector applied to every Gauss-Newton correction; keeps
  // the iterates inside the well resolved part of the spectrum, otherwise
  // the loop can pump energy to the aliasing edge and escape to far away
  // multiply covered zeros
  Mat filter;
};

// Throws ConfigError when the base pullback has an imaginary part above
// special_tol, OrientationError when Re iota*psi is not positive.
ModuliState make_moduli_state(const DiscretizedImmersion& imm,
                              double special_tol = 1e-8);

// linearised defect -(n+1) g - d* alpha and its adjoint (-(n+1)h, -dh)
Vec d1_apply(const ModuliState& state, const NormalEncoding& v);
NormalEncoding d1_adjoint(const ModuliState& state, const Vec& h);
// composition, equals (n+1)^2 h + d* d h
Vec d1d1star_apply(const ModuliState& state, const Vec& h);

// dense eigenvalues of (n+1)^2 + d*d on a curve grid, all >= (n+1)^2
Vec laplacian_identity_spectrum(const ModuliState& state);

// the (rho f, iota^* g(rho Y, .)) identification and its inverse; the
// round trip reproduces the input to solver precision
NormalEncoding encode_normal(const ModuliState& state,
                             const HorizontalField& field);
HorizontalField decode_normal(const ModuliState& state,
                              const NormalEncoding& enc);

// completes a 1-form to the kernel element (-(d* alpha)/(n+1), alpha)
NormalEncoding kernel_element(const ModuliState& state, const Mat& alpha);

// kernel basis over the coordinate delta 1-forms, dimension k * nodes;
// every element satisfies d1_apply == 0 identically
std::vector<NormalEncoding> moduli_tangent_basis(const ModuliState& state);

// node-wise geodesic exponential of the decoded normal field; throws
// ConfigError when a step reaches the sphere injectivity scale pi/2
DiscretizedImmersion exp_normal(const ModuliState& state,
                                const NormalEncoding& v);

// residual field of the deformation problem: the Hodge star, taken with
// the base metric, of the pullback of Im psi through exp_normal
struct DefectField {
  Vec residual;
  Vec re_psi;  // Re iota*psi on the deformed coordinate frame
  bool positive = true;
};

DefectField special_residual(const ModuliState& state,
                             const NormalEncoding& v);

// FrozenBase corrects with the base-point operators only; Rebased rebuilds
// frames and operators at every iterate, which restores quadratic decay
enum class NewtonMode { FrozenBase, Rebased };

struct NewtonReport {
  // converged normal field; in Rebased mode the field of the last rebase,
  // which is zero at convergence
  NormalEncoding v;
  DiscretizedImmersion immersion;
  std::vector<double> residual_history;  // sup norm per iterate, first entry
                                         // is the starting residual
  double measured_order = 0.0;  // best log-ratio fit over residual triples
  int iterations = 0;
  double final_defect = 0.0;  // optimal-phase defect of the result
  NewtonMode mode = NewtonMode::Rebased;
};

// Gauss-Newton projection v <- v - D1*(D1 D1*)^{-1} F(v) onto the zero set
// of the residual.  Throws NumericalError on divergence or when max_iter
// is exhausted, OrientationError when Re iota*psi loses positivity, and
// ResolutionError when the residual stalls above tol, which happens when
// the zero needs modes beyond the dealiasing cutoff of the grid.
NewtonReport newton_project(const ModuliState& state, const NormalEncoding& v0,
                            double tol = 1e-10, int max_iter = 50,
                            NewtonMode mode = NewtonMode::Rebased);

// coordinate components of a 1-form pattern at given node parameters
using FormPattern = std::function<Vec(const Vec& params)>;

struct WalkStep {
  DiscretizedImmersion immersion;
  double residual = 0.0;      // final Gauss-Newton residual
  double special_defect = 0.0;
  double volume = 0.0;
  int iterations = 0;
};

// Repeated kernel step + projection: scales the pattern by step_size,
// completes it to a kernel element at the current base, projects back to
// the zero set and rebases.  Every returned immersion is special.
std::vector<WalkStep> moduli_walk(const DiscretizedImmersion& base,
                                  const FormPattern& pattern, int steps,
                                  double step_size, double tol = 1e-10,
                                  NewtonMode mode = NewtonMode::Rebased);

}  // namespace phivol
