#pragma once

#include <phivol/sasakian.hpp>

namespace phivol::testing {

// Christoffel contraction Gamma(u, v) from the Koszul formula with finite
// difference derivatives of the metric matrix.  Valid for models whose chart
// covers the manifold (chart_dim == manifold_dim).
Vec christoffel_fd_chart(const SasakianModel& model, const Vec& p, const Vec& u,
                         const Vec& v, double h = 1e-4);

// R(X, Y) Z by nested covariant finite differences of projected extensions.
// Independent of the exact curvature evaluators.
Vec curvature_fd(const SasakianModel& model, const Vec& p, const Vec& X,
                 const Vec& Y, const Vec& Z, double h_inner = 1e-4,
                 double h_outer = 1e-3);

// Ricci tensor traced from curvature_fd.
double ricci_fd(const SasakianModel& model, const Vec& p, const Vec& u, const Vec& v);

// Chart residual of the geodesic equation for the curve s -> exp(p, s v)
// at parameter s0: c''(s0) + Gamma(c, c', c').
Vec geodesic_residual_fd(const SasakianModel& model, const Vec& p, const Vec& v,
                         double s0, double h = 1e-4);

}  // namespace phivol::testing
