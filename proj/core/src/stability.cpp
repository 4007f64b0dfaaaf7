#include "phivol/stability.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

#include "phivol/errors.hpp"

namespace phivol {

Vec flatten_coefficients(const Mat& y_coeff) {
  const int n = static_cast<int>(y_coeff.rows());
  const int total = static_cast<int>(y_coeff.cols());
  Vec out(n * total);
  for (int j = 0; j < n; ++j)
    out.segment(j * total, total) = y_coeff.row(j).transpose();
  return out;
}

Mat unflatten_coefficients(const Vec& dof, int n, int nodes) {
  Mat out(n, nodes);
  for (int j = 0; j < n; ++j)
    out.row(j) = dof.segment(j * nodes, nodes).transpose();
  return out;
}

QuadraticForm assemble_quadratic_form(const DiscretizedImmersion& imm,
                                      const std::vector<NodeFrame>& frames,
                                      double minimality_tol) {
  const SasakianModel& model = imm.model();
  const int n = model.n();
  const int total = imm.nodes();
  const int k = imm.grid().k();
  const double cell = imm.grid().cell_weight();

  const MeanCurvatureData mc = h_phi(imm, frames);
  if (!(mc.max_norm < minimality_tol))
    throw NotCriticalError(mc.max_norm, minimality_tol);

  QuadraticForm form;
  form.n = n;
  form.nodes = total;
  form.h_norm = mc.max_norm;
  form.a_constant = model.eta_einstein_constant().value_or(
      std::numeric_limits<double>::quiet_NaN());
  form.q = Mat::Zero(n * total, n * total);

  // node-diagonal block of the integrand, metric and curvature terms plus
  // the residual g(Y,H)^2 so the form matches the integrand exactly
  for (int node = 0; node < total; ++node) {
    const NodeFrame& fr = frames[node];
    const double w = cell * fr.rho * fr.sqrt_gram;
    Vec eta_e(n);
    for (int j = 0; j < n; ++j) eta_e(j) = model.eta(fr.p, fr.e.col(j));
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l) {
        double val = (2.0 * n + 2.0) * eta_e(j) * eta_e(l) -
                     model.ricci(fr.p, fr.e.col(j), fr.e.col(l)) +
                     mc.h_coeff(j, node) * mc.h_coeff(l, node);
        if (j == l) val -= 2.0;
        form.q(j * total + node, l * total + node) += w * val;
      }
  }

  // divergence block: rows of L evaluate div(rho Y) from the dofs, the
  // quadratic form adds int (div(rho Y)/rho)^2 rho sqrt(G)
  Mat L = Mat::Zero(total, n * total);
  for (int a = 0; a < k; ++a) {
    const Mat d = global_diff_matrix(imm.grid(), a);
    for (int j = 0; j < n; ++j) {
      Vec colw(total);
      for (int node = 0; node < total; ++node)
        colw(node) =
            frames[node].sqrt_gram * frames[node].rho * frames[node].coeff(j, a);
      L.block(0, j * total, total, total) += d * colw.asDiagonal();
    }
  }
  for (int node = 0; node < total; ++node) L.row(node) /= frames[node].sqrt_gram;
  Vec wdiag(total);
  for (int node = 0; node < total; ++node)
    wdiag(node) = cell * frames[node].sqrt_gram / frames[node].rho;
  form.q += L.transpose() * wdiag.asDiagonal() * L;

  const double asym = (form.q - form.q.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10)
    throw NumericalError("assembled quadratic form asymmetric by " +
                         std::to_string(asym));
  form.q = ((form.q + form.q.transpose()) / 2.0).eval();
  return form;
}

double quadratic_value(const QuadraticForm& form, const Mat& y_coeff) {
  const Vec dof = flatten_coefficients(y_coeff);
  return dof.dot(form.q * dof);
}

Mat coclosed_witness(const DiscretizedImmersion& imm,
                     const std::vector<NodeFrame>& frames) {
  const int k = imm.grid().k();
  const int total = imm.nodes();

  if (k == 1) {
    // constant flux: rho * sqrt(G) * Y^1 = 1 along the curve
    Mat y_param(1, total);
    for (int node = 0; node < total; ++node)
      y_param(0, node) = 1.0 / (frames[node].rho * frames[node].sqrt_gram);
    return coefficients_from_parameters(frames, y_param);
  }
  if (k == 2) {
    // stream function psi: flux = (d_2 psi, -d_1 psi) is divergence free
    Vec psi(total);
    for (int node = 0; node < total; ++node) {
      Vec t = imm.grid().node_params(node);
      psi(node) = std::sin(t(0)) * std::cos(t(1)) + 0.5 * std::cos(t(0));
    }
    Mat psi_row(1, total);
    psi_row.row(0) = psi.transpose();
    Mat d1 = imm.partial_of(psi_row, 0);
    Mat d2 = imm.partial_of(psi_row, 1);
    Mat y_param(2, total);
    for (int node = 0; node < total; ++node) {
      const double scale = frames[node].rho * frames[node].sqrt_gram;
      y_param(0, node) = d2(0, node) / scale;
      y_param(1, node) = -d1(0, node) / scale;
    }
    return coefficients_from_parameters(frames, y_param);
  }
  throw ConfigError("coclosed witness is implemented for curves and surfaces");
}

StabilityVerdict stability_check(const DiscretizedImmersion& imm,
                                 const std::vector<NodeFrame>& frames,
                                 double minimality_tol, double tol) {
  const SasakianModel& model = imm.model();
  const auto a_const = model.eta_einstein_constant();
  if (!a_const)
    throw UnsupportedModelError(
        "stability verdict needs an eta-Einstein ambient model");

  const QuadraticForm form =
      assemble_quadratic_form(imm, frames, minimality_tol);

  Eigen::SelfAdjointEigenSolver<Mat> solver(form.q);
  if (solver.info() != Eigen::Success)
    throw NumericalError("eigendecomposition of the quadratic form failed");

  StabilityVerdict verdict;
  verdict.a_constant = *a_const;
  verdict.lambda_min = solver.eigenvalues()(0);
  verdict.witness = solver.eigenvectors().col(0);
  verdict.eigen_residual =
      (form.q * verdict.witness - verdict.lambda_min * verdict.witness).norm();
  verdict.stable = verdict.lambda_min >= -tol;

  verdict.coclosed_y = coclosed_witness(imm, frames);
  verdict.coclosed_value = quadratic_value(form, verdict.coclosed_y);
  verdict.coclosed_divergence =
      rho_divergence(imm, frames, verdict.coclosed_y).cwiseAbs().maxCoeff();
  return verdict;
}

ConvexityReport convexity_check(const DiscretizedImmersion& imm,
                                const Mat& y_param, const Vec& f, double T,
                                int samples, double dt) {
  if (samples < 2) throw ConfigError("convexity check needs at least 2 samples");
  const GeodesicFamily fam = geodesic_evolve(imm, y_param, f, T, samples, dt);

  ConvexityReport report;
  report.times = fam.times;
  for (const DiscretizedImmersion& member : fam.members)
    report.volumes.push_back(phi_volume(member).total);

  const double step = fam.times[1] - fam.times[0];
  double min_dd = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < report.volumes.size(); ++i) {
    const double dd = (report.volumes[i + 1] - 2.0 * report.volumes[i] +
                       report.volumes[i - 1]) /
                      (step * step);
    report.second_differences.push_back(dd);
    min_dd = std::min(min_dd, dd);
  }
  report.min_second_difference = min_dd;
  report.commutator_residual =
      geodesic_commutator_residual(fam.members.back(), y_param, f);
  return report;
}

double legendrian_reduction_residual(const DiscretizedImmersion& imm,
                                     const std::vector<NodeFrame>& frames,
                                     const Vec& f) {
  const SasakianModel& model = imm.model();
  const double defect = legendrian_defect(imm);
  if (defect > 1e-6)
    throw ConfigError("reduction holds for Legendrian immersions, defect " +
                      std::to_string(defect));
  const MeanCurvatureData mc = h_phi(imm, frames);
  if (!(mc.max_norm < 1e-5)) throw NotCriticalError(mc.max_norm, 1e-5);

  HorizontalField v;
  v.y = (-0.5 * gradient_coefficients(imm, frames, f)).eval();
  v.f = f;
  const double full = second_variation_analytic(imm, frames, v);

  const Vec lap = laplace_beltrami(imm, frames, f);
  Vec density(imm.nodes());
  for (int node = 0; node < imm.nodes(); ++node) {
    const NodeFrame& fr = frames[node];
    Vec y_chart = fr.e * v.y.col(node);
    Vec phiy = model.phi(fr.p, y_chart);
    density(node) = 0.25 * lap(node) * lap(node) -
                    2.0 * v.y.col(node).squaredNorm() -
                    model.ricci(fr.p, phiy, phiy);
  }
  const double reduced = integrate_density(imm, frames, density);
  return std::abs(full - reduced);
}

}  // namespace phivol
