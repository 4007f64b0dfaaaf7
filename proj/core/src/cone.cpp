#include "phivol/cone.hpp"

#include <algorithm>
#include <cmath>

#include "phivol/errors.hpp"
#include "phivol/variation.hpp"

namespace phivol {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Pfaffian of an even skew matrix by expansion along the first row
double pfaffian(const Mat& a) {
  const int m = static_cast<int>(a.rows());
  if (m == 0) return 1.0;
  double acc = 0.0;
  for (int j = 1; j < m; ++j) {
    if (a(0, j) == 0.0) continue;
    Mat minor(m - 2, m - 2);
    int rr = 0;
    for (int r = 1; r < m; ++r) {
      if (r == j) continue;
      int cc = 0;
      for (int c = 1; c < m; ++c) {
        if (c == j) continue;
        minor(rr, cc) = a(r, c);
        ++cc;
      }
      ++rr;
    }
    const double sign = (j % 2 == 1) ? 1.0 : -1.0;
    acc += sign * a(0, j) * pfaffian(minor);
  }
  return acc;
}

// iota*psi on the parameter partials, one complex value per node
CVec psi_on_partials(const ConeStructure& cone, const DiscretizedImmersion& imm) {
  const int k = imm.grid().k();
  if (k != cone.n)
    throw ConfigError("angle needs a half dimensional immersion, grid rank " +
                      std::to_string(k));
  std::vector<Mat> first;
  for (int a = 0; a < k; ++a) first.push_back(imm.partial(a));
  CVec out(imm.nodes());
  for (int node = 0; node < imm.nodes(); ++node) {
    Mat vs(cone.dim, k);
    for (int a = 0; a < k; ++a) vs.col(a) = first[a].col(node);
    out(node) = psi_eval(cone, imm.point(node), vs);
  }
  return out;
}

CVec psi_on_frames(const ConeStructure& cone, const DiscretizedImmersion& imm,
                   const std::vector<NodeFrame>& frames) {
  CVec out(imm.nodes());
  for (int node = 0; node < imm.nodes(); ++node)
    out(node) = psi_eval(cone, frames[node].p, frames[node].e);
  return out;
}

}  // namespace

CVec ConeStructure::complex_coordinates(const Vec& v) const {
  CVec w(n + 1);
  for (int j = 0; j <= n; ++j)
    w(j) = std::complex<double>(v(2 * j), -v(2 * j + 1));
  return w;
}

Mat ConeStructure::complex_structure() const {
  Mat j = Mat::Zero(dim, dim);
  for (int b = 0; b <= n; ++b) {
    j(2 * b, 2 * b + 1) = 1.0;
    j(2 * b + 1, 2 * b) = -1.0;
  }
  return j;
}

double ConeStructure::kaehler_form(const Vec& u, const Vec& v) const {
  double acc = 0.0;
  for (int b = 0; b <= n; ++b)
    acc += u(2 * b + 1) * v(2 * b) - u(2 * b) * v(2 * b + 1);
  return acc;
}

ConeStructure make_cone(std::shared_ptr<const SasakianModel> base) {
  if (!base->cone_is_flat_kaehler())
    throw UnsupportedModelError(
        "cone calibration needs a base with a flat Kaehler cone");
  ConeStructure cone;
  cone.n = base->n();
  cone.dim = base->chart_dim();
  cone.base = std::move(base);
  return cone;
}

std::complex<double> holomorphic_volume(const ConeStructure& cone,
                                        const Mat& vectors) {
  CMat w(cone.n + 1, cone.n + 1);
  for (int j = 0; j <= cone.n; ++j)
    w.col(j) = cone.complex_coordinates(vectors.col(j));
  return w.determinant();
}

std::complex<double> psi_eval(const ConeStructure& cone, const Vec& p,
                              const Mat& vectors) {
  CMat w(cone.n + 1, cone.n + 1);
  w.col(0) = cone.complex_coordinates(p);
  for (int j = 0; j < cone.n; ++j)
    w.col(j + 1) = cone.complex_coordinates(vectors.col(j));
  return w.determinant();
}

double omega_normalization_residual(const ConeStructure& cone) {
  const int m = cone.dim;
  Mat skew(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      skew(i, j) = cone.kaehler_form(Vec::Unit(m, i), Vec::Unit(m, j));
  const double lhs = pfaffian(skew);

  CMat rows(m, m);
  for (int col = 0; col < m; ++col) {
    CVec w = cone.complex_coordinates(Vec::Unit(m, col));
    for (int j = 0; j <= cone.n; ++j) {
      rows(j, col) = w(j);
      rows(cone.n + 1 + j, col) = std::conj(w(j));
    }
  }
  const double sign = (cone.n * (cone.n + 1) / 2) % 2 == 0 ? 1.0 : -1.0;
  const std::complex<double> half_i(0.0, 0.5);
  std::complex<double> factor = sign;
  for (int j = 0; j <= cone.n; ++j) factor *= half_i;
  const std::complex<double> rhs = factor * rows.determinant();
  return std::abs(std::complex<double>(lhs) - rhs);
}

double reconstruction_residual(const ConeStructure& cone, const Vec& p,
                               const Mat& vectors) {
  const std::complex<double> lhs = holomorphic_volume(cone, vectors);
  const Vec xi = cone.base->xi(p);
  std::complex<double> rhs = 0.0;
  for (int j = 0; j <= cone.n; ++j) {
    Vec v = vectors.col(j);
    const std::complex<double> alpha(p.dot(v), -xi.dot(v));
    Mat rest(cone.dim, cone.n);
    int cc = 0;
    for (int c = 0; c <= cone.n; ++c) {
      if (c == j) continue;
      rest.col(cc) = vectors.col(c);
      ++cc;
    }
    const double sign = (j % 2 == 0) ? 1.0 : -1.0;
    rhs += sign * alpha * psi_eval(cone, p, rest);
  }
  return std::abs(lhs - rhs);
}

Mat angle_differential(const ConeStructure& cone,
                       const DiscretizedImmersion& imm) {
  const int k = imm.grid().k();
  const int total = imm.nodes();
  const CVec psi = psi_on_partials(cone, imm);

  Mat reim(2, total);
  for (int node = 0; node < total; ++node) {
    reim(0, node) = psi(node).real();
    reim(1, node) = psi(node).imag();
  }
  Mat out(k, total);
  for (int a = 0; a < k; ++a) {
    Mat d = imm.partial_of(reim, a);
    for (int node = 0; node < total; ++node) {
      const std::complex<double> dpsi(d(0, node), d(1, node));
      out(a, node) = (dpsi / psi(node)).imag();
    }
  }
  return out;
}

AngleField legendrian_angle(const ConeStructure& cone,
                            const DiscretizedImmersion& imm,
                            const std::vector<NodeFrame>& frames) {
  const Grid& grid = imm.grid();
  const int total = imm.nodes();
  const CVec psi = psi_on_frames(cone, imm, frames);

  // resolution gate from the winding-safe differential: more than a half
  // turn per cell cannot be unwrapped reliably
  const Mat dtheta = angle_differential(cone, imm);
  for (int a = 0; a < grid.k(); ++a) {
    const double turn =
        dtheta.row(a).cwiseAbs().maxCoeff() * kTwoPi / grid.dims[a];
    if (turn >= M_PI)
      throw ResolutionError("angle turns by " + std::to_string(turn) +
                            " per cell in direction " + std::to_string(a));
  }

  AngleField field;
  field.theta = Vec(total);
  field.psi_abs = Vec(total);
  field.rho = Vec(total);
  double mismatch = 0.0;
  for (int node = 0; node < total; ++node) {
    field.psi_abs(node) = std::abs(psi(node));
    field.rho(node) = frames[node].rho;
    mismatch = std::max(mismatch,
                        std::abs(field.psi_abs(node) - field.rho(node)));
  }
  field.max_mismatch = mismatch;

  // nearest-branch continuation from node 0 along decreasing coordinates;
  // an increment at or beyond a quarter turn leaves no safety margin against
  // branch aliasing, so it is rejected as under-resolved
  for (int node = 0; node < total; ++node) {
    const double raw = std::arg(psi(node));
    if (node == 0) {
      field.theta(node) = raw;
      continue;
    }
    std::vector<int> multi = grid.multi_index(node);
    int d = grid.k() - 1;
    while (multi[d] == 0) --d;
    multi[d] -= 1;
    const double ref = field.theta(grid.flat_index(multi));
    const double unwrapped = raw + kTwoPi * std::round((ref - raw) / kTwoPi);
    if (std::abs(unwrapped - ref) >= M_PI / 2 - 1e-9)
      throw ResolutionError("angle jumps by " +
                            std::to_string(std::abs(unwrapped - ref)) +
                            " between nodes " + std::to_string(node) + " and " +
                            std::to_string(grid.flat_index(multi)));
    field.theta(node) = unwrapped;
  }
  return field;
}

CalibrationReport calibration_check(const ConeStructure& cone,
                                    const DiscretizedImmersion& imm,
                                    const std::vector<NodeFrame>& frames,
                                    double tol) {
  const CVec psi = psi_on_frames(cone, imm, frames);
  const int total = imm.nodes();

  CalibrationReport report;
  report.re_psi = Vec(total);
  report.rho = Vec(total);
  double first_gap = 0.0, second_gap = 0.0;
  for (int node = 0; node < total; ++node) {
    report.re_psi(node) = psi(node).real();
    report.rho(node) = frames[node].rho;
    report.max_first_violation =
        std::max(report.max_first_violation, report.re_psi(node) - report.rho(node));
    report.max_second_violation =
        std::max(report.max_second_violation, report.rho(node) - 1.0);
    first_gap = std::max(first_gap, std::abs(report.re_psi(node) - report.rho(node)));
    second_gap = std::max(second_gap, std::abs(report.rho(node) - 1.0));
  }
  report.first_equality = first_gap < tol;
  report.second_equality = second_gap < tol;
  return report;
}

double angle_gradient_residual(const ConeStructure& cone,
                               const DiscretizedImmersion& imm,
                               const std::vector<NodeFrame>& frames) {
  const int n = cone.n;
  const Mat dtheta = angle_differential(cone, imm);
  const MeanCurvatureData mc = h_phi(imm, frames);

  double residual = 0.0;
  for (int node = 0; node < imm.nodes(); ++node) {
    const NodeFrame& fr = frames[node];
    Vec grad = Vec::Zero(cone.dim);
    for (int j = 0; j < n; ++j) {
      double ej_theta = 0.0;
      for (int a = 0; a < n; ++a) ej_theta += fr.coeff(j, a) * dtheta(a, node);
      grad += ej_theta * fr.e.col(j);
    }
    Vec rhs = mc.h_chart.col(node) - (n + 1.0) * fr.xi_top;
    residual = std::max(residual, (grad - rhs).norm());
  }
  return residual;
}

SpecialDefect special_defect(const ConeStructure& cone,
                             const DiscretizedImmersion& imm,
                             const std::vector<NodeFrame>& frames) {
  const CVec psi = psi_on_frames(cone, imm, frames);
  auto defect_at = [&](double theta) -> double {
    const std::complex<double> rot(std::cos(theta), -std::sin(theta));
    double worst = 0.0;
    for (int node = 0; node < psi.size(); ++node)
      worst = std::max(worst, std::abs((rot * psi(node)).imag()));
    return worst;
  };

  const int coarse = 1024;
  double best = 0.0, best_val = defect_at(0.0);
  for (int i = 1; i < coarse; ++i) {
    const double theta = kTwoPi * i / coarse;
    const double val = defect_at(theta);
    if (val < best_val) {
      best_val = val;
      best = theta;
    }
  }
  double lo = best - kTwoPi / coarse, hi = best + kTwoPi / coarse;
  const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - golden * (hi - lo), x2 = lo + golden * (hi - lo);
  double f1 = defect_at(x1), f2 = defect_at(x2);
  for (int it = 0; it < 90; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - golden * (hi - lo);
      f1 = defect_at(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + golden * (hi - lo);
      f2 = defect_at(x2);
    }
  }

  SpecialDefect result;
  result.theta = 0.5 * (lo + hi);
  result.defect = defect_at(result.theta);

  // pick the branch with nonnegative real part, then normalize
  const std::complex<double> rot(std::cos(result.theta), -std::sin(result.theta));
  double re_sum = 0.0;
  for (int node = 0; node < psi.size(); ++node) re_sum += (rot * psi(node)).real();
  if (re_sum < 0.0) result.theta += M_PI;
  result.theta = std::atan2(std::sin(result.theta), std::cos(result.theta));
  return result;
}

}  // namespace phivol
