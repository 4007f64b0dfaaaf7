#include "fd_oracles.hpp"

#include <stdexcept>

namespace phivol::testing {

namespace {

template <typename F>
auto stencil4(const F& eval, double h) {
  const auto fp1 = eval(h), fm1 = eval(-h), fp2 = eval(2.0 * h), fm2 = eval(-2.0 * h);
  using R = std::decay_t<decltype(fp1)>;
  R out = (8.0 * (fp1 - fm1) - (fp2 - fm2)) / (12.0 * h);
  return out;
}

}  // namespace

Vec christoffel_fd_chart(const SasakianModel& model, const Vec& p, const Vec& u,
                         const Vec& v, double h) {
  const int d = model.chart_dim();
  if (d != model.manifold_dim())
    throw std::invalid_argument("christoffel_fd_chart needs a global chart");
  // dg[i] = partial_i of the metric matrix
  std::vector<Mat> dg(d);
  for (int i = 0; i < d; ++i) {
    Vec e = Vec::Zero(d);
    e[i] = 1.0;
    dg[i] = stencil4([&](double s) { return Mat(model.metric_matrix(p + s * e)); }, h);
  }
  const Mat ginv = model.metric_matrix(p).inverse();
  Vec low = Vec::Zero(d);  // Gamma_{k i j} u^i v^j
  for (int k = 0; k < d; ++k) {
    double s = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        s += 0.5 * (dg[i](j, k) + dg[j](i, k) - dg[k](i, j)) * u[i] * v[j];
    low[k] = s;
  }
  return ginv * low;
}

Vec curvature_fd(const SasakianModel& model, const Vec& p, const Vec& X,
                 const Vec& Y, const Vec& Z, double h_inner, double h_outer) {
  const auto ext = [&](const Vec& q, const Vec& w) { return model.project_tangent(q, w); };
  const auto Zf = [&](const Vec& q) { return ext(q, Z); };
  // q -> (nabla_W Z)(q) for W the projected extension of w
  const auto nabla_Z = [&](const Vec& q, const Vec& w) {
    return covariant_derivative_fd(model, q, ext(q, w), Zf, h_inner);
  };
  const auto fYZ = [&](const Vec& q) { return nabla_Z(q, Y); };
  const auto fXZ = [&](const Vec& q) { return nabla_Z(q, X); };
  // the bracket of the projected extensions vanishes at p, so no third term
  return covariant_derivative_fd(model, p, X, fYZ, h_outer) -
         covariant_derivative_fd(model, p, Y, fXZ, h_outer);
}

double ricci_fd(const SasakianModel& model, const Vec& p, const Vec& u, const Vec& v) {
  const Mat basis = model.orthonormal_tangent_basis(p);
  double tr = 0.0;
  for (int l = 0; l < basis.cols(); ++l) {
    const Vec bl = basis.col(l);
    tr += model.g(p, curvature_fd(model, p, bl, u, v), bl);
  }
  return tr;
}

Vec geodesic_residual_fd(const SasakianModel& model, const Vec& p, const Vec& v,
                         double s0, double h) {
  const auto c = [&](double s) { return model.exp(p, s * v); };
  const Vec cdot = stencil4([&](double s) { return c(s0 + s); }, h);
  const Vec c2 = (-c(s0 + 2 * h) + 16.0 * c(s0 + h) - 30.0 * c(s0) + 16.0 * c(s0 - h) -
                  c(s0 - 2 * h)) /
                 (12.0 * h * h);
  return c2 + model.christoffel(c(s0), cdot, cdot);
}

}  // namespace phivol::testing
