#include "phivol/frame.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "phivol/errors.hpp"

namespace phivol {

Mat NodeFrame::tangent_projection() const {
  const int d = static_cast<int>(B.rows());
  const int n = static_cast<int>(e.cols());
  Vec diag = Vec::Zero(d);
  diag.head(n).setOnes();
  return B * diag.asDiagonal() * Binv;
}

Mat NodeFrame::normal_projection() const {
  const int d = static_cast<int>(B.rows());
  const int n = static_cast<int>(e.cols());
  Vec diag = Vec::Zero(d);
  diag.segment(n, n + 1).setOnes();
  return B * diag.asDiagonal() * Binv;
}

Mat NodeFrame::g_transpose(const Mat& P, const Mat& metric) {
  return metric.llt().solve(P.transpose() * metric);
}

std::vector<NodeFrame> build_frames(const DiscretizedImmersion& imm,
                                    const FrameOptions& opts) {
  const SasakianModel& model = imm.model();
  const int n = model.n();
  if (imm.grid().k() != n)
    throw std::invalid_argument(
        "build_frames: the immersed dimension must be half of the contact distribution");
  const int d = model.chart_dim();
  std::vector<Mat> partials(n);
  for (int dir = 0; dir < n; ++dir) partials[dir] = imm.partial(dir);

  std::vector<NodeFrame> frames(imm.nodes());
  for (int idx = 0; idx < imm.nodes(); ++idx) {
    NodeFrame& f = frames[idx];
    f.p = imm.point(idx);
    f.partials.resize(d, n);
    for (int dir = 0; dir < n; ++dir) f.partials.col(dir) = partials[dir].col(idx);

    // induced measure from the Gram matrix of the partials
    Mat gram(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) gram(a, b) = model.g(f.p, f.partials.col(a), f.partials.col(b));
    const double det_gram = gram.determinant();
    if (!(det_gram > 0.0))
      throw NotAffineLegendrianError(idx, det_gram);
    f.sqrt_gram = std::sqrt(det_gram);

    // ascending Gram-Schmidt with the coefficient matrix kept for later
    // chain rule differentiation along the frame
    f.e.resize(d, n);
    f.coeff = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      Vec v = f.partials.col(i);
      Vec c = Vec::Zero(n);
      c[i] = 1.0;
      for (int l = 0; l < i; ++l) {
        const double proj = model.g(f.p, v, f.e.col(l));
        v -= proj * f.e.col(l);
        c -= proj * f.coeff.row(l).transpose();
      }
      const double nrm = std::sqrt(std::max(model.g(f.p, v, v), 0.0));
      if (nrm < opts.frame_floor) throw NotAffineLegendrianError(idx, nrm);
      f.e.col(i) = v / nrm;
      f.coeff.row(i) = c.transpose() / nrm;
    }

    f.phie.resize(d, n);
    for (int i = 0; i < n; ++i) f.phie.col(i) = model.phi(f.p, f.e.col(i));
    f.xi = model.xi(f.p);
    f.xi_top = Vec::Zero(d);
    for (int i = 0; i < n; ++i) f.xi_top += model.g(f.p, f.xi, f.e.col(i)) * f.e.col(i);

    f.B.resize(d, d);
    f.B.block(0, 0, d, n) = f.e;
    f.B.block(0, n, d, n) = f.phie;
    f.B.col(2 * n) = f.xi;
    if (d == 2 * n + 2) f.B.col(2 * n + 1) = f.p;

    Eigen::JacobiSVD<Mat> svd(f.B);
    f.min_singular_value = svd.singularValues().minCoeff();
    if (f.min_singular_value < opts.frame_floor)
      throw NotAffineLegendrianError(idx, f.min_singular_value);
    f.Binv = f.B.inverse();

    std::vector<Vec> cols;
    cols.reserve(2 * n + 1);
    for (int i = 0; i < n; ++i) cols.push_back(f.e.col(i));
    cols.push_back(-f.xi);
    for (int i = 0; i < n; ++i) cols.push_back(f.phie.col(i));
    const double vol = model.volume_form(f.p, cols);
    if (vol < -opts.orientation_tol) throw OrientationError(idx, vol);
    f.rho = std::sqrt(std::max(vol, 0.0));
    if (f.rho < opts.rho_floor) throw DegenerateDensityError(idx, f.rho);
  }
  return frames;
}

PhiVolume phi_volume(const DiscretizedImmersion& imm,
                     const std::vector<NodeFrame>& frames) {
  PhiVolume out;
  out.node_density.resize(imm.nodes());
  for (int idx = 0; idx < imm.nodes(); ++idx)
    out.node_density[idx] = frames[idx].rho * frames[idx].sqrt_gram;
  out.total = imm.grid().cell_weight() * pairwise_sum(out.node_density);
  return out;
}

PhiVolume phi_volume(const DiscretizedImmersion& imm) {
  return phi_volume(imm, build_frames(imm));
}

}  // namespace phivol
