#include "phivol/variation.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Cholesky>

#include "phivol/errors.hpp"
#include "phivol/numerics.hpp"

namespace phivol {

namespace {

// chart derivative of a nodal field along the frame direction i at one node
Vec frame_directional(const std::vector<Mat>& dfield, const NodeFrame& fr,
                      int i, int node) {
  Vec out = Vec::Zero(dfield[0].rows());
  for (int a = 0; a < static_cast<int>(dfield.size()); ++a)
    out += fr.coeff(i, a) * dfield[a].col(node);
  return out;
}

// projection onto phi TL along TL + R xi (+ chart normal)
Mat phi_block_projection(const NodeFrame& fr, int n) {
  Vec diag = Vec::Zero(fr.B.cols());
  for (int j = 0; j < n; ++j) diag(n + j) = 1.0;
  Mat out = fr.B * diag.asDiagonal() * fr.Binv;
  return out;
}

double grid_spacing(const Grid& grid) {
  int nmax = 1;
  for (int d : grid.dims) nmax = std::max(nmax, d);
  return 2.0 * M_PI / nmax;
}

Mat row_matrix(const Vec& v) {
  Mat out(1, v.size());
  out.row(0) = v.transpose();
  return out;
}

}  // namespace

std::vector<Mat> field_partials(const DiscretizedImmersion& imm, const Mat& field) {
  std::vector<Mat> out;
  out.reserve(imm.grid().k());
  for (int a = 0; a < imm.grid().k(); ++a) out.push_back(imm.partial_of(field, a));
  return out;
}

Mat covariant_frame_derivative(const DiscretizedImmersion& imm,
                               const std::vector<NodeFrame>& frames,
                               const Mat& field, int i) {
  const SasakianModel& model = imm.model();
  const auto dF = field_partials(imm, field);
  Mat out(field.rows(), field.cols());
  for (int node = 0; node < field.cols(); ++node) {
    const NodeFrame& fr = frames[node];
    out.col(node) = frame_directional(dF, fr, i, node) +
                    model.christoffel(fr.p, fr.e.col(i), field.col(node));
  }
  return out;
}

Mat tangent_chart(const std::vector<NodeFrame>& frames, const Mat& y_coeff) {
  const int total = static_cast<int>(y_coeff.cols());
  Mat out(frames[0].e.rows(), total);
  for (int node = 0; node < total; ++node)
    out.col(node) = frames[node].e * y_coeff.col(node);
  return out;
}

Mat horizontal_chart(const DiscretizedImmersion& imm,
                     const std::vector<NodeFrame>& frames,
                     const HorizontalField& v) {
  const int total = imm.nodes();
  Mat out(imm.model().chart_dim(), total);
  for (int node = 0; node < total; ++node) {
    const NodeFrame& fr = frames[node];
    out.col(node) = fr.phie * v.y.col(node) + v.f(node) * fr.xi;
  }
  return out;
}

FrameDecomposition decompose_in_frame(const std::vector<NodeFrame>& frames,
                                      const Mat& Z) {
  const int total = static_cast<int>(Z.cols());
  const int n = static_cast<int>(frames[0].e.cols());
  FrameDecomposition out;
  out.x.resize(n, total);
  out.y.resize(n, total);
  out.f.resize(total);
  for (int node = 0; node < total; ++node) {
    Vec co = frames[node].Binv * Z.col(node);
    out.x.col(node) = co.head(n);
    out.y.col(node) = co.segment(n, n);
    out.f(node) = co(2 * n);
  }
  return out;
}

MeanCurvatureData h_phi(const DiscretizedImmersion& imm,
                        const std::vector<NodeFrame>& frames) {
  const SasakianModel& model = imm.model();
  const int n = model.n();
  const int total = imm.nodes();
  MeanCurvatureData out;
  out.h_coeff = Mat::Zero(n, total);

  Mat ej(model.chart_dim(), total);
  for (int j = 0; j < n; ++j) {
    for (int node = 0; node < total; ++node) ej.col(node) = frames[node].e.col(j);
    const auto dE = field_partials(imm, ej);
    for (int node = 0; node < total; ++node) {
      const NodeFrame& fr = frames[node];
      double acc = (n + 1) * model.eta(fr.p, fr.e.col(j));
      for (int i = 0; i < n; ++i) {
        Vec nab = frame_directional(dE, fr, i, node) +
                  model.christoffel(fr.p, fr.e.col(i), fr.e.col(j));
        Vec co = fr.Binv * nab;
        acc += co(n + i);
      }
      out.h_coeff(j, node) = acc;
    }
  }

  out.h_chart = tangent_chart(frames, out.h_coeff);
  out.max_norm = 0.0;
  for (int node = 0; node < total; ++node)
    out.max_norm = std::max(out.max_norm, out.h_coeff.col(node).norm());
  return out;
}

MeanCurvatureData h_phi_projector(const DiscretizedImmersion& imm,
                                  const std::vector<NodeFrame>& frames) {
  const SasakianModel& model = imm.model();
  const int n = model.n();
  const int total = imm.nodes();
  MeanCurvatureData out;
  out.h_coeff = Mat::Zero(n, total);

  std::vector<Mat> proj_fields(n, Mat(model.chart_dim(), total));
  for (int node = 0; node < total; ++node) {
    const NodeFrame& fr = frames[node];
    Mat pt = NodeFrame::g_transpose(fr.tangent_projection(),
                                    model.metric_matrix(fr.p));
    for (int i = 0; i < n; ++i) proj_fields[i].col(node) = pt * fr.e.col(i);
  }

  for (int i = 0; i < n; ++i) {
    const auto dV = field_partials(imm, proj_fields[i]);
    for (int node = 0; node < total; ++node) {
      const NodeFrame& fr = frames[node];
      Vec nab = frame_directional(dV, fr, i, node) +
                model.christoffel(fr.p, fr.e.col(i), proj_fields[i].col(node));
      for (int j = 0; j < n; ++j)
        out.h_coeff(j, node) += model.g(fr.p, fr.phie.col(j), nab);
    }
  }
  for (int node = 0; node < total; ++node) {
    const NodeFrame& fr = frames[node];
    for (int j = 0; j < n; ++j)
      out.h_coeff(j, node) += model.eta(fr.p, fr.e.col(j));
  }

  out.h_chart = tangent_chart(frames, out.h_coeff);
  out.max_norm = 0.0;
  for (int node = 0; node < total; ++node)
    out.max_norm = std::max(out.max_norm, out.h_coeff.col(node).norm());
  return out;
}

namespace {

// one scalar Fourier factor per grid direction
struct TrigFactor {
  int mode = 0;
  bool sine = false;
  double eval(double t) const { return sine ? std::sin(mode * t) : std::cos(mode * t); }
};

void enumerate_scalars(const Grid& grid, int m_max,
                       std::vector<std::vector<TrigFactor>>& out) {
  std::vector<std::vector<TrigFactor>> per_dir;
  for (int d = 0; d < grid.k(); ++d) {
    const int nd = grid.dims[d];
    int cap_cos = nd / 2;
    int cap_sin = (nd - 1) / 2;
    int cap = m_max;
    if (cap <= 0) cap = grid.k() == 1 ? nd : 6;
    cap_cos = std::min(cap_cos, cap);
    cap_sin = std::min(cap_sin, cap);
    std::vector<TrigFactor> fs;
    for (int m = 0; m <= cap_cos; ++m) fs.push_back({m, false});
    for (int m = 1; m <= cap_sin; ++m) fs.push_back({m, true});
    per_dir.push_back(fs);
  }
  std::vector<TrigFactor> current(grid.k());
  std::function<void(int)> rec = [&](int d) {
    if (d == grid.k()) {
      out.push_back(current);
      return;
    }
    for (const TrigFactor& f : per_dir[d]) {
      current[d] = f;
      rec(d + 1);
    }
  };
  rec(0);
}

}  // namespace

MeanCurvatureData h_phi_weak_oracle(const DiscretizedImmersion& imm,
                                    const std::vector<NodeFrame>& frames,
                                    double h, int m_max) {
  const SasakianModel& model = imm.model();
  const int n = model.n();
  const int total = imm.nodes();

  std::vector<std::vector<TrigFactor>> scalars;
  enumerate_scalars(imm.grid(), m_max, scalars);
  const int ns = static_cast<int>(scalars.size());

  Mat samples(ns, total);
  for (int s = 0; s < ns; ++s)
    for (int node = 0; node < total; ++node) {
      Vec t = imm.grid().node_params(node);
      double val = 1.0;
      for (int d = 0; d < imm.grid().k(); ++d) val *= scalars[s][d].eval(t(d));
      samples(s, node) = val;
    }

  Vec weight(total);
  for (int node = 0; node < total; ++node)
    weight(node) = frames[node].rho * frames[node].sqrt_gram;
  const double cell = imm.grid().cell_weight();

  Mat mass = Mat::Zero(ns, ns);
  for (int a = 0; a < ns; ++a)
    for (int b = a; b < ns; ++b) {
      double acc = 0.0;
      for (int node = 0; node < total; ++node)
        acc += samples(a, node) * samples(b, node) * weight(node);
      mass(a, b) = mass(b, a) = cell * acc;
    }
  Eigen::LLT<Mat> llt(mass);
  if (llt.info() != Eigen::Success)
    throw NumericalError("weak oracle mass matrix is not positive definite");

  MeanCurvatureData out;
  out.h_coeff = Mat::Zero(n, total);
  for (int j = 0; j < n; ++j) {
    Vec rhs(ns);
    for (int s = 0; s < ns; ++s) {
      Mat y = Mat::Zero(n, total);
      y.row(j) = samples.row(s);
      HorizontalField v{y, Vec::Zero(total)};
      Mat z = horizontal_chart(imm, frames, v);
      rhs(s) = first_variation_fd(imm, z, h);
    }
    Vec c = llt.solve(Vec(-rhs));
    for (int node = 0; node < total; ++node)
      out.h_coeff(j, node) = c.dot(samples.col(node));
  }

  out.h_chart = tangent_chart(frames, out.h_coeff);
  out.max_norm = 0.0;
  for (int node = 0; node < total; ++node)
    out.max_norm = std::max(out.max_norm, out.h_coeff.col(node).norm());
  return out;
}

Mat mean_curvature(const DiscretizedImmersion& imm,
                   const std::vector<NodeFrame>& frames) {
  const SasakianModel& model = imm.model();
  const int k = imm.grid().k();
  const int total = imm.nodes();

  std::vector<Mat> first;
  for (int a = 0; a < k; ++a) first.push_back(imm.partial(a));
  std::vector<std::vector<Mat>> second(k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) second[a].push_back(imm.partial_of(first[b], a));

  Mat out(model.chart_dim(), total);
  for (int node = 0; node < total; ++node) {
    const NodeFrame& fr = frames[node];
    Mat gram(k, k);
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        gram(a, b) = model.g(fr.p, first[a].col(node), first[b].col(node));
    Mat ginv = gram.inverse();
    Vec h = Vec::Zero(model.chart_dim());
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b) {
        Vec amb = second[a][b].col(node) +
                  model.christoffel(fr.p, first[a].col(node), first[b].col(node));
        h += ginv(a, b) * amb;
      }
    Vec tangent = model.project_tangent(fr.p, h);
    for (int j = 0; j < static_cast<int>(fr.e.cols()); ++j)
      tangent -= model.g(fr.p, tangent, fr.e.col(j)) * fr.e.col(j);
    out.col(node) = tangent;
  }
  return out;
}

Vec rho_divergence(const DiscretizedImmersion& imm,
                   const std::vector<NodeFrame>& frames, const Mat& y_coeff) {
  const int k = imm.grid().k();
  const int total = imm.nodes();
  const int n = static_cast<int>(y_coeff.rows());

  Mat flux(k, total);
  for (int node = 0; node < total; ++node) {
    const NodeFrame& fr = frames[node];
    for (int a = 0; a < k; ++a) {
      double comp = 0.0;
      for (int j = 0; j < n; ++j) comp += y_coeff(j, node) * fr.coeff(j, a);
      flux(a, node) = fr.sqrt_gram * fr.rho * comp;
    }
  }
  Vec out = Vec::Zero(total);
  for (int a = 0; a < k; ++a) {
    Mat d = imm.partial_of(row_matrix(flux.row(a).transpose()), a);
    out += d.row(0).transpose();
  }
  for (int node = 0; node < total; ++node) out(node) /= frames[node].sqrt_gram;
  return out;
}

Vec laplace_beltrami(const DiscretizedImmersion& imm,
                     const std::vector<NodeFrame>& frames, const Vec& f) {
  const SasakianModel& model = imm.model();
  const int k = imm.grid().k();
  const int total = imm.nodes();

  std::vector<Mat> first;
  for (int a = 0; a < k; ++a) first.push_back(imm.partial(a));
  std::vector<Mat> df;
  for (int a = 0; a < k; ++a) df.push_back(imm.partial_of(row_matrix(f), a));

  Mat flux(k, total);
  for (int node = 0; node < total; ++node) {
    const NodeFrame& fr = frames[node];
    Mat gram(k, k);
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        gram(a, b) = model.g(fr.p, first[a].col(node), first[b].col(node));
    Mat ginv = gram.inverse();
    for (int a = 0; a < k; ++a) {
      double comp = 0.0;
      for (int b = 0; b < k; ++b) comp += ginv(a, b) * df[b](0, node);
      flux(a, node) = fr.sqrt_gram * comp;
    }
  }
  Vec out = Vec::Zero(total);
  for (int a = 0; a < k; ++a) {
    Mat d = imm.partial_of(row_matrix(flux.row(a).transpose()), a);
    out += d.row(0).transpose();
  }
  for (int node = 0; node < total; ++node) out(node) /= frames[node].sqrt_gram;
  return out;
}

Mat gradient_coefficients(const DiscretizedImmersion& imm,
                          const std::vector<NodeFrame>& frames, const Vec& f) {
  const int k = imm.grid().k();
  const int total = imm.nodes();
  const int n = static_cast<int>(frames[0].e.cols());

  std::vector<Mat> df;
  for (int a = 0; a < k; ++a) df.push_back(imm.partial_of(row_matrix(f), a));
  Mat out(n, total);
  for (int node = 0; node < total; ++node) {
    const NodeFrame& fr = frames[node];
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int a = 0; a < k; ++a) acc += fr.coeff(j, a) * df[a](0, node);
      out(j, node) = acc;
    }
  }
  return out;
}

double integrate_density(const DiscretizedImmersion& imm,
                         const std::vector<NodeFrame>& frames,
                         const Vec& density) {
  Vec weighted(density.size());
  for (int node = 0; node < density.size(); ++node)
    weighted(node) = density(node) * frames[node].rho * frames[node].sqrt_gram;
  return imm.grid().cell_weight() * pairwise_sum(weighted);
}

Vec first_variation_density(const DiscretizedImmersion& imm,
                            const std::vector<NodeFrame>& frames, const Mat& Z) {
  const SasakianModel& model = imm.model();
  const int n = model.n();
  const int total = imm.nodes();
  const auto dZ = field_partials(imm, Z);

  Vec out(total);
  for (int node = 0; node < total; ++node) {
    const NodeFrame& fr = frames[node];
    double trace = 0.0;
    for (int i = 0; i < n; ++i) {
      Vec nab = frame_directional(dZ, fr, i, node) +
                model.christoffel(fr.p, fr.e.col(i), Z.col(node));
      Vec co = fr.Binv * nab;
      trace += co(i);
    }
    Vec phiz = model.phi(fr.p, Z.col(node));
    Vec co = fr.Binv * phiz;
    out(node) = trace - co(2 * n);
  }
  return out;
}

double first_variation_analytic(const DiscretizedImmersion& imm,
                                const std::vector<NodeFrame>& frames,
                                const MeanCurvatureData& mc, const Mat& y_coeff) {
  Vec density(imm.nodes());
  for (int node = 0; node < imm.nodes(); ++node)
    density(node) = -y_coeff.col(node).dot(mc.h_coeff.col(node));
  return integrate_density(imm, frames, density);
}

double first_variation_analytic(const DiscretizedImmersion& imm,
                                const std::vector<NodeFrame>& frames,
                                const Mat& Z) {
  const MeanCurvatureData mc = h_phi(imm, frames);
  const FrameDecomposition dec = decompose_in_frame(frames, Z);
  return first_variation_analytic(imm, frames, mc, dec.y);
}

DiscretizedImmersion exponential_push(const DiscretizedImmersion& imm,
                                      const Mat& Z, double t) {
  const SasakianModel& model = imm.model();
  Mat values(imm.values().rows(), imm.values().cols());
  for (int node = 0; node < imm.nodes(); ++node) {
    Vec step = t * Z.col(node);
    values.col(node) = model.exp(imm.point(node), step);
  }
  return DiscretizedImmersion(imm.model_ptr(), imm.grid(), values, imm.drift());
}

double first_variation_fd(const DiscretizedImmersion& imm, const Mat& Z,
                          double h) {
  auto vol = [&](double t) -> double {
    DiscretizedImmersion pushed = exponential_push(imm, Z, t);
    return phi_volume(pushed).total;
  };
  const double d1 = (vol(h) - vol(-h)) / (2.0 * h);
  const double d2 = (vol(h / 2) - vol(-h / 2)) / h;
  return richardson2(d1, d2);
}

double second_variation_fd_exponential(const DiscretizedImmersion& imm,
                                       const Mat& Z, double h) {
  const double v0 = phi_volume(imm).total;
  auto vol = [&](double t) -> double {
    DiscretizedImmersion pushed = exponential_push(imm, Z, t);
    return phi_volume(pushed).total;
  };
  auto second = [&](double s) -> double {
    return (vol(s) - 2.0 * v0 + vol(-s)) / (s * s);
  };
  return richardson2(second(h), second(h / 2));
}

Mat parameter_components(const std::vector<NodeFrame>& frames, const Mat& y_coeff) {
  const int total = static_cast<int>(y_coeff.cols());
  const int n = static_cast<int>(y_coeff.rows());
  const int k = static_cast<int>(frames[0].coeff.cols());
  Mat out(k, total);
  for (int node = 0; node < total; ++node) {
    const NodeFrame& fr = frames[node];
    for (int a = 0; a < k; ++a) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += y_coeff(j, node) * fr.coeff(j, a);
      out(a, node) = acc;
    }
  }
  return out;
}

Mat coefficients_from_parameters(const std::vector<NodeFrame>& frames,
                                 const Mat& y_param) {
  const int total = static_cast<int>(y_param.cols());
  const int n = static_cast<int>(frames[0].coeff.rows());
  Mat out(n, total);
  for (int node = 0; node < total; ++node) {
    Mat ct = frames[node].coeff.transpose();
    Vec sol = ct.colPivHouseholderQr().solve(y_param.col(node));
    out.col(node) = sol;
  }
  return out;
}

namespace {

Mat geodesic_velocity(const DiscretizedImmersion& base, const Mat& values,
                      const Mat& y_param, const Vec& f) {
  const SasakianModel& model = base.model();
  DiscretizedImmersion cur(base.model_ptr(), base.grid(), values, base.drift());
  std::vector<Mat> first;
  for (int a = 0; a < base.grid().k(); ++a) first.push_back(cur.partial(a));
  Mat vel(values.rows(), values.cols());
  for (int node = 0; node < values.cols(); ++node) {
    Vec p = values.col(node);
    Vec push = Vec::Zero(values.rows());
    for (int a = 0; a < base.grid().k(); ++a)
      push += y_param(a, node) * first[a].col(node);
    vel.col(node) = model.phi(p, push) + f(node) * model.xi(p);
  }
  return vel;
}

}  // namespace

DiscretizedImmersion geodesic_push(const DiscretizedImmersion& imm,
                                   const Mat& y_param, const Vec& f, double t,
                                   double dt) {
  const SasakianModel& model = imm.model();
  if (dt <= 0.0) dt = std::min(1e-3, grid_spacing(imm.grid()) / 4.0);
  const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(t) / dt)));
  const double sdt = t / steps;

  Mat vals = imm.values();
  for (int s = 0; s < steps; ++s) {
    Mat k1 = geodesic_velocity(imm, vals, y_param, f);
    Mat k2 = geodesic_velocity(imm, Mat(vals + 0.5 * sdt * k1), y_param, f);
    Mat k3 = geodesic_velocity(imm, Mat(vals + 0.5 * sdt * k2), y_param, f);
    Mat k4 = geodesic_velocity(imm, Mat(vals + sdt * k3), y_param, f);
    vals += (sdt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    for (int node = 0; node < vals.cols(); ++node)
      vals.col(node) = model.project_point(vals.col(node));
  }
  return DiscretizedImmersion(imm.model_ptr(), imm.grid(), vals, imm.drift());
}

GeodesicFamily geodesic_evolve(const DiscretizedImmersion& imm,
                               const Mat& y_param, const Vec& f, double T,
                               int samples, double dt) {
  if (dt <= 0.0) dt = std::min(1e-3, grid_spacing(imm.grid()) / 4.0);
  GeodesicFamily fam;
  fam.y_param = y_param;
  fam.f = f;
  fam.dt = dt;
  fam.times.push_back(0.0);
  fam.members.push_back(imm);
  if (samples <= 0 || T == 0.0) return fam;
  const double step = T / samples;
  for (int m = 1; m <= samples; ++m) {
    fam.times.push_back(m * step);
    fam.members.push_back(geodesic_push(fam.members.back(), y_param, f, step, dt));
  }
  return fam;
}

double geodesic_commutator_residual(const DiscretizedImmersion& member,
                                    const Mat& y_param, const Vec& f,
                                    double delta) {
  const int k = member.grid().k();
  const int total = member.nodes();

  Mat vel = geodesic_velocity(member, member.values(), y_param, f);
  std::vector<Mat> dvel;
  for (int a = 0; a < k; ++a) dvel.push_back(member.partial_of(vel, a));

  auto pushforward = [&](const DiscretizedImmersion& im) -> Mat {
    Mat out = Mat::Zero(im.values().rows(), total);
    for (int a = 0; a < k; ++a) {
      Mat p = im.partial(a);
      for (int node = 0; node < total; ++node)
        out.col(node) += y_param(a, node) * p.col(node);
    }
    return out;
  };
  auto central = [&](double d) -> Mat {
    DiscretizedImmersion plus = geodesic_push(member, y_param, f, d, d);
    DiscretizedImmersion minus = geodesic_push(member, y_param, f, -d, d);
    Mat out = (pushforward(plus) - pushforward(minus)) / (2.0 * d);
    return out;
  };
  Mat coarse = central(delta);
  Mat fine = central(delta / 2);
  Mat dpush = (4.0 * fine - coarse) / 3.0;

  double residual = 0.0;
  for (int node = 0; node < total; ++node) {
    Vec along = Vec::Zero(vel.rows());
    for (int a = 0; a < k; ++a) along += y_param(a, node) * dvel[a].col(node);
    residual = std::max(residual, (along - dpush.col(node)).norm());
  }
  return residual;
}

Vec second_variation_density(const DiscretizedImmersion& imm,
                             const std::vector<NodeFrame>& frames, const Mat& Z,
                             const Mat& zz) {
  const SasakianModel& model = imm.model();
  const int n = model.n();
  const int total = imm.nodes();
  const bool has_zz = zz.size() > 0;

  const auto dZ = field_partials(imm, Z);
  std::vector<Mat> dZZ;
  if (has_zz) dZZ = field_partials(imm, zz);

  Vec out(total);
  for (int node = 0; node < total; ++node) {
    const NodeFrame& fr = frames[node];
    const Vec z = Z.col(node);
    const Vec co_z = fr.Binv * z;

    std::vector<Vec> nab(n), co_nab(n);
    Mat e_mat(n, n), f_mat(n, n);
    for (int i = 0; i < n; ++i) {
      nab[i] = frame_directional(dZ, fr, i, node) +
               model.christoffel(fr.p, fr.e.col(i), z);
      co_nab[i] = fr.Binv * nab[i];
      for (int j = 0; j < n; ++j) {
        e_mat(j, i) = co_nab[i](j);
        f_mat(j, i) = co_nab[i](n + j);
      }
    }
    const double tr_e = e_mat.trace();

    Vec phiz_co = fr.Binv * model.phi(fr.p, z);
    double acc = -2.0 * phiz_co(2 * n) * tr_e;
    acc -= (e_mat * e_mat).trace();
    acc += (f_mat * f_mat).trace();

    for (int i = 0; i < n; ++i) {
      Vec w = model.curvature(fr.p, z, fr.e.col(i), z);
      if (has_zz)
        w += frame_directional(dZZ, fr, i, node) +
             model.christoffel(fr.p, fr.e.col(i), zz.col(node));
      Vec co = fr.Binv * w;
      acc += co(i);
    }

    Vec tangential = fr.tangent_projection() * z;
    acc -= model.eta(fr.p, tangential) * co_z(2 * n);
    if (has_zz) {
      Vec co = fr.Binv * model.phi(fr.p, zz.col(node));
      acc -= co(2 * n);
    }
    Mat pphi = phi_block_projection(fr, n);
    acc -= model.g(fr.p, z, pphi * z);

    for (int i = 0; i < n; ++i) {
      acc -= 2.0 * co_z(n + i) * co_nab[i](2 * n);
      Vec co = fr.Binv * model.phi(fr.p, nab[i]);
      acc += 2.0 * co_z(i) * co(2 * n);
    }
    acc += tr_e * tr_e;
    out(node) = acc;
  }
  return out;
}

Mat geodesic_acceleration(const DiscretizedImmersion& imm,
                          const std::vector<NodeFrame>& frames,
                          const HorizontalField& v) {
  const SasakianModel& model = imm.model();
  const int n = model.n();
  const int total = imm.nodes();
  Mat Z = horizontal_chart(imm, frames, v);
  const auto dZ = field_partials(imm, Z);

  Mat out(model.chart_dim(), total);
  for (int node = 0; node < total; ++node) {
    const NodeFrame& fr = frames[node];
    Vec y_chart = fr.e * v.y.col(node);
    Vec nab_yz = Vec::Zero(model.chart_dim());
    for (int j = 0; j < n; ++j)
      nab_yz += v.y(j, node) * frame_directional(dZ, fr, j, node);
    nab_yz += model.christoffel(fr.p, y_chart, Z.col(node));
    out.col(node) = -model.eta(fr.p, y_chart) * Z.col(node) +
                    model.phi(fr.p, nab_yz) + v.f(node) * y_chart;
  }
  return out;
}

Mat exponential_bracket(const DiscretizedImmersion& imm,
                        const std::vector<NodeFrame>& frames,
                        const HorizontalField& v) {
  const SasakianModel& model = imm.model();
  const int n = model.n();
  const int total = imm.nodes();
  Mat y_chart = tangent_chart(frames, v.y);
  const auto dY = field_partials(imm, y_chart);

  Mat out(model.chart_dim(), total);
  for (int node = 0; node < total; ++node) {
    const NodeFrame& fr = frames[node];
    Vec nab_yy = Vec::Zero(model.chart_dim());
    for (int j = 0; j < n; ++j)
      nab_yy += v.y(j, node) * frame_directional(dY, fr, j, node);
    nab_yy += model.christoffel(fr.p, y_chart.col(node), y_chart.col(node));
    out.col(node) = 2.0 * model.eta(fr.p, y_chart.col(node)) * y_chart.col(node) -
                    fr.tangent_projection() * model.phi(fr.p, nab_yy);
  }
  return out;
}

Vec second_variation_integrand(const DiscretizedImmersion& imm,
                               const std::vector<NodeFrame>& frames,
                               const HorizontalField& v,
                               const MeanCurvatureData& mc, BracketMode mode,
                               const Mat* bracket) {
  const SasakianModel& model = imm.model();
  const int n = model.n();
  const int total = imm.nodes();
  if (mode == BracketMode::Supplied && bracket == nullptr)
    throw ConfigError("supplied bracket mode needs a bracket field");

  Vec div = rho_divergence(imm, frames, v.y);
  Vec out(total);
  for (int node = 0; node < total; ++node) {
    const NodeFrame& fr = frames[node];
    Vec y_chart = fr.e * v.y.col(node);
    const double eta_y = model.eta(fr.p, y_chart);
    const double g_yy = v.y.col(node).squaredNorm();
    const double ric = model.ricci(fr.p, y_chart, y_chart);
    const double g_yh = v.y.col(node).dot(mc.h_coeff.col(node));
    const double div_term = div(node) / fr.rho;
    double br = 0.0;
    if (mode == BracketMode::Supplied)
      br = model.g(fr.p, bracket->col(node), mc.h_chart.col(node));
    out(node) = (2.0 * n + 2.0) * eta_y * eta_y - 2.0 * g_yy - ric - br +
                g_yh * g_yh + div_term * div_term;
  }
  return out;
}

double second_variation_analytic(const DiscretizedImmersion& imm,
                                 const std::vector<NodeFrame>& frames,
                                 const HorizontalField& v, BracketMode mode,
                                 const Mat* bracket) {
  const MeanCurvatureData mc = h_phi(imm, frames);
  Vec integrand = second_variation_integrand(imm, frames, v, mc, mode, bracket);
  return integrate_density(imm, frames, integrand);
}

double second_variation_fd_geodesic(const DiscretizedImmersion& imm,
                                    const Mat& y_param, const Vec& f, double h,
                                    double dt) {
  const double v0 = phi_volume(imm).total;
  auto vol = [&](double t) -> double {
    DiscretizedImmersion pushed = geodesic_push(imm, y_param, f, t, dt);
    return phi_volume(pushed).total;
  };
  auto second = [&](double s) -> double {
    return (vol(s) - 2.0 * v0 + vol(-s)) / (s * s);
  };
  return richardson2(second(h), second(h / 2));
}

Vec density_second_derivative_fd_geodesic(const DiscretizedImmersion& imm,
                                          const Mat& y_param, const Vec& f,
                                          double h, double dt) {
  const Vec d0 = phi_volume(imm).node_density;
  auto density = [&](double t) -> Vec {
    DiscretizedImmersion pushed = geodesic_push(imm, y_param, f, t, dt);
    return phi_volume(pushed).node_density;
  };
  auto second = [&](double s) -> Vec {
    Vec out = (density(s) - 2.0 * d0 + density(-s)) / (s * s);
    return out;
  };
  Vec coarse = second(h);
  Vec fine = second(h / 2);
  Vec out(coarse.size());
  for (int node = 0; node < coarse.size(); ++node)
    out(node) = richardson2(coarse(node), fine(node));
  return out;
}

Vec density_second_derivative_fd_exponential(const DiscretizedImmersion& imm,
                                             const Mat& Z, double h) {
  const Vec d0 = phi_volume(imm).node_density;
  auto density = [&](double t) -> Vec {
    DiscretizedImmersion pushed = exponential_push(imm, Z, t);
    return phi_volume(pushed).node_density;
  };
  auto second = [&](double s) -> Vec {
    Vec out = (density(s) - 2.0 * d0 + density(-s)) / (s * s);
    return out;
  };
  Vec coarse = second(h);
  Vec fine = second(h / 2);
  Vec out(coarse.size());
  for (int node = 0; node < coarse.size(); ++node)
    out(node) = richardson2(coarse(node), fine(node));
  return out;
}

}  // namespace phivol
