#include "phivol/sasakian.hpp"

#include <cmath>
#include <numbers>

#include "phivol/errors.hpp"

namespace phivol {

namespace {

// Curvature of a Sasakian space form of constant phi-sectional curvature c.
// The sphere is c = 1, the Heisenberg structure below is c = -3.
Vec space_form_curvature(const SasakianModel& m, double c, const Vec& p,
                         const Vec& X, const Vec& Y, const Vec& Z) {
  const double a1 = (c + 3.0) / 4.0;
  const double a2 = (c - 1.0) / 4.0;
  Vec out = Vec::Zero(p.size());
  if (a1 != 0.0) {
    out += a1 * (m.g(p, Y, Z) * X - m.g(p, X, Z) * Y);
  }
  if (a2 != 0.0) {
    const Vec xi = m.xi(p);
    const Vec phiX = m.phi(p, X);
    const Vec phiY = m.phi(p, Y);
    const Vec phiZ = m.phi(p, Z);
    const double eX = m.g(p, xi, X), eY = m.g(p, xi, Y), eZ = m.g(p, xi, Z);
    out += a2 * (eX * eZ * Y - eY * eZ * X +
                 (m.g(p, X, Z) * eY - m.g(p, Y, Z) * eX) * xi +
                 m.g(p, phiY, Z) * phiX - m.g(p, phiX, Z) * phiY -
                 2.0 * m.g(p, phiX, Y) * phiZ);
  }
  return out;
}

// oriented determinant of the listed columns
double det_of_columns(const std::vector<Vec>& cols) {
  const int d = static_cast<int>(cols.size());
  Mat A(d, d);
  for (int j = 0; j < d; ++j) A.col(j) = cols[j];
  return A.determinant();
}

// 4th order central difference of a chart valued curve.  The result is
// materialised before return so no Eigen expression outlives its operands.
template <typename F>
auto stencil4(const F& eval, double h) {
  const auto fp1 = eval(h), fm1 = eval(-h), fp2 = eval(2.0 * h), fm2 = eval(-2.0 * h);
  using R = std::decay_t<decltype(fp1)>;
  R out = (8.0 * (fp1 - fm1) - (fp2 - fm2)) / (12.0 * h);
  return out;
}

}  // namespace

double SasakianModel::ricci(const Vec& p, const Vec& u, const Vec& v) const {
  const Mat basis = orthonormal_tangent_basis(p);
  double tr = 0.0;
  for (int l = 0; l < basis.cols(); ++l) {
    const Vec bl = basis.col(l);
    tr += g(p, curvature(p, bl, u, v), bl);
  }
  return tr;
}

Vec SasakianModel::random_tangent(Rng& rng, const Vec& p) const {
  Vec v = rng.uniform_vector(chart_dim(), -1.0, 1.0);
  return project_tangent(p, v);
}

Mat SasakianModel::orthonormal_tangent_basis(const Vec& p) const {
  const int d = chart_dim();
  const int m = manifold_dim();
  Mat basis(d, m);
  int got = 0;
  for (int j = 0; j < d && got < m; ++j) {
    Vec cand = Vec::Zero(d);
    cand[j] = 1.0;
    cand = project_tangent(p, cand);
    for (int l = 0; l < got; ++l) {
      cand -= g(p, basis.col(l), cand) * basis.col(l);
    }
    const double nrm = std::sqrt(std::max(g(p, cand, cand), 0.0));
    if (nrm < 1e-8) continue;
    basis.col(got++) = cand / nrm;
  }
  if (got != m) throw std::runtime_error("orthonormal_tangent_basis: rank deficiency");
  return basis;
}

void SasakianModel::require_point(const Vec& p, double tol) const {
  if (p.size() != chart_dim())
    throw OffManifoldError(name() + ": point has wrong chart dimension");
  if (!contains(p, tol))
    throw OffManifoldError(name() + ": point fails the membership test");
}

// ---------------------------------------------------------------------------
// sphere

SphereModel::SphereModel(int n) : n_(n) {
  if (n < 1) throw std::invalid_argument("SphereModel: need n >= 1");
  // sign fixed by requiring volume +1 on oriented Legendrian frames
  const int e = n + 1 + (n * (n + 1)) / 2;
  orientation_sign_ = (e % 2 == 0) ? 1.0 : -1.0;
}

Vec SphereModel::jmul(const Vec& v) {
  Vec out(v.size());
  for (int i = 0; i + 1 < v.size(); i += 2) {
    out[i] = -v[i + 1];
    out[i + 1] = v[i];
  }
  return out;
}

bool SphereModel::contains(const Vec& p, double tol) const {
  return p.size() == chart_dim() && std::abs(p.norm() - 1.0) <= tol;
}

Vec SphereModel::project_point(const Vec& p) const { return p / p.norm(); }

Vec SphereModel::project_tangent(const Vec& p, const Vec& v) const {
  return v - p.dot(v) * p;
}

double SphereModel::g(const Vec&, const Vec& u, const Vec& v) const { return u.dot(v); }

Mat SphereModel::metric_matrix(const Vec&) const {
  return Mat::Identity(chart_dim(), chart_dim());
}

Vec SphereModel::xi(const Vec& p) const { return jmul(p); }

Vec SphereModel::phi(const Vec& p, const Vec& u) const {
  const Vec ju = jmul(u);
  return -ju + p.dot(ju) * p;
}

Vec SphereModel::christoffel(const Vec& p, const Vec& u, const Vec& v) const {
  return u.dot(v) * p;
}

Vec SphereModel::curvature(const Vec& p, const Vec& X, const Vec& Y, const Vec& Z) const {
  return space_form_curvature(*this, 1.0, p, X, Y, Z);
}

double SphereModel::volume_form(const Vec& p, const std::vector<Vec>& vs) const {
  if (static_cast<int>(vs.size()) != manifold_dim())
    throw std::invalid_argument("volume_form: wrong number of vectors");
  std::vector<Vec> cols;
  cols.reserve(vs.size() + 1);
  cols.push_back(p);
  for (const auto& v : vs) cols.push_back(v);
  return orientation_sign_ * det_of_columns(cols);
}

Vec SphereModel::exp(const Vec& p, const Vec& v) const {
  const double r = v.norm();
  if (r < 1e-300) return p;
  Vec q = std::cos(r) * p + (std::sin(r) / r) * v;
  return q / q.norm();
}

Vec SphereModel::random_point(Rng& rng) const {
  while (true) {
    Vec v = rng.normal_vector(chart_dim());
    const double nrm = v.norm();
    if (nrm > 1e-6) return v / nrm;
  }
}

// ---------------------------------------------------------------------------
// Heisenberg group

HeisenbergModel::HeisenbergModel(int n) : n_(n) {
  if (n < 1) throw std::invalid_argument("HeisenbergModel: need n >= 1");
  const int e = 1 + (n * (n - 1)) / 2;
  orientation_sign_ = (e % 2 == 0) ? 1.0 : -1.0;
}

bool HeisenbergModel::contains(const Vec& p, double) const {
  return p.size() == chart_dim();
}

Vec HeisenbergModel::project_point(const Vec& p) const { return p; }

Vec HeisenbergModel::project_tangent(const Vec&, const Vec& v) const { return v; }

double HeisenbergModel::eta_form(const Vec& p, const Vec& u) const {
  double s = u[2 * n_];
  for (int i = 0; i < n_; ++i) s -= p[2 * i + 1] * u[2 * i];
  return 0.5 * s;
}

double HeisenbergModel::g(const Vec& p, const Vec& u, const Vec& v) const {
  double s = eta_form(p, u) * eta_form(p, v);
  for (int i = 0; i < 2 * n_; ++i) s += 0.25 * u[i] * v[i];
  return s;
}

Mat HeisenbergModel::metric_matrix(const Vec& p) const {
  const int d = chart_dim();
  Mat M = Mat::Zero(d, d);
  Vec eta_coeff = Vec::Zero(d);
  eta_coeff[2 * n_] = 0.5;
  for (int i = 0; i < n_; ++i) eta_coeff[2 * i] = -0.5 * p[2 * i + 1];
  M = eta_coeff * eta_coeff.transpose();
  for (int i = 0; i < 2 * n_; ++i) M(i, i) += 0.25;
  return M;
}

Vec HeisenbergModel::xi(const Vec& p) const {
  Vec v = Vec::Zero(p.size());
  v[2 * n_] = 2.0;
  return v;
}

Vec HeisenbergModel::phi(const Vec& p, const Vec& u) const {
  Vec out = Vec::Zero(u.size());
  double z = 0.0;
  for (int i = 0; i < n_; ++i) {
    out[2 * i] = u[2 * i + 1];
    out[2 * i + 1] = -u[2 * i];
    z += p[2 * i + 1] * u[2 * i + 1];
  }
  out[2 * n_] = z;
  return out;
}

Vec HeisenbergModel::christoffel(const Vec& p, const Vec& u, const Vec& v) const {
  const int d = chart_dim();
  const int zi = 2 * n_;
  Vec out = Vec::Zero(d);
  for (int i = 0; i < n_; ++i) {
    const int xi_ = 2 * i, yi_ = 2 * i + 1;
    const double yi_val = p[yi_];
    for (int j = 0; j < n_; ++j) {
      const int xj = 2 * j, yj = 2 * j + 1;
      const double yj_val = p[yj];
      // Gamma(dx_i, dx_j) = -(y_j dy_i + y_i dy_j) / 2
      const double cxx = u[xi_] * v[xj];
      out[yi_] += cxx * (-0.5) * yj_val;
      out[yj] += cxx * (-0.5) * yi_val;
      // Gamma(dx_i, dy_j) = y_i/2 dx_j + (y_i y_j - delta_ij)/2 dz
      const double cxy = u[xi_] * v[yj] + u[yj] * v[xi_];
      out[xj] += cxy * 0.5 * yi_val;
      out[zi] += cxy * 0.5 * (yi_val * yj_val - (i == j ? 1.0 : 0.0));
    }
    // Gamma(dx_i, dz) = dy_i / 2
    const double cxz = u[xi_] * v[zi] + u[zi] * v[xi_];
    out[yi_] += 0.5 * cxz;
    // Gamma(dy_i, dz) = -(dx_i + y_i dz) / 2
    const double cyz = u[yi_] * v[zi] + u[zi] * v[yi_];
    out[xi_] += -0.5 * cyz;
    out[zi] += -0.5 * cyz * yi_val;
  }
  return out;
}

Vec HeisenbergModel::curvature(const Vec& p, const Vec& X, const Vec& Y, const Vec& Z) const {
  return space_form_curvature(*this, -3.0, p, X, Y, Z);
}

double HeisenbergModel::volume_form(const Vec& p, const std::vector<Vec>& vs) const {
  if (static_cast<int>(vs.size()) != manifold_dim())
    throw std::invalid_argument("volume_form: wrong number of vectors");
  const double dens = std::sqrt(metric_matrix(p).determinant());
  return orientation_sign_ * dens * det_of_columns(vs);
}

Vec HeisenbergModel::exp(const Vec& p, const Vec& v) const {
  // geodesic equation integrated with a fixed step RK4
  const int steps = 64;
  const double h = 1.0 / steps;
  Vec q = p, w = v;
  const auto acc = [this](const Vec& q_, const Vec& w_) -> Vec {
    return -christoffel(q_, w_, w_);
  };
  for (int s = 0; s < steps; ++s) {
    const Vec k1q = w, k1w = acc(q, w);
    const Vec k2q = w + 0.5 * h * k1w, k2w = acc(q + 0.5 * h * k1q, w + 0.5 * h * k1w);
    const Vec k3q = w + 0.5 * h * k2w, k3w = acc(q + 0.5 * h * k2q, w + 0.5 * h * k2w);
    const Vec k4q = w + h * k3w, k4w = acc(q + h * k3q, w + h * k3w);
    q += (h / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
    w += (h / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
  }
  return q;
}

Vec HeisenbergModel::random_point(Rng& rng) const {
  return rng.uniform_vector(chart_dim(), -1.0, 1.0);
}

// ---------------------------------------------------------------------------

std::shared_ptr<SasakianModel> make_sphere_model(int n) {
  return std::make_shared<SphereModel>(n);
}
std::shared_ptr<SasakianModel> make_heisenberg_model(int n) {
  return std::make_shared<HeisenbergModel>(n);
}
std::shared_ptr<SasakianModel> make_model(const std::string& name, int n) {
  if (name == "sphere") return make_sphere_model(n);
  if (name == "heisenberg") return make_heisenberg_model(n);
  throw ConfigError("unknown model: " + name);
}

// ---------------------------------------------------------------------------
// identity suite

Vec covariant_derivative_fd(const SasakianModel& model, const Vec& p, const Vec& u,
                            const std::function<Vec(const Vec&)>& field, double h) {
  const auto along = [&](double s) { return field(model.exp(p, s * u)); };
  const Vec dot = stencil4(along, h);
  return dot + model.christoffel(p, u, field(p));
}

namespace {

double scalar_derivative_fd(const SasakianModel& model, const Vec& p, const Vec& u,
                            const std::function<double(const Vec&)>& f, double h) {
  const auto along = [&](double s) { return f(model.exp(p, s * u)); };
  return stencil4(along, h);
}

}  // namespace

std::vector<StructureCheck> verify_structure_identities(const SasakianModel& model,
                                                        int points, Rng& rng) {
  const double h = 1e-4;
  std::vector<StructureCheck> checks = {
      {"eta_xi", "eta(xi) = 1", 0.0, points},
      {"phi_xi", "phi(xi) = 0", 0.0, points},
      {"eta_phi", "eta(phi(u)) = 0", 0.0, points},
      {"phi_squared", "phi^2 = -id + eta (x) xi", 0.0, points},
      {"phi_metric", "g(phi u, phi v) = g(u, v) - eta(u) eta(v)", 0.0, points},
      {"d_eta", "d eta = 2 g(., phi .)", 0.0, points},
      {"i_xi_d_eta", "i(xi) d eta = 0", 0.0, points},
      {"nijenhuis", "[phi, phi] + d eta (x) xi = 0", 0.0, points},
      {"nabla_xi", "nabla_X xi = -phi(X)", 0.0, points},
      {"nabla_phi", "(nabla_X phi)(Y) = g(X, Y) xi - eta(Y) X", 0.0, points},
      {"metric_compat", "nabla g = 0", 0.0, points},
      {"torsion", "nabla_X Y - nabla_Y X = [X, Y]", 0.0, points},
      {"r_xi", "R(X, Y) xi = eta(Y) X - eta(X) Y", 0.0, points},
      {"r_phi", "R(X, Y) phi Z relation", 0.0, points},
      {"ric_xi_xi", "Ric(xi, xi) = 2n", 0.0, points},
      {"ric_xi_ker", "Ric(xi, u) = 0 for u in ker eta", 0.0, points},
  };
  StructureCheck& c_eta_xi = checks[0];
  StructureCheck& c_phi_xi = checks[1];
  StructureCheck& c_eta_phi = checks[2];
  StructureCheck& c_phi2 = checks[3];
  StructureCheck& c_phig = checks[4];
  StructureCheck& c_deta = checks[5];
  StructureCheck& c_ixideta = checks[6];
  StructureCheck& c_nij = checks[7];
  StructureCheck& c_nxi = checks[8];
  StructureCheck& c_nphi = checks[9];
  StructureCheck& c_mc = checks[10];
  StructureCheck& c_tor = checks[11];
  StructureCheck& c_rxi = checks[12];
  StructureCheck& c_rphi = checks[13];
  StructureCheck& c_ricxixi = checks[14];
  StructureCheck& c_ricker = checks[15];

  const auto vnorm = [&](const Vec& p, const Vec& v) {
    return std::sqrt(std::max(model.g(p, v, v), 0.0));
  };

  // tangent extension used for all differentiated fields
  const auto ext = [&](const Vec& q, const Vec& v) { return model.project_tangent(q, v); };

  for (int s = 0; s < points; ++s) {
    const Vec p = model.random_point(rng);
    const Vec xi = model.xi(p);
    auto unit_tangent = [&]() {
      while (true) {
        Vec v = model.random_tangent(rng, p);
        const double nrm = vnorm(p, v);
        if (nrm > 1e-3) return Vec(v / nrm);
      }
    };
    const Vec X = unit_tangent(), Y = unit_tangent(), Z = unit_tangent();
    const double etaX = model.eta(p, X), etaY = model.eta(p, Y);

    c_eta_xi.max_residual = std::max(c_eta_xi.max_residual, std::abs(model.eta(p, xi) - 1.0));
    c_phi_xi.max_residual = std::max(c_phi_xi.max_residual, vnorm(p, model.phi(p, xi)));
    c_eta_phi.max_residual = std::max(c_eta_phi.max_residual,
                                      std::abs(model.eta(p, model.phi(p, X))));
    {
      const Vec r = model.phi(p, model.phi(p, X)) + X - etaX * xi;
      c_phi2.max_residual = std::max(c_phi2.max_residual, vnorm(p, r));
    }
    {
      const double r = model.g(p, model.phi(p, X), model.phi(p, Y)) -
                       model.g(p, X, Y) + etaX * etaY;
      c_phig.max_residual = std::max(c_phig.max_residual, std::abs(r));
    }

    // d eta with projected extensions; their bracket vanishes at p
    const auto d_eta = [&](const Vec& A, const Vec& B) {
      const double t1 = scalar_derivative_fd(
          model, p, A, [&](const Vec& q) { return model.eta(q, ext(q, B)); }, h);
      const double t2 = scalar_derivative_fd(
          model, p, B, [&](const Vec& q) { return model.eta(q, ext(q, A)); }, h);
      return t1 - t2;
    };
    c_deta.max_residual = std::max(
        c_deta.max_residual, std::abs(d_eta(X, Y) - 2.0 * model.g(p, X, model.phi(p, Y))));
    c_ixideta.max_residual = std::max(c_ixideta.max_residual, std::abs(d_eta(xi, X)));

    // Nijenhuis tensor of phi via torsion free brackets of extended fields
    {
      const auto fieldY = [&](const Vec& q) { return ext(q, Y); };
      const auto fieldX = [&](const Vec& q) { return ext(q, X); };
      const auto phiX_f = [&](const Vec& q) { return model.phi(q, ext(q, X)); };
      const auto phiY_f = [&](const Vec& q) { return model.phi(q, ext(q, Y)); };
      const auto bracket = [&](const std::function<Vec(const Vec&)>& V,
                               const std::function<Vec(const Vec&)>& W) {
        return Vec(covariant_derivative_fd(model, p, V(p), W, h) -
                   covariant_derivative_fd(model, p, W(p), V, h));
      };
      const Vec brXY = bracket(fieldX, fieldY);
      const Vec n1 = model.phi(p, model.phi(p, brXY));
      const Vec n2 = bracket(phiX_f, phiY_f);
      const Vec n3 = model.phi(p, bracket(phiX_f, fieldY));
      const Vec n4 = model.phi(p, bracket(fieldX, phiY_f));
      const Vec nij = n1 + n2 - n3 - n4;
      c_nij.max_residual = std::max(c_nij.max_residual, vnorm(p, nij + d_eta(X, Y) * xi));
      c_tor.max_residual = std::max(c_tor.max_residual, vnorm(p, brXY));
    }

    {
      const Vec r = covariant_derivative_fd(
                        model, p, X, [&](const Vec& q) { return model.xi(q); }, h) +
                    model.phi(p, X);
      c_nxi.max_residual = std::max(c_nxi.max_residual, vnorm(p, r));
    }
    {
      const auto phiY_f = [&](const Vec& q) { return model.phi(q, ext(q, Y)); };
      const auto Y_f = [&](const Vec& q) { return ext(q, Y); };
      const Vec t1 = covariant_derivative_fd(model, p, X, phiY_f, h);
      const Vec t2 = model.phi(p, covariant_derivative_fd(model, p, X, Y_f, h));
      const Vec r = t1 - t2 - model.g(p, X, Y) * xi + etaY * X;
      c_nphi.max_residual = std::max(c_nphi.max_residual, vnorm(p, r));
    }
    {
      const auto Y_f = [&](const Vec& q) { return ext(q, Y); };
      const auto Z_f = [&](const Vec& q) { return ext(q, Z); };
      const double d = scalar_derivative_fd(
          model, p, X, [&](const Vec& q) { return model.g(q, ext(q, Y), ext(q, Z)); }, h);
      const double r = d - model.g(p, covariant_derivative_fd(model, p, X, Y_f, h), Z) -
                       model.g(p, Y, covariant_derivative_fd(model, p, X, Z_f, h));
      c_mc.max_residual = std::max(c_mc.max_residual, std::abs(r));
    }
    {
      const Vec r = model.curvature(p, X, Y, xi) - etaY * X + etaX * Y;
      c_rxi.max_residual = std::max(c_rxi.max_residual, vnorm(p, r));
    }
    {
      const Vec phiX = model.phi(p, X), phiY = model.phi(p, Y), phiZ = model.phi(p, Z);
      const Vec r = model.curvature(p, X, Y, phiZ) - model.phi(p, model.curvature(p, X, Y, Z)) +
                    model.g(p, Y, Z) * phiX - model.g(p, phiX, Z) * Y -
                    model.g(p, X, Z) * phiY + model.g(p, phiY, Z) * X;
      c_rphi.max_residual = std::max(c_rphi.max_residual, vnorm(p, r));
    }
    c_ricxixi.max_residual = std::max(
        c_ricxixi.max_residual, std::abs(model.ricci(p, xi, xi) - 2.0 * model.n()));
    {
      const Vec u = X - etaX * xi;  // ker eta component
      c_ricker.max_residual = std::max(c_ricker.max_residual, std::abs(model.ricci(p, xi, u)));
    }
  }
  return checks;
}

std::optional<EtaEinsteinFit> eta_einstein_fit(
    const SasakianModel& model, int points, Rng& rng, double reject_tol,
    const std::function<double(const Vec&, const Vec&, const Vec&)>& ricci_override) {
  const auto ric = [&](const Vec& p, const Vec& u, const Vec& v) {
    return ricci_override ? ricci_override(p, u, v) : model.ricci(p, u, v);
  };
  struct Sample { double r0, m; Vec p, u, v; };
  std::vector<Sample> samples;
  samples.reserve(points * 3);
  const double twon = 2.0 * model.n();
  for (int s = 0; s < points; ++s) {
    const Vec p = model.random_point(rng);
    for (int k = 0; k < 3; ++k) {
      const Vec u = model.random_tangent(rng, p);
      const Vec v = model.random_tangent(rng, p);
      const double eu = model.eta(p, u), ev = model.eta(p, v);
      Sample smp;
      smp.r0 = ric(p, u, v) - twon * eu * ev;
      smp.m = model.g(p, u, v) - eu * ev;
      smp.p = p; smp.u = u; smp.v = v;
      samples.push_back(std::move(smp));
    }
  }
  double num = 0.0, den = 0.0;
  for (const auto& smp : samples) {
    num += smp.r0 * smp.m;
    den += smp.m * smp.m;
  }
  if (den <= 0.0) return std::nullopt;
  EtaEinsteinFit fit;
  fit.A = num / den;
  fit.samples = static_cast<int>(samples.size());
  for (const auto& smp : samples) {
    fit.max_residual = std::max(fit.max_residual, std::abs(smp.r0 - fit.A * smp.m));
  }
  if (fit.max_residual > reject_tol) return std::nullopt;
  return fit;
}

}  // namespace phivol
