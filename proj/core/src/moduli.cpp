#include "phivol/moduli.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>

#include "phivol/errors.hpp"

namespace phivol {

namespace {

constexpr double kHalfPi = 1.5707963267948966;

void check_form(const DiscreteComplex& cx, const Mat& alpha, const char* where) {
  if (alpha.rows() != cx.k || alpha.cols() != cx.total) {
    std::ostringstream os;
    os << where << ": 1-form must be " << cx.k << " x " << cx.total << ", got "
       << alpha.rows() << " x " << alpha.cols();
    throw ConfigError(os.str());
  }
}

void check_function(const DiscreteComplex& cx, const Vec& f, const char* where) {
  if (f.size() != cx.total) {
    std::ostringstream os;
    os << where << ": node function must have " << cx.total << " entries, got "
       << f.size();
    throw ConfigError(os.str());
  }
}

// pads empty members with zeros so callers can start from the zero section
NormalEncoding normalized_encoding(const ModuliState& state,
                                   const NormalEncoding& v,
                                   const char* where) {
  NormalEncoding out;
  out.g = v.g.size() == 0 ? Vec::Zero(state.complex.total) : v.g;
  out.alpha = v.alpha.size() == 0
                  ? Mat::Zero(state.complex.k, state.complex.total)
                  : v.alpha;
  check_function(state.complex, out.g, where);
  check_form(state.complex, out.alpha, where);
  return out;
}

double sup_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// best contraction order over consecutive residual triples that stay above
// the floor where spectral roundoff dominates
double measured_order(const std::vector<double>& r) {
  double best = 0.0;
  for (std::size_t i = 2; i < r.size(); ++i) {
    const double a = r[i - 2];
    const double b = r[i - 1];
    const double c = r[i];
    if (!(a > b && b > c && c >= 1e-13)) continue;
    best = std::max(best, std::log(c / b) / std::log(b / a));
  }
  return best;
}

}  // namespace

Mat DiscreteComplex::differential(const Vec& f) const {
  check_function(*this, f, "differential");
  Mat out(k, total);
  for (int a = 0; a < k; ++a) out.row(a) = (diff[a] * f).transpose();
  return out;
}

Vec DiscreteComplex::codifferential(const Mat& alpha) const {
  check_form(*this, alpha, "codifferential");
  Vec acc = Vec::Zero(total);
  for (int a = 0; a < k; ++a) {
    Vec flux(total);
    for (int node = 0; node < total; ++node) {
      flux(node) = sqrt_det(node) * metric_inv[node].row(a).dot(alpha.col(node));
    }
    acc.noalias() += diff[a] * flux;
  }
  return (-acc.array() / sqrt_det.array()).matrix();
}

Vec DiscreteComplex::laplacian(const Vec& f) const {
  return codifferential(differential(f));
}

Mat DiscreteComplex::laplacian_matrix() const {
  Mat acc = Mat::Zero(total, total);
  Vec w(total);
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      for (int node = 0; node < total; ++node) {
        w(node) = sqrt_det(node) * metric_inv[node](a, b);
      }
      acc.noalias() += diff[a] * (w.asDiagonal() * diff[b]);
    }
  }
  Mat out = -acc;
  for (int node = 0; node < total; ++node) out.row(node) /= sqrt_det(node);
  return out;
}

double DiscreteComplex::inner(const Vec& f, const Vec& h) const {
  check_function(*this, f, "inner");
  check_function(*this, h, "inner");
  Vec terms = (f.array() * h.array() * sqrt_det.array()).matrix();
  return cell * pairwise_sum(terms);
}

double DiscreteComplex::inner(const Mat& alpha, const Mat& beta) const {
  check_form(*this, alpha, "inner");
  check_form(*this, beta, "inner");
  Vec terms(total);
  for (int node = 0; node < total; ++node) {
    terms(node) = sqrt_det(node) *
                  alpha.col(node).dot(metric_inv[node] * beta.col(node));
  }
  return cell * pairwise_sum(terms);
}

Vec DiscreteComplex::dd_residual(const Vec& f) const {
  check_function(*this, f, "dd_residual");
  const int pairs = k * (k - 1) / 2;
  Vec out = Vec::Zero(pairs * total);
  int slot = 0;
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      Vec da = diff[a] * f;
      Vec db = diff[b] * f;
      out.segment(slot * total, total) = diff[b] * da - diff[a] * db;
      ++slot;
    }
  }
  return out;
}

DiscreteComplex make_discrete_complex(const DiscretizedImmersion& imm,
                                      const std::vector<NodeFrame>& frames) {
  DiscreteComplex cx;
  cx.k = imm.grid().k();
  cx.total = imm.nodes();
  cx.cell = imm.grid().cell_weight();
  if (static_cast<int>(frames.size()) != cx.total) {
    throw ConfigError("frame list does not match the grid");
  }
  cx.diff.reserve(cx.k);
  for (int a = 0; a < cx.k; ++a) {
    cx.diff.push_back(global_diff_matrix(imm.grid(), a));
  }
  cx.sqrt_det.resize(cx.total);
  cx.metric_inv.resize(cx.total);
  const SasakianModel& model = imm.model();
  for (int node = 0; node < cx.total; ++node) {
    const NodeFrame& fr = frames[node];
    cx.sqrt_det(node) = fr.sqrt_gram;
    Mat metric = model.metric_matrix(fr.p);
    Mat gram = fr.partials.transpose() * metric * fr.partials;
    cx.metric_inv[node] = gram.inverse();
  }
  return cx;
}

Vec shifted_laplacian_spectrum(const DiscreteComplex& cx, double shift) {
  Mat A = cx.laplacian_matrix();
  A.diagonal().array() += shift;
  Vec s = cx.sqrt_det.cwiseSqrt();
  Mat sym(cx.total, cx.total);
  for (int i = 0; i < cx.total; ++i) {
    for (int j = 0; j < cx.total; ++j) sym(i, j) = s(i) * A(i, j) / s(j);
  }
  const double scale = sym.cwiseAbs().maxCoeff();
  const double skew = (sym - sym.transpose()).cwiseAbs().maxCoeff();
  if (skew > 1e-8 * std::max(scale, 1.0)) {
    throw NumericalError("weighted Laplacian failed the symmetry check");
  }
  Mat balanced = 0.5 * (sym + sym.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(balanced);
  if (es.info() != Eigen::Success) {
    throw NumericalError("Laplacian eigendecomposition failed");
  }
  return es.eigenvalues();
}

HodgeSplit hodge_split(const DiscreteComplex& cx, const Mat& alpha) {
  check_form(cx, alpha, "hodge_split");
  HodgeSplit split;
  const Vec ones = Vec::Ones(cx.total);
  if (cx.k == 1) {
    // constant flux closed form: the coclosed remainder has
    // sqrt_det * ginv * component equal to one constant
    Vec q(cx.total);
    for (int node = 0; node < cx.total; ++node) {
      q(node) = cx.sqrt_det(node) * cx.metric_inv[node](0, 0);
    }
    const double c = alpha.row(0).sum() / q.cwiseInverse().sum();
    Vec slope = alpha.row(0).transpose() - c * q.cwiseInverse();
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(cx.diff[0]);
    split.potential = cod.solve(slope);
  } else {
    Mat L = cx.laplacian_matrix();
    Vec s = cx.sqrt_det.cwiseSqrt();
    Mat sym(cx.total, cx.total);
    for (int i = 0; i < cx.total; ++i) {
      for (int j = 0; j < cx.total; ++j) sym(i, j) = s(i) * L(i, j) / s(j);
    }
    Mat balanced = 0.5 * (sym + sym.transpose());
    Vec kappa = s.normalized();
    balanced.noalias() += kappa * kappa.transpose();
    Vec rhs = cx.codifferential(alpha);
    Vec b = s.cwiseProduct(rhs);
    Eigen::ConjugateGradient<Mat, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(1e-14);
    cg.setMaxIterations(50 * cx.total);
    cg.compute(balanced);
    Vec x = cg.solve(b);
    if (cg.info() != Eigen::Success && b.cwiseAbs().maxCoeff() > 0.0) {
      throw NumericalError("Hodge split conjugate gradient did not converge");
    }
    split.potential = x.cwiseQuotient(s);
  }
  split.potential.array() -=
      cx.inner(split.potential, ones) / cx.inner(ones, ones);
  split.exact = cx.differential(split.potential);
  split.coclosed = alpha - split.exact;
  split.coclosed_residual = sup_norm(cx.codifferential(split.coclosed));
  split.cross_inner = cx.inner(split.exact, split.coclosed);
  return split;
}

ModuliState make_moduli_state(const DiscretizedImmersion& imm,
                              double special_tol) {
  ModuliState state{imm,
                    build_frames(imm),
                    make_cone(imm.model_ptr()),
                    DiscreteComplex{},
                    0.0,
                    Mat(),
                    nullptr,
                    Mat()};
  state.complex = make_discrete_complex(state.base, state.frames);
  state.filter = global_filter_matrix(imm.grid(), 2.0 / 3.0);
  double max_im = 0.0;
  for (int node = 0; node < state.complex.total; ++node) {
    const NodeFrame& fr = state.frames[node];
    const std::complex<double> z = psi_eval(state.cone, fr.p, fr.e);
    max_im = std::max(max_im, std::abs(z.imag()));
    if (!(z.real() > 0.0)) throw OrientationError(node, z.real());
  }
  state.base_defect = max_im;
  if (!(max_im < special_tol)) {
    std::ostringstream os;
    os << "base pullback has imaginary part " << max_im
       << " above the special gate " << special_tol;
    throw ConfigError(os.str());
  }
  const double shift = (state.cone.n + 1.0) * (state.cone.n + 1.0);
  state.normal_operator = state.complex.laplacian_matrix();
  state.normal_operator.diagonal().array() += shift;
  state.normal_solver =
      std::make_shared<const Eigen::PartialPivLU<Mat>>(state.normal_operator);
  return state;
}

Vec d1_apply(const ModuliState& state, const NormalEncoding& v) {
  NormalEncoding enc = normalized_encoding(state, v, "d1_apply");
  Vec out = -(state.cone.n + 1.0) * enc.g;
  out -= state.complex.codifferential(enc.alpha);
  return out;
}

NormalEncoding d1_adjoint(const ModuliState& state, const Vec& h) {
  check_function(state.complex, h, "d1_adjoint");
  NormalEncoding out;
  out.g = (-(state.cone.n + 1.0) * h).eval();
  out.alpha = (-state.complex.differential(h)).eval();
  return out;
}

Vec d1d1star_apply(const ModuliState& state, const Vec& h) {
  return d1_apply(state, d1_adjoint(state, h));
}

Vec laplacian_identity_spectrum(const ModuliState& state) {
  if (state.complex.k != 1) {
    throw ConfigError("the dense identity spectrum is wired for curve grids");
  }
  const double shift = (state.cone.n + 1.0) * (state.cone.n + 1.0);
  return shifted_laplacian_spectrum(state.complex, shift);
}

NormalEncoding encode_normal(const ModuliState& state,
                             const HorizontalField& field) {
  const DiscreteComplex& cx = state.complex;
  if (field.y.rows() != cx.k || field.y.cols() != cx.total ||
      field.f.size() != cx.total) {
    throw ConfigError("encode_normal: field does not match the grid");
  }
  const SasakianModel& model = state.base.model();
  NormalEncoding enc;
  enc.g.resize(cx.total);
  enc.alpha.resize(cx.k, cx.total);
  for (int node = 0; node < cx.total; ++node) {
    const NodeFrame& fr = state.frames[node];
    enc.g(node) = fr.rho * field.f(node);
    Vec w = fr.e * field.y.col(node);
    Vec mw = model.metric_matrix(fr.p) * w;
    enc.alpha.col(node) = fr.rho * (fr.partials.transpose() * mw);
  }
  return enc;
}

HorizontalField decode_normal(const ModuliState& state,
                              const NormalEncoding& v) {
  NormalEncoding enc = normalized_encoding(state, v, "decode_normal");
  const DiscreteComplex& cx = state.complex;
  HorizontalField field;
  field.f.resize(cx.total);
  Mat y_param(cx.k, cx.total);
  for (int node = 0; node < cx.total; ++node) {
    const NodeFrame& fr = state.frames[node];
    field.f(node) = enc.g(node) / fr.rho;
    y_param.col(node) = (cx.metric_inv[node] * enc.alpha.col(node)) / fr.rho;
  }
  field.y = coefficients_from_parameters(state.frames, y_param);
  return field;
}

NormalEncoding kernel_element(const ModuliState& state, const Mat& alpha) {
  check_form(state.complex, alpha, "kernel_element");
  NormalEncoding enc;
  enc.alpha = alpha;
  enc.g = (-1.0 / (state.cone.n + 1.0)) *
          state.complex.codifferential(alpha);
  return enc;
}

std::vector<NormalEncoding> moduli_tangent_basis(const ModuliState& state) {
  const DiscreteComplex& cx = state.complex;
  std::vector<NormalEncoding> basis;
  basis.reserve(static_cast<std::size_t>(cx.k) * cx.total);
  for (int a = 0; a < cx.k; ++a) {
    for (int node = 0; node < cx.total; ++node) {
      Mat alpha = Mat::Zero(cx.k, cx.total);
      alpha(a, node) = 1.0;
      basis.push_back(kernel_element(state, alpha));
    }
  }
  return basis;
}

DiscretizedImmersion exp_normal(const ModuliState& state,
                                const NormalEncoding& v) {
  HorizontalField field = decode_normal(state, v);
  const DiscreteComplex& cx = state.complex;
  const SasakianModel& model = state.base.model();
  Mat Z(state.base.values().rows(), cx.total);
  for (int node = 0; node < cx.total; ++node) {
    const NodeFrame& fr = state.frames[node];
    Z.col(node) = fr.phie * field.y.col(node) + field.f(node) * fr.xi;
    const Vec z = Z.col(node);
    const double len = std::sqrt(z.dot(model.metric_matrix(fr.p) * z));
    if (!(len < kHalfPi)) {
      std::ostringstream os;
      os << "normal step of length " << len << " at node " << node
         << " reaches the injectivity scale " << kHalfPi;
      throw ConfigError(os.str());
    }
  }
  return exponential_push(state.base, Z, 1.0);
}

DefectField special_residual(const ModuliState& state,
                             const NormalEncoding& v) {
  DiscretizedImmersion pushed = exp_normal(state, v);
  const DiscreteComplex& cx = state.complex;
  std::vector<Mat> parts;
  parts.reserve(cx.k);
  for (int a = 0; a < cx.k; ++a) parts.push_back(pushed.partial(a));
  DefectField out;
  out.residual.resize(cx.total);
  out.re_psi.resize(cx.total);
  Mat vs(pushed.values().rows(), cx.k);
  for (int node = 0; node < cx.total; ++node) {
    for (int a = 0; a < cx.k; ++a) vs.col(a) = parts[a].col(node);
    const std::complex<double> z = psi_eval(state.cone, pushed.point(node), vs);
    out.residual(node) = z.imag() / cx.sqrt_det(node);
    out.re_psi(node) = z.real();
    if (!(z.real() > 0.0)) out.positive = false;
  }
  return out;
}

namespace {

void guard_residual(const std::vector<double>& history) {
  const double r = history.back();
  if (!std::isfinite(r) || r > 1e8) {
    throw NumericalError("Gauss-Newton residual diverged");
  }
}

// A residual that refuses to drop sits in the band the dealiasing filter
// excludes, so no number of iterations will reach tol; only a finer grid can.
void guard_stagnation(const std::vector<double>& history, double tol) {
  const std::size_t n = history.size();
  if (n < 3) return;
  const double a = history[n - 3];
  const double b = history[n - 2];
  const double c = history[n - 1];
  if (c > tol && c > 0.9 * b && b > 0.9 * a) {
    std::ostringstream os;
    os << "Gauss-Newton stalled at residual " << c << " above tol " << tol
       << "; the grid does not resolve the projection target, refine it";
    throw ResolutionError(os.str());
  }
}

int min_re_node(const Vec& re) {
  int node = 0;
  re.minCoeff(&node);
  return node;
}

}  // namespace

NewtonReport newton_project(const ModuliState& state, const NormalEncoding& v0,
                            double tol, int max_iter, NewtonMode mode) {
  if (!(tol > 0.0) || max_iter < 1) {
    throw ConfigError("newton_project needs tol > 0 and max_iter >= 1");
  }
  const double np1 = state.cone.n + 1.0;
  std::vector<double> history;
  if (mode == NewtonMode::FrozenBase) {
    NormalEncoding v = normalized_encoding(state, v0, "newton_project");
    DefectField field = special_residual(state, v);
    history.push_back(sup_norm(field.residual));
    int it = 0;
    while (history.back() > tol) {
      guard_residual(history);
      guard_stagnation(history, tol);
      if (it >= max_iter) {
        throw NumericalError("Gauss-Newton did not converge in " +
                             std::to_string(max_iter) + " iterations");
      }
      if (!field.positive) {
        throw OrientationError(min_re_node(field.re_psi),
                               field.re_psi.minCoeff());
      }
      Vec h = state.filter * state.normal_solver->solve(field.residual);
      v.g += np1 * h;
      v.alpha += state.complex.differential(h);
      field = special_residual(state, v);
      history.push_back(sup_norm(field.residual));
      ++it;
    }
    if (!field.positive) {
      throw OrientationError(min_re_node(field.re_psi),
                             field.re_psi.minCoeff());
    }
    DiscretizedImmersion pushed = exp_normal(state, v);
    std::vector<NodeFrame> frames = build_frames(pushed);
    const double defect = special_defect(state.cone, pushed, frames).defect;
    return NewtonReport{v,
                        pushed,
                        history,
                        measured_order(history),
                        it,
                        defect,
                        mode};
  }
  DiscretizedImmersion current = exp_normal(state, v0);
  constexpr double kNoGate = std::numeric_limits<double>::infinity();
  int it = 0;
  while (true) {
    ModuliState st = make_moduli_state(current, kNoGate);
    NormalEncoding zero;
    DefectField field = special_residual(st, zero);
    history.push_back(sup_norm(field.residual));
    if (history.back() <= tol) {
      const double defect =
          special_defect(st.cone, current, st.frames).defect;
      NormalEncoding rest;
      rest.g = Vec::Zero(st.complex.total);
      rest.alpha = Mat::Zero(st.complex.k, st.complex.total);
      return NewtonReport{rest,
                          current,
                          history,
                          measured_order(history),
                          it,
                          defect,
                          mode};
    }
    guard_residual(history);
    guard_stagnation(history, tol);
    if (it >= max_iter) {
      throw NumericalError("Gauss-Newton did not converge in " +
                           std::to_string(max_iter) + " iterations");
    }
    Vec h = st.filter * st.normal_solver->solve(field.residual);
    NormalEncoding step;
    step.g = (np1 * h).eval();
    step.alpha = st.complex.differential(h);
    current = exp_normal(st, step);
    ++it;
  }
}

std::vector<WalkStep> moduli_walk(const DiscretizedImmersion& base,
                                  const FormPattern& pattern, int steps,
                                  double step_size, double tol,
                                  NewtonMode mode) {
  if (steps < 1 || !(step_size > 0.0)) {
    throw ConfigError("moduli_walk needs steps >= 1 and step_size > 0");
  }
  std::vector<WalkStep> out;
  out.reserve(steps);
  DiscretizedImmersion current = base;
  for (int s = 0; s < steps; ++s) {
    ModuliState st = make_moduli_state(current);
    Mat alpha(st.complex.k, st.complex.total);
    for (int node = 0; node < st.complex.total; ++node) {
      Vec comp = pattern(base.grid().node_params(node));
      if (comp.size() != st.complex.k) {
        throw ConfigError("form pattern must return one component per grid direction");
      }
      alpha.col(node) = step_size * comp;
    }
    NewtonReport rep =
        newton_project(st, kernel_element(st, alpha), tol, 50, mode);
    out.push_back(WalkStep{rep.immersion, rep.residual_history.back(),
                           rep.final_defect,
                           phi_volume(rep.immersion).total, rep.iterations});
    current = rep.immersion;
  }
  return out;
}

}  // namespace phivol
