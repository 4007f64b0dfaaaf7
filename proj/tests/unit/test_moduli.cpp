#include <cmath>
#include <vector>

#include <doctest.h>

#include "phivol/cone.hpp"
#include "phivol/errors.hpp"
#include "phivol/frame.hpp"
#include "phivol/immersion.hpp"
#include "phivol/moduli.hpp"
#include "phivol/numerics.hpp"
#include "phivol/variation.hpp"

using namespace phivol;

namespace {

constexpr double kTwoPi = 6.283185307179586;

// the real great circle traversed at non-constant speed, still special
ImmersionFamily repar_circle() {
  ImmersionFamily fam = real_circle();
  fam.name = "repar_circle";
  fam.map = [](const Vec& t) {
    const double tau = t[0] + 0.3 * std::sin(t[0]);
    Vec p(4);
    p << std::cos(tau), 0.0, std::sin(tau), 0.0;
    return p;
  };
  return fam;
}

// clifford torus with the parameters swapped so the pullback of psi is +1
DiscretizedImmersion flipped_torus(const std::vector<int>& dims) {
  auto cliff = clifford_torus();
  ChartMap flipped = [cliff](const Vec& t) {
    Vec s(2);
    s(0) = t(1);
    s(1) = t(0);
    return cliff.map(s);
  };
  return build_immersion(cliff.model, Grid(dims), flipped);
}

double dist(const DiscretizedImmersion& a, const DiscretizedImmersion& b) {
  return (a.values() - b.values()).colwise().norm().maxCoeff();
}

// kernel direction whose normal field has non-constant length
double mix_pattern(double t) { return std::sin(2 * t) + 0.4 * std::cos(3 * t); }

NormalEncoding scaled_kernel(const ModuliState& st, double scale,
                             double (*pattern)(double)) {
  Mat alpha(1, st.complex.total);
  for (int m = 0; m < st.complex.total; ++m)
    alpha(0, m) = scale * pattern(st.base.grid().node_params(m)(0));
  return kernel_element(st, alpha);
}

}  // namespace

TEST_CASE("differential and codifferential are adjoint under quadrature") {
  Rng rng(41);
  // curve with non-uniform induced density and the flat surface
  ModuliState curve = make_moduli_state(repar_circle().discretize(Grid({31})));
  ModuliState surf = make_moduli_state(flipped_torus({15, 15}));
  for (const ModuliState* st : {&curve, &surf}) {
    const DiscreteComplex& cx = st->complex;
    Vec f = rng.uniform_vector(cx.total, -1.0, 1.0);
    Mat beta(cx.k, cx.total);
    for (int a = 0; a < cx.k; ++a)
      beta.row(a) = rng.uniform_vector(cx.total, -1.0, 1.0).transpose();
    const double lhs = cx.inner(cx.differential(f), beta);
    const double rhs = cx.inner(f, cx.codifferential(beta));
    CHECK(std::abs(lhs - rhs) < 1e-10);
  }
  // d after d vanishes identically on the surface
  Vec f = rng.uniform_vector(surf.complex.total, -1.0, 1.0);
  CHECK(surf.complex.dd_residual(f).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(curve.complex.dd_residual(f.head(31)).size() == 0);
}

TEST_CASE("flat circle spectrum is the shifted Fourier ladder") {
  ModuliState st = make_moduli_state(real_circle().discretize(Grid({31})));
  CHECK(st.base_defect == 0.0);
  Vec ev = laplacian_identity_spectrum(st);
  REQUIRE(ev.size() == 31);
  // eigenvalues 4 + k^2, each non-zero k twice
  std::vector<double> expect{4.0};
  for (int k = 1; k <= 15; ++k) {
    expect.push_back(4.0 + k * k);
    expect.push_back(4.0 + k * k);
  }
  std::sort(expect.begin(), expect.end());
  for (int i = 0; i < ev.size(); ++i)
    CHECK(std::abs(ev(i) - expect[i]) < 1e-9);
}

TEST_CASE("reparametrisation does not move the spectrum") {
  // same circle, non-constant speed: the operator only sees the geometry
  ModuliState st = make_moduli_state(repar_circle().discretize(Grid({31})));
  CHECK(st.base_defect < 1e-12);
  Vec ev = laplacian_identity_spectrum(st);
  CHECK(std::abs(ev(0) - 4.0) < 1e-9);
  CHECK(std::abs(ev(1) - 5.0) < 1e-6);
  CHECK(std::abs(ev(2) - 5.0) < 1e-6);
  CHECK(ev.minCoeff() >= 4.0 - 1e-9);
}

TEST_CASE("flat torus spectrum matches the hexagonal closed form") {
  ModuliState st = make_moduli_state(flipped_torus({15, 15}));
  CHECK(st.base_defect < 1e-12);
  Vec ev = shifted_laplacian_spectrum(st.complex, 9.0);
  // induced metric of the clifford torus: eigenvalues 9 + 2(m^2 - mn + n^2)
  std::vector<double> expect;
  for (int m = -7; m <= 7; ++m)
    for (int n = -7; n <= 7; ++n)
      expect.push_back(9.0 + 2.0 * (m * m - m * n + n * n));
  std::sort(expect.begin(), expect.end());
  REQUIRE(ev.size() == static_cast<int>(expect.size()));
  for (int i = 0; i < ev.size(); ++i)
    CHECK(std::abs(ev(i) - expect[i]) < 1e-9);
  CHECK(ev.minCoeff() == doctest::Approx(9.0).epsilon(1e-10));
}

TEST_CASE("linearised defect operator closed forms") {
  ModuliState st = make_moduli_state(repar_circle().discretize(Grid({31})));
  const int total = st.complex.total;
  Rng rng(7);

  // pure function input scales by -(n+1)
  Vec g = rng.uniform_vector(total, -1.0, 1.0);
  NormalEncoding vg{g, Mat::Zero(1, total)};
  CHECK((d1_apply(st, vg) + 2.0 * g).cwiseAbs().maxCoeff() < 1e-13);

  // coclosed input: alpha = 1/q with q the weighted metric factor
  Mat coclosed(1, total);
  for (int m = 0; m < total; ++m)
    coclosed(0, m) = 1.0 / (st.complex.sqrt_det(m) * st.complex.metric_inv[m](0, 0));
  NormalEncoding vc{Vec::Zero(total), coclosed};
  CHECK(d1_apply(st, vc).cwiseAbs().maxCoeff() < 1e-10);

  // exact input reproduces the negative laplacian
  Vec f = rng.uniform_vector(total, -1.0, 1.0);
  NormalEncoding ve{Vec::Zero(total), st.complex.differential(f)};
  CHECK((d1_apply(st, ve) + st.complex.laplacian(f)).cwiseAbs().maxCoeff() < 1e-9);

  // adjoint pairing and the composition identity
  Vec h = rng.uniform_vector(total, -1.0, 1.0);
  Mat alpha(1, total);
  alpha.row(0) = rng.uniform_vector(total, -1.0, 1.0).transpose();
  NormalEncoding v{g, alpha};
  NormalEncoding adj = d1_adjoint(st, h);
  CHECK((adj.g + 2.0 * h).cwiseAbs().maxCoeff() < 1e-13);
  CHECK((adj.alpha + st.complex.differential(h)).cwiseAbs().maxCoeff() < 1e-13);
  const double lhs = st.complex.inner(d1_apply(st, v), h);
  const double rhs = st.complex.inner(v.g, adj.g) + st.complex.inner(v.alpha, adj.alpha);
  CHECK(std::abs(lhs - rhs) < 1e-10);
  Vec composed = d1d1star_apply(st, h);
  CHECK((composed - 4.0 * h - st.complex.laplacian(h)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("normal encoding round trips through the frame identification") {
  Rng rng(23);
  for (const auto& dims : {std::vector<int>{31}, std::vector<int>{15, 15}}) {
    ModuliState st = dims.size() == 1
                         ? make_moduli_state(repar_circle().discretize(Grid(dims)))
                         : make_moduli_state(flipped_torus(dims));
    const int n = st.cone.n;
    HorizontalField field;
    field.y = Mat(n, st.complex.total);
    for (int a = 0; a < n; ++a)
      field.y.row(a) = rng.uniform_vector(st.complex.total, -0.5, 0.5).transpose();
    field.f = rng.uniform_vector(st.complex.total, -0.5, 0.5);
    NormalEncoding enc = encode_normal(st, field);
    HorizontalField back = decode_normal(st, enc);
    CHECK((back.y - field.y).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((back.f - field.f).cwiseAbs().maxCoeff() < 1e-12);
    NormalEncoding enc2 = encode_normal(st, back);
    CHECK((enc2.g - enc.g).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((enc2.alpha - enc.alpha).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("tangent basis spans the kernel in every coordinate direction") {
  for (const auto& dims : {std::vector<int>{31}, std::vector<int>{15, 15}}) {
    ModuliState st = dims.size() == 1
                         ? make_moduli_state(real_circle().discretize(Grid(dims)))
                         : make_moduli_state(flipped_torus(dims));
    std::vector<NormalEncoding> basis = moduli_tangent_basis(st);
    CHECK(static_cast<int>(basis.size()) == st.complex.k * st.complex.total);
    for (const NormalEncoding& b : basis)
      CHECK(d1_apply(st, b).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("hodge split of circle forms has a constant-flux closed form") {
  ModuliState st = make_moduli_state(repar_circle().discretize(Grid({31})));
  const DiscreteComplex& cx = st.complex;
  // alpha = c/q + d(sin 2t): the split must recover both parts exactly
  Vec phi(cx.total);
  Mat alpha(1, cx.total);
  for (int m = 0; m < cx.total; ++m) {
    const double t = st.base.grid().node_params(m)(0);
    phi(m) = std::sin(2 * t);
    alpha(0, m) = 0.7 / (cx.sqrt_det(m) * cx.metric_inv[m](0, 0));
  }
  Mat dphi = cx.differential(phi);
  alpha += dphi;
  HodgeSplit split = hodge_split(cx, alpha);
  CHECK((split.exact + split.coclosed - alpha).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((split.exact - dphi).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(split.coclosed_residual < 1e-10);
  CHECK(std::abs(split.cross_inner) < 1e-10);
  // the potential is mean free against the induced measure
  CHECK(std::abs(cx.inner(split.potential, Vec::Ones(cx.total))) < 1e-10);
}

TEST_CASE("hodge split on the torus and the dimension bookkeeping") {
  ModuliState st = make_moduli_state(flipped_torus({15, 15}));
  const DiscreteComplex& cx = st.complex;
  const int total = cx.total;
  Mat alpha(2, total);
  for (int m = 0; m < total; ++m) {
    const Vec t = st.base.grid().node_params(m);
    alpha(0, m) = std::sin(t(0)) + 0.3 * std::cos(t(0) + 2 * t(1));
    alpha(1, m) = std::cos(2 * t(1)) - 0.5 * std::sin(t(0) - t(1));
  }
  HodgeSplit split = hodge_split(cx, alpha);
  CHECK((split.exact + split.coclosed - alpha).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(split.coclosed_residual < 1e-11);
  CHECK(std::abs(split.cross_inner) < 1e-12);

  // d* has a one-dimensional cokernel, so the coclosed space has dimension
  // total + 1: coexact forms plus the two harmonic circle classes
  Mat dstar(total, 2 * total);
  for (int a = 0; a < 2; ++a)
    for (int m = 0; m < total; ++m) {
      Mat delta = Mat::Zero(2, total);
      delta(a, m) = 1.0;
      dstar.col(a * total + m) = cx.codifferential(delta);
    }
  Eigen::BDCSVD<Mat> svd(dstar);
  Vec sv = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-9 * sv(0)) ++rank;
  CHECK(rank == total - 1);
  const int coclosed_dim = 2 * total - rank;
  const int exact_dim = total - 1;
  CHECK(coclosed_dim == total + 1);
  CHECK(coclosed_dim + exact_dim == 2 * total);
}

TEST_CASE("normal exponential fixes the base and rejects oversized steps") {
  ModuliState st = make_moduli_state(real_circle().discretize(Grid({64})));
  NormalEncoding zero;
  DiscretizedImmersion back = exp_normal(st, zero);
  CHECK((back.values() - st.base.values()).cwiseAbs().maxCoeff() == 0.0);

  NormalEncoding big{Vec::Constant(64, 2.0), Mat::Zero(1, 64)};
  CHECK_THROWS_AS(exp_normal(st, big), ConfigError);
}

TEST_CASE("constant-length kernel directions stay on the zero set") {
  ModuliState st = make_moduli_state(real_circle().discretize(Grid({64})));
  auto sin2t = [](double t) { return std::sin(2 * t); };
  for (double s : {0.1, 0.25}) {
    NormalEncoding enc = scaled_kernel(st, s, sin2t);
    DefectField f = special_residual(st, enc);
    CHECK(f.positive);
    CHECK(f.residual.cwiseAbs().maxCoeff() < 1e-12);
    DiscretizedImmersion pushed = exp_normal(st, enc);
    auto frames = build_frames(pushed);
    CHECK(special_defect(st.cone, pushed, frames).defect < 1e-12);
  }
  // the push genuinely moves the circle
  CHECK(dist(exp_normal(st, scaled_kernel(st, 0.25, sin2t)), st.base) > 0.2);
}

TEST_CASE("generic kernel pushes leave the zero set at cubic order") {
  ModuliState st = make_moduli_state(real_circle().discretize(Grid({64})));
  auto sin_t = [](double t) { return std::sin(t); };
  double prev = 0.0;
  for (double s : {0.2, 0.1, 0.05}) {
    DefectField f = special_residual(st, scaled_kernel(st, s, sin_t));
    const double sup = f.residual.cwiseAbs().maxCoeff();
    CHECK(f.positive);
    if (prev > 0.0) {
      const double ratio = prev / sup;
      CHECK(ratio > 6.5);
      CHECK(ratio < 9.5);
    }
    prev = sup;
  }
}

TEST_CASE("gauss newton is a no-op on special starts") {
  ModuliState st = make_moduli_state(real_circle().discretize(Grid({64})));
  for (NewtonMode mode : {NewtonMode::FrozenBase, NewtonMode::Rebased}) {
    NewtonReport rep = newton_project(st, NormalEncoding{}, 1e-10, 50, mode);
    CHECK(rep.iterations == 0);
    CHECK(rep.residual_history.size() == 1);
    CHECK(rep.final_defect < 1e-12);
    // exact kernel rotation: already a zero at finite amplitude
    NewtonReport rot = newton_project(
        st, scaled_kernel(st, 0.25, [](double t) { return std::sin(2 * t); }),
        1e-10, 50, mode);
    CHECK(rot.iterations == 0);
    CHECK(rot.final_defect < 1e-12);
    CHECK(dist(rot.immersion, st.base) > 0.2);
  }
}

TEST_CASE("gauss newton projects curved kernel pushes back to the zero set") {
  ModuliState st = make_moduli_state(real_circle().discretize(Grid({64})));
  NormalEncoding enc = scaled_kernel(st, 0.1, mix_pattern);

  NewtonReport reb = newton_project(st, enc, 1e-10, 50, NewtonMode::Rebased);
  CHECK(reb.iterations <= 3);
  CHECK(reb.residual_history.back() <= 1e-10);
  CHECK(reb.final_defect < 1e-10);
  // lands on a nearby circle, not back on the base
  CHECK(dist(reb.immersion, st.base) > 0.1);
  CHECK(dist(reb.immersion, st.base) < 0.2);

  NewtonReport froz = newton_project(st, enc, 1e-10, 50, NewtonMode::FrozenBase);
  CHECK(froz.iterations <= 6);
  CHECK(froz.final_defect < 1e-10);

  // amplitude 0.05 needs a single correction
  NewtonReport small = newton_project(st, scaled_kernel(st, 0.05, mix_pattern),
                                      1e-10, 50, NewtonMode::Rebased);
  CHECK(small.iterations <= 2);
  CHECK(small.final_defect < 1e-10);
}

TEST_CASE("residual decay is at least quadratic from complement starts") {
  ModuliState st = make_moduli_state(real_circle().discretize(Grid({64})));
  Vec h(64);
  for (int m = 0; m < 64; ++m)
    h(m) = 0.05 * std::cos(st.base.grid().node_params(m)(0));
  NormalEncoding v0 = d1_adjoint(st, h);

  NewtonReport froz = newton_project(st, v0, 1e-10, 50, NewtonMode::FrozenBase);
  CHECK(froz.iterations == 3);
  CHECK(froz.measured_order > 1.8);
  CHECK(froz.final_defect < 1e-12);
  // complement directions project back onto the base point itself
  CHECK(dist(froz.immersion, st.base) < 1e-12);

  NewtonReport reb = newton_project(st, v0, 1e-10, 50, NewtonMode::Rebased);
  CHECK(reb.iterations <= 4);
  CHECK(reb.measured_order > 1.8);
  CHECK(reb.final_defect < 1e-12);
  CHECK(dist(reb.immersion, st.base) < 2e-2);
}

TEST_CASE("stalled corrections report a resolution failure, refining cures it") {
  // amplitude 0.2 along the curved direction needs modes above the
  // dealiasing cutoff of 64 nodes; 128 nodes resolve the same target
  ModuliState coarse = make_moduli_state(real_circle().discretize(Grid({64})));
  CHECK_THROWS_AS(newton_project(coarse, scaled_kernel(coarse, 0.2, mix_pattern),
                                 1e-10, 50, NewtonMode::Rebased),
                  ResolutionError);

  ModuliState fine = make_moduli_state(real_circle().discretize(Grid({128})));
  NewtonReport rep = newton_project(fine, scaled_kernel(fine, 0.2, mix_pattern),
                                    1e-10, 50, NewtonMode::Rebased);
  CHECK(rep.iterations <= 3);
  CHECK(rep.final_defect < 1e-12);
}

TEST_CASE("torus deformations converge and respect the resolution ladder") {
  DiscretizedImmersion torus = flipped_torus({15, 15});
  ModuliState st = make_moduli_state(torus);
  auto torus_kernel = [](const ModuliState& s, double amp) {
    Mat alpha(2, s.complex.total);
    for (int m = 0; m < s.complex.total; ++m) {
      const Vec t = s.base.grid().node_params(m);
      alpha(0, m) = amp * std::sin(t(0) + t(1));
      alpha(1, m) = amp * std::cos(t(0));
    }
    return kernel_element(s, alpha);
  };
  NewtonReport rep = newton_project(st, torus_kernel(st, 0.01), 1e-10, 50,
                                    NewtonMode::Rebased);
  CHECK(rep.iterations <= 3);
  CHECK(rep.final_defect < 1e-10);
  CHECK(dist(rep.immersion, st.base) > 5e-3);

  // amplitude 0.02 stalls on 15x15 and converges on 21x21
  CHECK_THROWS_AS(newton_project(st, torus_kernel(st, 0.02), 1e-10, 50,
                                 NewtonMode::Rebased),
                  ResolutionError);
  ModuliState finer = make_moduli_state(flipped_torus({21, 21}));
  NewtonReport rep2 = newton_project(finer, torus_kernel(finer, 0.02), 1e-10,
                                     50, NewtonMode::Rebased);
  CHECK(rep2.iterations <= 3);
  CHECK(rep2.final_defect < 1e-11);
}

TEST_CASE("walking along exact rotations yields distinct special circles") {
  DiscretizedImmersion circ = real_circle().discretize(Grid({64}));
  FormPattern pattern = [](const Vec& t) {
    Vec c(1);
    c(0) = std::sin(2.0 * t(0));
    return c;
  };
  std::vector<WalkStep> walk = moduli_walk(circ, pattern, 5, 0.02);
  REQUIRE(walk.size() == 5);
  for (const WalkStep& w : walk) {
    CHECK(w.iterations == 0);
    CHECK(w.special_defect < 1e-12);
    CHECK(std::abs(w.volume - kTwoPi) < 1e-8);
  }
  double minsep = 1e9;
  for (std::size_t i = 0; i < walk.size(); ++i)
    for (std::size_t j = i + 1; j < walk.size(); ++j)
      minsep = std::min(minsep, dist(walk[i].immersion, walk[j].immersion));
  CHECK(minsep > 1.9e-2);
  CHECK(dist(walk[0].immersion, circ) > 1.9e-2);
}

TEST_CASE("corrected walk members re-pass the calibration suite") {
  DiscretizedImmersion circ = real_circle().discretize(Grid({64}));
  FormPattern pattern = [](const Vec& t) {
    Vec c(1);
    c(0) = std::sin(t(0));
    return c;
  };
  std::vector<WalkStep> walk = moduli_walk(circ, pattern, 5, 0.02);
  REQUIRE(walk.size() == 5);
  ConeStructure cone = make_cone(circ.model_ptr());
  double prev_vol = kTwoPi + 1e-12;
  for (const WalkStep& w : walk) {
    CHECK(w.special_defect < 1e-9);
    CHECK(w.residual <= 1e-10);
    // shrinking volume as the walk bends away from the great circle
    CHECK(w.volume < prev_vol);
    prev_vol = w.volume;

    auto frames = build_frames(w.immersion);
    AngleField angle = legendrian_angle(cone, w.immersion, frames);
    CHECK(angle.max_mismatch < 1e-12);
    CHECK(angle.theta.cwiseAbs().maxCoeff() < 1e-9);
    CalibrationReport report = calibration_check(cone, w.immersion, frames);
    CHECK(report.first_equality);
    for (const NodeFrame& fr : frames) {
      CHECK(fr.rho > 0.98);
      CHECK(fr.rho <= 1.0 + 1e-12);
    }
  }
  // the members are affine Legendrian but no longer Legendrian
  CHECK(legendrian_defect(walk.back().immersion) > 1e-2);
  double minsep = 1e9;
  for (std::size_t i = 0; i < walk.size(); ++i)
    for (std::size_t j = i + 1; j < walk.size(); ++j)
      minsep = std::min(minsep, dist(walk[i].immersion, walk[j].immersion));
  CHECK(minsep > 1.9e-2);
}

TEST_CASE("a walk beyond the resolved band stalls with a diagnosis") {
  DiscretizedImmersion circ = real_circle().discretize(Grid({64}));
  FormPattern pattern = [](const Vec& t) {
    Vec c(1);
    c(0) = mix_pattern(t(0));
    return c;
  };
  CHECK_THROWS_AS(moduli_walk(circ, pattern, 5, 0.02), ResolutionError);
}

TEST_CASE("error contracts of the moduli machinery") {
  // winding curves are affine Legendrian but the pullback phase rotates
  CHECK_THROWS_AS(make_moduli_state(torus_curve(0.6, 2).discretize(Grid({48}))),
                  OrientationError);
  // unflipped clifford torus has negative real pullback
  CHECK_THROWS_AS(make_moduli_state(clifford_torus().discretize(Grid({15, 15}))),
                  OrientationError);
  // no cone structure over the Heisenberg group
  CHECK_THROWS_AS(make_moduli_state(heisenberg_wave(0.1).discretize(Grid({32}))),
                  UnsupportedModelError);

  // positive pullback with an imaginary part above the gate
  ModuliState st = make_moduli_state(real_circle().discretize(Grid({64})));
  NormalEncoding off{Vec::Constant(64, 0.05), Mat::Zero(1, 64)};
  DiscretizedImmersion pushed = exp_normal(st, off);
  CHECK_THROWS_AS(make_moduli_state(pushed), ConfigError);

  ModuliState surf = make_moduli_state(flipped_torus({15, 15}));
  CHECK_THROWS_AS(laplacian_identity_spectrum(surf), ConfigError);
  CHECK_THROWS_AS(newton_project(st, NormalEncoding{}, -1.0, 50), ConfigError);
  CHECK_THROWS_AS(newton_project(st, NormalEncoding{}, 1e-10, 0), ConfigError);

  FormPattern bad = [](const Vec&) { return Vec::Zero(3); };
  CHECK_THROWS_AS(moduli_walk(st.base, bad, 1, 0.01), ConfigError);
  CHECK_THROWS_AS(moduli_walk(st.base, bad, 0, 0.01), ConfigError);

  Mat wrong(2, 64);
  wrong.setZero();
  CHECK_THROWS_AS(d1_apply(st, NormalEncoding{Vec::Zero(64), wrong}), ConfigError);
}
