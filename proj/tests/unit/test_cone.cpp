#include <cmath>
#include <complex>

#include <doctest.h>

#include "phivol/cone.hpp"
#include "phivol/errors.hpp"
#include "phivol/frame.hpp"
#include "phivol/immersion.hpp"
#include "phivol/numerics.hpp"
#include "phivol/variation.hpp"

using namespace phivol;

namespace {

struct Setup {
  DiscretizedImmersion imm;
  std::vector<NodeFrame> frames;
};

Setup make(const ImmersionFamily& fam, const std::vector<int>& dims) {
  DiscretizedImmersion imm = fam.discretize(Grid(dims));
  std::vector<NodeFrame> frames = build_frames(imm);
  return {std::move(imm), std::move(frames)};
}

// great circle rotated by a constant unit phase in both complex coordinates
ImmersionFamily rotated_circle(double alpha) {
  ImmersionFamily fam = real_circle();
  fam.name = "rotated_circle";
  fam.map = [alpha](const Vec& t) {
    Vec p(4);
    p << std::cos(alpha) * std::cos(t[0]), std::sin(alpha) * std::cos(t[0]),
        std::cos(alpha) * std::sin(t[0]), std::sin(alpha) * std::sin(t[0]);
    return p;
  };
  return fam;
}

}  // namespace

TEST_CASE("cone construction accepts spheres and rejects the Heisenberg group") {
  ConeStructure c3 = make_cone(real_circle().model);
  CHECK(c3.n == 1);
  CHECK(c3.dim == 4);
  ConeStructure c5 = make_cone(clifford_torus().model);
  CHECK(c5.n == 2);
  CHECK(c5.dim == 6);
  CHECK_THROWS_AS(make_cone(heisenberg_line().model), UnsupportedModelError);
}

TEST_CASE("complex structure squares to minus one and matches the coordinates") {
  for (const auto& model : {real_circle().model, clifford_torus().model}) {
    ConeStructure cone = make_cone(model);
    Mat j = cone.complex_structure();
    CHECK((j * j + Mat::Identity(cone.dim, cone.dim)).cwiseAbs().maxCoeff() == 0.0);
    Rng rng(7);
    Vec v = rng.uniform_vector(cone.dim, -1.0, 1.0);
    CVec w = cone.complex_coordinates(v);
    CVec jw = cone.complex_coordinates((j * v).eval());
    const std::complex<double> i_unit(0.0, 1.0);
    CHECK((jw - i_unit * w).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("volume form normalization holds on the standard basis") {
  CHECK(omega_normalization_residual(make_cone(real_circle().model)) < 1e-12);
  CHECK(omega_normalization_residual(make_cone(clifford_torus().model)) < 1e-12);
}

TEST_CASE("volume form factors through the radial contraction") {
  Rng rng(3301);
  for (const auto& model : {real_circle().model, clifford_torus().model}) {
    ConeStructure cone = make_cone(model);
    for (int trial = 0; trial < 10; ++trial) {
      Vec p = model->random_point(rng);
      Mat vs(cone.dim, cone.n + 1);
      for (int c = 0; c <= cone.n; ++c)
        vs.col(c) = rng.uniform_vector(cone.dim, -1.0, 1.0);
      CHECK(reconstruction_residual(cone, p, vs) < 1e-9);
    }
  }
}

TEST_CASE("real great circle is special with unit pullback") {
  auto s = make(real_circle(), {48});
  ConeStructure cone = make_cone(s.imm.model_ptr());
  for (int node = 0; node < s.imm.nodes(); ++node) {
    std::complex<double> val = psi_eval(cone, s.frames[node].p,
                                        s.frames[node].e);
    CHECK(std::abs(val - std::complex<double>(1.0, 0.0)) < 1e-12);
  }
  AngleField angle = legendrian_angle(cone, s.imm, s.frames);
  CHECK(angle.theta.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(angle.max_mismatch < 1e-12);

  CalibrationReport report = calibration_check(cone, s.imm, s.frames);
  CHECK(report.first_equality);
  CHECK(report.second_equality);

  SpecialDefect sd = special_defect(cone, s.imm, s.frames);
  CHECK(std::abs(sd.theta) < 1e-10);
  CHECK(sd.defect < 1e-10);
}

TEST_CASE("pullback modulus equals the calibration density") {
  for (const auto& fam : {torus_curve(0.6, 2), torus_curve(M_PI / 4, 2),
                          phi_circle(0.3), phi_circle(0.1)}) {
    auto s = make(fam, {48});
    ConeStructure cone = make_cone(s.imm.model_ptr());
    AngleField angle = legendrian_angle(cone, s.imm, s.frames);
    CHECK(angle.max_mismatch < 1e-8);
  }
  auto cl = make(clifford_torus(), {16, 16});
  ConeStructure cone = make_cone(cl.imm.model_ptr());
  AngleField angle = legendrian_angle(cone, cl.imm, cl.frames);
  CHECK(angle.max_mismatch < 1e-8);
}

TEST_CASE("phase rotation shifts the angle by n plus one multiples") {
  const double alpha = 0.35;
  auto s = make(rotated_circle(alpha), {48});
  ConeStructure cone = make_cone(s.imm.model_ptr());
  AngleField angle = legendrian_angle(cone, s.imm, s.frames);
  for (int node = 0; node < s.imm.nodes(); ++node)
    CHECK(angle.theta(node) == doctest::Approx(-2.0 * alpha).epsilon(1e-10));

  // Legendrian but not special: first inequality strict, second an equality
  CalibrationReport report = calibration_check(cone, s.imm, s.frames);
  CHECK_FALSE(report.first_equality);
  CHECK(report.second_equality);
  CHECK(report.max_first_violation <= 0.0);

  SpecialDefect sd = special_defect(cone, s.imm, s.frames);
  CHECK(sd.theta == doctest::Approx(-2.0 * alpha).epsilon(1e-8));
  CHECK(sd.defect < 1e-9);
}

TEST_CASE("minimal Legendrian torus has constant angle pi") {
  auto s = make(clifford_torus(), {16, 16});
  ConeStructure cone = make_cone(s.imm.model_ptr());
  AngleField angle = legendrian_angle(cone, s.imm, s.frames);
  // unwrapped from node 0, so the constant is +pi or -pi
  const double theta0 = angle.theta(0);
  CHECK(std::abs(std::abs(theta0) - M_PI) < 1e-10);
  for (int node = 0; node < s.imm.nodes(); ++node)
    CHECK(angle.theta(node) == doctest::Approx(theta0).epsilon(1e-7));

  SpecialDefect sd = special_defect(cone, s.imm, s.frames);
  CHECK(std::abs(std::abs(sd.theta) - M_PI) < 1e-8);
  CHECK(sd.defect < 1e-10);
}

TEST_CASE("normal circle family is special for every twist") {
  for (double twist : {0.0, 0.15, 0.3}) {
    auto s = make(phi_circle(twist), {48});
    ConeStructure cone = make_cone(s.imm.model_ptr());
    for (int node = 0; node < s.imm.nodes(); ++node) {
      std::complex<double> val = psi_eval(cone, s.frames[node].p,
                                          s.frames[node].e);
      CHECK(std::abs(val.real() - std::cos(2.0 * twist)) <
            1e-10 * std::max(1.0, std::abs(val.real())));
      CHECK(std::abs(val.imag()) < 1e-10);
    }
    SpecialDefect sd = special_defect(cone, s.imm, s.frames);
    CHECK(sd.defect < 1e-9);

    CalibrationReport report = calibration_check(cone, s.imm, s.frames);
    CHECK(report.first_equality);
    CHECK(report.second_equality == (twist == 0.0));
  }
}

TEST_CASE("non Legendrian curves satisfy a strict calibration chain") {
  // N = 50 keeps the winding phase away from zero at every node
  auto s = make(torus_curve(M_PI / 4, 2), {50});
  ConeStructure cone = make_cone(s.imm.model_ptr());
  CalibrationReport report = calibration_check(cone, s.imm, s.frames);
  CHECK(report.max_first_violation <= 1e-10);
  CHECK(report.max_second_violation <= 1e-10);
  CHECK_FALSE(report.first_equality);
  CHECK_FALSE(report.second_equality);
  for (int node = 0; node < s.imm.nodes(); ++node) {
    CHECK(report.re_psi(node) < report.rho(node) - 1e-4);
    CHECK(report.rho(node) < 1.0 - 1e-3);
  }
}

TEST_CASE("the winding phase touches the calibration bound at isolated nodes") {
  // at N = 48 the angle -3t - pi/2 passes through zero on three grid nodes,
  // where Re psi = rho exactly; the chain still holds and the global
  // equality flag stays off
  auto s = make(torus_curve(M_PI / 4, 2), {48});
  ConeStructure cone = make_cone(s.imm.model_ptr());
  CalibrationReport report = calibration_check(cone, s.imm, s.frames);
  CHECK(report.max_first_violation <= 1e-10);
  CHECK_FALSE(report.first_equality);
  int touching = 0;
  for (int node = 0; node < s.imm.nodes(); ++node)
    if (std::abs(report.re_psi(node) - report.rho(node)) < 1e-9) ++touching;
  CHECK(touching == 3);
}

TEST_CASE("angle gradient matches the mean curvature relation") {
  // special Legendrian: both sides vanish
  auto circle = make(real_circle(), {48});
  ConeStructure cone = make_cone(circle.imm.model_ptr());
  CHECK(angle_gradient_residual(cone, circle.imm, circle.frames) < 1e-10);

  // phi-minimal winding curve: gradient balances the Reeb component
  auto legendrian = make(torus_curve(M_PI / 4, 2), {64});
  CHECK(angle_gradient_residual(cone, legendrian.imm, legendrian.frames) < 1e-5);

  // generic affine Legendrian curve
  auto generic = make(torus_curve(0.6, 2), {64});
  CHECK(angle_gradient_residual(cone, generic.imm, generic.frames) < 1e-5);

  // constant angle, non Legendrian: H_phi = (n+1) xi^T pointwise
  auto twisted = make(phi_circle(0.3), {48});
  CHECK(angle_gradient_residual(cone, twisted.imm, twisted.frames) < 1e-5);

  auto cl = make(clifford_torus(), {16, 16});
  ConeStructure cone5 = make_cone(cl.imm.model_ptr());
  CHECK(angle_gradient_residual(cone5, cl.imm, cl.frames) < 1e-5);
}

TEST_CASE("under resolved winding angles are rejected") {
  auto s = make(torus_curve(M_PI / 4, 2), {4});
  ConeStructure cone = make_cone(s.imm.model_ptr());
  CHECK_THROWS_AS(legendrian_angle(cone, s.imm, s.frames), ResolutionError);
}
