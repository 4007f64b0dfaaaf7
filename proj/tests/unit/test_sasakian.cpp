#include <phivol/errors.hpp>
#include <phivol/sasakian.hpp>

#include <cmath>

#include "doctest.h"
#include "fd_oracles.hpp"

using namespace phivol;

namespace {

Vec v4(double a, double b, double c, double d) {
  Vec v(4);
  v << a, b, c, d;
  return v;
}

Vec v3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

}  // namespace

TEST_CASE("sphere tensors at a pinned point") {
  SphereModel m(1);
  const Vec p = v4(1, 0, 0, 0);
  CHECK((m.xi(p) - v4(0, 1, 0, 0)).norm() == 0.0);
  CHECK(m.eta(p, m.xi(p)) == doctest::Approx(1.0));
  // phi rotates the contact distribution
  const Vec e1 = v4(0, 0, 1, 0);
  CHECK((m.phi(p, e1) - v4(0, 0, 0, -1)).norm() < 1e-15);
  CHECK(m.eta(p, e1) == doctest::Approx(0.0));
  // oriented volume of a Legendrian frame
  const std::vector<Vec> frame{e1, -m.xi(p), m.phi(p, e1)};
  CHECK(m.volume_form(p, frame) == doctest::Approx(1.0));
}

TEST_CASE("heisenberg tensors at pinned points") {
  HeisenbergModel m(1);
  const Vec origin = v3(0, 0, 0);
  CHECK((m.xi(origin) - v3(0, 0, 2)).norm() == 0.0);
  CHECK(m.eta(origin, m.xi(origin)) == doctest::Approx(1.0));
  const Vec p = v3(0.3, 0.5, -0.2);
  CHECK(m.eta(p, v3(1, 0, 0)) == doctest::Approx(-0.25));
  CHECK(m.eta(p, m.xi(p)) == doctest::Approx(1.0));
  // frame field F_1 = 2 dx + 2 y dz is unit and Legendrian-horizontal
  const Vec F1 = v3(2, 0, 2 * p[1]);
  CHECK(m.g(p, F1, F1) == doctest::Approx(1.0));
  CHECK(m.eta(p, F1) == doctest::Approx(0.0).epsilon(1e-15));
  const Vec phiF1 = m.phi(p, F1);
  CHECK((phiF1 - v3(0, -2, 0)).norm() < 1e-15);
  const std::vector<Vec> frame{F1, -m.xi(p), phiF1};
  CHECK(m.volume_form(p, frame) == doctest::Approx(1.0));
}

TEST_CASE("structure identity suite") {
  Rng rng(11);
  for (const auto& [name, n, tol] :
       {std::tuple<std::string, int, double>{"sphere", 1, 1e-9},
        {"sphere", 2, 1e-9},
        {"heisenberg", 1, 1e-9},
        {"heisenberg", 2, 1e-9}}) {
    auto model = make_model(name, n);
    const auto checks = verify_structure_identities(*model, 5, rng);
    CHECK(checks.size() == 16);
    for (const auto& c : checks) {
      INFO(name, " n=", n, " ", c.name, " residual ", c.max_residual);
      CHECK(c.max_residual < tol);
    }
  }
}

TEST_CASE("heisenberg christoffel matches the metric derivatives") {
  Rng rng(5);
  for (int n : {1, 2}) {
    HeisenbergModel m(n);
    for (int s = 0; s < 4; ++s) {
      const Vec p = m.random_point(rng);
      const Vec u = m.random_tangent(rng, p);
      const Vec v = m.random_tangent(rng, p);
      const Vec lhs = m.christoffel(p, u, v);
      const Vec rhs = testing::christoffel_fd_chart(m, p, u, v);
      INFO("n=", n, " sample ", s);
      CHECK((lhs - rhs).norm() < 1e-9);
      // torsion free
      CHECK((lhs - m.christoffel(p, v, u)).norm() < 1e-15);
    }
  }
}

TEST_CASE("sphere christoffel consistent with tangential projection") {
  Rng rng(6);
  SphereModel m(2);
  for (int s = 0; s < 4; ++s) {
    const Vec p = m.random_point(rng);
    const Vec u = m.random_tangent(rng, p);
    const Vec w = m.random_tangent(rng, p);
    const auto field = [&](const Vec& q) { return m.project_tangent(q, w); };
    const Vec nab = covariant_derivative_fd(m, p, u, field);
    // the covariant derivative of a tangent field is tangent
    CHECK(std::abs(p.dot(nab)) < 1e-9);
  }
}

TEST_CASE("exact curvature matches nested finite differences") {
  Rng rng(8);
  for (const auto& name : {std::string("sphere"), std::string("heisenberg")}) {
    for (int n : {1, 2}) {
      auto model = make_model(name, n);
      for (int s = 0; s < 2; ++s) {
        const Vec p = model->random_point(rng);
        auto unit = [&]() {
          Vec v = model->random_tangent(rng, p);
          return Vec(v / std::sqrt(model->g(p, v, v)));
        };
        const Vec X = unit(), Y = unit(), Z = unit();
        const Vec exact = model->curvature(p, X, Y, Z);
        const Vec fd = testing::curvature_fd(*model, p, X, Y, Z);
        INFO(name, " n=", n, " sample ", s, " diff ", (exact - fd).norm());
        CHECK((exact - fd).norm() < 1e-6);
      }
    }
  }
}

TEST_CASE("geodesic equation residual of exp") {
  Rng rng(9);
  for (const auto& name : {std::string("sphere"), std::string("heisenberg")}) {
    auto model = make_model(name, 1);
    for (int s = 0; s < 3; ++s) {
      const Vec p = model->random_point(rng);
      Vec v = model->random_tangent(rng, p);
      v /= std::sqrt(model->g(p, v, v));
      for (double s0 : {0.0, 0.4}) {
        const Vec r = testing::geodesic_residual_fd(*model, p, v, s0);
        INFO(name, " sample ", s, " s0 ", s0, " residual ", r.norm());
        CHECK(r.norm() < 5e-6);
      }
    }
  }
}

TEST_CASE("sphere exp is the great circle map") {
  Rng rng(10);
  SphereModel m(2);
  const Vec p = m.random_point(rng);
  Vec v = m.random_tangent(rng, p);
  v *= 0.3 / v.norm();
  const Vec q = m.exp(p, v);
  CHECK(std::abs(q.norm() - 1.0) < 1e-14);
  CHECK(std::acos(p.dot(q)) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK((m.exp(p, Vec::Zero(6)) - p).norm() == 0.0);
}

TEST_CASE("heisenberg exp on flat directions is exact") {
  Rng rng(12);
  HeisenbergModel m(1);
  // the x axis through the origin is a geodesic line
  CHECK((m.exp(v3(0, 0, 0), v3(2, 0, 0)) - v3(2, 0, 0)).norm() < 1e-13);
  // vertical lines are geodesics through every point
  const Vec p = m.random_point(rng);
  CHECK((m.exp(p, v3(0, 0, 0.7)) - (p + v3(0, 0, 0.7))).norm() < 1e-13);
}

TEST_CASE("ricci is eta einstein with the advertised constant") {
  Rng rng(13);
  for (const auto& name : {std::string("sphere"), std::string("heisenberg")}) {
    for (int n : {1, 2}) {
      auto model = make_model(name, n);
      const double expected = *model->eta_einstein_constant();
      auto fit = eta_einstein_fit(*model, 6, rng, 1e-8);
      REQUIRE(fit.has_value());
      INFO(name, " n=", n);
      CHECK(fit->A == doctest::Approx(expected).epsilon(1e-10));
      CHECK(fit->max_residual < 1e-8);
    }
  }
}

TEST_CASE("eta einstein fit against finite difference curvature") {
  Rng rng(14);
  for (const auto& name : {std::string("sphere"), std::string("heisenberg")}) {
    auto model = make_model(name, 1);
    const double expected = *model->eta_einstein_constant();
    auto fit = eta_einstein_fit(
        *model, 3, rng, 1e-5,
        [&](const Vec& p, const Vec& u, const Vec& v) {
          return testing::ricci_fd(*model, p, u, v);
        });
    REQUIRE(fit.has_value());
    INFO(name);
    CHECK(std::abs(fit->A - expected) < 1e-6);
  }
}

TEST_CASE("orthonormal tangent bases") {
  Rng rng(15);
  for (const auto& name : {std::string("sphere"), std::string("heisenberg")}) {
    auto model = make_model(name, 2);
    const Vec p = model->random_point(rng);
    const Mat B = model->orthonormal_tangent_basis(p);
    CHECK(B.cols() == 5);
    for (int i = 0; i < B.cols(); ++i) {
      for (int j = 0; j < B.cols(); ++j) {
        const double want = (i == j) ? 1.0 : 0.0;
        CHECK(model->g(p, B.col(i), B.col(j)) == doctest::Approx(want).epsilon(1e-12));
      }
      const Vec r = model->project_tangent(p, B.col(i)) - B.col(i);
      CHECK(r.norm() < 1e-12);
    }
  }
}

TEST_CASE("membership contracts") {
  SphereModel m(1);
  Vec p = v4(1, 0, 0, 0);
  CHECK_NOTHROW(m.require_point(p));
  p *= 1.0 + 1e-6;
  CHECK_THROWS_AS(m.require_point(p), OffManifoldError);
  CHECK_NOTHROW(m.require_point(m.project_point(p)));
  CHECK_THROWS_AS(make_model("nope", 1), ConfigError);
  CHECK_THROWS_AS(SphereModel(0), std::invalid_argument);
}
