#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "phivol/numerics.hpp"

namespace phivol {

// Contact metric ambient space (M^{2n+1}, g, eta, xi, phi) with evaluators in
// a fixed global chart.  The sphere model lives in the ambient embedding
// coordinates of R^{2n+2}; the Heisenberg model in global coordinates
// (x_1, y_1, ..., x_n, y_n, z).
//
// Conventions used throughout:
//   eta(xi) = 1,  phi^2 = -id + eta (x) xi,  d eta = 2 g(., phi .),
//   nabla_X xi = -phi(X),
//   (nabla_X phi)(Y) = g(X, Y) xi - eta(Y) X,
//   R(X, Y) xi = eta(Y) X - eta(X) Y.
class SasakianModel {
 public:
  virtual ~SasakianModel() = default;

  virtual std::string name() const = 0;
  // n in dim M = 2n + 1
  virtual int n() const = 0;
  // number of chart coordinates used to represent points and vectors
  virtual int chart_dim() const = 0;
  int manifold_dim() const { return 2 * n() + 1; }

  virtual bool contains(const Vec& p, double tol = 1e-9) const = 0;
  // nearest point enforcement (renormalisation for spheres, identity otherwise)
  virtual Vec project_point(const Vec& p) const = 0;
  // removes chart components that are not tangent at p
  virtual Vec project_tangent(const Vec& p, const Vec& v) const = 0;

  virtual double g(const Vec& p, const Vec& u, const Vec& v) const = 0;
  virtual Mat metric_matrix(const Vec& p) const = 0;
  virtual Vec xi(const Vec& p) const = 0;
  double eta(const Vec& p, const Vec& u) const { return g(p, xi(p), u); }
  virtual Vec phi(const Vec& p, const Vec& u) const = 0;

  // Bilinear connection correction: nabla_u W = dW(u) + christoffel(p, u, W)
  // for fields W tangent to M along a curve with velocity u.
  virtual Vec christoffel(const Vec& p, const Vec& u, const Vec& v) const = 0;

  // Exact curvature tensor R(X, Y) Z with
  // R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z.
  virtual Vec curvature(const Vec& p, const Vec& X, const Vec& Y, const Vec& Z) const = 0;

  // Ricci tensor as the trace of the curvature over a g-orthonormal basis.
  double ricci(const Vec& p, const Vec& u, const Vec& v) const;

  // Oriented ambient volume form on the 2n+1 tangent vectors vs.  The sign
  // convention is fixed so that an oriented frame (e_1..e_n, -xi, phi e_1..
  // phi e_n) built over a Legendrian submanifold has volume +1.
  virtual double volume_form(const Vec& p, const std::vector<Vec>& vs) const = 0;

  // Geodesic exponential.  Exact for spheres; high order integration of the
  // geodesic equation otherwise.
  virtual Vec exp(const Vec& p, const Vec& v) const = 0;

  virtual Vec random_point(Rng& rng) const = 0;
  // uniform box sample projected to the tangent space at p (not normalised)
  Vec random_tangent(Rng& rng, const Vec& p) const;

  // g-orthonormal basis of T_p M, columns of the returned matrix
  Mat orthonormal_tangent_basis(const Vec& p) const;

  // advertised eta-Einstein constant, if the model knows one
  virtual std::optional<double> eta_einstein_constant() const { return std::nullopt; }
  // whether the metric cone over the model carries the flat Kaehler structure
  // used by the calibration module
  virtual bool cone_is_flat_kaehler() const { return false; }

  void require_point(const Vec& p, double tol = 1e-9) const;
};

std::shared_ptr<SasakianModel> make_sphere_model(int n);
std::shared_ptr<SasakianModel> make_heisenberg_model(int n);
// factory used by the CLI; accepts "sphere" and "heisenberg"
std::shared_ptr<SasakianModel> make_model(const std::string& name, int n);

// Round sphere S^{2n+1} in C^{n+1}.  xi_p = J p with J the complex rotation
// (x_i, y_i) -> (-y_i, x_i), phi = -(tangential part of J).
class SphereModel final : public SasakianModel {
 public:
  explicit SphereModel(int n);
  std::string name() const override { return "sphere"; }
  int n() const override { return n_; }
  int chart_dim() const override { return 2 * n_ + 2; }
  bool contains(const Vec& p, double tol) const override;
  Vec project_point(const Vec& p) const override;
  Vec project_tangent(const Vec& p, const Vec& v) const override;
  double g(const Vec& p, const Vec& u, const Vec& v) const override;
  Mat metric_matrix(const Vec& p) const override;
  Vec xi(const Vec& p) const override;
  Vec phi(const Vec& p, const Vec& u) const override;
  Vec christoffel(const Vec& p, const Vec& u, const Vec& v) const override;
  Vec curvature(const Vec& p, const Vec& X, const Vec& Y, const Vec& Z) const override;
  double volume_form(const Vec& p, const std::vector<Vec>& vs) const override;
  Vec exp(const Vec& p, const Vec& v) const override;
  Vec random_point(Rng& rng) const override;
  std::optional<double> eta_einstein_constant() const override { return 2.0 * n_; }
  bool cone_is_flat_kaehler() const override { return true; }

  // complex rotation of chart vectors, (x, y) -> (-y, x) pairwise
  static Vec jmul(const Vec& v);

 private:
  int n_;
  double orientation_sign_;
};

// Heisenberg group R^{2n+1} with
//   eta = (dz - sum_i y_i dx_i) / 2,  xi = 2 d/dz,
//   g = eta (x) eta + (sum_i dx_i^2 + dy_i^2) / 4,
//   phi(dx_i) = -dy_i, phi(dy_i) = dx_i + y_i dz, phi(dz) = 0.
class HeisenbergModel final : public SasakianModel {
 public:
  explicit HeisenbergModel(int n);
  std::string name() const override { return "heisenberg"; }
  int n() const override { return n_; }
  int chart_dim() const override { return 2 * n_ + 1; }
  bool contains(const Vec& p, double tol) const override;
  Vec project_point(const Vec& p) const override;
  Vec project_tangent(const Vec& p, const Vec& v) const override;
  double g(const Vec& p, const Vec& u, const Vec& v) const override;
  Mat metric_matrix(const Vec& p) const override;
  Vec xi(const Vec& p) const override;
  Vec phi(const Vec& p, const Vec& u) const override;
  Vec christoffel(const Vec& p, const Vec& u, const Vec& v) const override;
  Vec curvature(const Vec& p, const Vec& X, const Vec& Y, const Vec& Z) const override;
  double volume_form(const Vec& p, const std::vector<Vec>& vs) const override;
  Vec exp(const Vec& p, const Vec& v) const override;
  Vec random_point(Rng& rng) const override;
  std::optional<double> eta_einstein_constant() const override { return -2.0; }

 private:
  double eta_form(const Vec& p, const Vec& u) const;
  int n_;
  double orientation_sign_;
};

// One row of the structure identity suite.
struct StructureCheck {
  std::string name;      // short machine name
  std::string identity;  // human readable identity being verified
  double max_residual = 0.0;
  int points = 0;
};

// Evaluates the defining identities of the structure at sampled points.
// Derivative based identities use 4th order central differences in the chart.
std::vector<StructureCheck> verify_structure_identities(const SasakianModel& model,
                                                        int points, Rng& rng);

// Covariant derivative of the tangent field `field` in the direction u,
// evaluated along the geodesic through p with velocity u by 4th order
// central differences plus the connection term.
Vec covariant_derivative_fd(const SasakianModel& model, const Vec& p, const Vec& u,
                            const std::function<Vec(const Vec&)>& field,
                            double h = 1e-4);

struct EtaEinsteinFit {
  double A = 0.0;
  double max_residual = 0.0;
  int samples = 0;
};

// Least squares fit of Ric = A g + (2n - A) eta (x) eta over sampled points
// and tangent pairs.  Returns nullopt when the residual exceeds reject_tol.
std::optional<EtaEinsteinFit> eta_einstein_fit(
    const SasakianModel& model, int points, Rng& rng, double reject_tol = 1e-4,
    const std::function<double(const Vec&, const Vec&, const Vec&)>& ricci_override = {});

}  // namespace phivol
