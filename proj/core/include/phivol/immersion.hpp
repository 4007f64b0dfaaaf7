#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "phivol/sasakian.hpp"

namespace phivol {

// Uniform periodic grid on the k-torus [0, 2pi)^k.
struct Grid {
  std::vector<int> dims;

  explicit Grid(std::vector<int> dims_in);
  int k() const { return static_cast<int>(dims.size()); }
  int total() const;
  // parameters (t_1..t_k) of the flattened node index
  Vec node_params(int idx) const;
  std::vector<int> multi_index(int idx) const;
  int flat_index(const std::vector<int>& multi) const;
  // quadrature weight of one cell, prod_j 2pi/N_j (trapezoid, exact for
  // periodic smooth integrands)
  double cell_weight() const;
};

using ChartMap = std::function<Vec(const Vec& t)>;

// Immersed k-torus sampled on a periodic grid.  `drift` allows images that
// close up only modulo a chart translation (quotients of the Heisenberg
// group): values(t) - drift * t is the periodic part that gets
// differentiated spectrally, the drift is added back to first derivatives.
class DiscretizedImmersion {
 public:
  DiscretizedImmersion(std::shared_ptr<const SasakianModel> model, Grid grid,
                       Mat values, Mat drift);

  const SasakianModel& model() const { return *model_; }
  std::shared_ptr<const SasakianModel> model_ptr() const { return model_; }
  const Grid& grid() const { return grid_; }
  const Mat& values() const { return values_; }
  const Mat& drift() const { return drift_; }
  int nodes() const { return grid_.total(); }
  Vec point(int idx) const { return values_.col(idx); }

  // spectral derivative of the immersion along grid direction dir
  Mat partial(int dir) const;
  // spectral derivative of periodic nodal data (rows = components)
  Mat partial_of(const Mat& nodal, int dir) const;

 private:
  std::shared_ptr<const SasakianModel> model_;
  Grid grid_;
  Mat values_;
  Mat drift_;
  std::vector<Mat> diff_;  // one spectral matrix per direction
};

// Samples the map on the grid and validates that every node is on the
// manifold.  `drift` may be empty for maps that are exactly periodic.
DiscretizedImmersion build_immersion(std::shared_ptr<const SasakianModel> model,
                                     const Grid& grid, const ChartMap& map,
                                     const Mat& drift = Mat());

// Named immersed families used by tests and the command line tools.
struct ImmersionFamily {
  std::string name;
  std::shared_ptr<const SasakianModel> model;
  int k = 1;
  ChartMap map;
  Mat drift;  // empty when the image is exactly periodic

  DiscretizedImmersion discretize(const Grid& grid) const {
    return build_immersion(model, grid, map, drift);
  }
};

// (cos a e^{it}, sin a e^{ikt}) in S^3; Legendrian iff cos^2 a + k sin^2 a = 0
ImmersionFamily torus_curve(double a, int k);
// the real great circle (cos t, 0, sin t, 0) in S^3, Legendrian and special
ImmersionFamily real_circle();
// normal exponential of the real circle in the direction s phi e_1; special
// for every s, Legendrian only at s = 0
ImmersionFamily phi_circle(double s);
// minimal Legendrian 2-torus (e^{i t1}, e^{i t2}, e^{-i(t1+t2)})/sqrt(3) in S^5
ImmersionFamily clifford_torus();
// horizontal line through the Heisenberg origin, quotient period 2pi
ImmersionFamily heisenberg_line();
// periodic graph (t, eps sin t, eps cos t) over the line, non Legendrian
ImmersionFamily heisenberg_wave(double eps);

ImmersionFamily make_family(const std::string& name, const std::vector<double>& params);

// max over nodes and directions of |eta(d iota / d t_j)|
double legendrian_defect(const DiscretizedImmersion& imm);

// dense spectral differentiation matrix acting on flattened nodal scalars
Mat global_diff_matrix(const Grid& grid, int dir);

// dense dealiasing projector on flattened nodal scalars, the product of the
// per direction spectral cutoff filters
Mat global_filter_matrix(const Grid& grid, double keep_fraction);

}  // namespace phivol
