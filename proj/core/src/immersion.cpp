#include "phivol/immersion.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "phivol/errors.hpp"

namespace phivol {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

Grid::Grid(std::vector<int> dims_in) : dims(std::move(dims_in)) {
  if (dims.empty() || dims.size() > 2)
    throw std::invalid_argument("Grid: supported ranks are 1 and 2");
  for (int N : dims)
    if (N < 4) throw std::invalid_argument("Grid: need at least 4 nodes per direction");
}

int Grid::total() const {
  int t = 1;
  for (int N : dims) t *= N;
  return t;
}

std::vector<int> Grid::multi_index(int idx) const {
  std::vector<int> multi(dims.size());
  for (int j = k() - 1; j >= 0; --j) {
    multi[j] = idx % dims[j];
    idx /= dims[j];
  }
  return multi;
}

int Grid::flat_index(const std::vector<int>& multi) const {
  int idx = 0;
  for (int j = 0; j < k(); ++j) {
    int m = multi[j] % dims[j];
    if (m < 0) m += dims[j];
    idx = idx * dims[j] + m;
  }
  return idx;
}

Vec Grid::node_params(int idx) const {
  const auto multi = multi_index(idx);
  Vec t(k());
  for (int j = 0; j < k(); ++j) t[j] = kTwoPi * multi[j] / dims[j];
  return t;
}

double Grid::cell_weight() const {
  double w = 1.0;
  for (int N : dims) w *= kTwoPi / N;
  return w;
}

DiscretizedImmersion::DiscretizedImmersion(std::shared_ptr<const SasakianModel> model,
                                           Grid grid, Mat values, Mat drift)
    : model_(std::move(model)), grid_(std::move(grid)), values_(std::move(values)),
      drift_(std::move(drift)) {
  if (values_.rows() != model_->chart_dim() || values_.cols() != grid_.total())
    throw std::invalid_argument("DiscretizedImmersion: wrong value matrix shape");
  if (drift_.size() == 0) drift_ = Mat::Zero(model_->chart_dim(), grid_.k());
  if (drift_.rows() != model_->chart_dim() || drift_.cols() != grid_.k())
    throw std::invalid_argument("DiscretizedImmersion: wrong drift shape");
  diff_.reserve(grid_.k());
  for (int N : grid_.dims) diff_.push_back(spectral_diff_matrix(N));
}

Mat DiscretizedImmersion::partial_of(const Mat& nodal, int dir) const {
  if (nodal.cols() != grid_.total())
    throw std::invalid_argument("partial_of: wrong number of columns");
  if (dir < 0 || dir >= grid_.k()) throw std::invalid_argument("partial_of: bad direction");
  const Mat& D = diff_[dir];
  Mat out = Mat::Zero(nodal.rows(), nodal.cols());
  if (grid_.k() == 1) {
    out = nodal * D.transpose();
    return out;
  }
  const int N0 = grid_.dims[0], N1 = grid_.dims[1];
  if (dir == 0) {
    for (int b = 0; b < N1; ++b)
      for (int i = 0; i < N0; ++i) {
        Vec acc = Vec::Zero(nodal.rows());
        for (int j = 0; j < N0; ++j) acc += D(i, j) * nodal.col(j * N1 + b);
        out.col(i * N1 + b) = acc;
      }
  } else {
    for (int a = 0; a < N0; ++a)
      for (int i = 0; i < N1; ++i) {
        Vec acc = Vec::Zero(nodal.rows());
        for (int j = 0; j < N1; ++j) acc += D(i, j) * nodal.col(a * N1 + j);
        out.col(a * N1 + i) = acc;
      }
  }
  return out;
}

Mat DiscretizedImmersion::partial(int dir) const {
  if (drift_.isZero(0.0)) return partial_of(values_, dir);
  Mat detrended = values_;
  for (int idx = 0; idx < grid_.total(); ++idx) {
    detrended.col(idx) -= drift_ * grid_.node_params(idx);
  }
  Mat out = partial_of(detrended, dir);
  out.colwise() += drift_.col(dir);
  return out;
}

DiscretizedImmersion build_immersion(std::shared_ptr<const SasakianModel> model,
                                     const Grid& grid, const ChartMap& map,
                                     const Mat& drift) {
  Mat values(model->chart_dim(), grid.total());
  for (int idx = 0; idx < grid.total(); ++idx) {
    const Vec p = map(grid.node_params(idx));
    model->require_point(p);
    values.col(idx) = p;
  }
  return DiscretizedImmersion(std::move(model), grid, std::move(values), drift);
}

double legendrian_defect(const DiscretizedImmersion& imm) {
  double worst = 0.0;
  for (int dir = 0; dir < imm.grid().k(); ++dir) {
    const Mat dp = imm.partial(dir);
    for (int idx = 0; idx < imm.nodes(); ++idx) {
      const Vec p = imm.point(idx);
      worst = std::max(worst, std::abs(imm.model().eta(p, dp.col(idx))));
    }
  }
  return worst;
}

Mat global_diff_matrix(const Grid& grid, int dir) {
  const Mat d = spectral_diff_matrix(grid.dims[dir]);
  Mat out = Mat::Zero(grid.total(), grid.total());
  for (int idx = 0; idx < grid.total(); ++idx) {
    std::vector<int> multi = grid.multi_index(idx);
    for (int m = 0; m < grid.dims[dir]; ++m) {
      std::vector<int> other = multi;
      other[dir] = m;
      out(idx, grid.flat_index(other)) = d(multi[dir], m);
    }
  }
  return out;
}

Mat global_filter_matrix(const Grid& grid, double keep_fraction) {
  Mat out = Mat::Identity(grid.total(), grid.total());
  for (int dir = 0; dir < grid.k(); ++dir) {
    const Mat p = spectral_filter_matrix(grid.dims[dir], keep_fraction);
    Mat embedded = Mat::Zero(grid.total(), grid.total());
    for (int idx = 0; idx < grid.total(); ++idx) {
      std::vector<int> multi = grid.multi_index(idx);
      for (int m = 0; m < grid.dims[dir]; ++m) {
        std::vector<int> other = multi;
        other[dir] = m;
        embedded(idx, grid.flat_index(other)) = p(multi[dir], m);
      }
    }
    out = (embedded * out).eval();
  }
  return out;
}

// ---------------------------------------------------------------------------
// named families

ImmersionFamily torus_curve(double a, int k) {
  ImmersionFamily fam;
  fam.name = "torus_curve";
  fam.model = make_sphere_model(1);
  fam.k = 1;
  fam.map = [a, k](const Vec& t) {
    Vec p(4);
    p << std::cos(a) * std::cos(t[0]), std::cos(a) * std::sin(t[0]),
        std::sin(a) * std::cos(k * t[0]), std::sin(a) * std::sin(k * t[0]);
    return p;
  };
  return fam;
}

ImmersionFamily real_circle() {
  ImmersionFamily fam;
  fam.name = "real_circle";
  fam.model = make_sphere_model(1);
  fam.k = 1;
  fam.map = [](const Vec& t) {
    Vec p(4);
    p << std::cos(t[0]), 0.0, std::sin(t[0]), 0.0;
    return p;
  };
  return fam;
}

ImmersionFamily phi_circle(double s) {
  ImmersionFamily fam;
  fam.name = "phi_circle";
  fam.model = make_sphere_model(1);
  fam.k = 1;
  fam.map = [s](const Vec& t) {
    Vec p(4);
    p << std::cos(s) * std::cos(t[0]), std::sin(s) * std::sin(t[0]),
        std::cos(s) * std::sin(t[0]), -std::sin(s) * std::cos(t[0]);
    return p;
  };
  return fam;
}

ImmersionFamily clifford_torus() {
  ImmersionFamily fam;
  fam.name = "clifford_torus";
  fam.model = make_sphere_model(2);
  fam.k = 2;
  const double r = 1.0 / std::sqrt(3.0);
  fam.map = [r](const Vec& t) {
    Vec p(6);
    p << r * std::cos(t[0]), r * std::sin(t[0]), r * std::cos(t[1]), r * std::sin(t[1]),
        r * std::cos(t[0] + t[1]), -r * std::sin(t[0] + t[1]);
    return p;
  };
  return fam;
}

ImmersionFamily heisenberg_line() {
  ImmersionFamily fam;
  fam.name = "heisenberg_line";
  fam.model = make_heisenberg_model(1);
  fam.k = 1;
  fam.map = [](const Vec& t) {
    Vec p(3);
    p << t[0], 0.0, 0.0;
    return p;
  };
  fam.drift = Mat::Zero(3, 1);
  fam.drift(0, 0) = 1.0;
  return fam;
}

ImmersionFamily heisenberg_wave(double eps) {
  ImmersionFamily fam;
  fam.name = "heisenberg_wave";
  fam.model = make_heisenberg_model(1);
  fam.k = 1;
  fam.map = [eps](const Vec& t) {
    Vec p(3);
    p << t[0], eps * std::sin(t[0]), eps * std::cos(t[0]);
    return p;
  };
  fam.drift = Mat::Zero(3, 1);
  fam.drift(0, 0) = 1.0;
  return fam;
}

ImmersionFamily make_family(const std::string& name, const std::vector<double>& params) {
  const auto need = [&](std::size_t n) {
    if (params.size() != n)
      throw ConfigError("family " + name + ": expected " + std::to_string(n) +
                        " parameter(s), got " + std::to_string(params.size()));
  };
  if (name == "torus_curve") {
    need(2);
    return torus_curve(params[0], static_cast<int>(std::lround(params[1])));
  }
  if (name == "real_circle") { need(0); return real_circle(); }
  if (name == "phi_circle") { need(1); return phi_circle(params[0]); }
  if (name == "clifford_torus") { need(0); return clifford_torus(); }
  if (name == "heisenberg_line") { need(0); return heisenberg_line(); }
  if (name == "heisenberg_wave") { need(1); return heisenberg_wave(params[0]); }
  throw ConfigError("unknown immersion family: " + name);
}

}  // namespace phivol
