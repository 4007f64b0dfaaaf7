#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace phivol {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

// Deterministic random stream.  The standard distributions are not pinned
// across library implementations, so all samples are derived from the raw
// 64 bit output of a fixed engine.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

  std::uint64_t next_u64() {
    // splitmix64, reproducible everywhere
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // standard normal via Box-Muller on the deterministic uniforms
  double normal();

  Vec uniform_vector(int dim, double a, double b);
  Vec normal_vector(int dim);

 private:
  std::uint64_t state_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

// Sum with a fixed pairwise association order so results do not depend on
// evaluation order or thread count.
double pairwise_sum(std::span<const double> xs);
double pairwise_sum(const Vec& xs);

// Dense differentiation matrix for 2 pi periodic data on N uniform nodes.
// Exact on trigonometric polynomials resolvable by the grid.
Mat spectral_diff_matrix(int N);

// Orthogonal projector keeping the trigonometric modes with wave number at
// most keep_fraction * N/2; the identity on data those modes resolve.
Mat spectral_filter_matrix(int N, double keep_fraction);

// Classic two level Richardson step for an O(h^2) difference estimate.
inline double richardson2(double d_h, double d_h_half) {
  return (4.0 * d_h_half - d_h) / 3.0;
}

// Least squares slope of log(err) against log(h); measures convergence order.
double convergence_order(std::span<const double> hs, std::span<const double> errs);

// Maps [0, n) with the function, splitting work over PHIVOL_THREADS threads
// (default 1).  The body must only write to disjoint per index state.
void parallel_for(int n, const std::function<void(int)>& body);

int thread_count();

}  // namespace phivol
