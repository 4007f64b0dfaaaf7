#include "phivol/numerics.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace phivol {

double Rng::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  // Box-Muller; guard the log against a zero sample
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  cached_ = r * std::sin(a);
  has_cached_ = true;
  return r * std::cos(a);
}

Vec Rng::uniform_vector(int dim, double a, double b) {
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = uniform(a, b);
  return v;
}

Vec Rng::normal_vector(int dim) {
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = normal();
  return v;
}

double pairwise_sum(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(xs.subspan(0, half)) + pairwise_sum(xs.subspan(half));
}

double pairwise_sum(const Vec& xs) {
  return pairwise_sum(std::span<const double>(xs.data(), static_cast<std::size_t>(xs.size())));
}

Mat spectral_diff_matrix(int N) {
  if (N < 2) throw std::invalid_argument("spectral_diff_matrix: need N >= 2");
  Mat D = Mat::Zero(N, N);
  const double h = 2.0 * std::numbers::pi / N;
  const bool even = (N % 2 == 0);
  for (int j = 0; j < N; ++j) {
    for (int k = 0; k < N; ++k) {
      if (j == k) continue;
      const int d = j - k;
      const double sgn = (d % 2 == 0) ? 1.0 : -1.0;
      if (even) {
        D(j, k) = 0.5 * sgn / std::tan(0.5 * d * h);
      } else {
        D(j, k) = 0.5 * sgn / std::sin(0.5 * d * h);
      }
    }
  }
  return D;
}

Mat spectral_filter_matrix(int N, double keep_fraction) {
  if (N < 2) throw std::invalid_argument("spectral_filter_matrix: need N >= 2");
  if (!(keep_fraction > 0.0)) {
    throw std::invalid_argument("spectral_filter_matrix: need keep_fraction > 0");
  }
  const int cutoff = static_cast<int>(std::floor(keep_fraction * N / 2.0));
  Mat P = Mat::Constant(N, N, 1.0 / N);  // constant mode
  const double h = 2.0 * std::numbers::pi / N;
  const int top = (N - 1) / 2;
  for (int k = 1; k <= std::min(cutoff, top); ++k) {
    Vec c(N), s(N);
    for (int m = 0; m < N; ++m) {
      c(m) = std::cos(k * m * h);
      s(m) = std::sin(k * m * h);
    }
    P.noalias() += (2.0 / N) * (c * c.transpose());
    P.noalias() += (2.0 / N) * (s * s.transpose());
  }
  if (N % 2 == 0 && cutoff >= N / 2) {
    Vec c(N);
    for (int m = 0; m < N; ++m) c(m) = (m % 2 == 0) ? 1.0 : -1.0;
    P.noalias() += (1.0 / N) * (c * c.transpose());
  }
  return P;
}

double convergence_order(std::span<const double> hs, std::span<const double> errs) {
  if (hs.size() != errs.size() || hs.size() < 2)
    throw std::invalid_argument("convergence_order: need matching arrays, size >= 2");
  const int m = static_cast<int>(hs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < m; ++i) {
    const double x = std::log(hs[i]);
    const double y = std::log(std::max(errs[i], 1e-300));
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

int thread_count() {
  if (const char* env = std::getenv("PHIVOL_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return 1;
}

void parallel_for(int n, const std::function<void(int)>& body) {
  const int threads = std::min(thread_count(), n > 0 ? n : 1);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t]() {
      for (int i = t; i < n; i += threads) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace phivol
