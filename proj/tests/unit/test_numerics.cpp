#include <phivol/numerics.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"

using namespace phivol;

TEST_CASE("rng stream is pinned") {
  Rng rng(42);
  CHECK(rng.next_u64() == 0xbdd732262feb6e95ull);
  CHECK(rng.next_u64() == 0x28efe333b266f103ull);
  CHECK(rng.next_u64() == 0x47526757130f9f52ull);

  Rng r2(42);
  CHECK(r2.uniform() == doctest::Approx(0.7415648787718233).epsilon(1e-15));
  CHECK(r2.uniform() == doctest::Approx(0.1599103928769201).epsilon(1e-15));

  Rng r3(42);
  CHECK(r3.normal() == doctest::Approx(0.4147197504315306).epsilon(1e-12));
  CHECK(r3.normal() == doctest::Approx(0.6526812221519429).epsilon(1e-12));

  // identical seeds give identical vectors
  Rng a(7), b(7);
  CHECK((a.normal_vector(16) - b.normal_vector(16)).norm() == 0.0);
}

TEST_CASE("pairwise sum is order stable and accurate") {
  const int n = 1 << 12;
  std::vector<double> xs(n);
  Rng rng(3);
  for (auto& x : xs) x = rng.uniform(-1.0, 1.0) + 1e-12 * rng.uniform();
  const double s1 = pairwise_sum(std::span<const double>(xs));
  // long double reference
  long double acc = 0.0L;
  for (double x : xs) acc += x;
  CHECK(std::abs(s1 - static_cast<double>(acc)) < 1e-12);

  Vec v = Eigen::Map<const Vec>(xs.data(), n);
  CHECK(pairwise_sum(v) == s1);
}

TEST_CASE("spectral differentiation is exact on resolvable trig polynomials") {
  for (int N : {16, 17, 33}) {
    const Mat D = spectral_diff_matrix(N);
    Vec f(N), df(N);
    for (int j = 0; j < N; ++j) {
      const double t = 2.0 * std::numbers::pi * j / N;
      f[j] = 0.3 + std::sin(3 * t) - 2.0 * std::cos(5 * t);
      df[j] = 3.0 * std::cos(3 * t) + 10.0 * std::sin(5 * t);
    }
    CHECK((D * f - df).cwiseAbs().maxCoeff() < 1e-10);
    // derivative of a constant vanishes
    CHECK((D * Vec::Ones(N)).cwiseAbs().maxCoeff() < 1e-11);
  }
}

TEST_CASE("spectral filter keeps resolved modes and is a projector") {
  for (int N : {16, 31}) {
    const Mat P = spectral_filter_matrix(N, 2.0 / 3.0);
    CHECK((P - P.transpose()).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((P * P - P).cwiseAbs().maxCoeff() < 1e-12);
    const int cutoff = static_cast<int>(2.0 / 3.0 * N / 2.0);
    Vec low(N), high(N);
    for (int j = 0; j < N; ++j) {
      const double t = 2.0 * std::numbers::pi * j / N;
      low[j] = 0.4 - std::sin(cutoff * t) + std::cos(2 * t);
      high[j] = std::cos((cutoff + 1) * t);
    }
    CHECK((P * low - low).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((P * high).cwiseAbs().maxCoeff() < 1e-12);
  }
  // keep_fraction 1 is the identity
  const Mat full = spectral_filter_matrix(8, 1.0);
  CHECK((full - Mat::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-13);
  CHECK_THROWS_AS(spectral_filter_matrix(1, 0.5), std::invalid_argument);
}

TEST_CASE("richardson and convergence order") {
  // d(h) = d + c h^2: the two level update removes the h^2 term
  const double exact = 1.75;
  const auto d = [&](double h) { return exact + 0.3 * h * h + 0.01 * h * h * h * h; };
  const double r = richardson2(d(0.1), d(0.05));
  CHECK(std::abs(r - exact) < 1e-6);
  CHECK(std::abs(d(0.05) - exact) > 1e-4);

  std::vector<double> hs{0.1, 0.05, 0.025, 0.0125};
  std::vector<double> errs;
  for (double h : hs) errs.push_back(0.7 * h * h * h);
  CHECK(convergence_order(hs, errs) == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("parallel_for covers the range once") {
  std::vector<int> hits(257, 0);
  parallel_for(257, [&](int i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
}
