#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "bohlkit/bohl.hpp"
#include "bohlkit/errors.hpp"
#include "bohlkit/nu_instance.hpp"

using namespace bohlkit;

namespace {
Matrix diag2(double a, double b) {
  Matrix M = Matrix::Zero(2, 2);
  M(0, 0) = a;
  M(1, 1) = b;
  return M;
}
const WindowSpec W64 = WindowSpec::make({2, 4, 8}, 64);
}  // namespace

TEST_CASE("scalar e^c in the scaled representation is exact") {
  for (double c : {-2.0, -0.3, 0.0, 0.1, 1.0 / 3.0}) {
    const auto s = MatrixSequence::scaled(MatrixSequence::constant(Matrix::Identity(1, 1), 128), c);
    for (double x : {1.0, -4.0, 1e-3}) {
      const BohlPair v = bohl_vector(s, Vector::Constant(1, x), WindowSpec::for_horizon(128));
      for (const auto& [N, val] : v.upper.values) CHECK(val == c);
      for (const auto& [N, val] : v.lower.values) CHECK(val == c);
      CHECK(v.upper.reported == c);
    }
    CHECK(upper_bohl_space(s, WindowSpec::for_horizon(128)).reported == c);
    CHECK(lower_bohl_space(s, WindowSpec::for_horizon(128)).reported == c);
  }
}

TEST_CASE("identity gives zero") {
  const auto I = MatrixSequence::constant(Matrix::Identity(2, 2), 64);
  const BohlPair v = bohl_vector(I, Vector::Ones(2), W64);
  for (const auto& [N, val] : v.upper.values) CHECK(val == 0.0);
  for (const auto& [N, val] : v.lower.values) CHECK(val == 0.0);
  CHECK(upper_bohl_space(I, W64).reported == 0.0);
  CHECK(lower_bohl_space(I, W64).reported == 0.0);
}

TEST_CASE("2-periodic scalar (e, 1/e) against the exhaustive scan") {
  Matrix a(1, 1), b(1, 1);
  a(0, 0) = std::exp(1.0);
  b(0, 0) = std::exp(-1.0);
  const auto s = MatrixSequence::periodic({a, b}, 64);
  const WindowSpec w = WindowSpec::make({1, 2, 4, 8, 16}, 64);
  const auto L = oracle::logs(s, Vector::Ones(1), 64);
  const BohlPair v = bohl_vector(s, Vector::Ones(1), w);
  double prev_u = INFINITY, prev_l = -INFINITY;
  for (int N : w.N_list) {
    const double u = v.upper.values.at(N), l = v.lower.values.at(N);
    CHECK(u == doctest::Approx(oracle::scan_upper(L, N, 64)).epsilon(1e-12));
    CHECK(l == doctest::Approx(oracle::scan_lower(L, N, 64)).epsilon(1e-12));
    CHECK(u <= 1.0 / (N + 1) + 1e-15);
    CHECK(l >= -1.0 / (N + 1) - 1e-15);
    CHECK(u <= prev_u);
    CHECK(l >= prev_l);
    prev_u = u;
    prev_l = l;
  }
}

TEST_CASE("space exponents of diag(e, 1/e)") {
  const double e = std::exp(1.0);
  const auto s = MatrixSequence::constant(diag2(e, 1 / e), 64);
  for (const auto& [N, val] : upper_bohl_space(s, W64).values) CHECK(val == doctest::Approx(1.0).epsilon(1e-13));
  for (const auto& [N, val] : lower_bohl_space(s, W64).values) CHECK(val == doctest::Approx(-1.0).epsilon(1e-13));
}

TEST_CASE("space exponents of random 2x2 systems against oracles") {
  for (std::uint64_t seed : {3u, 4u, 5u}) {
    const auto s = random_lyapunov(2, 64, seed, 0.8);
    const BohlEstimate up = upper_bohl_space(s, W64), lo = lower_bohl_space(s, W64);
    for (int N : W64.N_list) {
      CHECK(up.values.at(N) == doctest::Approx(oracle::space_scan(s, N, 64, true)).epsilon(1e-9));
      CHECK(lo.values.at(N) == doctest::Approx(oracle::space_scan(s, N, 64, false)).epsilon(1e-9));
    }
    // dominates 64 sampled vectors
    Rng rng(seed);
    for (int i = 0; i < 64; ++i) {
      const BohlPair v = bohl_vector(s, rng.unit_vector(2), W64);
      CHECK(up.reported >= v.upper.reported - 1e-12);
      CHECK(lo.reported <= v.lower.reported + 1e-12);
    }
  }
}

TEST_CASE("exponents on a subspace") {
  const double e = std::exp(1.0);
  const auto s = MatrixSequence::constant(diag2(e, 1 / e), 64);
  const BohlPair p = bohl_on_subspace(s, {Vector::Unit(2, 1)}, W64);
  CHECK(p.upper.reported == doctest::Approx(-1.0).epsilon(1e-13));
  CHECK(p.lower.reported == doctest::Approx(-1.0).epsilon(1e-13));
  const auto r = random_lyapunov(3, 64, 9, 0.6);
  const BohlPair full = bohl_on_subspace(r, {Vector::Unit(3, 0), Vector::Unit(3, 1), Vector::Unit(3, 2)}, W64);
  CHECK(full.upper.reported == doctest::Approx(upper_bohl_space(r, W64).reported).epsilon(1e-9));
  CHECK(full.lower.reported == doctest::Approx(lower_bohl_space(r, W64).reported).epsilon(1e-9));
  // upper triangular system, L = span{(0,1)}: one-dimensional, so it is a solution exponent
  Matrix A(2, 2);
  A << 1.2, 0.7, 0.0, 0.6;
  const auto t = MatrixSequence::constant(A, 64);
  Vector y(2);
  y << 0.0, 1.0;
  const BohlPair q = bohl_on_subspace(t, {y}, W64);
  const auto L = oracle::logs(t, y, 64);
  CHECK(q.upper.reported == doctest::Approx(oracle::scan_upper(L, 8, 64)).epsilon(1e-9));
  CHECK(q.lower.reported == doctest::Approx(oracle::scan_lower(L, 8, 64)).epsilon(1e-9));
}

TEST_CASE("results do not depend on the thread count") {
  const auto s = random_lyapunov(3, 256, 21, 0.7);
  const WindowSpec w = WindowSpec::for_horizon(256);
  set_thread_count(1);
  const BohlEstimate a = upper_bohl_space(s, w);
  set_thread_count(4);
  const BohlEstimate b = upper_bohl_space(s, w);
  set_thread_count(1);
  CHECK(a == b);
}

TEST_CASE("window validation") {
  const auto I = MatrixSequence::constant(Matrix::Identity(2, 2), 64);
  CHECK_THROWS_AS(bohl_vector(I, Vector::Ones(2), WindowSpec::make({8, 4}, 64)), Error);
  CHECK_THROWS_AS(bohl_vector(I, Vector::Ones(2), WindowSpec::make({40}, 64)), Error);
  CHECK_THROWS_AS(bohl_vector(I, Vector::Zero(2), W64), Error);
  CHECK_THROWS_AS(bohl_vector(I, Vector::Ones(2), WindowSpec::make({4}, 128)), Error);
  CHECK(WindowSpec::for_horizon(64).N_list == std::vector<int>{4, 8, 16});
  CHECK(WindowSpec::for_horizon(4096).N_list == std::vector<int>{4, 8, 16, 32, 64});
}
