#include <cmath>

#include "doctest.h"
#include "bohlkit/errors.hpp"
#include "bohlkit/nu_instance.hpp"
#include "bohlkit/spectrum.hpp"

using namespace bohlkit;

namespace {
// Sigma of diag(e^{a_i}) with constant coefficients is {a_i}; a grid point counts as a hit
// when it lies within the margin tolerance of some a_i.
Membership closed_form(double g, const std::vector<double>& a, double tol) {
  for (double x : a)
    if (std::abs(g - x) <= tol) return Membership::In;
  return Membership::Out;
}

MatrixSequence diag_exp(const std::vector<double>& a, int H) {
  Matrix M = Matrix::Zero(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(a.size()));
  for (size_t i = 0; i < a.size(); ++i) M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = std::exp(a[i]);
  return MatrixSequence::constant(M, H);
}

void check_against(const SpectrumSample& s, const std::vector<double>& a, double tol) {
  for (size_t i = 0; i < s.grid.size(); ++i) {
    INFO("gamma = " << s.grid[i]);
    CHECK(s.ed[i] == closed_form(s.grid[i], a, tol));
    CHECK(s.bd[i] == closed_form(s.grid[i], a, tol));
  }
}
}  // namespace

TEST_CASE("grid helpers") {
  const auto g = default_grid();
  CHECK(g.size() == 121);
  CHECK(g.front() == -3.0);
  CHECK(g.back() == doctest::Approx(3.0).epsilon(1e-12));
  CHECK_THROWS_AS(make_grid(1.0, 0.0, 0.1), Error);
  std::vector<Membership> m{Membership::Out, Membership::In, Membership::In, Membership::Inconclusive,
                            Membership::In};
  const auto iv = merge_intervals({0, 1, 2, 3, 4}, m);
  REQUIRE(iv.size() == 2);
  CHECK(iv[0] == std::make_pair(1.0, 2.0));
  CHECK(iv[1] == std::make_pair(4.0, 4.0));
  CHECK_THROWS_AS(sample_ed_spectrum(diag_exp({0.0}, 128), {0.1, 0.0}, WindowSpec::for_horizon(128)), Error);
}

TEST_CASE("scalar exponential") {
  const WindowSpec w = WindowSpec::for_horizon(256);
  for (double a : {-0.7, 0.0, 0.45}) {
    const auto g = make_grid(-1.0, 1.0, 0.05);
    check_against(sample_spectrum(diag_exp({a}, 256), g, w), {a}, 1e-3);
  }
}

TEST_CASE("diagonal e^-1, e") {
  const WindowSpec w = WindowSpec::for_horizon(512);
  const auto g = make_grid(-2.0, 2.0, 0.05);
  const SpectrumSample s = sample_spectrum(diag_exp({-1.0, 1.0}, 512), g, w);
  check_against(s, {-1.0, 1.0}, 1e-3);
  REQUIRE(s.ed_intervals.size() == 2);
  CHECK(s.ed_intervals[0].first == doctest::Approx(-1.0));
  CHECK(s.ed_intervals[1].first == doctest::Approx(1.0));
  // separately sampled sets agree with the joint run
  const SpectrumSample e = sample_ed_spectrum(diag_exp({-1.0, 1.0}, 512), g, w);
  CHECK(e.ed == s.ed);
  CHECK(e.bd.empty());
  const SpectrumSample b = sample_bd_spectrum(diag_exp({-1.0, 1.0}, 512), g, w);
  CHECK(b.bd == s.bd);
}

TEST_CASE("identity and three rates") {
  const auto g = make_grid(-1.0, 1.0, 0.1);
  check_against(sample_spectrum(MatrixSequence::constant(Matrix::Identity(3, 3), 256), g,
                                WindowSpec::for_horizon(256)),
                {0.0}, 1e-3);
  check_against(sample_spectrum(diag_exp({-0.5, 0.0, 0.5}, 256), g, WindowSpec::for_horizon(256)),
                {-0.5, 0.0, 0.5}, 1e-3);
}

TEST_CASE("BD points are ED points") {
  const WindowSpec w = WindowSpec::for_horizon(512);
  const auto g = make_grid(-1.5, 1.5, 0.25);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const SpectrumSample s = sample_spectrum(random_lyapunov(2, 512, seed, 0.5), g, w);
    for (size_t i = 0; i < g.size(); ++i)
      if (s.bd[i] == Membership::In) CHECK(s.ed[i] != Membership::Out);
  }
}

TEST_CASE("approximation demo") {
  const WindowSpec w = WindowSpec::for_horizon(256);
  const auto g = make_grid(-1.5, 1.5, 0.1);
  const auto sys = diag_exp({-1.0, 1.0}, 256);
  const ApproximationReport r = bd_approximation_demo(sys, g, {0.05, 0.2, 0.1}, 3, 99, w);
  REQUIRE(r.levels.size() == 3);
  CHECK(r.levels[0].eps == 0.2);
  CHECK(r.levels[2].eps == 0.05);
  CHECK(r.monotone);
  CHECK(r.matches_ed);
  for (const auto& lv : r.levels) CHECK(lv.max_plan_norm < 0.2);
  // unions nest by hand as well
  for (size_t l = 1; l < r.levels.size(); ++l)
    for (size_t i = 0; i < g.size(); ++i)
      if (r.levels[l].union_in[i]) CHECK(r.levels[l - 1].union_in[i]);
  CHECK_THROWS_AS(bd_approximation_demo(sys, g, {}, 3, 1, w), Error);
  CHECK_THROWS_AS(bd_approximation_demo(sys, g, {0.1}, 0, 1, w), Error);
}
