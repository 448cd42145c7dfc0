#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "bohlkit/dichotomy.hpp"
#include "bohlkit/errors.hpp"
#include "bohlkit/nu_instance.hpp"
#include "bohlkit/perturbations.hpp"

using namespace bohlkit;

namespace {
MatrixSequence diag_exp(std::vector<double> r, int H) {
  Matrix M = Matrix::Zero(static_cast<int>(r.size()), static_cast<int>(r.size()));
  for (size_t i = 0; i < r.size(); ++i) M(i, i) = std::exp(r[i]);
  return MatrixSequence::constant(M, H);
}
Splitting axes_split(int d, int k) {
  Splitting s;
  for (int i = 0; i < d; ++i) (i < k ? s.basis1 : s.basis2).push_back(Vector::Unit(d, i));
  return s;
}
}  // namespace

TEST_CASE("ED on diag(e^-1, e)") {
  const auto s = diag_exp({-1, 1}, 1024);
  const EDVerdict v = check_ed(s, axes_split(2, 1), WindowSpec::for_horizon(1024));
  CHECK(v.holds);
  CHECK(v.alpha == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(v.K == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("identity has no ED") {
  const auto s = diag_exp({0, 0}, 256);
  const EDVerdict v = check_ed(s, axes_split(2, 1), WindowSpec::for_horizon(256));
  CHECK_FALSE(v.holds);
  CHECK(std::abs(v.margin1) < 1e-12);
  CHECK(std::abs(v.margin2) < 1e-12);
  CHECK_FALSE(check_bd(s, axes_split(2, 1), default_samples(2, 1), WindowSpec::for_horizon(256)).holds);
}

TEST_CASE("e^{1/4} I with an empty stable part") {
  const auto s = MatrixSequence::constant(std::exp(0.25) * Matrix::Identity(2, 2), 1024);
  const EDVerdict v = check_ed(s, axes_split(2, 0), WindowSpec::for_horizon(1024));
  CHECK(v.holds);
  CHECK(v.alpha == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("BD on diag(e^-1, e), constants near 1") {
  const auto s = diag_exp({-1, 1}, 512);
  const BDVerdict v = check_bd(s, axes_split(2, 1), {Vector::Unit(2, 0), Vector::Unit(2, 1)}, WindowSpec::for_horizon(512));
  CHECK(v.holds);
  CHECK(v.alpha == doctest::Approx(1.0).epsilon(1e-6));
  REQUIRE(v.c1_samples.size() == 1);
  REQUIRE(v.c2_samples.size() == 1);
  CHECK(v.c1_samples[0].constant == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(v.c2_samples[0].constant == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("ED implies BD, with constants inside the exact dichotomy constants") {
  const int H = 512;
  for (std::uint64_t seed : {1u, 2u}) {
    // conjugate a hyperbolic diagonal by a fixed random matrix
    Rng rng(seed);
    const Matrix S = Matrix::Identity(3, 3) + 0.3 * rng.gaussian(3, 3);
    const double rates[3] = {-0.8, 0.6, 1.1};
    Matrix D = Matrix::Zero(3, 3);
    for (int i = 0; i < 3; ++i) D(i, i) = std::exp(rates[i]);
    const Matrix Sinv = S.inverse();
    const Matrix A = S * D * Sinv;
    const auto s = MatrixSequence::constant(A, H);
    Splitting sp;
    sp.basis1 = {S.col(0)};
    sp.basis2 = {S.col(1), S.col(2)};
    const WindowSpec w = WindowSpec::for_horizon(H);
    const EDVerdict ed = check_ed(s, sp, w);
    REQUIRE(ed.holds);
    const BDVerdict bd = check_bd(s, sp, default_samples(3, seed), w, {}, ed.alpha);
    CHECK(bd.holds);
    // A^g on each subspace in closed form. On L2 the smallest singular value comes from the
    // pseudo-inverse C^{-1} D^{-g} S2^+, where no cancellation can hide the slow rate.
    Matrix Q1, Q2, R;
    mgs_qr(S.leftCols(1), Q1, R);
    mgs_qr(S.rightCols(2), Q2, R);
    const Matrix S2 = S.rightCols(2);
    const Matrix S2p = (S2.transpose() * S2).inverse() * S2.transpose();
    const Matrix Cinv = (S2p * Q2).inverse();
    const int N = w.max_N();
    double K1 = 0.0, C2 = INFINITY, lo2 = INFINITY;
    for (int g = 0; g <= H; ++g) {
      K1 = std::max(K1, std::exp(rates[0] * g) * std::exp(ed.alpha * g));
      Matrix Dinv = Matrix::Zero(2, 2);
      Dinv(0, 0) = std::exp(-rates[1] * g);
      Dinv(1, 1) = std::exp(-rates[2] * g);
      const double log_smin = -std::log(oracle::norm2(Cinv * Dinv * S2p));
      C2 = std::min(C2, std::exp(log_smin - ed.alpha * g));
      if (g > N && g <= H - N - 1) lo2 = std::min(lo2, log_smin / g);
    }
    // L1 is a single exponential; L2 carries a non-normal transient
    CHECK(ed.margin1 == doctest::Approx(0.8).epsilon(1e-9));
    CHECK(ed.margin2 == doctest::Approx(lo2).epsilon(1e-9));
    CHECK(ed.alpha == doctest::Approx(std::min(0.8, lo2)).epsilon(1e-9));
    REQUIRE_FALSE(bd.c1_samples.empty());
    REQUIRE_FALSE(bd.c2_samples.empty());
    for (const auto& f : bd.c1_samples) CHECK(f.constant <= K1 * (1 + 1e-9));
    for (const auto& f : bd.c2_samples) CHECK(f.constant >= C2 * (1 - 1e-9));
  }
}

TEST_CASE("witness search") {
  const auto I = diag_exp({0, 0}, 256);
  const WindowSpec w = WindowSpec::for_horizon(256);
  const auto wit = find_no_bd_witness(I, {Vector::Unit(2, 0), Vector::Unit(2, 1)}, w);
  REQUIRE(wit.has_value());
  CHECK(wit->index == 0);
  CHECK(wit->x0 == Vector::Unit(2, 0));
  CHECK(wit->lower == 0.0);
  CHECK(wit->upper == 0.0);
  CHECK_FALSE(find_no_bd_witness(diag_exp({-1, 1}, 256), {Vector::Unit(2, 0), Vector::Unit(2, 1)}, w).has_value());
  CHECK_THROWS_AS(find_no_bd_witness(I, {}, w), Error);
}

TEST_CASE("pipeline witness re-checked by a direct window scan") {
  const NUParams p;
  const auto sys = nu_pipeline_system(p);
  Splitting sp;
  sp.basis1 = {Vector::Unit(3, 0), Vector::Unit(3, 1)};
  sp.basis2 = {Vector::Unit(3, 2)};
  const WindowSpec w = WindowSpec::for_horizon(p.horizon);
  const PipelineResult r = no_bd_pipeline(sys, sp, 0.2, w);
  const auto pert = apply_plan(sys, r.plan);
  const auto wit = find_no_bd_witness(pert, {r.witness.x0}, w);
  REQUIRE(wit.has_value());
  // one brute-force threshold is enough to see both signs
  const auto L = oracle::logs(pert, r.witness.x0, p.horizon);
  const int N = w.max_N();
  CHECK(oracle::scan_lower(L, N, p.horizon) <= 5e-2);
  CHECK(oracle::scan_upper(L, N, p.horizon) >= -5e-2);
}

TEST_CASE("splitting search") {
  const WindowSpec w = WindowSpec::for_horizon(256);
  const auto sp = search_splitting(diag_exp({-1, 1}, 256), w);
  REQUIRE(sp.has_value());
  REQUIRE(sp->basis1.size() == 1);
  CHECK(std::abs(std::abs(sp->basis1[0].normalized()(0)) - 1.0) < 1e-9);
  CHECK(std::abs(std::abs(sp->basis2[0].normalized()(1)) - 1.0) < 1e-9);
  CHECK_FALSE(search_splitting(diag_exp({0, 0}, 256), w).has_value());
  const auto s3 = search_splitting(diag_exp({-2, -1, 1}, 256), w);
  REQUIRE(s3.has_value());
  CHECK(s3->basis1.size() == 2);
  CHECK(s3->basis2.size() == 1);
}

TEST_CASE("splitting validation") {
  const auto s = diag_exp({-1, 1}, 64);
  Splitting bad;
  bad.basis1 = {Vector::Unit(2, 0)};
  bad.basis2 = {Vector::Unit(2, 0)};
  CHECK_THROWS_AS(check_ed(s, bad, WindowSpec::for_horizon(64)), Error);
  Splitting short_;
  short_.basis1 = {Vector::Unit(2, 0)};
  CHECK_THROWS_AS(check_ed(s, short_, WindowSpec::for_horizon(64)), Error);
}

TEST_CASE("fitted constants") {
  // L(n) = -0.5 n + 0.2 sin(n): C1 at alpha 0.5 is the largest gap of the sine term
  std::vector<double> L(200);
  for (int n = 0; n < 200; ++n) L[n] = -0.5 * n + 0.2 * std::sin(n);
  double best = -INFINITY;
  for (int m = 0; m < 200; ++m)
    for (int n = m; n < 200; ++n) best = std::max(best, L[n] - L[m] + 0.5 * (n - m));
  CHECK(fit_decay_constant(L, 0.5) == doctest::Approx(best).epsilon(1e-12));
}
