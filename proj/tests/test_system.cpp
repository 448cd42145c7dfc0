#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "bohlkit/errors.hpp"
#include "bohlkit/nu_instance.hpp"
#include "bohlkit/perturbations.hpp"
#include "bohlkit/system.hpp"

using namespace bohlkit;

namespace {
Matrix diag2(double a, double b) {
  Matrix M = Matrix::Zero(2, 2);
  M(0, 0) = a;
  M(1, 1) = b;
  return M;
}
Matrix rot(double t) {
  Matrix R(2, 2);
  R << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return R;
}
}  // namespace

TEST_CASE("transition of the identity is the identity") {
  const auto s = MatrixSequence::constant(Matrix::Identity(3, 3), 32);
  CHECK(transition(s, 7, 3) == Matrix::Identity(3, 3));
  CHECK(transition(s, 3, 7) == Matrix::Identity(3, 3));
}

TEST_CASE("transition of a constant diagonal is a power") {
  const double e = std::exp(1.0);
  const auto s = MatrixSequence::constant(diag2(e, 1 / e), 32);
  const Matrix P = transition(s, 3, 1);
  CHECK(P(0, 0) == doctest::Approx(e * e).epsilon(1e-14));
  CHECK(P(1, 1) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
  CHECK(P(0, 1) == 0.0);
  const Matrix Q = transition(s, 1, 3);
  CHECK(Q(0, 0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
}

TEST_CASE("cocycle on a random 3x3 sequence against the direct product") {
  const auto s = random_lyapunov(3, 64, 5);
  const Matrix lhs = transition(s, 5, 2) * transition(s, 2, 0);
  const Matrix direct = oracle::phi(s, 5, 0);
  CHECK((lhs - direct).norm() / direct.norm() < 1e-9);
  // across checkpoint blocks and backwards
  for (auto [n, m] : std::vector<std::pair<int, int>>{{63, 1}, {40, 33}, {2, 60}, {0, 64}}) {
    const Matrix D = oracle::phi(s, n, m);
    CHECK((transition(s, n, m) - D).norm() / D.norm() < 1e-9);
  }
}

TEST_CASE("evolve") {
  const auto I = MatrixSequence::constant(Matrix::Identity(2, 2), 16);
  Vector x(2);
  x << 0.3, -2.0;
  CHECK(evolve(I, 0, x, 9) == x);
  const double c = 0.7;
  const auto sc = MatrixSequence::constant(Matrix::Constant(1, 1, std::exp(c)), 16);
  CHECK(evolve(sc, 0, Vector::Ones(1), 5)(0) == doctest::Approx(std::exp(5 * c)).epsilon(1e-14));
  const auto per = MatrixSequence::periodic({diag2(2, 0.5), rot(0.4)}, 16);
  const Vector y = evolve(per, 0, x, 6);
  CHECK((y - oracle::phi(per, 6, 0) * x).norm() < 1e-12 * y.norm());
}

TEST_CASE("scaled vectors match plain evolution") {
  const auto s = random_lyapunov(2, 128, 8, 0.8);
  Vector x(2);
  x << 1.0, 2.0;
  const ScaledVector z = evolve_scaled(s, 0, make_scaled(x), 100);
  const Vector direct = oracle::phi(s, 100, 0) * x;
  CHECK(z.log_norm == doctest::Approx(std::log(direct.norm())).epsilon(1e-12));
  CHECK((z.unit - direct / direct.norm()).norm() < 1e-10);
}

TEST_CASE("Lyapunov bounds") {
  const auto I = MatrixSequence::constant(Matrix::Identity(2, 2), 16);
  CHECK(lyapunov_bounds(I).b_fwd == doctest::Approx(1.0));
  CHECK(lyapunov_bounds(I).b_inv == doctest::Approx(1.0));
  const double e = std::exp(1.0);
  const auto D = MatrixSequence::constant(diag2(e, 1 / e), 16);
  CHECK(lyapunov_bounds(D).b_fwd == doctest::Approx(e));
  CHECK(lyapunov_bounds(D).b_inv == doctest::Approx(e));
  // block schedule of diag(2, 1/2) and a rotation: exhaustive oracle
  const auto B = MatrixSequence::block_schedule({{3, diag2(2, 0.5)}, {5, rot(M_PI / 4)}, {2, diag2(2, 0.5)}}, 20);
  double f = 0, g = 0;
  for (int n = 0; n <= 20; ++n) {
    f = std::max(f, oracle::norm2(B.at(n)));
    g = std::max(g, oracle::norm2(oracle::inv(B.at(n))));
  }
  CHECK(lyapunov_bounds(B).b_fwd == doctest::Approx(f).epsilon(1e-12));
  CHECK(lyapunov_bounds(B).b_inv == doctest::Approx(g).epsilon(1e-12));
}

TEST_CASE("sequence kinds") {
  const auto per = MatrixSequence::periodic({diag2(2, 0.5), rot(0.4)}, 16);
  CHECK(per.at(4) == diag2(2, 0.5));
  CHECK(per.at(5) == rot(0.4));
  const auto B = MatrixSequence::block_schedule({{2, diag2(3, 1)}, {1, rot(0.1)}}, 16);
  CHECK(B.at(1) == diag2(3, 1));
  CHECK(B.at(2) == rot(0.1));
  CHECK(B.at(10) == rot(0.1));
  const auto E = MatrixSequence::explicit_sequence({diag2(5, 1)}, B, 16);
  CHECK(E.at(0) == diag2(5, 1));
  CHECK(E.at(2) == rot(0.1));
  PerturbationPlan p(2);
  p.set(5, diag2(0.1, 0.0));
  const auto P = MatrixSequence::perturbed(per, p);
  CHECK(P.at(5) == rot(0.4) + diag2(0.1, 0.0));
  CHECK(P.at(4) == per.at(4));
  const auto S = MatrixSequence::scaled(per, 0.5);
  CHECK((S.at(3) - std::exp(0.5) * per.at(3)).norm() < 1e-15);
  CHECK(S.unwrap_scale().second == 0.5);
}

TEST_CASE("error paths") {
  const auto s = MatrixSequence::constant(Matrix::Identity(2, 2), 16);
  CHECK_THROWS_AS(s.checked(17), Error);
  try {
    (void)s.checked(17);
  } catch (const Error& e) {
    CHECK(e.name() == "HorizonExceeded");
    CHECK(e.error_class() == ErrorClass::Validation);
  }
  Matrix sing = Matrix::Zero(2, 2);
  sing(0, 0) = 1.0;
  const auto bad = MatrixSequence::explicit_sequence({Matrix::Identity(2, 2), sing}, std::nullopt, 4);
  bool thrown = false;
  try {
    (void)transition(bad, 3, 0);
  } catch (const Error& e) {
    thrown = true;
    CHECK(e.name() == "NonInvertibleCoefficient");
    CHECK(e.index() == 1);
  }
  CHECK(thrown);
}
