#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "bohlkit/bohl.hpp"
#include "bohlkit/nu_instance.hpp"
#include "bohlkit/triangular.hpp"

using namespace bohlkit;

TEST_CASE("already triangular: U = I and B = A") {
  Matrix A(3, 3);
  A << 2, 1, -1, 0, 0.5, 3, 0, 0, 1.5;
  const auto s = MatrixSequence::constant(A, 32);
  const TriangularForm f = triangularize(s, std::vector<Vector>{Vector::Unit(3, 0), Vector::Unit(3, 1)}, 32);
  for (int n = 0; n <= 32; ++n) {
    CHECK((f.U[n] - Matrix::Identity(3, 3)).norm() < 1e-14);
    CHECK((f.B(n) - A).norm() < 1e-14);
  }
}

TEST_CASE("[[1,1],[0,1]] with L = span{(0,1)}") {
  Matrix A(2, 2);
  A << 1, 1, 0, 1;
  const auto s = MatrixSequence::constant(A, 256);
  const TriangularForm f = triangularize(s, std::vector<Vector>{Vector::Unit(2, 1)}, 256);
  CHECK(f.B(0)(0, 0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  const auto sub = subsystem(f);
  for (int n = 0; n <= 256; n += 17) {
    const double x = n;
    CHECK(sub.at(n)(0, 0) == doctest::Approx(std::sqrt((x + 1) * (x + 1) + 1) / std::sqrt(x * x + 1)).epsilon(1e-12));
    Vector u(2);
    u << x, 1.0;
    CHECK((f.U[n].col(0) - u / u.norm()).norm() < 1e-12);
  }
  const EquivalenceReport r = verify_equivalence(s, f, WindowSpec::for_horizon(256));
  CHECK(r.passed);
}

TEST_CASE("random rotation-like sequence stays upper triangular") {
  const auto s = random_lyapunov(2, 256, 31, 0.3);
  const TriangularForm f = triangularize(s, std::vector<Vector>{Vector::Ones(2)}, 256);
  for (int n = 0; n <= 256; ++n) {
    const Matrix B = f.B(n);
    CHECK(std::abs(B(1, 0)) <= 1e-10 * oracle::norm2(B));
    // B = U(n+1)^T A U(n), directly
    CHECK((B - f.U[n + 1].transpose() * s.at(n) * f.U[n]).norm() <= 1e-10 * oracle::norm2(s.at(n)));
  }
}

TEST_CASE("subsystem and complementary block") {
  Matrix D = Matrix::Zero(2, 2);
  D(0, 0) = 0.3;
  D(1, 1) = 2.5;
  const auto s = MatrixSequence::constant(D, 16);
  const TriangularForm f = triangularize(s, std::vector<Vector>{Vector::Unit(2, 0)}, 16);
  CHECK(subsystem(f).at(4)(0, 0) == doctest::Approx(0.3));
  CHECK(complementary_subsystem(f).at(4)(0, 0) == doctest::Approx(2.5));
  const auto r = random_lyapunov(3, 16, 2);
  const TriangularForm g = triangularize(r, Matrix(Matrix::Identity(3, 3)), 16);
  CHECK((subsystem(g).at(5) - g.B(5)).norm() == 0.0);
}

TEST_CASE("embed and project") {
  const auto r = random_lyapunov(2, 16, 2);
  const TriangularForm f = triangularize(r, std::vector<Vector>{Vector::Ones(2)}, 16);
  const Vector y = embed(f, Vector::Ones(1));
  CHECK(y(0) == 1.0);
  CHECK(y(1) == 0.0);
  CHECK(project(f, y) == Vector::Ones(1));
  const TriangularForm g = triangularize(r, Matrix(Matrix::Identity(2, 2)), 16);
  Vector z(2);
  z << 0.2, -0.7;
  CHECK(embed(g, z) == z);
}

TEST_CASE("invariance over 500 steps") {
  const auto s = random_lyapunov(4, 500, 77, 0.5);
  Rng rng(4);
  const TriangularForm f = triangularize(s, rng.gaussian(4, 2), 500);
  Vector y = embed(f, rng.unit_vector(2));
  double worst = 0.0;
  for (int n = 0; n < 500; ++n) {
    y = f.B(n) * y;
    y /= y.norm();
    worst = std::max(worst, y.tail(2).norm());
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("lifting perturbations") {
  const auto s = random_lyapunov(3, 64, 12, 0.5);
  Rng rng(13);
  const TriangularForm f = triangularize(s, rng.gaussian(3, 2), 64);
  CHECK(lift_perturbation(f, PerturbationPlan(2)).empty());
  PerturbationPlan q1(2);
  q1.set(10, 0.1 * rng.gaussian(2, 2));
  const PerturbationPlan q = lift_perturbation(f, q1);
  CHECK(q.support.size() == 1);
  CHECK(oracle::norm2(*q.find(10)) == doctest::Approx(oracle::norm2(*q1.find(10))).epsilon(1e-12));
  // already triangular: blockdiag(Q1, 0)
  Matrix A(3, 3);
  A << 2, 1, -1, 0, 0.5, 3, 0, 0, 1.5;
  const TriangularForm g = triangularize(MatrixSequence::constant(A, 32),
                                         std::vector<Vector>{Vector::Unit(3, 0), Vector::Unit(3, 1)}, 32);
  PerturbationPlan p1(2);
  p1.set(4, rng.gaussian(2, 2));
  const Matrix Q = *lift_perturbation(g, p1).find(4);
  CHECK((Q.topLeftCorner(2, 2) - *p1.find(4)).norm() < 1e-14);
  CHECK(Q.rightCols(1).norm() < 1e-14);
  CHECK(Q.bottomRows(1).norm() < 1e-14);
}

TEST_CASE("equivalence report on random systems and the identity") {
  const auto I = MatrixSequence::constant(Matrix::Identity(2, 2), 64);
  CHECK(verify_equivalence(I, triangularize(I, std::vector<Vector>{Vector::Ones(2)}, 64), WindowSpec::for_horizon(64)).passed);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto s = random_lyapunov(3, 256, seed, 0.6);
    Rng rng(seed);
    const TriangularForm f = triangularize(s, rng.gaussian(3, 1 + seed % 3), 256);
    const EquivalenceReport r = verify_equivalence(s, f, WindowSpec::for_horizon(256));
    CHECK(r.passed);
    CHECK(r.orthogonality_residual <= 1e-12);
    CHECK(r.equivalence_residual <= 1e-9);
  }
}

TEST_CASE("backward-anchored form picks up the contracting directions") {
  // stable direction not axis aligned: A = S diag(e^-1, e) S^-1
  Matrix S(2, 2);
  S << 1, 1, 0.3, 1;
  Matrix D = Matrix::Zero(2, 2);
  D(0, 0) = std::exp(-1.0);
  D(1, 1) = std::exp(1.0);
  const auto s = MatrixSequence::constant(S * D * S.inverse(), 128);
  const TriangularForm f = triangularize_backward(s, Matrix(Matrix::Identity(2, 2)), 1, 128);
  const Vector stable = S.col(0).normalized();
  CHECK(std::abs(std::abs(f.U[0].col(0).dot(stable)) - 1.0) < 1e-12);
  // the anchor frame at H+1 is arbitrary, so the diagonal only settles away from the end
  for (int n = 0; n <= 112; n += 16) {
    CHECK(std::abs(f.B(n)(1, 0)) < 1e-10);
    CHECK(std::abs(f.B(n)(0, 0)) == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
  }
}
