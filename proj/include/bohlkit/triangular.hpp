#pragma once
#include <vector>

#include "bohlkit/bohl.hpp"
#include "bohlkit/plan.hpp"
#include "bohlkit/system.hpp"

namespace bohlkit {

// Dynamic equivalence A(n) ~ B(n) = U(n+1)^T A(n) U(n) with B upper triangular.
// B and C are stored for the unscaled core of the source; rate carries the scale.
struct TriangularForm {
  int d = 0;
  int k = 0;
  int H = 0;
  double rate = 0.0;
  std::vector<Matrix> U;       // n = 0..H+1
  std::vector<Matrix> B_core;  // n = 0..H
  std::vector<Matrix> C;       // n = 0..H+1, V(n) = U(n) C(n) for the core
  Matrix basis_used;           // columns l_1..l_d

  Matrix B(int n) const;
};

TriangularForm triangularize(const MatrixSequence& sys, const std::vector<Vector>& L_basis, int H);
TriangularForm triangularize(const MatrixSequence& sys, const Matrix& L_basis, int H);

// Flag anchored at the far end: U(H+1) = orthonormalised frame, U(n) from the QR of A(n)^{-1} U(n+1).
// Leading columns at 0 converge to the most contracting directions, and the backward sweep stays
// accurate where forward propagation of a decaying subspace would not. k marks the leading block.
TriangularForm triangularize_backward(const MatrixSequence& sys, const Matrix& frame_end, int k, int H);

MatrixSequence subsystem(const TriangularForm& form);
// Trailing (d-k) x (d-k) block, the quotient dynamics.
MatrixSequence complementary_subsystem(const TriangularForm& form);

Vector embed(const TriangularForm& form, const Vector& y01);
Vector project(const TriangularForm& form, const Vector& y0);

PerturbationPlan lift_perturbation(const TriangularForm& form, const PerturbationPlan& Q1);

struct EquivalenceReport {
  double equivalence_residual = 0.0;   // max rel ||Phi_B(n,0) - U(n)^T Phi_A(n,0) U(0)||
  double invariance_residual = 0.0;    // trailing rows of Phi_B(n,0) U(0)^T L
  double orthogonality_residual = 0.0; // max ||U^T U - I||
  double below_diagonal = 0.0;         // max |b_ij| / ||B||, i > j
  double gs_residual = 0.0;            // max rel ||B(n) - U(n+1)^T A(n) U(n)||
  std::vector<int> sampled_n;
  bool passed = false;
};

EquivalenceReport verify_equivalence(const MatrixSequence& sys, const TriangularForm& form,
                                     const WindowSpec& w);

}  // namespace bohlkit
