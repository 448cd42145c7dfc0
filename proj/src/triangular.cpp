#include "bohlkit/triangular.hpp"

#include <algorithm>
#include <cmath>

namespace bohlkit {

Matrix TriangularForm::B(int n) const {
  return rate == 0.0 ? B_core[static_cast<size_t>(n)] : Matrix(std::exp(rate) * B_core[static_cast<size_t>(n)]);
}

TriangularForm triangularize(const MatrixSequence& sys, const std::vector<Vector>& L_basis, int H) {
  Matrix L(sys.dim(), static_cast<Eigen::Index>(L_basis.size()));
  for (size_t j = 0; j < L_basis.size(); ++j) {
    if (L_basis[j].size() != sys.dim()) throw err::dimension_mismatch("basis vector");
    L.col(static_cast<Eigen::Index>(j)) = L_basis[j];
  }
  return triangularize(sys, L, H);
}

TriangularForm triangularize(const MatrixSequence& sys, const Matrix& L, int H) {
  const int d = sys.dim();
  const int k = static_cast<int>(L.cols());
  if (L.rows() != d) throw err::dimension_mismatch("basis vector");
  if (k < 1 || k > d) throw err::degenerate_basis("need 1 <= k <= d basis vectors");
  if (H > sys.horizon()) throw err::horizon_exceeded(H);
  Matrix Ln = L;
  for (int j = 0; j < k; ++j) {
    const double nj = L.col(j).norm();
    if (!(nj > 0.0)) throw err::degenerate_basis("zero basis vector");
    Ln.col(j) /= nj;
  }
  if (!(min_singular_value(Ln) > 1e-10)) throw err::degenerate_basis("basis is not independent");

  auto O = sys.oracle();
  TriangularForm f;
  f.d = d;
  f.k = k;
  f.H = H;
  f.rate = O->rate();
  f.basis_used.resize(d, d);
  f.basis_used.leftCols(k) = L;
  if (k < d) f.basis_used.rightCols(d - k) = orthogonal_complement(Ln);

  Matrix U0, C0;
  mgs_qr(f.basis_used, U0, C0);
  f.U.reserve(static_cast<size_t>(H) + 2);
  f.C.reserve(static_cast<size_t>(H) + 2);
  f.B_core.reserve(static_cast<size_t>(H) + 1);
  f.U.push_back(U0);
  f.C.push_back(C0);
  Matrix Un, R;
  for (int n = 0; n <= H; ++n) {
    // A(n)U(n) spans the same flag as V(n+1) = A(n)V(n); its QR gives U(n+1) and B(n).
    mgs_qr(O->core(n) * f.U.back(), Un, R);
    f.C.push_back(R * f.C.back());
    f.B_core.push_back(R);
    f.U.push_back(Un);
  }
  return f;
}

TriangularForm triangularize_backward(const MatrixSequence& sys, const Matrix& frame_end, int k, int H) {
  const int d = sys.dim();
  if (frame_end.rows() != d || frame_end.cols() != d) throw err::dimension_mismatch("end frame");
  if (k < 1 || k > d) throw err::degenerate_basis("need 1 <= k <= d");
  if (H > sys.horizon()) throw err::horizon_exceeded(H);
  auto O = sys.oracle();
  TriangularForm f;
  f.d = d;
  f.k = k;
  f.H = H;
  f.rate = O->rate();
  std::vector<Matrix> U(static_cast<size_t>(H) + 2), B(static_cast<size_t>(H) + 1);
  Matrix R;
  mgs_qr(frame_end, U[static_cast<size_t>(H) + 1], R);
  const Matrix I = Matrix::Identity(d, d);
  for (int n = H; n >= 0; --n) {
    // A(n)^{-1} U(n+1) = U(n) R, hence U(n+1)^T A(n) U(n) = R^{-1}
    mgs_qr(O->core_inv(n) * U[static_cast<size_t>(n) + 1], U[static_cast<size_t>(n)], R);
    B[static_cast<size_t>(n)] = R.triangularView<Eigen::Upper>().solve(I);
  }
  f.U = std::move(U);
  f.B_core = std::move(B);
  f.basis_used = f.U[0];
  f.C.reserve(static_cast<size_t>(H) + 2);
  f.C.push_back(I);
  for (int n = 0; n <= H; ++n) f.C.push_back(f.B_core[static_cast<size_t>(n)] * f.C.back());
  return f;
}

MatrixSequence subsystem(const TriangularForm& f) {
  std::vector<Matrix> blocks;
  blocks.reserve(f.B_core.size());
  for (const auto& B : f.B_core) blocks.push_back(B.topLeftCorner(f.k, f.k));
  auto core = MatrixSequence::explicit_sequence(std::move(blocks), std::nullopt, f.H);
  return f.rate == 0.0 ? core : MatrixSequence::scaled(core, f.rate);
}

MatrixSequence complementary_subsystem(const TriangularForm& f) {
  if (f.k == f.d) throw err::invalid("no complementary block when k = d");
  const int r = f.d - f.k;
  std::vector<Matrix> blocks;
  blocks.reserve(f.B_core.size());
  for (const auto& B : f.B_core) blocks.push_back(B.bottomRightCorner(r, r));
  auto core = MatrixSequence::explicit_sequence(std::move(blocks), std::nullopt, f.H);
  return f.rate == 0.0 ? core : MatrixSequence::scaled(core, f.rate);
}

Vector embed(const TriangularForm& f, const Vector& y01) {
  if (y01.size() != f.k) throw err::dimension_mismatch("embed expects a k-vector");
  Vector y = Vector::Zero(f.d);
  y.head(f.k) = y01;
  return y;
}

Vector project(const TriangularForm& f, const Vector& y0) {
  if (y0.size() != f.d) throw err::dimension_mismatch("project expects a d-vector");
  for (int i = f.k; i < f.d; ++i)
    if (std::abs(y0(i)) > 1e-10) throw err::not_in_subspace(i);
  return y0.head(f.k);
}

PerturbationPlan lift_perturbation(const TriangularForm& f, const PerturbationPlan& Q1) {
  if (Q1.dimension != f.k) throw err::dimension_mismatch("plan dimension must equal k");
  PerturbationPlan Q(f.d);
  for (const auto& [n, M] : Q1.support) {
    if (n < 0 || n > f.H) throw err::support_exceeds_horizon(n);
    Matrix Q2 = Matrix::Zero(f.d, f.d);
    Q2.topLeftCorner(f.k, f.k) = M;
    Q.set(n, f.U[static_cast<size_t>(n) + 1] * Q2 * f.U[static_cast<size_t>(n)].transpose());
  }
  Q.decay_schedule = Q1.decay_schedule;
  return Q;
}

EquivalenceReport verify_equivalence(const MatrixSequence& sys, const TriangularForm& f,
                                     const WindowSpec& w) {
  EquivalenceReport r;
  const int H = std::min(f.H, w.H);
  auto O = sys.oracle();
  const int d = f.d;
  const double g = std::exp(f.rate);

  for (int n = 0; n <= H + 1; ++n) {
    const Matrix& U = f.U[static_cast<size_t>(n)];
    r.orthogonality_residual =
        std::max(r.orthogonality_residual, spectral_norm(Matrix(U.transpose() * U - Matrix::Identity(d, d))));
  }
  for (int n = 0; n <= H; ++n) {
    const Matrix Bn = f.B(n);
    const double nb = spectral_norm(Bn);
    for (int j = 0; j < d; ++j)
      for (int i = j + 1; i < d; ++i) r.below_diagonal = std::max(r.below_diagonal, std::abs(Bn(i, j)) / nb);
    Matrix G = f.U[static_cast<size_t>(n) + 1].transpose() * O->core(n) * f.U[static_cast<size_t>(n)] * g;
    r.gs_residual = std::max(r.gs_residual, spectral_norm(Matrix(Bn - G)) / nb);
  }

  const int step = std::max(1, H / 64);
  for (int n = 0; n <= H; n += step) r.sampled_n.push_back(n);
  if (r.sampled_n.back() != H) r.sampled_n.push_back(H);

  // Phi_B built incrementally in the same scaled arithmetic as Phi_A
  Matrix PhiB = Matrix::Identity(d, d);
  Matrix PhiA = Matrix::Identity(d, d);
  const Matrix L0 = f.U[0].transpose() * f.basis_used.leftCols(f.k);
  size_t next = 0;
  for (int n = 0; n <= H; ++n) {
    if (next < r.sampled_n.size() && r.sampled_n[next] == n) {
      ++next;
      const Matrix rhs = f.U[static_cast<size_t>(n)].transpose() * PhiA * f.U[0];
      const double scale = std::max(1.0, spectral_norm(PhiA));
      r.equivalence_residual = std::max(r.equivalence_residual, spectral_norm(Matrix(PhiB - rhs)) / scale);
      if (f.k < d) {
        const Matrix img = PhiB * L0;
        const double ni = std::max(spectral_norm(img), 1e-300);
        r.invariance_residual =
            std::max(r.invariance_residual, spectral_norm(Matrix(img.bottomRows(d - f.k))) / ni);
      }
    }
    if (n < H) {
      PhiB = f.B(n) * PhiB;
      PhiA = O->core(n) * PhiA * g;
    }
  }
  r.passed = r.equivalence_residual <= 1e-9 && r.invariance_residual <= 1e-9 &&
             r.orthogonality_residual <= 1e-12 && r.below_diagonal <= 1e-10 && r.gs_residual <= 1e-10;
  return r;
}

}  // namespace bohlkit
