#include "bohlkit/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "bohlkit/errors.hpp"

namespace bohlkit {

namespace {
// Closed-form largest singular value of a 2x2 matrix.
double norm2x2(double a, double b, double c, double d) {
  const double e = 0.5 * (a + d), f = 0.5 * (a - d);
  const double g = 0.5 * (c + b), h = 0.5 * (c - b);
  return std::hypot(e, h) + std::hypot(f, g);
}
}  // namespace

double spectral_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  if (M.rows() == 1 && M.cols() == 1) return std::abs(M(0, 0));
  if (M.rows() == 2 && M.cols() == 2) return norm2x2(M(0, 0), M(0, 1), M(1, 0), M(1, 1));
  if (M.cols() == 1) return M.col(0).norm();
  Eigen::JacobiSVD<Matrix> svd(M);
  return svd.singularValues()(0);
}

double spectral_norm(const Vector& v) { return v.norm(); }

double min_singular_value(const Matrix& M) {
  if (M.rows() == 1 && M.cols() == 1) return std::abs(M(0, 0));
  Eigen::JacobiSVD<Matrix> svd(M);
  const auto& s = svd.singularValues();
  return s(s.size() - 1);
}

double reciprocal_condition(const Matrix& M) {
  if (M.rows() == 1 && M.cols() == 1) return M(0, 0) != 0.0 && std::isfinite(M(0, 0)) ? 1.0 : 0.0;
  Eigen::JacobiSVD<Matrix> svd(M);
  const auto& s = svd.singularValues();
  if (!(s(0) > 0.0) || !std::isfinite(s(0))) return 0.0;
  return s(s.size() - 1) / s(0);
}

bool is_invertible(const Matrix& M) { return reciprocal_condition(M) >= kConditionFloor; }

Matrix inverse(const Matrix& M) { return M.inverse(); }

Matrix orthogonal_complement(const Matrix& B) {
  const int d = static_cast<int>(B.rows());
  const int k = static_cast<int>(B.cols());
  if (k >= d) return Matrix(d, 0);
  if (k == 0) return Matrix::Identity(d, d);
  Eigen::JacobiSVD<Matrix> svd(B, Eigen::ComputeFullU);
  Matrix C = svd.matrixU().rightCols(d - k);
  for (int j = 0; j < C.cols(); ++j) {
    for (int i = 0; i < d; ++i) {
      if (std::abs(C(i, j)) > 1e-14) {
        if (C(i, j) < 0) C.col(j) = -C.col(j);
        break;
      }
    }
  }
  return C;
}

void mgs_qr(const Matrix& M, Matrix& Q, Matrix& R) {
  const int d = static_cast<int>(M.rows());
  const int k = static_cast<int>(M.cols());
  Q.resize(d, k);
  R = Matrix::Zero(k, k);
  for (int j = 0; j < k; ++j) {
    Vector v = M.col(j);
    const double scale = v.norm();
    for (int i = 0; i < j; ++i) {
      const double r = Q.col(i).dot(v);
      R(i, j) += r;
      v -= r * Q.col(i);
    }
    // second pass; always run, it is cheap at these sizes
    for (int i = 0; i < j; ++i) {
      const double r = Q.col(i).dot(v);
      R(i, j) += r;
      v -= r * Q.col(i);
    }
    const double nv = v.norm();
    if (!(nv > 1e-14 * scale) || !std::isfinite(nv)) throw err::degenerate_basis("column " + std::to_string(j));
    R(j, j) = nv;
    Q.col(j) = v / nv;
  }
}

ScaledProduct ordered_product(const std::vector<Matrix>& factors, int dim) {
  ScaledProduct out;
  out.unit = Matrix::Identity(dim, dim);
  for (const auto& F : factors) {
    out.unit = F * out.unit;
    const double s = spectral_norm(out.unit);
    out.log_norm += std::log(s);
    out.unit /= s;
  }
  return out;
}

double Rng::uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
double Rng::uniform(double a, double b) { return a + (b - a) * uniform(); }

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Vector Rng::unit_vector(int d) {
  for (;;) {
    Vector v(d);
    for (int i = 0; i < d; ++i) v(i) = normal();
    const double n = v.norm();
    if (n > 1e-8) return v / n;
  }
}

Matrix Rng::gaussian(int r, int c) {
  Matrix M(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) M(i, j) = normal();
  return M;
}

double vector_angle(const Vector& x, const Vector& y) {
  const double c = x.dot(y) / (x.norm() * y.norm());
  return std::acos(std::clamp(c, -1.0, 1.0));
}

}  // namespace bohlkit
