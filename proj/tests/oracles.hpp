#pragma once
// Reference computations for the unit tests. Deliberately naive: plain products, Eigen's
// JacobiSVD / FullPivLU, exhaustive window loops.
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "bohlkit/system.hpp"

namespace oracle {

using bohlkit::Matrix;
using bohlkit::MatrixSequence;
using bohlkit::Vector;

inline double norm2(const Matrix& M) { return Eigen::JacobiSVD<Matrix>(M).singularValues()(0); }
inline double smin(const Matrix& M) {
  const Vector s = Eigen::JacobiSVD<Matrix>(M).singularValues();
  return s(s.size() - 1);
}
inline Matrix inv(const Matrix& M) { return M.fullPivLu().inverse(); }

inline Matrix phi(const MatrixSequence& s, int n, int m) {
  const int d = s.dim();
  Matrix P = Matrix::Identity(d, d);
  if (n >= m)
    for (int k = m; k < n; ++k) P = s.at(k) * P;
  else
    for (int k = m - 1; k >= n; --k) P = inv(s.at(k)) * P;
  return P;
}

// ln ||x(n)|| for n = 0..H, renormalising each step
inline std::vector<double> logs(const MatrixSequence& s, const Vector& x0, int H) {
  std::vector<double> L(static_cast<size_t>(H) + 1, 0.0);
  Vector x = x0;
  double acc = std::log(x.norm());
  L[0] = acc;
  x /= x.norm();
  for (int k = 0; k < H; ++k) {
    x = s.at(k) * x;
    acc += std::log(x.norm());
    x /= x.norm();
    L[static_cast<size_t>(k) + 1] = acc;
  }
  return L;
}

// max / min over m > N, n - m > N, n <= H of (L[n] - L[m]) / (n - m)
inline double scan_upper(const std::vector<double>& L, int N, int H) {
  double v = -std::numeric_limits<double>::infinity();
  for (int m = N + 1; m <= H; ++m)
    for (int n = m + N + 1; n <= H; ++n) v = std::max(v, (L[n] - L[m]) / (n - m));
  return v;
}
inline double scan_lower(const std::vector<double>& L, int N, int H) {
  double v = std::numeric_limits<double>::infinity();
  for (int m = N + 1; m <= H; ++m)
    for (int n = m + N + 1; n <= H; ++n) v = std::min(v, (L[n] - L[m]) / (n - m));
  return v;
}

// same windows, ln ||Phi(n, m)|| (or ln of its minimal singular value) from rescaled products
inline double space_scan(const MatrixSequence& s, int N, int H, bool upper) {
  double v = upper ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
  const int d = s.dim();
  for (int m = N + 1; m <= H; ++m) {
    Matrix P = Matrix::Identity(d, d);
    double scale = 0.0;
    for (int n = m + 1; n <= H; ++n) {
      P = s.at(n - 1) * P;
      const double a = P.cwiseAbs().maxCoeff();
      P /= a;
      scale += std::log(a);
      if (n - m <= N) continue;
      const double r = (scale + std::log(upper ? norm2(P) : smin(P))) / (n - m);
      v = upper ? std::max(v, r) : std::min(v, r);
    }
  }
  return v;
}

}  // namespace oracle
