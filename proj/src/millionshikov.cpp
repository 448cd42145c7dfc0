#include "bohlkit/millionshikov.hpp"

#include <cmath>

#include "bohlkit/errors.hpp"

namespace bohlkit {

namespace {

void check_eps(double eps) {
  if (!(eps > 0.0 && eps < M_PI / 2)) throw err::invalid("eps must lie in (0, pi/2)");
}

void require_nonzero(const Vector& x) {
  const double n = x.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw err::zero_vector();
}

struct Kernel {
  Matrix R;
  bool trivial = false;
};

// F is applied after B0; x = B0 v must be steered into a fast direction of F.
Kernel forward_kernel(const Matrix& B0, const Matrix& F, const Vector& v, double eps) {
  const Vector x = B0 * v;
  Kernel k;
  if (classify_vector(F, x, eps).speed == Speed::Fast) {
    k.R = Matrix::Zero(B0.rows(), B0.cols());
    k.trivial = true;
    return k;
  }
  const Vector target = fast_in_cone(F, x, eps) * x.norm();
  const Matrix V = rotation_between(x, target);
  k.R = (V - Matrix::Identity(B0.rows(), B0.cols())) * B0;
  return k;
}

// G = Phi(k, m) acts on x = B0^{-1} v; R = B0 (V - I) with V xbar = x.
Kernel backward_kernel(const Matrix& B0, const Matrix& G, const Vector& v, double eps) {
  const Vector x = inverse(B0) * v;
  Kernel k;
  if (classify_vector(G, x, eps).speed == Speed::Fast) {
    k.R = Matrix::Zero(B0.rows(), B0.cols());
    k.trivial = true;
    return k;
  }
  const Vector xbar = fast_in_cone(G, x, eps) * x.norm();
  const Matrix V = rotation_between(xbar, x);
  k.R = B0 * (V - Matrix::Identity(B0.rows(), B0.cols()));
  return k;
}

Matrix forward_factor(const std::vector<Matrix>& slice) {
  const int d = static_cast<int>(slice[0].rows());
  std::vector<Matrix> f(slice.begin() + 1, slice.end());
  return ordered_product(f, d).unit;
}

Matrix backward_factor(const std::vector<Matrix>& slice) {
  const int d = static_cast<int>(slice[0].rows());
  std::vector<Matrix> f;
  for (size_t i = slice.size() - 1; i-- > 0;) f.push_back(inverse(slice[i]));
  return ordered_product(f, d).unit;
}

void fill_common(RotationCertificate& c, const Matrix& B0, const Matrix& Bp, const Matrix& R, double eps) {
  c.eps = eps;
  c.q_norm = spectral_norm(R);
  c.q_bound = eps * spectral_norm(B0);
  c.cond_base = 1.0 / reciprocal_condition(B0);
  c.cond_perturbed = 1.0 / reciprocal_condition(Bp);
  c.growth_bound = std::sin(eps) / 2.0;
}

void finish(RotationCertificate& c) {
  c.growth_slack = c.growth_ratio / c.growth_bound - 1.0;
  c.passed = c.growth_slack >= -1e-9 && c.q_norm <= c.q_bound * (1.0 + 1e-12) && c.norm_residual <= 1e-12 &&
             std::abs(c.cond_perturbed - c.cond_base) <= 1e-12 * c.cond_base;
}

void check_slice(const std::vector<Matrix>& slice, const Vector& v) {
  if (slice.empty()) throw err::invalid("empty slice");
  for (size_t i = 0; i < slice.size(); ++i) {
    if (slice[i].rows() != v.size() || slice[i].cols() != v.size()) throw err::dimension_mismatch("slice");
    if (!is_invertible(slice[i])) throw err::non_invertible(static_cast<long>(i));
  }
  require_nonzero(v);
}

Vector propagate_unit(const TransitionOracle& O, const Vector& x0, int n) {
  Vector v = x0 / x0.norm();
  for (int i = 0; i < n; ++i) {
    v = O.core(i) * v;
    v /= v.norm();
  }
  return v;
}

}  // namespace

bool Cone::contains(const Vector& y) const {
  if (y.norm() == 0.0) return true;
  return vector_angle(axis, y) <= angle;
}

SpeedClass classify_vector(const Matrix& F, const Vector& x, double eps) {
  require_nonzero(x);
  SpeedClass s;
  s.image_norm = (F * x).norm();
  s.threshold = std::sin(eps) / 2.0 * spectral_norm(F) * x.norm();
  s.speed = s.image_norm < s.threshold ? Speed::Slow : Speed::Fast;
  return s;
}

Vector maximal_vector(const Matrix& F) {
  Eigen::JacobiSVD<Matrix> svd(F, Eigen::ComputeFullV);
  Vector z = svd.matrixV().col(0);
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (std::abs(z(i)) > 1e-14) {
      if (z(i) < 0) z = -z;
      break;
    }
  }
  return z / z.norm();
}

FastInCone fast_in_cone_detail(const Matrix& F, const Vector& x, double eps) {
  require_nonzero(x);
  check_eps(eps);
  if (classify_vector(F, x, eps).speed != Speed::Slow) throw err::not_slow();
  FastInCone r;
  Vector z = maximal_vector(F);
  const Vector xh = x / x.norm();
  if (vector_angle(xh, z) > M_PI / 2) z = -z;
  r.gamma = vector_angle(xh, z);
  if (r.gamma <= eps) {
    r.v = z;
    r.maximal_in_cone = true;
    r.alpha = 0.0;
    r.beta = 1.0;
    return r;
  }
  r.alpha = std::sin(r.gamma - eps) / std::sin(r.gamma);
  r.beta = std::sin(eps) / std::sin(r.gamma);
  Vector v = r.alpha * xh + r.beta * z;
  r.v = v / v.norm();
  return r;
}

Vector fast_in_cone(const Matrix& F, const Vector& x, double eps) { return fast_in_cone_detail(F, x, eps).v; }

Matrix rotation_between(const Vector& x, const Vector& y) {
  require_nonzero(x);
  require_nonzero(y);
  if (x.size() != y.size()) throw err::dimension_mismatch("rotation vectors");
  const int d = static_cast<int>(x.size());
  const Vector u = x / x.norm();
  const Vector yh = y / y.norm();
  const double theta = vector_angle(u, yh);
  if (theta > M_PI - 1e-8) throw err::antipodal_pair();
  Vector w = yh - u.dot(yh) * u;
  const double nw = w.norm();
  if (nw <= 1e-15) return Matrix::Identity(d, d);
  w /= nw;
  return Matrix::Identity(d, d) + (std::cos(theta) - 1.0) * (u * u.transpose() + w * w.transpose()) +
         std::sin(theta) * (w * u.transpose() - u * w.transpose());
}

Matrix algebraic_forward(const std::vector<Matrix>& slice, const Vector& v, double eps) {
  check_slice(slice, v);
  check_eps(eps);
  return forward_kernel(slice[0], forward_factor(slice), v, eps).R;
}

Matrix algebraic_backward(const std::vector<Matrix>& slice, const Vector& v, double eps) {
  check_slice(slice, v);
  check_eps(eps);
  return backward_kernel(slice.back(), backward_factor(slice), v, eps).R;
}

RotationCertificate certify_algebraic_forward(const std::vector<Matrix>& slice, const Vector& v, double eps,
                                              const Matrix& R) {
  check_slice(slice, v);
  const Matrix& B0 = slice[0];
  const Matrix Bp = B0 + R;
  const Matrix F = forward_factor(slice);
  RotationCertificate c;
  fill_common(c, B0, Bp, R, eps);
  const Vector x = B0 * v;
  const Vector z = Bp * v;
  c.trivial = R.isZero(0.0);
  c.growth_ratio = (F * z).norm() / (spectral_norm(F) * z.norm());
  c.norm_residual = std::abs(z.norm() - x.norm()) / x.norm();
  finish(c);
  return c;
}

RotationCertificate certify_algebraic_backward(const std::vector<Matrix>& slice, const Vector& v, double eps,
                                               const Matrix& R) {
  check_slice(slice, v);
  const Matrix& B0 = slice.back();
  const Matrix Bp = B0 + R;
  const Matrix G = backward_factor(slice);
  RotationCertificate c;
  fill_common(c, B0, Bp, R, eps);
  const Vector x = inverse(B0) * v;
  const Vector z = inverse(Bp) * v;
  c.trivial = R.isZero(0.0);
  c.growth_ratio = (G * z).norm() / (spectral_norm(G) * z.norm());
  c.norm_residual = std::abs(z.norm() - x.norm()) / x.norm();
  finish(c);
  return c;
}

RotationResult forward_rotation_perturbation(const MatrixSequence& sys, int k, int m, const Vector& x0, double eps) {
  if (m <= k) throw err::window_degenerate(k, m);
  if (k < 1) throw err::invalid("forward rotation needs k >= 1");
  if (m > sys.horizon()) throw err::horizon_exceeded(m);
  if (x0.size() != sys.dim()) throw err::dimension_mismatch("initial vector");
  require_nonzero(x0);
  check_eps(eps);
  auto O = sys.oracle();
  std::vector<Matrix> slice;
  for (int i = k - 1; i < m; ++i) slice.push_back(O->coefficient(i));
  const Vector v = propagate_unit(*O, x0, k - 1);
  RotationResult r;
  r.plan = PerturbationPlan(sys.dim());
  const Kernel ker = forward_kernel(slice[0], forward_factor(slice), v, eps);
  if (!ker.trivial) r.plan.set(k - 1, ker.R);
  r.certificate = certify_algebraic_forward(slice, v, eps, ker.R);
  r.certificate.index = k - 1;
  r.certificate.trivial = ker.trivial;
  r.kernel_vector = v;
  r.pinned_initial = x0 / x0.norm();
  return r;
}

RotationResult backward_rotation_perturbation(const MatrixSequence& sys, int k, int m, const Vector& x0, double eps) {
  if (m <= k) throw err::window_degenerate(k, m);
  if (k < 0) throw err::invalid("backward rotation needs k >= 0");
  if (m >= sys.horizon()) throw err::horizon_exceeded(m + 1);
  if (x0.size() != sys.dim()) throw err::dimension_mismatch("initial vector");
  require_nonzero(x0);
  check_eps(eps);
  auto O = sys.oracle();
  std::vector<Matrix> slice;
  for (int i = k; i <= m; ++i) slice.push_back(O->coefficient(i));
  const Vector v = propagate_unit(*O, x0, m + 1);
  RotationResult r;
  r.plan = PerturbationPlan(sys.dim());
  const Kernel ker = backward_kernel(slice.back(), backward_factor(slice), v, eps);
  if (!ker.trivial) r.plan.set(m, ker.R);
  r.certificate = certify_algebraic_backward(slice, v, eps, ker.R);
  r.certificate.index = m;
  r.certificate.trivial = ker.trivial;
  r.kernel_vector = v;
  // pinned solution at m is (A(m)+Q(m))^{-1} v; below m the coefficients are unchanged
  Vector z = inverse(Matrix(slice.back() + ker.R)) * v;
  z /= z.norm();
  for (int i = m - 1; i >= 0; --i) {
    z = O->core_inv(i) * z;
    z /= z.norm();
  }
  r.pinned_initial = z;
  return r;
}

}  // namespace bohlkit
