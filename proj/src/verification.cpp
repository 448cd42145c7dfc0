#include "bohlkit/verification.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <limits>
#include <sstream>
#include <unistd.h>

#include "bohlkit/dichotomy.hpp"
#include "bohlkit/io.hpp"
#include "bohlkit/millionshikov.hpp"
#include "bohlkit/nu_instance.hpp"
#include "bohlkit/perturbations.hpp"
#include "bohlkit/scenario.hpp"
#include "bohlkit/spectrum.hpp"
#include "bohlkit/triangular.hpp"

namespace bohlkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---- independent oracles: plain loops, Eigen decompositions the library does not use ----

double norm2(const Matrix& M) { return Eigen::JacobiSVD<Matrix>(M).singularValues()(0); }

double cond2(const Matrix& M) {
  const Vector s = Eigen::JacobiSVD<Matrix>(M).singularValues();
  return s(0) / s(s.size() - 1);
}

Matrix inv(const Matrix& M) { return M.fullPivLu().inverse(); }

// Phi(n, m) by direct multiplication, inverse factors for n < m.
Matrix naive_phi(const MatrixSequence& s, int n, int m) {
  const int d = s.dim();
  Matrix P = Matrix::Identity(d, d);
  if (n >= m)
    for (int k = m; k < n; ++k) P = s.at(k) * P;
  else
    for (int k = m - 1; k >= n; --k) P = inv(s.at(k)) * P;
  return P;
}

// log ||Phi(n, m)|| with rescaling after every factor, so long windows do not overflow
double naive_log_norm_phi(const MatrixSequence& s, int n, int m) {
  const int d = s.dim();
  Matrix P = Matrix::Identity(d, d);
  double scale = 0.0;
  const int step = n >= m ? 1 : -1;
  for (int k = n >= m ? m : m - 1; n >= m ? k < n : k >= n; k += step) {
    P = (n >= m ? s.at(k) : inv(s.at(k))) * P;
    const double a = P.cwiseAbs().maxCoeff();
    P /= a;
    scale += std::log(a);
  }
  return scale + std::log(norm2(P));
}

std::vector<double> naive_logs(const MatrixSequence& s, const Vector& x0, int H) {
  std::vector<double> L(static_cast<size_t>(H) + 1, 0.0);
  Vector x = x0 / x0.norm();
  double acc = 0.0;
  for (int k = 0; k < H; ++k) {
    x = s.at(k) * x;
    const double nx = x.norm();
    acc += std::log(nx);
    x /= nx;
    L[static_cast<size_t>(k) + 1] = acc;
  }
  return L;
}

// Window extrema per threshold N: m > N and n - m > N.
struct OracleValues {
  std::vector<double> upper, lower;
};
OracleValues oracle_scan(const std::vector<double>& L, const std::vector<int>& Ns, int H) {
  OracleValues o;
  for (int N : Ns) {
    double up = -kInf, lo = kInf;
    for (int m = N + 1; m <= H; ++m)
      for (int n = m + N + 1; n <= H; ++n) {
        const double r = (L[static_cast<size_t>(n)] - L[static_cast<size_t>(m)]) / (n - m);
        up = std::max(up, r);
        lo = std::min(lo, r);
      }
    o.upper.push_back(up);
    o.lower.push_back(lo);
  }
  return o;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

struct Tally {
  bool ok = true;
  std::ostringstream msg;
  int checks = 0;
  void expect(bool cond, const std::string& what) {
    ++checks;
    if (!cond && ok) {
      ok = false;
      msg << "first failure: " << what << "; ";
    }
  }
};

std::string fmt(double x) {
  char b[64];
  std::snprintf(b, sizeof b, "%.3g", x);
  return b;
}

// ---------------------------------------------------------------------------------------------

CriterionResult c1_cocycle() {
  Tally t;
  double worst = 0.0;
  Rng pick(101);
  for (int i = 0; i < 50; ++i) {
    const int d = 1 + i % 4;
    const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(i);
    const MatrixSequence s = random_lyapunov(d, 256, seed, 0.6);
    const MatrixSequence again = random_lyapunov(d, 256, seed, 0.6);
    for (int r = 0; r < 6; ++r) {
      int a = static_cast<int>(pick.next() % 257), b = static_cast<int>(pick.next() % 257),
          c = static_cast<int>(pick.next() % 257);
      const Matrix Pab = transition(s, a, b), Pbc = transition(s, b, c), Pac = transition(s, a, c);
      const double scale = norm2(Pab) * norm2(Pbc);
      const double e1 = (Pab * Pbc - Pac).norm() / scale;
      const double e2 = (Pab * transition(s, b, a) - Matrix::Identity(d, d)).norm() /
                        (norm2(Pab) * norm2(transition(s, b, a)));
      const Matrix N = naive_phi(s, a, c);
      const double e3 = (Pac - N).norm() / norm2(N);
      worst = std::max({worst, e1, e2, e3});
      t.expect(e1 <= 1e-9, "cocycle residual " + fmt(e1));
      t.expect(e2 <= 1e-9, "inverse residual " + fmt(e2));
      t.expect(e3 <= 1e-9, "transition vs direct product " + fmt(e3));
      t.expect(io::bit_equal(Pac, transition(again, a, c)), "determinism");
    }
  }
  t.msg << t.checks << " checks, worst relative residual " << fmt(worst);
  return {1, "cocycle suite", t.ok, t.msg.str()};
}

CriterionResult c2_bohl() {
  Tally t;
  const WindowSpec w = WindowSpec::for_horizon(256);
  // exact shift representation: core identity, rate c
  double literal_dev = 0.0;
  for (double c : {-1.3, -0.5, 0.0, 0.25, 1.7}) {
    const MatrixSequence s = MatrixSequence::scaled(MatrixSequence::constant(Matrix::Identity(1, 1), 256), c);
    const BohlPair v = bohl_vector(s, Vector::Ones(1), w);
    const BohlPair sp = bohl_space(s, w);
    for (const BohlEstimate* e : {&v.upper, &v.lower, &sp.upper, &sp.lower})
      for (const auto& [N, val] : e->values) t.expect(val == c, "scalar value(N) == c at N=" + std::to_string(N));
    Matrix M(1, 1);
    M(0, 0) = std::exp(c);
    const BohlPair lit = bohl_vector(MatrixSequence::constant(M, 256), Vector::Ones(1), w);
    for (const auto& [N, val] : lit.upper.values) literal_dev = std::max(literal_dev, std::abs(val - c));
  }
  // a literal e^c entry carries exp/log rounding plus cumulative-sum error; exactness is only claimed above
  t.expect(literal_dev <= 1e-13, "literal e^c deviation " + fmt(literal_dev));

  double shift_dev = 0.0, oracle_dev = 0.0;
  for (int i = 0; i < 50; ++i) {
    const int d = 1 + i % 4;
    const MatrixSequence s = random_lyapunov(d, 256, 2000 + static_cast<std::uint64_t>(i), 0.8);
    Rng rng(3000 + static_cast<std::uint64_t>(i));
    const Vector x0 = rng.unit_vector(d);
    const BohlPair v = bohl_vector(s, x0, w);
    const BohlPair sp = bohl_space(s, w);
    auto mono = [&](const BohlEstimate& e, bool upper) {
      double prev = upper ? kInf : -kInf;
      for (const auto& [N, val] : e.values) {
        t.expect(upper ? val <= prev : val >= prev, "monotone in N");
        prev = val;
      }
    };
    mono(v.upper, true);
    mono(v.lower, false);
    mono(sp.upper, true);
    mono(sp.lower, false);
    for (const auto& [N, val] : sp.upper.values) t.expect(val >= v.upper.values.at(N) - 1e-12, "space upper >= vector upper");
    for (const auto& [N, val] : sp.lower.values) t.expect(val <= v.lower.values.at(N) + 1e-12, "space lower <= vector lower");
    const double r = 0.37 - 0.1 * (i % 7);
    const BohlPair vs = bohl_vector(MatrixSequence::scaled(s, r), x0, w);
    for (const auto& [N, val] : vs.upper.values) shift_dev = std::max(shift_dev, std::abs(val - (v.upper.values.at(N) + r)));
    for (const auto& [N, val] : vs.lower.values) shift_dev = std::max(shift_dev, std::abs(val - (v.lower.values.at(N) + r)));
    if (i < 10) {
      const OracleValues o = oracle_scan(naive_logs(s, x0, 256), w.N_list, 256);
      size_t k = 0;
      for (const auto& [N, val] : v.upper.values) oracle_dev = std::max(oracle_dev, std::abs(val - o.upper[k++]));
      k = 0;
      for (const auto& [N, val] : v.lower.values) oracle_dev = std::max(oracle_dev, std::abs(val - o.lower[k++]));
    }
  }
  t.expect(shift_dev <= 1e-12, "scaling shift " + fmt(shift_dev));
  t.expect(oracle_dev <= 1e-12, "window scan vs direct scan " + fmt(oracle_dev));
  t.msg << t.checks << " checks, literal e^c dev " << fmt(literal_dev) << ", shift dev " << fmt(shift_dev)
        << ", scan dev " << fmt(oracle_dev);
  return {2, "Bohl estimator suite", t.ok, t.msg.str()};
}

CriterionResult c3_rotation() {
  Tally t;
  int nontrivial = 0, slow_count = 0;
  double worst_slack = kInf, worst_norm = 0.0, worst_cond = 0.0;
  for (int dir = 0; dir < 2; ++dir) {
    for (int i = 0; i < 100; ++i) {
      const int d = 2 + i % 2;
      const int H = 64;
      const std::uint64_t seed = 4000 + static_cast<std::uint64_t>(dir * 1000 + i);
      const MatrixSequence s = random_lyapunov(d, H, seed, 0.7);
      Rng rng(seed + 17);
      double eps = rng.uniform(0.05, 0.6);
      const bool force_slow = i % 2 == 0;
      if (dir == 0) {
        const int k = 1 + static_cast<int>(rng.next() % 16);
        const int m = k + 2 + static_cast<int>(rng.next() % 24);
        const Matrix F = naive_phi(s, m, k);
        Vector x0 = rng.unit_vector(d);
        if (force_slow) {
          Eigen::JacobiSVD<Matrix> svd(F, Eigen::ComputeFullV);
          const Vector xk = svd.matrixV().col(d - 1);
          x0 = naive_phi(s, 0, k) * xk;
          eps = std::max(eps, std::asin(std::min(0.95, 3.0 / cond2(F))));
        }
        const Vector xk = naive_phi(s, k, 0) * x0;
        const bool slow = (F * xk).norm() < std::sin(eps) / 2.0 * norm2(F) * xk.norm();
        slow_count += slow;
        const RotationResult r = forward_rotation_perturbation(s, k, m, x0, eps);
        const Matrix A = s.at(k - 1);
        const Matrix* Qp = r.plan.find(k - 1);
        const Matrix Q = Qp ? *Qp : Matrix::Zero(d, d);
        if (Qp) ++nontrivial;
        t.expect((Qp != nullptr) == slow, "rotation applied exactly when the solution is slow");
        const Vector xkm1 = naive_phi(s, k - 1, 0) * x0;
        const Vector x = A * xkm1, z = (A + Q) * xkm1;
        const double ratio = (F * z).norm() / (norm2(F) * z.norm());
        const double slack = ratio / (std::sin(eps) / 2.0) - 1.0;
        worst_slack = std::min(worst_slack, slack);
        t.expect(slack >= -1e-9, "forward growth slack " + fmt(slack));
        t.expect(norm2(Q) <= eps * norm2(A) * (1 + 1e-12), "forward norm bound");
        const double nr = std::abs(z.norm() - x.norm()) / x.norm();
        worst_norm = std::max(worst_norm, nr);
        t.expect(nr <= 1e-12, "forward norm preservation " + fmt(nr));
        const double cr = std::abs(cond2(A + Q) - cond2(A)) / cond2(A);
        worst_cond = std::max(worst_cond, cr);
        t.expect(cr <= 1e-12, "forward condition number " + fmt(cr));
        std::vector<Matrix> slice;
        for (int j = k - 1; j < m; ++j) slice.push_back(s.at(j));
        t.expect(io::bit_equal(algebraic_forward(slice, r.kernel_vector, eps), Q), "forward algebraic == dynamic");
      } else {
        const int k = static_cast<int>(rng.next() % 16);
        const int m = k + 2 + static_cast<int>(rng.next() % 24);
        const Matrix G = naive_phi(s, k, m);
        Vector x0 = rng.unit_vector(d);
        if (force_slow) {
          Eigen::JacobiSVD<Matrix> svd(G, Eigen::ComputeFullV);
          const Vector xm = svd.matrixV().col(d - 1);
          x0 = naive_phi(s, 0, m) * xm;
          eps = std::max(eps, std::asin(std::min(0.95, 3.0 / cond2(G))));
        }
        const Vector xm = naive_phi(s, m, 0) * x0;
        const bool slow = (G * xm).norm() < std::sin(eps) / 2.0 * norm2(G) * xm.norm();
        slow_count += slow;
        const RotationResult r = backward_rotation_perturbation(s, k, m, x0, eps);
        const Matrix A = s.at(m);
        const Matrix* Qp = r.plan.find(m);
        const Matrix Q = Qp ? *Qp : Matrix::Zero(d, d);
        if (Qp) ++nontrivial;
        t.expect((Qp != nullptr) == slow, "rotation applied exactly when the solution is slow");
        const Vector xm1 = naive_phi(s, m + 1, 0) * x0;
        const Vector x = inv(A) * xm1, z = inv(A + Q) * xm1;
        const double ratio = (G * z).norm() / (norm2(G) * z.norm());
        const double slack = ratio / (std::sin(eps) / 2.0) - 1.0;
        worst_slack = std::min(worst_slack, slack);
        t.expect(slack >= -1e-9, "backward growth slack " + fmt(slack));
        t.expect(norm2(Q) <= eps * norm2(A) * (1 + 1e-12), "backward norm bound");
        const double nr = std::abs(z.norm() - x.norm()) / x.norm();
        worst_norm = std::max(worst_norm, nr);
        t.expect(nr <= 1e-12, "backward norm preservation " + fmt(nr));
        const double cr = std::abs(cond2(A + Q) - cond2(A)) / cond2(A);
        worst_cond = std::max(worst_cond, cr);
        t.expect(cr <= 1e-12, "backward condition number " + fmt(cr));
        std::vector<Matrix> slice;
        for (int j = k; j <= m; ++j) slice.push_back(s.at(j));
        t.expect(io::bit_equal(algebraic_backward(slice, r.kernel_vector, eps), Q), "backward algebraic == dynamic");
      }
    }
  }
  t.expect(slow_count >= 100, "at least half the instances start slow");
  t.msg << "200 instances, " << slow_count << " slow, " << nontrivial << " nontrivial, min slack " << fmt(worst_slack) << ", norm residual "
        << fmt(worst_norm) << ", cond residual " << fmt(worst_cond);
  return {3, "rotation-method suite", t.ok, t.msg.str()};
}

CriterionResult c4_fast_in_cone() {
  Tally t;
  int done = 0, attempts = 0, gamma_branch = 0;
  double worst_angle = -kInf, worst_beta = 0.0;
  Rng rng(5150);
  while (done < 200 && attempts < 5000) {
    ++attempts;
    const int d = 2 + attempts % 2;
    Matrix U, V, R;
    mgs_qr(rng.gaussian(d, d), U, R);
    mgs_qr(rng.gaussian(d, d), V, R);
    Vector sv(d);
    sv(0) = 1.0;
    for (int i = 1; i < d; ++i) sv(i) = rng.uniform(0.005, 0.3);
    std::sort(sv.data(), sv.data() + d, std::greater<double>());
    const Matrix F = U * sv.asDiagonal() * V.transpose();
    const Vector x = V.col(d - 1) + rng.uniform(0.0, 0.3) * rng.unit_vector(d);
    const double eps = rng.uniform(0.05, 0.8);
    if (!((F * x).norm() < std::sin(eps) / 2.0 * norm2(F) * x.norm())) continue;
    ++done;
    const FastInCone r = fast_in_cone_detail(F, x, eps);
    const double ang = std::acos(std::clamp(r.v.dot(x) / (r.v.norm() * x.norm()), -1.0, 1.0));
    worst_angle = std::max(worst_angle, ang - eps);
    t.expect(ang <= eps + 1e-12, "cone membership");
    t.expect((F * r.v).norm() >= std::sin(eps) / 2.0 * norm2(F) * r.v.norm() * (1 - 1e-12), "eps-fast");
    Eigen::SelfAdjointEigenSolver<Matrix> es(F.transpose() * F);
    Vector z = es.eigenvectors().col(d - 1);
    const Vector xh = x / x.norm();
    if (z.dot(xh) < 0) z = -z;
    const double gamma = std::acos(std::clamp(z.dot(xh), -1.0, 1.0));
    t.expect(r.maximal_in_cone == (gamma <= eps), "branch choice");
    if (gamma > eps) {
      ++gamma_branch;
      const double db = std::abs(r.beta - std::sin(eps) / std::sin(gamma));
      const double da = std::abs(r.alpha - std::sin(gamma - eps) / std::sin(gamma));
      const Vector wv = r.alpha * xh + r.beta * z;
      worst_beta = std::max({worst_beta, db, da});
      t.expect(db <= 1e-12, "beta = sin eps / sin gamma");
      t.expect(da <= 1e-12, "alpha = sin(gamma - eps) / sin gamma");
      t.expect(std::abs(wv.norm() - 1.0) <= 1e-12, "unit combination");
      t.expect(std::abs(std::acos(std::clamp(wv.dot(xh), -1.0, 1.0)) - eps) <= 1e-7, "combination on the cone boundary");
    }
  }
  t.expect(done == 200, "200 slow instances generated");
  t.msg << done << " slow instances (" << attempts << " draws), " << gamma_branch
        << " on the gamma > eps branch, max angle excess " << fmt(worst_angle) << ", coefficient dev " << fmt(worst_beta);
  return {4, "fast_in_cone suite", t.ok, t.msg.str()};
}

CriterionResult c5_triangular() {
  Tally t;
  double w_orth = 0.0, w_below = 0.0, w_gs = 0.0, w_eq = 0.0, w_exp = 0.0;
  const WindowSpec w = WindowSpec::for_horizon(256);
  for (int i = 0; i < 20; ++i) {
    const int d = 2 + i % 3;
    const std::uint64_t seed = 6000 + static_cast<std::uint64_t>(i);
    const MatrixSequence s = random_lyapunov(d, 256, seed, 0.5);
    Rng rng(seed + 5);
    const int k = 1 + static_cast<int>(rng.next() % static_cast<std::uint64_t>(d));
    const Matrix L = rng.gaussian(d, k);
    const TriangularForm f = triangularize(s, L, 256);
    Matrix PA = Matrix::Identity(d, d), PB = Matrix::Identity(d, d);
    for (int n = 0; n <= 256; ++n) {
      const Matrix& U = f.U[static_cast<size_t>(n)];
      w_orth = std::max(w_orth, (U.transpose() * U - Matrix::Identity(d, d)).norm());
      const Matrix B = f.B(n);
      const double nb = norm2(B);
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < r; ++c) w_below = std::max(w_below, std::abs(B(r, c)) / nb);
      const Matrix A = s.at(n);
      w_gs = std::max(w_gs, (B - f.U[static_cast<size_t>(n) + 1].transpose() * A * U).norm() / norm2(A));
      if (n % 8 == 0) {
        const Matrix rhs = U.transpose() * PA * f.U[0];
        w_eq = std::max(w_eq, (PB - rhs).norm() / norm2(PA));
      }
      PA = A * PA;
      PB = B * PB;
    }
    // three equal norm sequences: L-subsystem, B with embedded start, A with lifted start
    const Vector y01 = rng.unit_vector(k);
    Vector y0 = Vector::Zero(d);
    y0.head(k) = y01;
    std::vector<Matrix> sub, full;
    for (int n = 0; n <= 256; ++n) {
      full.push_back(f.B(n));
      sub.push_back(f.B(n).topLeftCorner(k, k));
    }
    const MatrixSequence Ssub = MatrixSequence::explicit_sequence(sub, std::nullopt, 256);
    const MatrixSequence Sfull = MatrixSequence::explicit_sequence(full, std::nullopt, 256);
    const OracleValues o1 = oracle_scan(naive_logs(Ssub, y01, 256), w.N_list, 256);
    const OracleValues o2 = oracle_scan(naive_logs(Sfull, y0, 256), w.N_list, 256);
    const OracleValues o3 = oracle_scan(naive_logs(s, f.U[0] * y0, 256), w.N_list, 256);
    const BohlPair lib = bohl_vector(subsystem(f), y01, w);
    size_t j = 0;
    for (const auto& [N, val] : lib.upper.values) {
      w_exp = std::max({w_exp, std::abs(o1.upper[j] - o3.upper[j]), std::abs(o2.upper[j] - o3.upper[j]),
                        std::abs(val - o3.upper[j])});
      ++j;
    }
    j = 0;
    for (const auto& [N, val] : lib.lower.values) {
      w_exp = std::max({w_exp, std::abs(o1.lower[j] - o3.lower[j]), std::abs(o2.lower[j] - o3.lower[j]),
                        std::abs(val - o3.lower[j])});
      ++j;
    }
  }
  t.expect(w_orth <= 1e-12, "orthogonality " + fmt(w_orth));
  t.expect(w_below <= 1e-10, "below diagonal " + fmt(w_below));
  t.expect(w_gs <= 1e-10, "B = U^T A U residual " + fmt(w_gs));
  t.expect(w_eq <= 1e-9, "equivalence " + fmt(w_eq));
  t.expect(w_exp <= 1e-9, "exponent preservation " + fmt(w_exp));

  // invariance over 500 steps
  double w_inv = 0.0, w_step = 0.0;
  {
    const MatrixSequence s = random_lyapunov(3, 500, 6100, 0.5);
    Rng rng(6101);
    const int k = 2;
    const TriangularForm f = triangularize(s, rng.gaussian(3, k), 500);
    Vector y = Vector::Zero(3);
    y.head(k) = rng.unit_vector(k);
    for (int n = 0; n < 500; ++n) {
      y = f.B(n) * y;
      y /= y.norm();
      w_inv = std::max(w_inv, y.tail(3 - k).norm());
      const Matrix step = f.U[static_cast<size_t>(n) + 1].transpose() * s.at(n) * f.U[static_cast<size_t>(n)].leftCols(k);
      w_step = std::max(w_step, step.bottomRows(3 - k).norm() / norm2(s.at(n)));
    }
  }
  t.expect(w_inv <= 1e-12, "trailing components " + fmt(w_inv));
  t.expect(w_step <= 1e-12, "one-step invariance " + fmt(w_step));

  // [[1,1],[0,1]] with L = span{(0,1)}
  double w_ex = 0.0;
  {
    Matrix A(2, 2);
    A << 1, 1, 0, 1;
    const MatrixSequence s = MatrixSequence::constant(A, 256);
    const TriangularForm f = triangularize(s, std::vector<Vector>{Vector::Unit(2, 1)}, 256);
    w_ex = std::abs(f.B(0)(0, 0) - std::sqrt(2.0));
    for (int n = 0; n <= 256; ++n) {
      const double nn = n;
      const double expect = std::sqrt((nn + 1) * (nn + 1) + 1) / std::sqrt(nn * nn + 1);
      w_ex = std::max(w_ex, std::abs(f.B(n)(0, 0) - expect));
      Vector u(2);
      u << nn, 1.0;
      u /= u.norm();
      w_ex = std::max(w_ex, (f.U[static_cast<size_t>(n)].col(0) - u).norm());
    }
  }
  t.expect(w_ex <= 1e-12, "[[1,1],[0,1]] example " + fmt(w_ex));
  t.msg << "orth " << fmt(w_orth) << ", below " << fmt(w_below) << ", gs " << fmt(w_gs) << ", equiv " << fmt(w_eq)
        << ", exponents " << fmt(w_exp) << ", invariance " << fmt(std::max(w_inv, w_step)) << ", example "
        << fmt(w_ex);
  return {5, "triangularization suite", t.ok, t.msg.str()};
}

CriterionResult c6_counterexample() {
  Tally t;
  const WindowSpec w = WindowSpec::for_horizon(1024);
  double worst = 0.0;
  for (int k : {1, 2, 4, 8}) {
    const MatrixSequence s = MatrixSequence::constant(std::exp(1.0 / k) * Matrix::Identity(2, 2), 1024);
    Splitting sp;
    sp.basis2 = {Vector::Unit(2, 0), Vector::Unit(2, 1)};
    const EDVerdict ed = check_ed(s, sp, w);
    t.expect(ed.holds, "ED holds for k=" + std::to_string(k));
    worst = std::max(worst, std::abs(ed.alpha - 1.0 / k));
    t.expect(std::abs(ed.alpha - 1.0 / k) <= 1e-3, "alpha near 1/k for k=" + std::to_string(k));
    // oracle: every solution is e^{n/k} x0
    const auto L = naive_logs(s, Vector::Ones(2), 1024);
    t.expect(rel(L[1024], 1024.0 / k) <= 1e-12, "direct growth rate");
  }
  const MatrixSequence I = MatrixSequence::constant(Matrix::Identity(2, 2), 1024);
  const auto wit = find_no_bd_witness(I, default_samples(2, 20240611), w);
  t.expect(wit.has_value(), "identity witness");
  if (wit) t.expect(wit->lower == 0.0 && wit->upper == 0.0, "witness estimates exactly 0");
  t.msg << "max |alpha - 1/k| " << fmt(worst) << "; identity witness "
        << (wit ? "lower=" + fmt(wit->lower) + " upper=" + fmt(wit->upper) : std::string("missing"));
  return {6, "non-closedness counterexample", t.ok, t.msg.str()};
}

PerturbationPlan random_plan(int d, int H, Rng& rng, int count, double scale) {
  PerturbationPlan p(d);
  for (int i = 0; i < count; ++i) p.set(static_cast<int>(rng.next() % static_cast<std::uint64_t>(H + 1)), scale * rng.gaussian(d, d));
  return p;
}

CriterionResult c7_plans() {
  Tally t;
  Rng rng(7007);
  for (int i = 0; i < 20; ++i) {
    const int d = 2 + i % 2;
    const PerturbationPlan p = random_plan(d, 256, rng, 12, 0.3);
    const PerturbationPlan once = truncate_plan(p, 0.5);
    t.expect(truncate_plan(once, 0.5) == once, "truncate idempotent");
    for (const auto& [n, Q] : once.support) t.expect(norm2(Q) <= 0.5, "truncate keeps small entries");
    // disjoint supports from three index ranges
    PerturbationPlan a(d), b(d), c(d);
    for (int j = 0; j < 4; ++j) {
      a.set(j * 3, rng.gaussian(d, d));
      b.set(j * 3 + 1, rng.gaussian(d, d));
      c.set(j * 3 + 2, rng.gaussian(d, d));
    }
    t.expect(compose_plans(compose_plans(a, b), c) == compose_plans(a, compose_plans(b, c)), "compose associative");
    t.expect(compose_plans(a, b) == compose_plans(b, a), "compose commutative on disjoint supports");
  }
  double lift_dev = 0.0;
  for (int i = 0; i < 10; ++i) {
    const int d = 3;
    const MatrixSequence s = random_lyapunov(d, 128, 7100 + static_cast<std::uint64_t>(i), 0.5);
    const int k = 1 + i % 2;
    const TriangularForm f = triangularize(s, rng.gaussian(d, k), 128);
    const PerturbationPlan q1 = random_plan(k, 128, rng, 5, 0.2);
    const PerturbationPlan q = lift_perturbation(f, q1);
    for (const auto& [n, Q] : q1.support) lift_dev = std::max(lift_dev, std::abs(norm2(*q.find(n)) - norm2(Q)));
  }
  t.expect(lift_dev <= 1e-12, "lift norm " + fmt(lift_dev));
  double shift_dev = 0.0;
  const WindowSpec w = WindowSpec::for_horizon(256);
  for (int i = 0; i < 8; ++i) {
    const MatrixSequence s = random_lyapunov(2, 256, 7200 + static_cast<std::uint64_t>(i), 0.6);
    const double delta = 0.05 + 0.03 * i;
    const MatrixSequence P = apply_plan(s, scaling_plan(s, delta));
    const Vector x0 = rng.unit_vector(2);
    const BohlPair a = bohl_vector(s, x0, w), b = bohl_vector(P, x0, w);
    for (const auto& [N, v] : a.upper.values) shift_dev = std::max(shift_dev, std::abs(b.upper.values.at(N) - (v - delta)));
    for (const auto& [N, v] : a.lower.values) shift_dev = std::max(shift_dev, std::abs(b.lower.values.at(N) - (v - delta)));
  }
  t.expect(shift_dev <= 1e-12, "scaling shift " + fmt(shift_dev));
  int pairs = 0;
  {
    Matrix D(2, 2);
    D << std::exp(-1.0), 0, 0, std::exp(-2.0);
    const MatrixSequence s = MatrixSequence::constant(D, 1024);
    const double delta = 1.0;
    const auto eps = stage_epsilons(6, 1.0, lyapunov_bounds(s).b());
    const SubsequencePair sp = decay_subsequence(s, delta, eps, WindowSpec::for_horizon(1024));
    int prev_s = -1, prev_gap = 0;
    for (size_t i = 0; i < sp.pairs.size(); ++i) {
      const auto [tau, sj] = sp.pairs[i];
      const double e = sp.epsilons[i];
      const int gap = sj - tau;
      t.expect(std::log(2.0 / std::sin(e)) / gap < e, "condition (_1)");
      // ||Phi(tau, s)||^{-1} from a rescaled product of LU inverses
      const double log_norm = naive_log_norm_phi(s, tau, sj);
      t.expect(-log_norm <= (-delta + e) * gap + 1e-9, "condition (_2)");
      t.expect(tau > prev_s && gap > prev_gap, "pairs ordered with growing gaps");
      t.expect(i > 0 || tau >= 2, "tau_0 >= 2");
      prev_s = sj;
      prev_gap = gap;
      ++pairs;
    }
  }
  t.expect(pairs >= 2, "decay pairs emitted");
  t.msg << t.checks << " checks, lift dev " << fmt(lift_dev) << ", shift dev " << fmt(shift_dev) << ", " << pairs
        << " decay pairs verified";
  return {7, "perturbation-plan suite", t.ok, t.msg.str()};
}

CriterionResult c8_pipeline() {
  Tally t;
  const NUParams p;
  const MatrixSequence nu = nu_instance(p);
  const WindowSpec w = WindowSpec::for_horizon(p.horizon);
  const NUValidation v = validate_nu(nu, w);
  t.expect(v.admitted, "NU instance admitted (space " + fmt(v.space_upper) + ", vectors " + fmt(v.max_vector_upper) + ")");
  const DestroyResult r = destroy_bd_plan(nu, Vector::Unit(2, 0), DestroyVariant::Strict, w);
  t.expect(r.all_verified(), "stage certificates");
  t.expect(r.even_stages() >= 2, "at least two rotation stages");
  // independent replay of the designated solution through A + Q
  const MatrixSequence P = apply_plan(nu, r.plan);
  const auto L = naive_logs(P, r.z0, p.horizon);
  for (const auto& st : r.stages) {
    const double ratio = (L[static_cast<size_t>(st.end)] - L[static_cast<size_t>(st.start)]) / (st.end - st.start);
    if (st.even) {
      t.expect(ratio >= st.bound - 1e-9, "even stage growth j=" + std::to_string(st.j));
      const Matrix* Q = r.plan.find(st.start - 1);
      const double qn = Q ? norm2(*Q) : 0.0;
      t.expect(qn <= st.eps_j * r.b * (1 + 1e-12), "stage norm within eps_j b");
    } else {
      t.expect(ratio <= st.bound + 1e-9, "odd stage decay j=" + std::to_string(st.j));
    }
  }
  for (const auto& [n, Q] : r.plan.support)
    t.expect(r.plan.decay_schedule && norm2(Q) <= r.plan.decay_schedule->at(n) * (1 + 1e-12), "decay schedule");

  const MatrixSequence sys = nu_pipeline_system(p);
  Splitting sp;
  sp.basis1 = {Vector::Unit(3, 0), Vector::Unit(3, 1)};
  sp.basis2 = {Vector::Unit(3, 2)};
  const PipelineResult pr = no_bd_pipeline(sys, sp, 0.2, w);
  double sup = 0.0;
  for (const auto& [n, Q] : pr.plan.support) sup = std::max(sup, norm2(Q));
  t.expect(sup < 0.2, "pipeline sup norm " + fmt(sup));
  DichotomyOptions o;
  o.tol_witness = 5e-2;
  const auto wit = find_no_bd_witness(apply_plan(sys, pr.plan), {pr.witness.x0}, w, o);
  t.expect(wit.has_value(), "witness re-verified");
  t.msg << "NU space upper " << fmt(v.space_upper) << ", max vector upper " << fmt(v.max_vector_upper) << "; "
        << r.stages.size() << " stages (" << r.even_stages() << " rotations), exhausted at " << r.exhausted_stage
        << "; pipeline branch " << pr.branch << ", sup norm " << fmt(sup);
  if (wit) t.msg << ", witness lower " << fmt(wit->lower) << " upper " << fmt(wit->upper);
  return {8, "pipeline evidence suite", t.ok, t.msg.str()};
}

CriterionResult c9_spectrum() {
  Tally t;
  Matrix D(2, 2);
  D << std::exp(-1.0), 0, 0, std::exp(1.0);
  const MatrixSequence s = MatrixSequence::constant(D, 256);
  const WindowSpec w = WindowSpec::for_horizon(256);
  const auto grid = default_grid();
  const double step = 0.05;
  const SpectrumSample sm = sample_spectrum(s, grid, w);
  int in_ed = 0;
  bool near_m1 = false, near_p1 = false;
  for (size_t i = 0; i < grid.size(); ++i) {
    const double g = grid[i];
    const double dist = std::min(std::abs(g + 1.0), std::abs(g - 1.0));
    if (sm.ed[i] == Membership::In) {
      ++in_ed;
      t.expect(dist <= step + 1e-9, "Sigma_ED point far from {-1, 1}: " + fmt(g));
      if (std::abs(g + 1.0) <= step + 1e-9) near_m1 = true;
      if (std::abs(g - 1.0) <= step + 1e-9) near_p1 = true;
    }
    // oracle: the scaled diagonal is hyperbolic once gamma is a tolerance away from both rates
    if (dist > 0.01) t.expect(sm.ed[i] == Membership::Out, "hyperbolic rate marked out: " + fmt(g));
    if (sm.bd[i] == Membership::In) t.expect(sm.ed[i] == Membership::In, "Sigma_BD within Sigma_ED");
  }
  t.expect(near_m1 && near_p1, "both rates detected");
  const ApproximationReport r = bd_approximation_demo(s, grid, {0.2, 0.1, 0.05}, 3, 99, w);
  t.expect(r.monotone, "nested unions and intersections");
  t.expect(r.matches_ed, "intersection equals Sigma_ED sample");
  t.msg << in_ed << " grid points in Sigma_ED";
  for (const auto& lv : r.levels) t.msg << "; eps " << lv.eps << ": extra " << lv.extra_vs_ed << " missing " << lv.missing_vs_ed;
  return {9, "spectrum suite", t.ok, t.msg.str()};
}

CriterionResult c10_io() {
  namespace fs = std::filesystem;
  Tally t;
  using io::json;
  std::vector<json> docs;
  for (const char* text : {
           R"({"schema": "bohlkit/1", "task": "simulate",
               "system": {"kind": "constant", "horizon": 10, "matrix": [["1", "0"], ["0", "1"]]}})",
           R"({"schema": "bohlkit/1", "task": "dichotomy", "seed": 42,
               "system": {"kind": "random_lyapunov", "dim": 3, "horizon": 128, "seed": 9, "spread": "0.4"},
               "params": {"windows": {"N": [2, 4, 8, 16]}}})",
           R"({"schema": "bohlkit/1", "task": "spectrum", "seed": 3,
               "system": {"kind": "diagonal_exp", "rates": ["-1", "1"], "horizon": 128},
               "params": {"grid": {"from": "-1.5", "to": "1.5", "step": "0.25"}, "windows": {"N": [4, 8, 16]}}})",
           R"({"schema": "bohlkit/1", "task": "perturb",
               "system": {"kind": "perturbed", "base": {"kind": "nu", "horizon": 256},
                          "plan": {"dimension": 2, "support": [{"index": 5, "matrix": [["0.1", "0"], ["0", "1e-3"]]}]}},
               "params": {"mode": "scaling", "delta": "0.125"}})"})
    docs.push_back(json::parse(text));
  for (const auto& doc : docs) {
    const Scenario s1 = parse_scenario(json::parse(doc.dump()));
    const json j1 = scenario_to_json(s1);
    const Scenario s2 = parse_scenario(json::parse(j1.dump()));
    const json j2 = scenario_to_json(s2);
    t.expect(j1.dump() == j2.dump(), "scenario document round trip");
    t.expect(io::same_coefficients(*s1.system, *s2.system, s1.system->horizon()), "coefficients bit-exact");
  }
  // object round trips
  {
    const MatrixSequence s = random_lyapunov(3, 128, 77, 0.7);
    const WindowSpec w = WindowSpec::make({2, 4, 8}, 128);
    Rng rng(78);
    const BohlPair e = bohl_vector(s, rng.unit_vector(3), w);
    t.expect(io::estimate_from_json(json::parse(io::to_json(e.upper).dump())) == e.upper, "estimate round trip");
    t.expect(io::estimate_from_json(json::parse(io::to_json(e.lower).dump())) == e.lower, "estimate round trip");
    Splitting sp;
    sp.basis1 = {rng.unit_vector(3)};
    sp.basis2 = {rng.unit_vector(3), rng.unit_vector(3)};
    const EDVerdict ed = check_ed(s, sp, w);
    const BDVerdict bd = check_bd(s, sp, default_samples(3, 5), w);
    t.expect(io::same(io::ed_verdict_from_json(json::parse(io::to_json(ed).dump())), ed), "ED verdict round trip");
    t.expect(io::same(io::bd_verdict_from_json(json::parse(io::to_json(bd).dump())), bd), "BD verdict round trip");
    t.expect(io::same(io::splitting_from_json(json::parse(io::to_json(sp).dump())), sp), "splitting round trip");
    PerturbationPlan p = random_plan(3, 128, rng, 6, 1e-3 * M_PI);
    p.set_schedule(3, 1.0 / 3.0);
    t.expect(io::plan_from_json(json::parse(io::to_json(p).dump())) == p, "plan round trip");
    const SpectrumSample sm = sample_spectrum(s, make_grid(-1.0, 1.0, 0.5), w);
    t.expect(io::same(io::spectrum_from_json(json::parse(io::to_json(sm).dump())), sm), "spectrum round trip");
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 4.9e-324, 1.7976931348623157e308}) {
      const double y = io::parse_double(io::format_double(x));
      t.expect(std::memcmp(&x, &y, sizeof x) == 0, "decimal round trip " + io::format_double(x));
    }
  }
  // byte-identical outputs for identical seeds
  const fs::path base = fs::temp_directory_path() / ("bohlkit_accept_" + std::to_string(::getpid()));
  for (size_t i = 0; i < docs.size(); ++i) {
    RunOptions a, b;
    a.out_dir = (base / ("a" + std::to_string(i))).string();
    b.out_dir = (base / ("b" + std::to_string(i))).string();
    const RunResult ra = run_scenario(docs[i], a), rb = run_scenario(docs[i], b);
    t.expect(ra.exit_code == 0 && rb.exit_code == 0, "scenario runs: " + ra.message);
    t.expect(ra.artifacts.size() == rb.artifacts.size() && !ra.artifacts.empty(), "same artifacts");
    for (size_t k = 0; k < std::min(ra.artifacts.size(), rb.artifacts.size()); ++k)
      t.expect(io::read_file(ra.artifacts[k]) == io::read_file(rb.artifacts[k]), "byte-identical " + ra.artifacts[k]);
  }
  std::error_code ec;
  fs::remove_all(base, ec);
  t.msg << t.checks << " checks over " << docs.size() << " scenarios";
  return {10, "IO suite", t.ok, t.msg.str()};
}

}  // namespace

CriterionResult run_criterion(int id) {
  static const std::vector<std::function<CriterionResult()>> suites = {
      c1_cocycle, c2_bohl, c3_rotation, c4_fast_in_cone, c5_triangular,
      c6_counterexample, c7_plans, c8_pipeline, c9_spectrum, c10_io};
  if (id < 1 || id > static_cast<int>(suites.size())) throw err::invalid("criterion id out of range");
  const auto t0 = std::chrono::steady_clock::now();
  CriterionResult r;
  try {
    r = suites[static_cast<size_t>(id) - 1]();
  } catch (const std::exception& e) {
    r.id = id;
    r.passed = false;
    r.detail = std::string("raised ") + e.what();
  }
  r.id = id;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt) {
  std::vector<int> ids = opt.only;
  if (ids.empty())
    for (int i = 1; i <= 10; ++i) ids.push_back(i);
  std::vector<CriterionResult> out;
  for (int id : ids) out.push_back(run_criterion(id));
  return out;
}

}  // namespace bohlkit
