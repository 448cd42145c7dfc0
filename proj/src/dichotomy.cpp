#include "bohlkit/dichotomy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bohlkit/triangular.hpp"

namespace bohlkit {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix columns(const std::vector<Vector>& vs, int d) {
  Matrix M(d, static_cast<Eigen::Index>(vs.size()));
  for (size_t j = 0; j < vs.size(); ++j) M.col(static_cast<Eigen::Index>(j)) = vs[j];
  return M;
}

TriState classify(double m1, double m2, double tol) {
  const double m = std::min(m1, m2);
  if (m > tol) return TriState::Holds;
  if (m >= -tol) return TriState::Inconclusive;
  return TriState::Fails;
}

// Unit vectors of a k-dimensional subspace: the normalized basis first, then seeded combinations.
std::vector<Vector> subspace_samples(const std::vector<Vector>& basis, int count, Rng& rng) {
  std::vector<Vector> out;
  for (const auto& b : basis) {
    if (static_cast<int>(out.size()) >= count) break;
    out.push_back(b / b.norm());
  }
  const int k = static_cast<int>(basis.size());
  while (static_cast<int>(out.size()) < count) {
    const Vector c = rng.unit_vector(k);
    Vector v = Vector::Zero(basis[0].size());
    for (int i = 0; i < k; ++i) v += c(i) * basis[static_cast<size_t>(i)];
    const double nv = v.norm();
    if (nv > 1e-12) out.push_back(v / nv);
  }
  return out;
}

// Solution log norms of x0 in L computed through the L-subsystem (stable for decaying L).
std::vector<double> subspace_logs(const TriangularForm& f, const MatrixSequence& sub, const Vector& x0, int H) {
  const Vector y01 = (f.U[0].transpose() * x0).head(f.k);
  return log_norm_trajectory(sub, y01, H);
}
// Form carrying a decaying L1, plus the last index up to which it can be trusted.
// Forward propagation drifts off a decaying subspace at the rate of the gap, so the flag is swept
// backward from the far end instead. The end frame is unknown; two sweeps from different anchors
// agree once the anchor has been forgotten, and only that prefix is used.
struct DecayingForm {
  TriangularForm form;
  int trusted_H = 0;
};

bool same_lead(const Matrix& U, const Matrix& V, int k) {
  const Matrix a = U.leftCols(k), b = V.leftCols(k);
  return (a - b * (b.transpose() * a)).norm() <= 1e-8;
}

DecayingForm decaying_form(const MatrixSequence& sys, const std::vector<Vector>& basis1, const WindowSpec& w,
                           std::uint64_t seed) {
  const int d = sys.dim();
  const int k = static_cast<int>(basis1.size());
  const int H = w.H;
  TriangularForm ff = triangularize(sys, basis1, H);
  if (k == d) return {std::move(ff), H};
  Matrix P, R;
  mgs_qr(columns(basis1, d), P, R);
  // pull two generic frames back from H and keep the prefix where they agree; forward
  // transport of the given basis is not trusted, roundoff in it lands on the fast directions.
  // Neutral systems never converge backwards and fall back to the forward sweep.
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  TriangularForm fb = triangularize_backward(sys, rng.gaussian(d, d), k, H);
  if (!same_lead(fb.U[0], P, k)) return {std::move(ff), H};
  const TriangularForm alt = triangularize_backward(sys, rng.gaussian(d, d), k, H);
  int n = 0;
  while (n <= H && same_lead(fb.U[static_cast<size_t>(n)], alt.U[static_cast<size_t>(n)], k)) ++n;
  const int trusted = n - 1;
  if (2 * static_cast<long>(w.max_N()) >= trusted) return {std::move(ff), H};
  return {std::move(fb), trusted};
}

WindowSpec prefix_windows(const WindowSpec& w, int H) {
  WindowSpec p = w;
  p.H = H;
  return p;
}
}  // namespace

const char* to_string(TriState s) {
  switch (s) {
    case TriState::Holds: return "holds";
    case TriState::Fails: return "fails";
    case TriState::Inconclusive: return "inconclusive";
  }
  return "?";
}

int Splitting::dim() const { return static_cast<int>(basis1.size() + basis2.size()); }

Matrix Splitting::matrix() const {
  const int d = !basis1.empty() ? static_cast<int>(basis1[0].size())
                                : (!basis2.empty() ? static_cast<int>(basis2[0].size()) : 0);
  std::vector<Vector> all = basis1;
  all.insert(all.end(), basis2.begin(), basis2.end());
  return columns(all, d);
}

void Splitting::validate(int d) const {
  if (dim() != d) throw err::degenerate_splitting("basis sizes must sum to d");
  for (const auto& v : basis1)
    if (v.size() != d) throw err::degenerate_splitting("vector dimension");
  for (const auto& v : basis2)
    if (v.size() != d) throw err::degenerate_splitting("vector dimension");
  Matrix M = matrix();
  for (int j = 0; j < d; ++j) {
    const double nj = M.col(j).norm();
    if (!(nj > 0.0)) throw err::degenerate_splitting("zero basis vector");
    M.col(j) /= nj;
  }
  if (!(min_singular_value(M) > 1e-10)) throw err::degenerate_splitting("basis is not of full rank");
}

double fit_decay_constant(const std::vector<double>& L, double alpha) {
  // max over m <= n of g(n) - g(m), g = L + alpha n
  double best = 0.0, run_min = kInf;
  for (size_t n = 0; n < L.size(); ++n) {
    const double g = L[n] + alpha * static_cast<double>(n);
    run_min = std::min(run_min, g);
    best = std::max(best, g - run_min);
  }
  return best;
}

double fit_growth_constant(const std::vector<double>& L, double alpha) {
  // min over m <= n of h(n) - h(m), h = L - alpha n
  double best = 0.0, run_max = -kInf;
  for (size_t n = 0; n < L.size(); ++n) {
    const double h = L[n] - alpha * static_cast<double>(n);
    run_max = std::max(run_max, h);
    best = std::min(best, h - run_max);
  }
  return best;
}

EDVerdict check_ed(const MatrixSequence& sys, const Splitting& s, const WindowSpec& w,
                   const DichotomyOptions& opt) {
  const int d = sys.dim();
  s.validate(d);
  w.validate();
  EDVerdict v;
  v.margin1 = kInf;
  v.margin2 = kInf;
  std::optional<TriangularForm> f1, f2;
  std::optional<MatrixSequence> sub1, sub2;
  int H1 = w.H;
  if (!s.basis1.empty()) {
    DecayingForm df = decaying_form(sys, s.basis1, w, opt.seed);
    H1 = df.trusted_H;
    f1 = std::move(df.form);
    sub1 = subsystem(*f1);
    v.margin1 = -upper_bohl_space(*sub1, prefix_windows(w, H1)).reported;
  }
  if (!s.basis2.empty()) {
    f2 = triangularize(sys, s.basis2, w.H);
    sub2 = subsystem(*f2);
    v.margin2 = lower_bohl_space(*sub2, w).reported;
  }
  v.state = classify(v.margin1, v.margin2, opt.tol_margin);
  v.holds = v.state == TriState::Holds;
  v.alpha = std::min(v.margin1, v.margin2);

  Rng rng(opt.seed);
  double lnK = 0.0;
  if (f1) {
    for (const auto& x : subspace_samples(s.basis1, opt.vectors_per_subspace, rng))
      lnK = std::max(lnK, fit_decay_constant(subspace_logs(*f1, *sub1, x, H1), v.alpha));
  }
  if (f2) {
    for (const auto& x : subspace_samples(s.basis2, opt.vectors_per_subspace, rng))
      lnK = std::max(lnK, -fit_growth_constant(subspace_logs(*f2, *sub2, x, w.H), v.alpha));
  }
  v.K = std::exp(lnK);
  return v;
}

std::vector<Vector> default_samples(int d, std::uint64_t seed) {
  std::vector<Vector> out;
  for (int i = 0; i < d; ++i) out.push_back(Vector::Unit(d, i));
  Rng rng(seed);
  for (int i = 0; i < 2 * d; ++i) out.push_back(rng.unit_vector(d));
  return out;
}

BDVerdict check_bd(const MatrixSequence& sys, const Splitting& s, const std::vector<Vector>& samples,
                   const WindowSpec& w, const DichotomyOptions& opt, std::optional<double> alpha_override) {
  const int d = sys.dim();
  s.validate(d);
  w.validate();
  if (samples.empty()) throw err::empty_sample_set();
  const Matrix S = s.matrix();
  const int k1 = static_cast<int>(s.basis1.size());
  const Eigen::FullPivLU<Matrix> lu(S);

  // assign each sample (or its components) to L1 / L2
  std::vector<Vector> in1, in2;
  for (const auto& x : samples) {
    if (x.size() != d) throw err::dimension_mismatch("sample vector");
    const double nx = x.norm();
    if (!(nx > 0.0)) throw err::zero_vector();
    const Vector c = lu.solve(x);
    const Vector x1 = S.leftCols(k1) * c.head(k1);
    const Vector x2 = S.rightCols(d - k1) * c.tail(d - k1);
    if (x2.norm() <= 1e-10 * nx) {
      in1.push_back(x);
    } else if (x1.norm() <= 1e-10 * nx) {
      in2.push_back(x);
    } else {
      in1.push_back(x1);
      in2.push_back(x2);
    }
  }

  struct Item {
    Vector x;
    std::vector<double> logs;
    double exponent;
  };
  std::vector<Item> it1, it2;
  double margin = kInf;
  if (!in1.empty()) {
    const DecayingForm df = decaying_form(sys, s.basis1, w, opt.seed);
    const TriangularForm& f = df.form;
    const MatrixSequence sub = subsystem(f);
    const WindowSpec w1 = prefix_windows(w, df.trusted_H);
    for (const auto& x : in1) {
      auto L = subspace_logs(f, sub, x, w1.H);
      const double up = scan_log_sequence(L, 0.0, w1).upper.reported;
      margin = std::min(margin, -up);
      it1.push_back({x, std::move(L), up});
    }
  }
  if (!in2.empty()) {
    const TriangularForm f = triangularize(sys, s.basis2, w.H);
    const MatrixSequence sub = subsystem(f);
    for (const auto& x : in2) {
      auto L = subspace_logs(f, sub, x, w.H);
      const double lo = scan_log_sequence(L, 0.0, w).lower.reported;
      margin = std::min(margin, lo);
      it2.push_back({x, std::move(L), lo});
    }
  }
  BDVerdict v;
  v.state = classify(margin, kInf, opt.tol_margin);
  v.holds = v.state == TriState::Holds;
  v.alpha = margin;
  const double a = alpha_override.value_or(margin);
  for (const auto& i : it1) v.c1_samples.push_back({i.x, i.exponent, std::exp(fit_decay_constant(i.logs, a))});
  for (const auto& i : it2) v.c2_samples.push_back({i.x, i.exponent, std::exp(fit_growth_constant(i.logs, a))});
  return v;
}

std::optional<Witness> find_no_bd_witness(const MatrixSequence& sys, const std::vector<Vector>& directions,
                                          const WindowSpec& w, const DichotomyOptions& opt) {
  if (directions.empty()) throw err::empty_sample_set();
  for (size_t i = 0; i < directions.size(); ++i) {
    const BohlPair p = bohl_vector(sys, directions[i], w);
    if (p.lower.reported <= opt.tol_witness && p.upper.reported >= -opt.tol_witness)
      return Witness{directions[i], p.lower.reported, p.upper.reported, static_cast<int>(i)};
  }
  return std::nullopt;
}

std::optional<Splitting> search_splitting(const MatrixSequence& sys, const WindowSpec& w,
                                          const DichotomyOptions& opt) {
  w.validate();
  const int d = sys.dim();
  const int H = w.H;
  // random frame at H pulled back to 0: leading columns approximate the slowest directions
  Rng rng(opt.seed);
  const TriangularForm f = triangularize_backward(sys, rng.gaussian(d, d), d, H);
  const Matrix& Q = f.U[0];
  std::vector<double> up(static_cast<size_t>(d)), lo(static_cast<size_t>(d));
  for (int i = 0; i < d; ++i) {
    std::vector<double> L(static_cast<size_t>(H) + 1, 0.0);
    for (int n = 0; n < H; ++n)
      L[static_cast<size_t>(n) + 1] = L[static_cast<size_t>(n)] + std::log(std::abs(f.B_core[static_cast<size_t>(n)](i, i)));
    const BohlPair p = scan_log_sequence(L, f.rate, w);
    up[static_cast<size_t>(i)] = p.upper.reported;
    lo[static_cast<size_t>(i)] = p.lower.reported;
  }
  int k1 = 0;
  while (k1 < d && up[static_cast<size_t>(k1)] < -opt.tol_margin) ++k1;
  int k2 = 0;
  while (k2 < d && lo[static_cast<size_t>(d - 1 - k2)] > opt.tol_margin) ++k2;
  if (k1 + k2 < d) return std::nullopt;
  Splitting s;
  for (int i = 0; i < d; ++i) (i < k1 ? s.basis1 : s.basis2).push_back(Q.col(i));
  const BDVerdict bd = check_bd(sys, s, default_samples(d, opt.seed), w, opt);
  if (!bd.holds) return std::nullopt;
  return s;
}

}  // namespace bohlkit
