#include "bohlkit/system.hpp"

#include <algorithm>
#include <cmath>

namespace bohlkit {

namespace {

std::shared_ptr<MatrixSequence::Node> new_node(MatrixSequence::Kind k, int dim, int H) {
  if (H < 0) throw err::invalid("negative horizon");
  auto n = std::make_shared<MatrixSequence::Node>();
  n->kind = k;
  n->dim = dim;
  n->horizon = H;
  return n;
}

void require_square(const Matrix& M, int d) {
  if (M.rows() != d || M.cols() != d) throw err::dimension_mismatch("coefficient is not d x d");
}

}  // namespace

MatrixSequence MatrixSequence::constant(const Matrix& M, int H) {
  if (M.rows() == 0 || M.rows() != M.cols()) throw err::dimension_mismatch("constant matrix");
  auto n = new_node(Kind::Constant, static_cast<int>(M.rows()), H);
  n->mats = {M};
  return MatrixSequence(n);
}

MatrixSequence MatrixSequence::periodic(std::vector<Matrix> period, int H) {
  if (period.empty()) throw err::invalid("empty period");
  const int d = static_cast<int>(period[0].rows());
  for (auto& M : period) require_square(M, d);
  auto n = new_node(Kind::Periodic, d, H);
  n->mats = std::move(period);
  return MatrixSequence(n);
}

MatrixSequence MatrixSequence::block_schedule(std::vector<std::pair<int, Matrix>> blocks, int H) {
  if (blocks.empty()) throw err::invalid("empty block schedule");
  const int d = static_cast<int>(blocks[0].second.rows());
  auto n = new_node(Kind::BlockSchedule, d, H);
  long start = 0;
  for (auto& [len, M] : blocks) {
    if (len <= 0) throw err::invalid("block length must be positive");
    require_square(M, d);
    n->block_starts.push_back(start);
    n->lengths.push_back(len);
    n->mats.push_back(M);
    start += len;
  }
  return MatrixSequence(n);
}

MatrixSequence MatrixSequence::explicit_sequence(std::vector<Matrix> prefix,
                                                 std::optional<MatrixSequence> tail, int H) {
  if (prefix.empty() && !tail) throw err::invalid("explicit sequence needs a prefix or a tail");
  const int d = prefix.empty() ? tail->dim() : static_cast<int>(prefix[0].rows());
  for (auto& M : prefix) require_square(M, d);
  if (tail && tail->dim() != d) throw err::dimension_mismatch("tail dimension");
  auto n = new_node(Kind::Explicit, d, H);
  n->mats = std::move(prefix);
  if (tail) n->base = std::make_shared<MatrixSequence>(*tail);
  return MatrixSequence(n);
}

MatrixSequence MatrixSequence::perturbed(const MatrixSequence& base, PerturbationPlan plan) {
  if (plan.dimension != base.dim()) throw err::dimension_mismatch("plan dimension");
  auto n = new_node(Kind::Perturbed, base.dim(), base.horizon());
  n->base = std::make_shared<MatrixSequence>(base);
  n->plan = std::move(plan);
  return MatrixSequence(n);
}

MatrixSequence MatrixSequence::scaled(const MatrixSequence& base, double rate) {
  auto n = new_node(Kind::Scaled, base.dim(), base.horizon());
  n->base = std::make_shared<MatrixSequence>(base);
  n->rate = rate;
  return MatrixSequence(n);
}

MatrixSequence MatrixSequence::with_horizon(int H) const {
  if (H < 0) throw err::invalid("negative horizon");
  auto n = std::make_shared<Node>(*node_);
  n->horizon = H;
  n->cache = std::make_shared<Node::Cache>();
  return MatrixSequence(n);
}

int MatrixSequence::dim() const { return node_->dim; }
int MatrixSequence::horizon() const { return node_->horizon; }
MatrixSequence::Kind MatrixSequence::kind() const { return node_->kind; }

Matrix MatrixSequence::at(long n) const {
  if (n < 0) throw err::horizon_exceeded(n);
  const Node& N = *node_;
  switch (N.kind) {
    case Kind::Constant:
      return N.mats[0];
    case Kind::Periodic:
      return N.mats[static_cast<size_t>(n % static_cast<long>(N.mats.size()))];
    case Kind::BlockSchedule: {
      auto it = std::upper_bound(N.block_starts.begin(), N.block_starts.end(), n);
      return N.mats[static_cast<size_t>(it - N.block_starts.begin()) - 1];
    }
    case Kind::Explicit:
      if (n < static_cast<long>(N.mats.size())) return N.mats[static_cast<size_t>(n)];
      if (N.base) return N.base->at(n);
      throw err::horizon_exceeded(n);
    case Kind::Perturbed: {
      if (const Matrix* Q = N.plan.find(static_cast<int>(n))) return N.base->at(n) + *Q;
      return N.base->at(n);
    }
    case Kind::Scaled:
      return std::exp(N.rate) * N.base->at(n);
  }
  return {};
}

namespace {
void verify_invertible(const MatrixSequence& s, long n, const Matrix& M) {
  if (is_invertible(M)) return;
  const auto& N = s.node();
  if (N.kind == MatrixSequence::Kind::Perturbed && N.plan.find(static_cast<int>(n)))
    throw err::non_invertible_perturbed(n);
  if (N.kind == MatrixSequence::Kind::Scaled) verify_invertible(*N.base, n, N.base->at(n));
  throw err::non_invertible(n);
}
}  // namespace

Matrix MatrixSequence::checked(long n) const {
  if (n < 0 || n > horizon()) throw err::horizon_exceeded(n);
  Matrix M = at(n);
  verify_invertible(*this, n, M);
  return M;
}

std::pair<MatrixSequence, double> MatrixSequence::unwrap_scale() const {
  double rate = 0.0;
  MatrixSequence cur = *this;
  while (cur.kind() == Kind::Scaled) {
    rate += cur.node().rate;
    cur = *cur.node().base;
  }
  return {cur, rate};
}

std::shared_ptr<const TransitionOracle> MatrixSequence::oracle() const {
  std::lock_guard<std::mutex> lock(node_->cache->m);
  if (!node_->cache->oracle) node_->cache->oracle = std::make_shared<TransitionOracle>(*this);
  return node_->cache->oracle;
}

// ---------------------------------------------------------------------------------------------

TransitionOracle::TransitionOracle(const MatrixSequence& sys, int stride)
    : d_(sys.dim()), H_(sys.horizon()), stride_(stride) {
  auto [core, rate] = sys.unwrap_scale();
  rate_ = rate;
  A_.reserve(H_ + 1);
  Ainv_.reserve(H_ + 1);
  for (int k = 0; k <= H_; ++k) {
    Matrix M = core.at(k);
    verify_invertible(core, k, M);
    Ainv_.push_back(inverse(M));
    A_.push_back(std::move(M));
  }
  for (int c = 0; (c + 1) * stride_ <= H_; ++c) {
    Matrix P = Matrix::Identity(d_, d_);
    Matrix Pi = Matrix::Identity(d_, d_);
    for (int k = c * stride_; k < (c + 1) * stride_; ++k) P = A_[k] * P;
    for (int k = (c + 1) * stride_ - 1; k >= c * stride_; --k) Pi = Ainv_[k] * Pi;
    blk_.push_back(std::move(P));
    blk_inv_.push_back(std::move(Pi));
  }
}

Matrix TransitionOracle::coefficient(int k) const {
  return rate_ == 0.0 ? A_[k] : Matrix(std::exp(rate_) * A_[k]);
}
Matrix TransitionOracle::coefficient_inverse(int k) const {
  return rate_ == 0.0 ? Ainv_[k] : Matrix(std::exp(-rate_) * Ainv_[k]);
}

Matrix TransitionOracle::forward_product(int n, int m) const {
  Matrix P = Matrix::Identity(d_, d_);
  if (n - m <= 2 * stride_) {
    for (int k = m; k < n; ++k) P = A_[k] * P;
    return P;
  }
  const int c0 = (m + stride_ - 1) / stride_;
  const int c1 = n / stride_;
  for (int k = m; k < c0 * stride_; ++k) P = A_[k] * P;
  for (int c = c0; c < c1; ++c) P = blk_[c] * P;
  for (int k = c1 * stride_; k < n; ++k) P = A_[k] * P;
  return P;
}

Matrix TransitionOracle::backward_product(int n, int m) const {
  Matrix P = Matrix::Identity(d_, d_);
  if (m - n <= 2 * stride_) {
    for (int k = m - 1; k >= n; --k) P = Ainv_[k] * P;
    return P;
  }
  const int c0 = (n + stride_ - 1) / stride_;
  const int c1 = m / stride_;
  for (int k = m - 1; k >= c1 * stride_; --k) P = Ainv_[k] * P;
  for (int c = c1 - 1; c >= c0; --c) P = blk_inv_[c] * P;
  for (int k = c0 * stride_ - 1; k >= n; --k) P = Ainv_[k] * P;
  return P;
}

Matrix TransitionOracle::transition(int n, int m) const {
  if (n < 0 || n > H_) throw err::horizon_exceeded(n);
  if (m < 0 || m > H_) throw err::horizon_exceeded(m);
  if (n == m) return Matrix::Identity(d_, d_);
  Matrix P = n > m ? forward_product(n, m) : backward_product(n, m);
  if (rate_ != 0.0) P *= std::exp(rate_ * static_cast<double>(n - m));
  return P;
}

Matrix transition(const MatrixSequence& sys, int n, int m) {
  if (n > sys.horizon()) throw err::horizon_exceeded(n);
  if (m > sys.horizon()) throw err::horizon_exceeded(m);
  return sys.oracle()->transition(n, m);
}

Vector evolve(const MatrixSequence& sys, int m, const Vector& x, int n) {
  if (x.size() != sys.dim()) throw err::dimension_mismatch("state vector");
  if (n < 0 || n > sys.horizon()) throw err::horizon_exceeded(n);
  if (m < 0 || m > sys.horizon()) throw err::horizon_exceeded(m);
  auto O = sys.oracle();
  const double g = std::exp(O->rate());
  Vector v = x;
  if (n >= m) {
    for (int k = m; k < n; ++k) {
      v = O->core(k) * v;
      if (O->rate() != 0.0) v *= g;
    }
  } else {
    for (int k = m - 1; k >= n; --k) {
      v = O->core_inv(k) * v;
      if (O->rate() != 0.0) v /= g;
    }
  }
  return v;
}

ScaledVector make_scaled(const Vector& x) {
  const double nx = x.norm();
  if (!(nx > 0.0) || !std::isfinite(nx)) throw err::zero_vector();
  return {x / nx, std::log(nx)};
}

ScaledVector evolve_scaled(const MatrixSequence& sys, int m, const ScaledVector& x, int n) {
  if (n < 0 || n > sys.horizon()) throw err::horizon_exceeded(n);
  if (m < 0 || m > sys.horizon()) throw err::horizon_exceeded(m);
  auto O = sys.oracle();
  ScaledVector v = x;
  if (n >= m) {
    for (int k = m; k < n; ++k) {
      v.unit = O->core(k) * v.unit;
      const double s = v.unit.norm();
      v.unit /= s;
      v.log_norm += std::log(s);
    }
  } else {
    for (int k = m - 1; k >= n; --k) {
      v.unit = O->core_inv(k) * v.unit;
      const double s = v.unit.norm();
      v.unit /= s;
      v.log_norm += std::log(s);
    }
  }
  v.log_norm += O->rate() * static_cast<double>(n - m);
  return v;
}

std::vector<double> log_norm_trajectory(const MatrixSequence& sys, const Vector& x0, int H) {
  if (x0.size() != sys.dim()) throw err::dimension_mismatch("initial vector");
  if (H > sys.horizon()) throw err::horizon_exceeded(H);
  auto O = sys.oracle();
  ScaledVector v = make_scaled(x0);
  std::vector<double> L(static_cast<size_t>(H) + 1);
  double acc = v.log_norm;
  L[0] = acc;
  for (int k = 0; k < H; ++k) {
    v.unit = O->core(k) * v.unit;
    const double s = v.unit.norm();
    v.unit /= s;
    acc += std::log(s);
    L[k + 1] = acc + O->rate() * static_cast<double>(k + 1);
  }
  return L;
}

LyapunovBounds lyapunov_bounds(const MatrixSequence& sys, int lo, int hi) {
  if (lo < 0 || hi > sys.horizon() || lo > hi) throw err::horizon_exceeded(hi);
  auto O = sys.oracle();
  LyapunovBounds b;
  const double g = std::exp(O->rate());
  for (int k = lo; k <= hi; ++k) {
    b.b_fwd = std::max(b.b_fwd, spectral_norm(O->core(k)) * g);
    b.b_inv = std::max(b.b_inv, spectral_norm(O->core_inv(k)) / g);
  }
  return b;
}

LyapunovBounds lyapunov_bounds(const MatrixSequence& sys) { return lyapunov_bounds(sys, 0, sys.horizon()); }

}  // namespace bohlkit
