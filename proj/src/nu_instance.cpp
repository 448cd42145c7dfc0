#include "bohlkit/nu_instance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bohlkit {

namespace {
Matrix nu_block(const NUParams& p, double b) {
  Matrix M(2, 2);
  M << std::exp(-p.mu), p.coupling, 0.0, std::exp(b);
  return M;
}

std::vector<std::pair<int, int>> nu_layout(const NUParams& p) {
  // (length, is_growth) runs covering 0..horizon
  std::vector<std::pair<int, int>> runs;
  runs.emplace_back(p.E0, 0);
  long E = p.E0;
  while (E < p.horizon + 1L) {
    const long L = E * p.ratio - E;
    const long g0 = E + std::lround((1.0 - p.growth_fraction) * static_cast<double>(L));
    runs.emplace_back(static_cast<int>(g0 - E), 0);
    runs.emplace_back(static_cast<int>(E * p.ratio - g0), 1);
    E *= p.ratio;
  }
  return runs;
}
}  // namespace

MatrixSequence nu_instance(const NUParams& p) {
  if (p.E0 < 1 || p.ratio < 2 || !(p.growth_fraction > 0.0 && p.growth_fraction < 1.0))
    throw err::invalid("NU parameters");
  std::vector<std::pair<int, Matrix>> blocks;
  for (auto [len, grow] : nu_layout(p))
    if (len > 0) blocks.emplace_back(len, nu_block(p, grow ? p.growth : -p.lambda));
  return MatrixSequence::block_schedule(std::move(blocks), p.horizon);
}

NUValidation validate_nu(const MatrixSequence& nu, const WindowSpec& w, double tol, double margin,
                         std::uint64_t seed) {
  NUValidation v;
  v.space_upper = upper_bohl_space(nu, w).reported;
  Rng rng(seed);
  std::vector<Vector> dirs;
  for (int i = 0; i < 64; ++i) dirs.push_back(rng.unit_vector(nu.dim()));
  for (int i = 0; i < nu.dim(); ++i) dirs.push_back(Vector::Unit(nu.dim(), i));
  v.max_vector_upper = -std::numeric_limits<double>::infinity();
  for (const auto& x : dirs) v.max_vector_upper = std::max(v.max_vector_upper, upper_bohl_vector(nu, x, w).reported);
  v.admitted = v.space_upper >= -tol && v.max_vector_upper < -margin;
  return v;
}

MatrixSequence random_lyapunov(int d, int H, std::uint64_t seed, double spread) {
  if (d < 1 || H < 0) throw err::invalid("random system shape");
  Rng rng(seed);
  std::vector<Matrix> mats;
  mats.reserve(static_cast<size_t>(H) + 1);
  Matrix Q1, Q2, R;
  for (int n = 0; n <= H; ++n) {
    mgs_qr(rng.gaussian(d, d), Q1, R);
    mgs_qr(rng.gaussian(d, d), Q2, R);
    Vector s(d);
    for (int i = 0; i < d; ++i) s(i) = std::exp(rng.uniform(-spread, spread));
    mats.push_back(Q1 * s.asDiagonal() * Q2.transpose());
  }
  return MatrixSequence::explicit_sequence(std::move(mats), std::nullopt, H);
}

MatrixSequence nu_pipeline_system(const NUParams& p) {
  std::vector<std::pair<int, Matrix>> blocks;
  for (auto [len, grow] : nu_layout(p)) {
    if (len <= 0) continue;
    Matrix M = Matrix::Zero(3, 3);
    M.topLeftCorner(2, 2) = nu_block(p, grow ? p.growth : -p.lambda);
    M(2, 2) = std::exp(1.0);
    blocks.emplace_back(len, M);
  }
  return MatrixSequence::block_schedule(std::move(blocks), p.horizon);
}

}  // namespace bohlkit
