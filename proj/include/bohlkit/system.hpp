#pragma once
#include <memory>
#include <mutex>
#include <optional>
#include <utility>
#include <vector>

#include "bohlkit/errors.hpp"
#include "bohlkit/linalg.hpp"
#include "bohlkit/plan.hpp"

namespace bohlkit {

inline constexpr int kDefaultHorizon = 2048;
inline constexpr int kCheckpointStride = 32;

class TransitionOracle;

// Rule-based coefficient sequence A(n). Immutable; copies share state.
class MatrixSequence {
public:
  enum class Kind { Constant, Periodic, BlockSchedule, Explicit, Perturbed, Scaled };

  struct Node;

  static MatrixSequence constant(const Matrix& M, int horizon = kDefaultHorizon);
  static MatrixSequence periodic(std::vector<Matrix> period, int horizon = kDefaultHorizon);
  // Blocks are taken in order; after the last block its matrix persists.
  static MatrixSequence block_schedule(std::vector<std::pair<int, Matrix>> blocks,
                                       int horizon = kDefaultHorizon);
  // A(n) = prefix[n] for n < prefix.size(), otherwise tail.at(n) (absolute index).
  static MatrixSequence explicit_sequence(std::vector<Matrix> prefix,
                                          std::optional<MatrixSequence> tail,
                                          int horizon = kDefaultHorizon);
  static MatrixSequence perturbed(const MatrixSequence& base, PerturbationPlan plan);
  // A(n) * e^rate
  static MatrixSequence scaled(const MatrixSequence& base, double rate);

  MatrixSequence with_horizon(int horizon) const;

  int dim() const;
  int horizon() const;
  Kind kind() const;

  Matrix at(long n) const;        // raw coefficient
  Matrix checked(long n) const;   // horizon + condition floor enforced

  // Strips nested scaled layers: returns the innermost non-scaled sequence and the summed rate.
  std::pair<MatrixSequence, double> unwrap_scale() const;

  const Node& node() const { return *node_; }
  std::shared_ptr<const TransitionOracle> oracle() const;

private:
  explicit MatrixSequence(std::shared_ptr<Node> n) : node_(std::move(n)) {}
  std::shared_ptr<Node> node_;
};

struct MatrixSequence::Node {
  Kind kind = Kind::Constant;
  int dim = 0;
  int horizon = kDefaultHorizon;
  std::vector<Matrix> mats;            // constant / periodic / explicit prefix
  std::vector<int> lengths;            // block schedule
  std::vector<long> block_starts;
  std::shared_ptr<MatrixSequence> base;  // perturbed / scaled / explicit tail
  PerturbationPlan plan;
  double rate = 0.0;

  struct Cache {
    std::mutex m;
    std::shared_ptr<const TransitionOracle> oracle;
  };
  std::shared_ptr<Cache> cache = std::make_shared<Cache>();
};

// Cached coefficients, inverses and block products on [0, H] of the unscaled core of a
// sequence. Built eagerly, read-only afterwards.
class TransitionOracle {
public:
  TransitionOracle(const MatrixSequence& sys, int stride = kCheckpointStride);

  int dim() const { return d_; }
  int horizon() const { return H_; }
  double rate() const { return rate_; }

  // Unscaled core coefficients.
  const Matrix& core(int k) const { return A_[k]; }
  const Matrix& core_inv(int k) const { return Ainv_[k]; }
  Matrix coefficient(int k) const;
  Matrix coefficient_inverse(int k) const;

  Matrix transition(int n, int m) const;

private:
  Matrix forward_product(int n, int m) const;   // n >= m, core only
  Matrix backward_product(int n, int m) const;  // n <= m, core only: Phi(n, m)
  int d_, H_, stride_;
  double rate_;
  std::vector<Matrix> A_, Ainv_;
  std::vector<Matrix> blk_, blk_inv_;  // Phi((c+1)S, cS) and its inverse
};

Matrix transition(const MatrixSequence& sys, int n, int m);
Vector evolve(const MatrixSequence& sys, int m, const Vector& x_m, int n);

// Unit direction plus ln of the norm, propagated with renormalisation each step.
struct ScaledVector {
  Vector unit;
  double log_norm = 0.0;
};
ScaledVector evolve_scaled(const MatrixSequence& sys, int m, const ScaledVector& x_m, int n);
ScaledVector make_scaled(const Vector& x);

// ln ||x(n, x0)|| for n = 0..H.
std::vector<double> log_norm_trajectory(const MatrixSequence& sys, const Vector& x0, int H);

struct LyapunovBounds {
  double b_fwd = 0.0;
  double b_inv = 0.0;
  double b() const { return b_fwd > b_inv ? b_fwd : b_inv; }
};
LyapunovBounds lyapunov_bounds(const MatrixSequence& sys, int lo, int hi);
LyapunovBounds lyapunov_bounds(const MatrixSequence& sys);

}  // namespace bohlkit
