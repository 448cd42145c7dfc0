#pragma once
#include <cstdint>
#include <optional>
#include <vector>

#include "bohlkit/bohl.hpp"
#include "bohlkit/system.hpp"

namespace bohlkit {

struct DichotomyOptions {
  double tol_margin = 1e-3;
  double tol_witness = 5e-2;
  std::uint64_t seed = 20240611;
  int vectors_per_subspace = 16;
};

enum class TriState { Holds, Fails, Inconclusive };
const char* to_string(TriState s);

struct Splitting {
  std::vector<Vector> basis1;  // L1 (decaying part)
  std::vector<Vector> basis2;  // L2 (growing part)

  int dim() const;
  Matrix matrix() const;  // [basis1 | basis2]
  void validate(int d) const;
};

struct EDVerdict {
  bool holds = false;
  TriState state = TriState::Fails;
  double alpha = 0.0;
  double K = 1.0;
  double margin1 = 0.0;  // -upper(L1), +inf for empty L1
  double margin2 = 0.0;  // lower(L2), +inf for empty L2
};

struct SampleFit {
  Vector x0;         // the sampled vector (or its component in the subspace)
  double exponent;   // upper for L1 samples, lower for L2 samples
  double constant;   // fitted C1 (smallest) or C2 (largest)
};

struct BDVerdict {
  bool holds = false;
  TriState state = TriState::Fails;
  double alpha = 0.0;
  std::vector<SampleFit> c1_samples;
  std::vector<SampleFit> c2_samples;
};

struct Witness {
  Vector x0;
  double lower = 0.0;
  double upper = 0.0;
  int index = -1;  // position in the direction list
};

EDVerdict check_ed(const MatrixSequence& sys, const Splitting& s, const WindowSpec& w,
                   const DichotomyOptions& opt = {});

// alpha_override fixes the rate used when fitting C1/C2 (the verdict itself is unaffected).
BDVerdict check_bd(const MatrixSequence& sys, const Splitting& s, const std::vector<Vector>& samples,
                   const WindowSpec& w, const DichotomyOptions& opt = {},
                   std::optional<double> alpha_override = std::nullopt);

// d axes followed by 2d seeded random unit vectors.
std::vector<Vector> default_samples(int d, std::uint64_t seed);

std::optional<Witness> find_no_bd_witness(const MatrixSequence& sys, const std::vector<Vector>& directions,
                                          const WindowSpec& w, const DichotomyOptions& opt = {});

std::optional<Splitting> search_splitting(const MatrixSequence& sys, const WindowSpec& w,
                                          const DichotomyOptions& opt = {});

// Fitted constants over all pairs 0 <= m <= n <= H of a log-norm sequence.
double fit_decay_constant(const std::vector<double>& L, double alpha);   // ln C1
double fit_growth_constant(const std::vector<double>& L, double alpha);  // ln C2

}  // namespace bohlkit
