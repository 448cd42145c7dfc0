#pragma once
#include "bohlkit/bohl.hpp"
#include "bohlkit/system.hpp"

namespace bohlkit {

// 2x2 upper triangular sequence [[e^-mu, c], [0, e^b(n)]] with b(n) switching between -lambda
// and +growth on geometrically growing epochs [E, ratio*E); the growth block closes each epoch.
// Every fixed solution decays while long windows over the growth blocks keep the space
// exponent nonnegative.
struct NUParams {
  double mu = 0.25;
  double lambda = 1.0;
  double growth = 0.5;
  double coupling = 1.0;
  int E0 = 8;
  int ratio = 4;
  double growth_fraction = 0.3;
  int horizon = kDefaultHorizon;
};

MatrixSequence nu_instance(const NUParams& p = {});

struct NUValidation {
  double space_upper = 0.0;
  double max_vector_upper = 0.0;  // over 64 seeded directions plus the axes
  bool admitted = false;
};

// Window-scan admission test: space upper >= -tol while every sampled vector upper < -margin.
NUValidation validate_nu(const MatrixSequence& nu, const WindowSpec& w, double tol = 1e-3,
                         double margin = 0.05, std::uint64_t seed = 1);

// A(n) = Q1 diag(e^{u_i}) Q2 with u_i uniform in [-spread, spread], Q1, Q2 seeded orthogonal.
MatrixSequence random_lyapunov(int d, int H, std::uint64_t seed, double spread = 1.0);

// blockdiag(nu, e^1): BD on {e1,e2} + {e3} but without an exponential dichotomy.
MatrixSequence nu_pipeline_system(const NUParams& p = {});

}  // namespace bohlkit
