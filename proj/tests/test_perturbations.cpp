#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "bohlkit/bohl.hpp"
#include "bohlkit/errors.hpp"
#include "bohlkit/nu_instance.hpp"
#include "bohlkit/perturbations.hpp"
#include "bohlkit/triangular.hpp"

using namespace bohlkit;

namespace {
Matrix diag2(double a, double b) {
  Matrix M = Matrix::Zero(2, 2);
  M(0, 0) = a;
  M(1, 1) = b;
  return M;
}
// log ||Phi(n, m)|| by rescaled products, n >= m forward, n < m through LU inverses
double log_phi(const MatrixSequence& s, int n, int m) {
  const int d = s.dim();
  Matrix P = Matrix::Identity(d, d);
  double scale = 0.0;
  auto push = [&](const Matrix& F) {
    P = F * P;
    const double a = P.cwiseAbs().maxCoeff();
    P /= a;
    scale += std::log(a);
  };
  if (n >= m)
    for (int k = m; k < n; ++k) push(s.at(k));
  else
    for (int k = m - 1; k >= n; --k) push(oracle::inv(s.at(k)));
  return scale + std::log(oracle::norm2(P));
}
}  // namespace

TEST_CASE("apply and compose") {
  const auto s = random_lyapunov(2, 32, 1);
  const auto same = apply_plan(s, PerturbationPlan(2));
  for (int n = 0; n <= 32; ++n) CHECK(same.at(n) == s.at(n));
  PerturbationPlan p(2);
  p.set(5, diag2(0.1, -0.2));
  const auto q = apply_plan(s, p);
  CHECK(q.at(5) == s.at(5) + diag2(0.1, -0.2));
  CHECK(q.at(4) == s.at(4));
  PerturbationPlan a(2), b(2);
  a.set(3, diag2(0.01, 0.02));
  b.set(7, diag2(0.03, 0.0));
  const auto twice = apply_plan(apply_plan(s, a), b);
  const auto once = apply_plan(s, compose_plans(a, b));
  for (int n = 0; n <= 32; ++n) CHECK(twice.at(n) == once.at(n));
  CHECK(compose_plans(a, PerturbationPlan(2)) == a);
  CHECK(compose_plans(a, b).support.size() == 2);
  PerturbationPlan c(2);
  c.set(3, diag2(0.5, 0.25));
  CHECK(*compose_plans(a, c).find(3) == diag2(0.51, 0.27));
  CHECK_THROWS_AS(compose_plans(a, PerturbationPlan(3)), Error);
  PerturbationPlan far(2);
  far.set(40, diag2(0.1, 0.1));
  CHECK_THROWS_AS(apply_plan(s, far), Error);
}

TEST_CASE("truncate") {
  PerturbationPlan p(2);
  p.set(1, diag2(0.5, 0.0));
  p.set(2, diag2(0.1, 0.0));
  p.set(3, diag2(0.01, 0.0));
  CHECK(truncate_plan(p, 1.0) == p);
  CHECK(truncate_plan(p, 0.001).empty());
  const PerturbationPlan t = truncate_plan(p, 0.2);
  CHECK(t.support.size() == 2);
  CHECK(truncate_plan(t, 0.2) == t);
  // a decaying plan: windows starting after the last dropped index see the same system
  PerturbationPlan dec(2);
  for (int n = 0; n < 30; ++n) dec.set(n, std::exp(-0.3 * n) * diag2(1.0, -1.0));
  const auto s = random_lyapunov(2, 128, 2, 0.5);
  const PerturbationPlan kept = truncate_plan(dec, 0.05);
  const auto full = apply_plan(s, dec);
  const auto cut = apply_plan(s, kept);
  // truncation drops the early (large) entries and keeps the tail
  int last_dropped = -1;
  for (const auto& [n, Q] : dec.support)
    if (!kept.find(n)) last_dropped = n;
  CHECK(last_dropped >= 0);
  CHECK(kept.sup_norm() <= 0.05);
  for (int m = last_dropped + 1; m < 100; m += 7)
    for (int n = m + 5; n <= 128; n += 11) CHECK(log_phi(full, n, m) == log_phi(cut, n, m));
}

TEST_CASE("scaling plan") {
  const auto s = random_lyapunov(2, 64, 3);
  CHECK(scaling_plan(s, 0.0).sup_norm() == 0.0);
  Matrix e(1, 1);
  e(0, 0) = std::exp(1.0);
  const auto sc = MatrixSequence::constant(e, 64);
  const WindowSpec w = WindowSpec::make({2, 4, 8}, 64);
  CHECK(upper_bohl_vector(apply_plan(sc, scaling_plan(sc, 0.3)), Vector::Ones(1), w).reported ==
        doctest::Approx(0.7).epsilon(1e-12));
  Rng rng(4);
  for (int i = 0; i < 8; ++i) {
    const Vector x = rng.unit_vector(2);
    const double a = upper_bohl_vector(s, x, w).reported;
    const double b = upper_bohl_vector(apply_plan(s, scaling_plan(s, 0.2)), x, w).reported;
    CHECK(b == doctest::Approx(a - 0.2).epsilon(1e-12));
  }
}

TEST_CASE("growth subsequence") {
  const WindowSpec w = WindowSpec::for_horizon(256);
  const auto I = MatrixSequence::constant(Matrix::Identity(2, 2), 256);
  const SubsequencePair p = growth_subsequence(I, {0.5, 0.25}, w);
  REQUIRE(p.pairs.size() == 2);
  for (size_t i = 0; i < 2; ++i) CHECK(p.log_norms[i] == doctest::Approx(0.0).epsilon(1e-14));
  const auto D = MatrixSequence::constant(diag2(std::exp(1.0), std::exp(-1.0)), 256);
  const SubsequencePair q = growth_subsequence(D, {0.5, 0.25, 0.125}, w);
  REQUIRE(q.pairs.size() == 3);
  int prev = -1;
  for (size_t i = 0; i < q.pairs.size(); ++i) {
    const auto [tau, s] = q.pairs[i];
    CHECK(tau > prev + 1 - 1);
    CHECK(log_phi(D, s, tau) == doctest::Approx(s - tau).epsilon(1e-12));
    prev = s;
  }
  // NU instance: gap conditions and the inequality itself by an independent product
  const NUParams np;
  const auto nu = nu_instance(np);
  const WindowSpec wn = WindowSpec::for_horizon(np.horizon);
  const auto eps = stage_epsilons(5, 0.18, lyapunov_bounds(nu).b());
  const SubsequencePair g = growth_subsequence(nu, eps, wn);
  REQUIRE(g.pairs.size() >= 2);
  CHECK(g.pairs[0].second - g.pairs[0].first > 2);
  for (size_t i = 0; i < g.pairs.size(); ++i) {
    const auto [tau, s] = g.pairs[i];
    if (i > 0) {
      CHECK(tau > g.pairs[i - 1].second);
      CHECK(s - tau > g.pairs[i - 1].second + 1);
    }
    CHECK(log_phi(nu, s, tau) >= -g.epsilons[i] * (s - tau) - 1e-9);
  }
}

TEST_CASE("decay subsequence") {
  const double delta = 1.0;
  Matrix e(1, 1);
  e(0, 0) = std::exp(-1.0);
  const auto sc = MatrixSequence::constant(e, 512);
  const auto eps = stage_epsilons(3, 1.0, 1.0);
  const SubsequencePair p = decay_subsequence(sc, delta, eps, WindowSpec::for_horizon(512));
  REQUIRE(p.pairs.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    const int gap = p.pairs[i].second - p.pairs[i].first;
    CHECK(gap > std::log(2.0 / std::sin(eps[i])) / eps[i]);
  }
  const auto I = MatrixSequence::constant(Matrix::Identity(2, 2), 256);
  try {
    (void)decay_subsequence(I, 0.5, {0.5}, WindowSpec::for_horizon(256));
    CHECK(false);
  } catch (const Error& err) {
    CHECK(err.name() == "PrefixEmpty");
  }
  const auto D = MatrixSequence::constant(diag2(std::exp(-1.0), std::exp(-2.0)), 1024);
  const auto e2 = stage_epsilons(4, 1.0, lyapunov_bounds(D).b());
  const SubsequencePair q = decay_subsequence(D, delta, e2, WindowSpec::for_horizon(1024));
  REQUIRE(q.pairs.size() == 4);
  for (size_t i = 0; i < q.pairs.size(); ++i) {
    const auto [tau, s] = q.pairs[i];
    const int gap = s - tau;
    CHECK(std::log(2.0 / std::sin(q.epsilons[i])) / gap < q.epsilons[i]);
    // ||Phi(tau, s)|| = e^{2 gap} here
    CHECK(log_phi(D, tau, s) == doctest::Approx(2.0 * gap).epsilon(1e-12));
    CHECK(-log_phi(D, tau, s) <= (-delta + q.epsilons[i]) * gap);
    const DecayPairCheck c = check_decay_pair(D, tau, s, delta, q.epsilons[i]);
    CHECK(c.sine_slack);
    CHECK(c.decay);
  }
}

TEST_CASE("destroy plan rejects a uniform contraction") {
  const Matrix A = std::exp(-1.0) * Matrix(Eigen::Rotation2Dd(0.3).toRotationMatrix());
  const auto s = MatrixSequence::constant(A, 512);
  try {
    (void)destroy_bd_plan(s, Vector::Unit(2, 0), DestroyVariant::Strict, WindowSpec::for_horizon(512));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.name() == "SurrogateHypothesisFailed");
    CHECK(e.error_class() == ErrorClass::Hypothesis);
  }
}

TEST_CASE("destroy plan on the NU instance") {
  const NUParams np;
  const auto nu = nu_instance(np);
  const WindowSpec w = WindowSpec::for_horizon(np.horizon);
  const DestroyResult r = destroy_bd_plan(nu, Vector::Unit(2, 0), DestroyVariant::Strict, w);
  CHECK(r.all_verified());
  CHECK(r.even_stages() >= 2);
  CHECK(r.plan.sup_norm() <= 0.18);
  // replay the designated solution with plain products
  const auto pert = apply_plan(nu, r.plan);
  const auto L = oracle::logs(pert, r.z0, np.horizon);
  for (const auto& st : r.stages) {
    const double ratio = (L[st.end] - L[st.start]) / (st.end - st.start);
    CHECK(ratio == doctest::Approx(st.ratio).epsilon(1e-9));
    if (st.even)
      CHECK(ratio >= -(st.eps_j + st.eps_l) - 1e-9);
    else
      CHECK(ratio <= -r.alpha + st.eps_j + 1e-9);
  }
  // truncating the plan keeps later windows intact
  DestroyResult copy = r;
  copy.plan = truncate_plan(r.plan, r.plan.sup_norm());
  CHECK(verify_destroy(nu, copy));
}

TEST_CASE("slow solution plan") {
  const auto D = MatrixSequence::constant(diag2(std::exp(-1.0), std::exp(-2.0)), 1024);
  const WindowSpec w = WindowSpec::for_horizon(1024);
  SlowOptions o;
  o.budget = 1.0;
  const SlowResult zero = slow_solution_plan(D, 1.0, 0, w, o);
  CHECK(zero.plan.empty());
  CHECK(std::abs(zero.v0.norm() - 1.0) < 1e-12);
  const SlowResult r = slow_solution_plan(D, 1.0, 3, w, o);
  CHECK(r.all_verified());
  REQUIRE(r.stages.size() == 3);
  // supports are exactly the s_q, one matrix each
  REQUIRE(r.plan.support.size() == 3);
  size_t q = 0;
  for (const auto& [n, Q] : r.plan.support) {
    CHECK(n == r.stages[q].s);
    ++q;
  }
  // stage inequalities from an independent replay; z(s_q+1) and beyond are pinned, so the
  // designated logs are compared against plain products through A + Q started at v0
  const auto pert = apply_plan(D, r.plan);
  const auto L = oracle::logs(pert, r.v0, 1024);
  for (const auto& st : r.stages) {
    const double lhs = L[st.tau];
    const double rhs = std::log(std::sin(st.eps) / 2) + log_phi(D, st.tau, st.s) + L[st.s];
    CHECK(lhs >= rhs - 1e-6 * std::max(1.0, std::abs(rhs)));
    CHECK((L[st.s] - L[st.tau]) / (st.s - st.tau) <= -1.0 + 2 * st.eps + 1e-9);
  }
}

TEST_CASE("pipeline") {
  const NUParams np;
  const WindowSpec w = WindowSpec::for_horizon(np.horizon);
  // ED instance is rejected up front
  Splitting ed_split;
  ed_split.basis1 = {Vector::Unit(2, 0)};
  ed_split.basis2 = {Vector::Unit(2, 1)};
  const auto hyper = MatrixSequence::constant(diag2(std::exp(-1.0), std::exp(1.0)), np.horizon);
  CHECK_THROWS_AS(no_bd_pipeline(hyper, ed_split, 0.2, w), Error);

  SUBCASE("branch 1: NU block as L1") {
    const auto sys = nu_pipeline_system(np);
    Splitting sp;
    sp.basis1 = {Vector::Unit(3, 0), Vector::Unit(3, 1)};
    sp.basis2 = {Vector::Unit(3, 2)};
    const PipelineResult r = no_bd_pipeline(sys, sp, 0.2, w);
    CHECK(r.branch == 1);
    CHECK(r.plan.sup_norm() < 0.2);
    CHECK(r.witness_verified);
    double budget = 0.0;
    for (const auto& st : r.steps) {
      CHECK(st.sup_norm <= st.budget);
      budget += st.budget;
    }
    CHECK(budget <= 0.2);
  }
  SUBCASE("branch 2: inverse NU block as L2") {
    // time-reversed NU growth: L2 = {e2, e3} keeps lower exponent >= 0 without uniform growth
    const auto nu = nu_instance(np);
    std::vector<Matrix> blocks;
    for (int n = 0; n <= np.horizon; ++n) {
      Matrix M = Matrix::Zero(3, 3);
      M(0, 0) = std::exp(-1.0);
      M.bottomRightCorner(2, 2) = oracle::inv(nu.at(n));
      blocks.push_back(M);
    }
    const auto sys = MatrixSequence::explicit_sequence(blocks, std::nullopt, np.horizon);
    Splitting sp;
    sp.basis1 = {Vector::Unit(3, 0)};
    sp.basis2 = {Vector::Unit(3, 1), Vector::Unit(3, 2)};
    // eps = 0.2 needs longer slack gaps than H = 2048 provides
    try {
      (void)no_bd_pipeline(sys, sp, 0.2, w);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.error_class() == ErrorClass::Hypothesis);
    }
    const PipelineResult r = no_bd_pipeline(sys, sp, 0.6, w);
    CHECK(r.branch == 2);
    CHECK(r.plan.sup_norm() < 0.6);
    REQUIRE(r.slow.has_value());
    CHECK(r.slow->all_verified());
    // the designated solution is slow only along an exponentially thin direction, so a
    // forward double-precision replay drifts off it; the certificate rests on backward logs
    CHECK(r.witness.lower <= 5e-2);
    CHECK(r.witness.upper >= -5e-2);
    // short forward replay on the full perturbed system, before roundoff is amplified
    const auto L = oracle::logs(apply_plan(sys, r.plan), r.witness.x0, 16);
    for (int n = 0; n <= 16; ++n)
      CHECK(L[n] - L[0] == doctest::Approx(r.slow->designated_logs[n] - r.slow->designated_logs[0]).epsilon(1e-6));
  }
}
