#include "bohlkit/perturbations.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bohlkit/triangular.hpp"

namespace bohlkit {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// ln ||Phi(n, m)||, n > m, by a renormalised product that never forms the raw matrix
double log_norm_forward(const TransitionOracle& O, int m, int n) {
  std::vector<Matrix> f;
  for (int k = m; k < n; ++k) f.push_back(O.coefficient(k));
  return ordered_product(f, O.dim()).log_norm;
}

// ln ||Phi(m, n)||, m < n, from fresh inverses of the coefficients
double log_norm_backward(const TransitionOracle& O, int m, int n) {
  std::vector<Matrix> f;
  for (int k = n - 1; k >= m; --k) f.push_back(inverse(O.coefficient(k)));
  return ordered_product(f, O.dim()).log_norm;
}
}  // namespace

MatrixSequence apply_plan(const MatrixSequence& sys, const PerturbationPlan& plan) {
  if (plan.dimension != sys.dim()) throw err::dimension_mismatch("plan dimension");
  for (const auto& [n, Q] : plan.support) {
    if (n < 0 || n > sys.horizon()) throw err::support_exceeds_horizon(n);
    if (Q.rows() != sys.dim() || Q.cols() != sys.dim()) throw err::dimension_mismatch("plan entry");
    if (!is_invertible(Matrix(sys.at(n) + Q))) throw err::non_invertible_perturbed(n);
  }
  return MatrixSequence::perturbed(sys, plan);
}

PerturbationPlan compose_plans(const PerturbationPlan& p1, const PerturbationPlan& p2) {
  if (p1.dimension != p2.dimension) throw err::dimension_mismatch("composed plans");
  PerturbationPlan out = p1;
  for (const auto& [n, Q] : p2.support) {
    auto it = out.support.find(n);
    if (it == out.support.end()) out.support.emplace(n, Q);
    else it->second = it->second + Q;
  }
  if (p2.decay_schedule) {
    for (const auto& [n, v] : *p2.decay_schedule) {
      if (out.decay_schedule && out.decay_schedule->count(n)) (*out.decay_schedule)[n] += v;
      else out.set_schedule(n, v);
    }
  }
  return out;
}

PerturbationPlan truncate_plan(const PerturbationPlan& plan, double eps) {
  PerturbationPlan out(plan.dimension);
  for (const auto& [n, Q] : plan.support) {
    if (spectral_norm(Q) <= eps) {
      out.support.emplace(n, Q);
      if (plan.decay_schedule && plan.decay_schedule->count(n)) out.set_schedule(n, plan.decay_schedule->at(n));
    }
  }
  return out;
}

PerturbationPlan scaling_plan(const MatrixSequence& sys, double delta) {
  PerturbationPlan p(sys.dim());
  if (delta == 0.0) return p;
  auto O = sys.oracle();
  const double f = std::expm1(-delta);
  for (int n = 0; n <= sys.horizon(); ++n) p.support.emplace(n, O->coefficient(n) * f);
  return p;
}

std::vector<double> stage_epsilons(int count, double budget, double b) {
  std::vector<double> e;
  for (int l = 0; l < count; ++l) e.push_back(std::min(1.0 / (l + 1), budget / b));
  return e;
}

SubsequencePair growth_subsequence(const MatrixSequence& sys, const std::vector<double>& eps, const WindowSpec& w,
                                   double tol) {
  w.validate();
  if (w.H > sys.horizon()) throw err::horizon_exceeded(w.H);
  const double space = upper_bohl_space(sys, w).reported;
  if (space < -tol) throw err::prefix_empty("upper space exponent " + std::to_string(space) + " < -tol");
  auto O = sys.oracle();
  const int H = w.H, d = sys.dim();
  const double rate = O->rate();
  SubsequencePair out;
  int prev_s = -1;
  for (size_t l = 0; l < eps.size(); ++l) {
    const int N = l == 0 ? 2 : prev_s + 1;
    int best_n = H + 1, best_m = -1;
    double best_log = 0.0;
    for (int m = N + 1; m + N + 1 < best_n && m + N + 1 <= H; ++m) {
      Matrix P = Matrix::Identity(d, d);
      double acc = 0.0;
      for (int k = m; k + 1 < best_n && k + 1 <= H; ++k) {
        P = O->core(k) * P;
        const double s = spectral_norm(P);
        acc += std::log(s);
        P /= s;
        const int n = k + 1, gap = n - m;
        if (gap <= N) continue;
        const double lg = acc + rate * gap;
        if (lg / gap > -eps[l]) {
          best_n = n;
          best_m = m;
          best_log = lg;
          break;
        }
      }
    }
    if (best_m < 0) {
      if (l == 0) throw err::prefix_empty("no admissible growth window at stage 0");
      break;
    }
    // independent recheck of ||Phi(s, tau)|| >= e^{-eps (s - tau)}
    const double check = log_norm_forward(*O, best_m, best_n);
    if (!(check >= -eps[l] * (best_n - best_m) - 1e-9 * std::max(1.0, std::abs(check))))
      throw err::certificate_failed("growth pair recheck");
    (void)best_log;
    out.pairs.emplace_back(best_m, best_n);
    out.epsilons.push_back(eps[l]);
    out.log_norms.push_back(check);
    prev_s = best_n;
  }
  return out;
}

DecayPairCheck check_decay_pair(const MatrixSequence& sys, int tau, int s, double delta, double eps) {
  auto O = sys.oracle();
  DecayPairCheck c;
  const int gap = s - tau;
  c.sine_slack = std::log(2.0 / std::sin(eps)) / gap < eps;
  c.rate = -log_norm_backward(*O, tau, s) / gap;
  c.decay = c.rate <= -delta + eps + 1e-12;
  return c;
}

SubsequencePair decay_subsequence(const MatrixSequence& sys, double delta, const std::vector<double>& eps,
                                  const WindowSpec& w, double tol) {
  w.validate();
  if (w.H > sys.horizon()) throw err::horizon_exceeded(w.H);
  const double lower = lower_bohl_space(sys, w).reported;
  if (lower > -delta + tol) throw err::prefix_empty("lower space exponent " + std::to_string(lower) + " > -delta + tol");
  auto O = sys.oracle();
  const int H = w.H, d = sys.dim();
  const double rate = O->rate();
  SubsequencePair out;
  int prev_s = -1;
  for (size_t l = 0; l < eps.size(); ++l) {
    const int N = l == 0 ? 2 : prev_s + 1;
    const double slack = std::log(2.0 / std::sin(eps[l])) / eps[l];
    // gap must exceed both N and the sine slack length
    const int gmin = std::max(N + 1, static_cast<int>(std::floor(slack)) + 1);
    int found_s = -1, found_m = -1;
    double found_log = 0.0;
    for (int s = N + 1 + gmin; s <= H && found_s < 0; ++s) {
      Matrix P = Matrix::Identity(d, d);
      double acc = 0.0;
      for (int k = s - 1; k > N; --k) {
        P = O->core_inv(k) * P;
        const double nv = spectral_norm(P);
        acc += std::log(nv);
        P /= nv;
        const int gap = s - k;
        if (gap < gmin) continue;
        const double lg = acc - rate * gap;  // ln ||Phi(k, s)||
        if (std::log(2.0 / std::sin(eps[l])) / gap < eps[l] && -lg / gap <= -delta + eps[l]) {
          found_s = s;
          found_m = k;  // keeps moving to the smallest admissible tau
          found_log = lg;
        }
      }
    }
    if (found_s < 0) {
      if (l == 0) throw err::prefix_empty("no admissible decay window at stage 0");
      break;
    }
    const DecayPairCheck c = check_decay_pair(sys, found_m, found_s, delta, eps[l]);
    if (!c.sine_slack || !c.decay) throw err::certificate_failed("decay pair recheck");
    (void)found_log;
    out.pairs.emplace_back(found_m, found_s);
    out.epsilons.push_back(eps[l]);
    out.log_norms.push_back(-c.rate * (found_s - found_m));
    prev_s = found_s;
  }
  return out;
}

// ---------------------------------------------------------------------------------------------

bool DestroyResult::all_verified() const {
  return std::all_of(stages.begin(), stages.end(), [](const StageRecord& s) { return s.verified; });
}

int DestroyResult::even_stages() const {
  return static_cast<int>(std::count_if(stages.begin(), stages.end(), [](const StageRecord& s) { return s.even; }));
}

DestroyResult destroy_bd_plan(const MatrixSequence& sys, const Vector& z0, DestroyVariant variant, const WindowSpec& w,
                              const DestroyOptions& opt) {
  const int k = sys.dim();
  if (k < 2) throw err::invalid("destroy_bd_plan needs dimension >= 2");
  if (z0.size() != k) throw err::dimension_mismatch("z0");
  if (!(z0.norm() > 0.0)) throw err::zero_vector();
  w.validate();
  const int H = w.H, Nmax = w.max_N();
  auto O = sys.oracle();

  // finite-horizon surrogates of the hypotheses
  std::vector<Vector> samples = default_samples(k, opt.seed);
  samples.push_back(z0);
  double sup = -kInf;
  for (const auto& x : samples) sup = std::max(sup, upper_bohl_vector(sys, x, w).reported);
  const double space = upper_bohl_space(sys, w).reported;
  if (variant == DestroyVariant::Strict && !(sup < -opt.tol_margin))
    throw err::surrogate_failed("sampled sup of upper vector exponents " + std::to_string(sup) + " is not < -tol");
  if (variant == DestroyVariant::Weak && !(sup <= opt.tol_margin))
    throw err::surrogate_failed("sampled sup of upper vector exponents " + std::to_string(sup) + " is not <= tol");
  if (space < -opt.tol_margin)
    throw err::surrogate_failed("upper space exponent " + std::to_string(space) + " < -tol");

  DestroyResult r;
  r.z0 = z0;
  r.alpha = variant == DestroyVariant::Strict ? -sup / 2.0 : 0.0;
  r.b = lyapunov_bounds(sys, 0, H).b();
  r.plan = PerturbationPlan(k);
  r.subsequence = growth_subsequence(sys, stage_epsilons(32, opt.budget, r.b), w, opt.tol_margin);
  const auto eps = stage_epsilons(opt.stage_budget + 1, opt.budget, r.b);

  // perturbed solution state at time T (coefficients beyond T are still unperturbed)
  int T = 1;
  ScaledVector state = make_scaled(z0);
  state = evolve_scaled(sys, 0, state, 1);
  auto advance = [&](int to) { state = evolve_scaled(sys, T, state, to); T = to; };

  for (int j = 1; j <= opt.stage_budget; ++j) {
    StageRecord st;
    st.j = j;
    st.eps_j = eps[static_cast<size_t>(j)];
    if (j % 2 == 1) {
      // log norms of the current solution on [T, H]
      std::vector<double> L(static_cast<size_t>(H) + 1, 0.0);
      ScaledVector v = state;
      L[static_cast<size_t>(T)] = v.log_norm;
      for (int n = T; n < H; ++n) {
        v = evolve_scaled(sys, n, v, n + 1);
        L[static_cast<size_t>(n) + 1] = v.log_norm;
      }
      const double c = -r.alpha + st.eps_j;
      const int gmin = std::max(j, Nmax) + 1;
      const int smin = std::max(T, Nmax + 1);
      auto h = [&](int n) { return L[static_cast<size_t>(n)] - c * n; };
      double pref = -kInf;
      int sigma = -1, rho = -1;
      for (int n = smin + gmin; n <= H; ++n) {
        pref = std::max(pref, h(n - gmin));
        if (h(n) <= pref) {
          rho = n;
          for (int m = smin; m <= n - gmin; ++m)
            if (h(m) >= h(n)) {
              sigma = m;
              break;
            }
          break;
        }
      }
      if (rho < 0) {
        r.exhausted_stage = j;
        break;
      }
      st.start = sigma;
      st.end = rho;
      st.ratio = (L[static_cast<size_t>(rho)] - L[static_cast<size_t>(sigma)]) / (rho - sigma);
      st.bound = c;
      advance(rho);
    } else {
      int pick = -1;
      for (size_t l = 0; l < r.subsequence.pairs.size(); ++l) {
        const auto [tau, s] = r.subsequence.pairs[l];
        const int gap = s - tau;
        if (tau >= T + 2 && gap > Nmax && std::sin(st.eps_j) / 2.0 >= std::exp(-st.eps_j * gap)) {
          pick = static_cast<int>(l);
          break;
        }
      }
      if (pick < 0) {
        r.exhausted_stage = j;
        break;
      }
      const auto [tau, s] = r.subsequence.pairs[static_cast<size_t>(pick)];
      st.eps_l = r.subsequence.epsilons[static_cast<size_t>(pick)];
      advance(tau - 1);
      std::vector<Matrix> slice;
      for (int i = tau - 1; i < s; ++i) slice.push_back(O->coefficient(i));
      const Matrix R = algebraic_forward(slice, state.unit, st.eps_j);
      st.rotation = certify_algebraic_forward(slice, state.unit, st.eps_j, R);
      st.rotation.index = tau - 1;
      st.q_norm = spectral_norm(R);
      st.q_bound = st.eps_j * r.b;
      if (!R.isZero(0.0)) {
        r.plan.set(tau - 1, R);
        r.plan.set_schedule(tau - 1, st.q_bound);
      }
      // step through the perturbed coefficient, then along the unperturbed tail to s
      Vector u = (slice[0] + R) * state.unit;
      const double nu = u.norm();
      ScaledVector at_tau{u / nu, state.log_norm + std::log(nu)};
      ScaledVector at_s = evolve_scaled(sys, tau, at_tau, s);
      st.start = tau;
      st.end = s;
      st.even = true;
      st.ratio = (at_s.log_norm - at_tau.log_norm) / (s - tau);
      st.bound = -(st.eps_j + st.eps_l);
      state = at_s;
      T = s;
    }
    r.stages.push_back(st);
  }
  verify_destroy(sys, r);
  return r;
}

bool verify_destroy(const MatrixSequence& sys, DestroyResult& r) {
  const MatrixSequence P = apply_plan(sys, r.plan);
  int H = 0;
  for (const auto& st : r.stages) H = std::max(H, st.end);
  const auto L = log_norm_trajectory(P, r.z0, H);
  bool ok = true;
  for (auto& st : r.stages) {
    const double ratio = (L[static_cast<size_t>(st.end)] - L[static_cast<size_t>(st.start)]) / (st.end - st.start);
    const double tol = 1e-9 * std::max(1.0, std::abs(st.bound));
    if (st.even) {
      st.verified = ratio >= st.bound - tol && st.rotation.passed && st.q_norm <= st.q_bound * (1 + 1e-12);
    } else {
      st.verified = ratio <= st.bound + tol;
    }
    ok = ok && st.verified;
  }
  return ok;
}

// ---------------------------------------------------------------------------------------------

bool SlowResult::all_verified() const {
  return std::all_of(stages.begin(), stages.end(), [](const SlowStage& s) { return s.verified; });
}

SlowResult slow_solution_plan(const MatrixSequence& sys, double delta, int stages, const WindowSpec& w,
                              const SlowOptions& opt) {
  const int k = sys.dim();
  if (k < 2) throw err::invalid("slow_solution_plan needs dimension >= 2");
  if (stages < 0) throw err::invalid("negative stage count");
  w.validate();
  const int H = w.H;
  SlowResult r;
  r.plan = PerturbationPlan(k);
  Rng rng(opt.seed);
  const Vector z0 = rng.unit_vector(k);
  if (stages == 0) {
    r.v0 = z0;
    r.designated_logs = log_norm_trajectory(sys, z0, H);
    const BohlPair p = scan_log_sequence(r.designated_logs, 0.0, w);
    r.lower = p.lower.reported;
    r.upper = p.upper.reported;
    return r;
  }
  const double lower = lower_bohl_space(sys, w).reported;
  if (!(lower < -opt.tol_margin))
    throw err::surrogate_failed("lower space exponent " + std::to_string(lower) + " is not < -tol");
  auto O = sys.oracle();
  const double b = lyapunov_bounds(sys, 0, H).b();
  const int want = opt.allow_fewer ? 32 : stages + 1;
  r.subsequence = decay_subsequence(sys, delta, stage_epsilons(want, opt.budget, b), w, opt.tol_margin);
  int ell = stages;
  const int avail = static_cast<int>(r.subsequence.pairs.size()) - 1;
  if (avail < ell) {
    if (!opt.allow_fewer || avail < 1) throw err::stage_exhausted(avail + 1);
    ell = avail;
  }
  while (ell >= 1 && r.subsequence.pairs[static_cast<size_t>(ell)].second + 1 > H) --ell;
  if (ell < 1) throw err::stage_exhausted(1);

  // designated solution carried backwards from s_ell + 1 where it is the generic solution of z0
  const int top = r.subsequence.pairs[static_cast<size_t>(ell)].second + 1;
  ScaledVector pin = evolve_scaled(sys, 0, make_scaled(z0), top);
  pin.log_norm = 0.0;
  int t = top;
  r.stages.resize(static_cast<size_t>(ell));
  for (int j = ell; j >= 1; --j) {
    const auto [tau, s] = r.subsequence.pairs[static_cast<size_t>(j)];
    const double e = r.subsequence.epsilons[static_cast<size_t>(j)];
    pin = evolve_scaled(sys, t, pin, s + 1);  // no perturbation between s_j + 1 and t
    std::vector<Matrix> slice;
    for (int i = tau; i <= s; ++i) slice.push_back(O->coefficient(i));
    const Matrix R = algebraic_backward(slice, pin.unit, e);
    SlowStage& st = r.stages[static_cast<size_t>(j) - 1];
    st.q = j;
    st.tau = tau;
    st.s = s;
    st.eps = e;
    st.rotation = certify_algebraic_backward(slice, pin.unit, e, R);
    st.rotation.index = s;
    r.plan.set(s, R);  // explicit entry even when the rotation is trivial
    r.plan.set_schedule(s, e * b);
    Vector z = inverse(Matrix(slice.back() + R)) * pin.unit;
    const double nz = z.norm();
    pin = ScaledVector{z / nz, pin.log_norm + std::log(nz)};
    t = s;
  }
  pin = evolve_scaled(sys, t, pin, 0);
  r.v0 = pin.unit;

  // stable log norms of the designated solution: backward below top, forward above
  const MatrixSequence P = apply_plan(sys, r.plan);
  auto OP = P.oracle();
  std::vector<double> L(static_cast<size_t>(H) + 1, 0.0);
  ScaledVector cur = make_scaled(pin.unit);
  cur.log_norm = 0.0;
  {
    // forward from 0 is unstable for this solution, so rebuild from the pinned point
    ScaledVector back{Vector(), 0.0};
    back = evolve_scaled(sys, 0, make_scaled(z0), top);
    back.log_norm = 0.0;
    L[static_cast<size_t>(top)] = 0.0;
    ScaledVector x = back;
    for (int n = top; n > 0; --n) {
      Vector y = OP->core_inv(n - 1) * x.unit;
      const double ny = y.norm();
      x = ScaledVector{y / ny, x.log_norm + std::log(ny)};
      L[static_cast<size_t>(n) - 1] = x.log_norm;
    }
    x = back;
    for (int n = top; n < H; ++n) {
      Vector y = OP->core(n) * x.unit;
      const double ny = y.norm();
      x = ScaledVector{y / ny, x.log_norm + std::log(ny)};
      L[static_cast<size_t>(n) + 1] = x.log_norm;
    }
    const double base = L[0];
    for (auto& v : L) v -= base;
  }
  r.designated_logs = L;
  for (auto& st : r.stages) {
    st.lhs = L[static_cast<size_t>(st.tau)];
    st.rhs = std::log(std::sin(st.eps) / 2.0) + log_norm_backward(*O, st.tau, st.s) + L[static_cast<size_t>(st.s)];
    st.window_rate = (L[static_cast<size_t>(st.s)] - L[static_cast<size_t>(st.tau)]) / (st.s - st.tau);
    st.window_bound = -delta + 2.0 * st.eps;
    st.verified = st.lhs >= st.rhs - 1e-9 * std::max(1.0, std::abs(st.rhs)) && st.rotation.passed &&
                  st.window_rate <= st.window_bound + 1e-9;
  }
  const BohlPair p = scan_log_sequence(L, 0.0, w);
  r.lower = p.lower.reported;
  r.upper = p.upper.reported;
  return r;
}

// ---------------------------------------------------------------------------------------------

namespace {

Witness lifted_witness(const TriangularForm& f, const Vector& y01, const SlowResult* slow, const MatrixSequence& full,
                       const WindowSpec& w) {
  Witness wt;
  wt.x0 = f.U[0] * embed(f, y01);
  wt.index = 0;
  if (slow) {
    wt.lower = slow->lower;
    wt.upper = slow->upper;
  } else {
    const BohlPair p = bohl_vector(full, wt.x0, w);
    wt.lower = p.lower.reported;
    wt.upper = p.upper.reported;
  }
  return wt;
}

double sampled_sup_upper(const MatrixSequence& sys, const WindowSpec& w, std::uint64_t seed) {
  double sup = -kInf;
  for (const auto& x : default_samples(sys.dim(), seed)) sup = std::max(sup, upper_bohl_vector(sys, x, w).reported);
  return sup;
}

}  // namespace

PipelineResult no_bd_pipeline(const MatrixSequence& sys, const Splitting& splitting, double eps, const WindowSpec& w,
                              const PipelineOptions& opt) {
  if (!(eps > 0.0)) throw err::invalid("eps must be positive");
  const int d = sys.dim();
  const double tol = opt.dich.tol_margin;
  const EDVerdict ed = check_ed(sys, splitting, w, opt.dich);
  if (ed.holds) throw err::surrogate_failed("check_ed holds, the system is not in BD minus ED");
  const BDVerdict bd = check_bd(sys, splitting, default_samples(d, opt.dich.seed), w, opt.dich);
  if (!bd.holds) throw err::surrogate_failed("check_bd fails on the given splitting");

  PipelineResult out;
  out.plan = PerturbationPlan(d);
  double up1 = -kInf;
  if (!splitting.basis1.empty()) up1 = bohl_on_subspace(sys, splitting.basis1, w).upper.reported;

  if (up1 >= -tol) {
    out.branch = 1;
    const TriangularForm f = triangularize(sys, splitting.basis1, w.H);
    const MatrixSequence sub = subsystem(f);
    if (f.k < 2) throw err::surrogate_failed("L1 is one-dimensional, BD and ED coincide there");
    DestroyOptions dopt;
    dopt.budget = opt.branch1_fraction * eps;
    dopt.stage_budget = opt.stage_budget;
    dopt.tol_margin = tol;
    dopt.seed = opt.dich.seed;
    const double sup = sampled_sup_upper(sub, w, opt.dich.seed);
    const DestroyVariant var = sup < -tol ? DestroyVariant::Strict : DestroyVariant::Weak;
    const Vector z0 = Vector::Unit(f.k, 0);
    DestroyResult dr = destroy_bd_plan(sub, z0, var, w, dopt);
    if (dr.even_stages() == 0) throw err::stage_exhausted(dr.exhausted_stage);
    out.plan = lift_perturbation(f, dr.plan);
    out.steps.push_back({var == DestroyVariant::Strict ? "destroy_strict" : "destroy_weak", dopt.budget,
                         dr.plan.sup_norm()});
    const MatrixSequence P = apply_plan(sys, out.plan);
    out.witness = lifted_witness(f, z0, nullptr, P, w);
    out.destroy = std::move(dr);
  } else {
    out.branch = 2;
    if (splitting.basis2.empty()) throw err::surrogate_failed("L2 is empty and upper(L1) < -tol");
    const TriangularForm f = triangularize(sys, splitting.basis2, w.H);
    const MatrixSequence sub = subsystem(f);
    if (f.k < 2) throw err::surrogate_failed("L2 is one-dimensional, BD and ED coincide there");
    const double lo2 = lower_bohl_space(sub, w).reported;
    if (lo2 > tol) throw err::surrogate_failed("lower(L2) > tol and upper(L1) < -tol");
    // scaling step, budget eps/3 (kept strictly inside by the factor 0.3)
    const double part = 0.3 * eps;
    double nu = kInf;
    for (const auto& x : default_samples(f.k, opt.dich.seed))
      nu = std::min(nu, lower_bohl_vector(sub, x, w).reported);
    const double bnorm = lyapunov_bounds(sub, 0, w.H).b_fwd;
    const double delta = 0.5 * std::min(nu, -std::log1p(-part / bnorm));
    if (!(delta > 0.0)) throw err::surrogate_failed("no admissible scaling rate");
    const PerturbationPlan scale = scaling_plan(sub, delta);
    out.steps.push_back({"scaling", part, scale.sup_norm()});
    const MatrixSequence scaled_sub = MatrixSequence::scaled(sub, -delta);
    SlowOptions so;
    so.budget = part;
    so.tol_margin = tol;
    so.seed = opt.dich.seed;
    so.allow_fewer = true;
    SlowResult slow = slow_solution_plan(scaled_sub, delta / 2.0, opt.slow_stages, w, so);
    out.steps.push_back({"slow_solution", part, slow.plan.sup_norm()});
    PerturbationPlan subplan = compose_plans(scale, slow.plan);
    Vector y01 = slow.v0;
    const SlowResult* slow_ref = &slow;
    std::optional<DestroyResult> dr;
    if (slow.upper < -opt.dich.tol_witness) {
      // the designated solution decays: destroy the dichotomy inside the perturbed L2 block
      const MatrixSequence C = apply_plan(scaled_sub, slow.plan);
      const auto sp = search_splitting(C, w, opt.dich);
      if (!sp || sp->basis1.size() < 2)
        throw err::surrogate_failed("no splitting with a decaying block of dimension >= 2 after the slow step");
      const TriangularForm f2 = triangularize(C, sp->basis1, w.H);
      const MatrixSequence sub2 = subsystem(f2);
      DestroyOptions dopt;
      dopt.budget = part;
      dopt.stage_budget = opt.stage_budget;
      dopt.tol_margin = tol;
      dopt.seed = opt.dich.seed;
      const Vector z0 = Vector::Unit(f2.k, 0);
      dr = destroy_bd_plan(sub2, z0, DestroyVariant::Weak, w, dopt);
      if (dr->even_stages() == 0) throw err::stage_exhausted(dr->exhausted_stage);
      subplan = compose_plans(subplan, lift_perturbation(f2, dr->plan));
      out.steps.push_back({"destroy_weak", part, dr->plan.sup_norm()});
      y01 = f2.U[0] * embed(f2, z0);
      slow_ref = nullptr;
    }
    out.plan = lift_perturbation(f, subplan);
    const MatrixSequence P = apply_plan(sys, out.plan);
    out.witness = lifted_witness(f, y01, slow_ref, P, w);
    out.slow = std::move(slow);
    out.destroy = std::move(dr);
  }
  if (!(out.plan.sup_norm() < eps)) throw err::certificate_failed("plan sup norm is not below eps");
  const MatrixSequence P = apply_plan(sys, out.plan);
  out.witness_verified = find_no_bd_witness(P, {out.witness.x0}, w, opt.dich).has_value();
  if (out.witness.lower > opt.dich.tol_witness || out.witness.upper < -opt.dich.tol_witness)
    throw err::surrogate_failed("designated solution does not satisfy the witness criterion");
  return out;
}

}  // namespace bohlkit
