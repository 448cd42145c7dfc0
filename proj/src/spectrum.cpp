#include "bohlkit/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "bohlkit/perturbations.hpp"

namespace bohlkit {

const char* to_string(Membership m) {
  switch (m) {
    case Membership::In: return "in";
    case Membership::Out: return "out";
    default: return "inconclusive";
  }
}

std::vector<double> make_grid(double from, double to, double step) {
  if (!(step > 0.0) || !(to >= from)) throw err::invalid("grid bounds");
  const long count = std::lround(std::floor((to - from) / step + 1e-9)) + 1;
  std::vector<double> g;
  for (long i = 0; i < count; ++i) g.push_back(from + static_cast<double>(i) * step);
  return g;
}

std::vector<double> default_grid() { return make_grid(-3.0, 3.0, 0.05); }

std::vector<std::pair<double, double>> merge_intervals(const std::vector<double>& grid,
                                                       const std::vector<Membership>& m) {
  std::vector<std::pair<double, double>> out;
  for (size_t i = 0; i < m.size(); ++i) {
    if (m[i] != Membership::In) continue;
    if (i > 0 && m[i - 1] == Membership::In) out.back().second = grid[i];
    else out.emplace_back(grid[i], grid[i]);
  }
  return out;
}

namespace {

struct PointVerdict {
  Membership ed = Membership::In;
  Membership bd = Membership::In;
};

PointVerdict evaluate(const MatrixSequence& sys, double gamma, const WindowSpec& w, const DichotomyOptions& opt,
                      bool want_ed, bool want_bd) {
  PointVerdict v;
  const MatrixSequence S = MatrixSequence::scaled(sys, -gamma);
  const auto sp = search_splitting(S, w, opt);
  if (sp) {
    v.bd = Membership::Out;  // search_splitting only returns splittings that pass check_bd
    if (want_ed) {
      const EDVerdict ed = check_ed(S, *sp, w, opt);
      v.ed = ed.state == TriState::Holds ? Membership::Out
             : ed.state == TriState::Inconclusive ? Membership::Inconclusive
                                                  : Membership::In;
    }
    return v;
  }
  v.ed = Membership::In;
  if (want_bd) {
    const auto wit = find_no_bd_witness(S, default_samples(sys.dim(), opt.seed), w, opt);
    v.bd = wit ? Membership::In : Membership::Inconclusive;
  }
  return v;
}

std::vector<PointVerdict> evaluate_grid(const MatrixSequence& sys, const std::vector<double>& grid,
                                        const WindowSpec& w, const DichotomyOptions& opt, bool want_ed, bool want_bd) {
  if (!std::is_sorted(grid.begin(), grid.end())) throw err::invalid("grid must be sorted");
  std::vector<PointVerdict> out(grid.size());
  sys.oracle();  // build the shared cache once before fanning out
  const int T = std::max(1, std::min<int>(thread_count(), static_cast<int>(grid.size())));
  if (T == 1) {
    for (size_t i = 0; i < grid.size(); ++i) out[i] = evaluate(sys, grid[i], w, opt, want_ed, want_bd);
    return out;
  }
  // inner scans run sequentially while rates are spread across threads
  const int saved = thread_count();
  set_thread_count(1);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(static_cast<size_t>(T));
  for (int t = 0; t < T; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (size_t i = static_cast<size_t>(t); i < grid.size(); i += static_cast<size_t>(T))
          out[i] = evaluate(sys, grid[i], w, opt, want_ed, want_bd);
      } catch (...) {
        errs[static_cast<size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  set_thread_count(saved);
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  return out;
}

SpectrumSample assemble(const std::vector<double>& grid, const std::vector<PointVerdict>& v, bool ed, bool bd) {
  SpectrumSample s;
  s.grid = grid;
  for (const auto& p : v) {
    if (ed) s.ed.push_back(p.ed);
    if (bd) s.bd.push_back(p.bd);
  }
  s.ed_intervals = merge_intervals(grid, s.ed);
  s.bd_intervals = merge_intervals(grid, s.bd);
  return s;
}

}  // namespace

SpectrumSample sample_ed_spectrum(const MatrixSequence& sys, const std::vector<double>& grid, const WindowSpec& w,
                                  const DichotomyOptions& opt) {
  return assemble(grid, evaluate_grid(sys, grid, w, opt, true, false), true, false);
}

SpectrumSample sample_bd_spectrum(const MatrixSequence& sys, const std::vector<double>& grid, const WindowSpec& w,
                                  const DichotomyOptions& opt) {
  return assemble(grid, evaluate_grid(sys, grid, w, opt, false, true), false, true);
}

SpectrumSample sample_spectrum(const MatrixSequence& sys, const std::vector<double>& grid, const WindowSpec& w,
                               const DichotomyOptions& opt) {
  return assemble(grid, evaluate_grid(sys, grid, w, opt, true, true), true, true);
}

namespace {

// Random plan with sup norm strictly below eps: one index, or a handful of indices.
PerturbationPlan random_plan(const MatrixSequence& sys, double eps, Rng& rng, const WindowSpec& w) {
  const int d = sys.dim();
  PerturbationPlan p(d);
  const int count = rng.uniform() < 0.5 ? 1 : 2 + static_cast<int>(rng.next() % 4);
  for (int i = 0; i < count; ++i) {
    const int n = static_cast<int>(rng.next() % static_cast<std::uint64_t>(w.H + 1));
    Matrix Q = rng.gaussian(d, d);
    Q *= eps * rng.uniform(0.05, 0.95) / spectral_norm(Q);
    p.set(n, Q);
  }
  return p;
}

}  // namespace

ApproximationReport bd_approximation_demo(const MatrixSequence& sys, const std::vector<double>& grid,
                                          std::vector<double> eps_list, int n_perturbations, std::uint64_t seed,
                                          const WindowSpec& w, const DichotomyOptions& opt) {
  if (n_perturbations < 1) throw err::invalid("n_perturbations must be >= 1");
  if (eps_list.empty()) throw err::invalid("eps_list is empty");
  for (double e : eps_list)
    if (!(e > 0.0)) throw err::invalid("eps must be positive");
  std::sort(eps_list.begin(), eps_list.end());
  ApproximationReport rep;
  rep.grid = grid;
  const auto base = evaluate_grid(sys, grid, w, opt, true, true);
  for (const auto& v : base) rep.ed.push_back(v.ed);

  // smallest eps first; every plan stays in all larger sets
  Rng rng(seed);
  std::vector<bool> uni(grid.size(), false);
  for (size_t i = 0; i < grid.size(); ++i) uni[i] = base[i].bd == Membership::In;
  int plans = 1;
  double max_norm = 0.0;
  std::vector<ApproximationLevel> asc;
  for (double e : eps_list) {
    for (int k = 0; k < n_perturbations; ++k) {
      PerturbationPlan p = random_plan(sys, e, rng, w);
      MatrixSequence P = apply_plan(sys, p);
      const auto v = evaluate_grid(P, grid, w, opt, false, true);
      for (size_t i = 0; i < grid.size(); ++i) uni[i] = uni[i] || v[i].bd == Membership::In;
      max_norm = std::max(max_norm, p.sup_norm());
      ++plans;
    }
    ApproximationLevel lv;
    lv.eps = e;
    lv.plans = plans;
    lv.max_plan_norm = max_norm;
    lv.union_in = uni;
    asc.push_back(lv);
  }
  // decreasing eps: intersection of the unions seen so far
  std::reverse(asc.begin(), asc.end());
  std::vector<bool> inter(grid.size(), true);
  rep.monotone = true;
  const std::vector<bool>* wider = nullptr;
  for (auto& lv : asc) {
    if (wider)
      for (size_t i = 0; i < grid.size(); ++i)
        if (lv.union_in[i] && !(*wider)[i]) rep.monotone = false;
    wider = &lv.union_in;
    std::vector<bool> next(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) next[i] = inter[i] && lv.union_in[i];
    for (size_t i = 0; i < grid.size(); ++i)
      if (next[i] && !inter[i]) rep.monotone = false;
    inter = next;
    lv.intersection = inter;
    for (size_t i = 0; i < grid.size(); ++i) {
      if (rep.ed[i] == Membership::Inconclusive) continue;
      if (inter[i] && rep.ed[i] == Membership::Out) ++lv.extra_vs_ed;
      if (!inter[i] && rep.ed[i] == Membership::In) ++lv.missing_vs_ed;
    }
  }
  rep.levels = asc;
  rep.matches_ed = !asc.empty() && asc.back().extra_vs_ed == 0 && asc.back().missing_vs_ed == 0;
  return rep;
}

}  // namespace bohlkit
