#include "bohlkit/bohl.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "bohlkit/triangular.hpp"

namespace bohlkit {

namespace {

std::atomic<int> g_threads{1};

struct Cand {
  double v;
  int m;
  int n;
};

// total order: better extremum first, then smaller (m, n)
bool better_upper(const Cand& a, const Cand& b) {
  if (a.v != b.v) return a.v > b.v;
  if (a.m != b.m) return a.m < b.m;
  return a.n < b.n;
}
bool better_lower(const Cand& a, const Cand& b) {
  if (a.v != b.v) return a.v < b.v;
  if (a.m != b.m) return a.m < b.m;
  return a.n < b.n;
}

constexpr double kNone = std::numeric_limits<double>::quiet_NaN();

struct Buckets {
  std::vector<Cand> up, lo;
  explicit Buckets(size_t nb) : up(nb, Cand{kNone, -1, -1}), lo(nb, Cand{kNone, -1, -1}) {}
  void offer(size_t b, const Cand& c) {
    if (up[b].m < 0 || better_upper(c, up[b])) up[b] = c;
    if (lo[b].m < 0 || better_lower(c, lo[b])) lo[b] = c;
  }
  void offer_upper(size_t b, const Cand& c) {
    if (up[b].m < 0 || better_upper(c, up[b])) up[b] = c;
  }
  void offer_lower(size_t b, const Cand& c) {
    if (lo[b].m < 0 || better_lower(c, lo[b])) lo[b] = c;
  }
  void merge(const Buckets& o) {
    for (size_t b = 0; b < up.size(); ++b) {
      if (o.up[b].m >= 0) offer_upper(b, o.up[b]);
      if (o.lo[b].m >= 0) offer_lower(b, o.lo[b]);
    }
  }
};

// bucket index for t = min(m, n-m): largest i with N_i < t, or -1
std::vector<int> bucket_table(const WindowSpec& w) {
  std::vector<int> tab(static_cast<size_t>(w.H) + 1, -1);
  for (int t = 0; t <= w.H; ++t) {
    int b = -1;
    for (size_t i = 0; i < w.N_list.size(); ++i)
      if (w.N_list[i] < t) b = static_cast<int>(i);
    tab[static_cast<size_t>(t)] = b;
  }
  return tab;
}

BohlEstimate finish(const WindowSpec& w, const std::vector<Cand>& bucket, BohlKind kind, double rate) {
  BohlEstimate e;
  e.kind = kind;
  const size_t nb = w.N_list.size();
  Cand acc{kNone, -1, -1};
  std::vector<Cand> best(nb);
  for (size_t i = nb; i-- > 0;) {
    const Cand& c = bucket[i];
    if (c.m >= 0 && (acc.m < 0 || (kind == BohlKind::Upper ? better_upper(c, acc) : better_lower(c, acc))))
      acc = c;
    best[i] = acc;
  }
  for (size_t i = 0; i < nb; ++i) {
    const int N = w.N_list[i];
    if (best[i].m < 0) throw err::empty_window_set(N);
    e.values[N] = best[i].v + rate;
    e.windows[N] = Window{best[i].m, best[i].n};
  }
  e.reported = e.values.rbegin()->second;
  e.achieving_window = e.windows.rbegin()->second;
  return e;
}

template <class F>
void parallel_rows(int count, F&& body) {
  const int T = std::max(1, std::min(g_threads.load(), count));
  if (T == 1) {
    body(0, 0, count);
    return;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < T; ++t) {
    pool.emplace_back([&, t] {
      // interleaved rows balance the triangular workload
      body(t, t, count);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

void set_thread_count(int n) { g_threads.store(std::max(1, n)); }
int thread_count() { return g_threads.load(); }

WindowSpec WindowSpec::for_horizon(int H) {
  WindowSpec w;
  w.H = H;
  w.enumeration = H <= 4096 ? Enumeration::AllPairs : Enumeration::DyadicSubsample;
  // short horizons keep only the thresholds that still leave windows
  std::erase_if(w.N_list, [H](int N) { return 2 * static_cast<long>(N) >= H; });
  return w;
}

WindowSpec WindowSpec::make(std::vector<int> N_list, int H) {
  WindowSpec w = for_horizon(H);
  w.N_list = std::move(N_list);
  return w;
}

void WindowSpec::validate() const {
  if (N_list.empty()) throw err::invalid("N_list is empty");
  for (size_t i = 0; i < N_list.size(); ++i) {
    if (N_list[i] < 0) throw err::invalid("negative window threshold");
    if (i > 0 && N_list[i] <= N_list[i - 1]) throw err::invalid("N_list must be increasing");
  }
  if (2 * static_cast<long>(N_list.back()) >= H) throw err::invalid("max(N_list) must be below H/2");
}

std::vector<int> WindowSpec::indices() const {
  std::vector<int> idx;
  if (enumeration == Enumeration::AllPairs) {
    idx.resize(static_cast<size_t>(H) + 1);
    for (int i = 0; i <= H; ++i) idx[static_cast<size_t>(i)] = i;
    return idx;
  }
  int stride = 1;
  while (H / stride > 4096) stride *= 2;
  for (int i = 0; i <= H; i += stride) idx.push_back(i);
  if (idx.back() != H) idx.push_back(H);
  return idx;
}

BohlPair scan_log_sequence(const std::vector<double>& L, double rate, const WindowSpec& w) {
  w.validate();
  if (static_cast<int>(L.size()) < w.H + 1) throw err::horizon_exceeded(w.H);
  const auto tab = bucket_table(w);
  const auto idx = w.indices();
  const int N0 = w.min_N();
  const size_t nb = w.N_list.size();
  std::vector<Buckets> part(static_cast<size_t>(std::max(1, g_threads.load())), Buckets(nb));
  const int rows = static_cast<int>(idx.size());
  parallel_rows(rows, [&](int tid, int start, int count) {
    Buckets& B = part[static_cast<size_t>(tid)];
    const int step = std::max(1, std::min(g_threads.load(), count));
    for (int a = start; a < count; a += step) {
      const int m = idx[static_cast<size_t>(a)];
      if (m <= N0) continue;
      const double Lm = L[static_cast<size_t>(m)];
      for (size_t c = static_cast<size_t>(a) + 1; c < idx.size(); ++c) {
        const int n = idx[c];
        const int gap = n - m;
        if (gap <= N0) continue;
        const int b = tab[static_cast<size_t>(std::min(m, gap))];
        B.offer(static_cast<size_t>(b), Cand{(L[static_cast<size_t>(n)] - Lm) / gap, m, n});
      }
    }
  });
  for (size_t t = 1; t < part.size(); ++t) part[0].merge(part[t]);
  return {finish(w, part[0].up, BohlKind::Upper, rate), finish(w, part[0].lo, BohlKind::Lower, rate)};
}

std::vector<double> core_log_trajectory(const MatrixSequence& sys, const Vector& x0, int H) {
  if (x0.size() != sys.dim()) throw err::dimension_mismatch("initial vector");
  if (H > sys.horizon()) throw err::horizon_exceeded(H);
  auto O = sys.oracle();
  ScaledVector v = make_scaled(x0);
  std::vector<double> L(static_cast<size_t>(H) + 1);
  // the starting log is common to all windows, start from 0 so scalar multiples agree exactly
  double acc = 0.0;
  L[0] = acc;
  for (int k = 0; k < H; ++k) {
    v.unit = O->core(k) * v.unit;
    const double s = v.unit.norm();
    v.unit /= s;
    acc += std::log(s);
    L[static_cast<size_t>(k) + 1] = acc;
  }
  return L;
}

BohlPair bohl_vector(const MatrixSequence& sys, const Vector& x0, const WindowSpec& w) {
  w.validate();
  if (w.H > sys.horizon()) throw err::horizon_exceeded(w.H);
  const auto L = core_log_trajectory(sys, x0, w.H);
  return scan_log_sequence(L, sys.oracle()->rate(), w);
}

BohlEstimate upper_bohl_vector(const MatrixSequence& sys, const Vector& x0, const WindowSpec& w) {
  return bohl_vector(sys, x0, w).upper;
}
BohlEstimate lower_bohl_vector(const MatrixSequence& sys, const Vector& x0, const WindowSpec& w) {
  return bohl_vector(sys, x0, w).lower;
}

namespace {

// upper: rows by m, forward products Phi(n, m); lower: rows by n, backward Phi(m, n).
std::vector<Cand> space_scan(const MatrixSequence& sys, const WindowSpec& w, BohlKind kind) {
  w.validate();
  if (w.H > sys.horizon()) throw err::horizon_exceeded(w.H);
  auto O = sys.oracle();
  const int d = sys.dim();
  const auto tab = bucket_table(w);
  const auto idx = w.indices();
  std::vector<char> in_idx(static_cast<size_t>(w.H) + 1, 0);
  for (int i : idx) in_idx[static_cast<size_t>(i)] = 1;
  const int N0 = w.min_N();
  const int H = w.H;
  const size_t nb = w.N_list.size();
  std::vector<Buckets> part(static_cast<size_t>(std::max(1, g_threads.load())), Buckets(nb));
  const int rows = static_cast<int>(idx.size());
  parallel_rows(rows, [&](int tid, int start, int count) {
    Buckets& Bk = part[static_cast<size_t>(tid)];
    const int step = std::max(1, std::min(g_threads.load(), count));
    Matrix P(d, d), T(d, d);
    for (int a = start; a < count; a += step) {
      if (kind == BohlKind::Upper) {
        const int m = idx[static_cast<size_t>(a)];
        if (m <= N0 || m + N0 + 1 > H) continue;
        P.setIdentity();
        double acc = 0.0;
        for (int k = m; k < H; ++k) {
          T.noalias() = O->core(k) * P;
          const double s = spectral_norm(T);
          acc += std::log(s);
          P = T / s;
          const int n = k + 1;
          const int gap = n - m;
          if (gap <= N0 || !in_idx[static_cast<size_t>(n)]) continue;
          const int b = tab[static_cast<size_t>(std::min(m, gap))];
          Bk.offer_upper(static_cast<size_t>(b), Cand{acc / gap, m, n});
        }
      } else {
        const int n = idx[static_cast<size_t>(a)];
        if (n < 2 * N0 + 2) continue;
        P.setIdentity();
        double acc = 0.0;  // ln ||Phi(m, n)||
        for (int k = n - 1; k > N0; --k) {
          T.noalias() = O->core_inv(k) * P;
          const double s = spectral_norm(T);
          acc += std::log(s);
          P = T / s;
          const int m = k;
          const int gap = n - m;
          if (gap <= N0 || !in_idx[static_cast<size_t>(m)]) continue;
          const int b = tab[static_cast<size_t>(std::min(m, gap))];
          Bk.offer_lower(static_cast<size_t>(b), Cand{-acc / gap, m, n});
        }
      }
    }
  });
  for (size_t t = 1; t < part.size(); ++t) part[0].merge(part[t]);
  return kind == BohlKind::Upper ? part[0].up : part[0].lo;
}

}  // namespace

BohlEstimate upper_bohl_space(const MatrixSequence& sys, const WindowSpec& w) {
  auto b = space_scan(sys, w, BohlKind::Upper);
  return finish(w, b, BohlKind::Upper, sys.oracle()->rate());
}

BohlEstimate lower_bohl_space(const MatrixSequence& sys, const WindowSpec& w) {
  auto b = space_scan(sys, w, BohlKind::Lower);
  return finish(w, b, BohlKind::Lower, sys.oracle()->rate());
}

BohlPair bohl_space(const MatrixSequence& sys, const WindowSpec& w) {
  return {upper_bohl_space(sys, w), lower_bohl_space(sys, w)};
}

BohlPair bohl_on_subspace(const MatrixSequence& sys, const std::vector<Vector>& L_basis,
                          const WindowSpec& w) {
  const TriangularForm form = triangularize(sys, L_basis, w.H);
  return bohl_space(subsystem(form), w);
}

}  // namespace bohlkit
