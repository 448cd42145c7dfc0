#include "bohlkit/io.hpp"

#include <charconv>
#include <cstring>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "bohlkit/nu_instance.hpp"

namespace bohlkit::io {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double x = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  if (b != e && *b == '+') ++b;
  const auto r = std::from_chars(b, e, x);
  if (r.ec != std::errc() || r.ptr != e) throw err::invalid("not a decimal number: '" + s + "'");
  return x;
}

double number_from_json(const json& j) {
  if (j.is_string()) return parse_double(j.get<std::string>());
  if (j.is_number()) return j.get<double>();
  throw err::invalid("expected a number or decimal string");
}

json matrix_to_json(const Matrix& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index k = 0; k < M.cols(); ++k) r.push_back(format_double(M(i, k)));
    rows.push_back(r);
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw err::invalid("matrix must be a non-empty array of rows");
  const size_t r = j.size();
  const size_t c = j[0].is_array() ? j[0].size() : 0;
  if (c == 0) throw err::invalid("matrix rows must be non-empty arrays");
  Matrix M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  for (size_t i = 0; i < r; ++i) {
    if (!j[i].is_array() || j[i].size() != c) throw err::dimension_mismatch("ragged matrix");
    for (size_t k = 0; k < c; ++k)
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = number_from_json(j[i][k]);
  }
  return M;
}

json vector_to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(format_double(v(i)));
  return a;
}

Vector vector_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw err::invalid("vector must be a non-empty array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number_from_json(j[i]);
  return v;
}

json to_json(const PerturbationPlan& p) {
  json j;
  j["dimension"] = p.dimension;
  json sup = json::array();
  for (const auto& [n, Q] : p.support) sup.push_back({{"index", n}, {"matrix", matrix_to_json(Q)}});
  j["support"] = sup;
  j["sup_norm"] = format_double(p.sup_norm());
  if (p.decay_schedule) {
    json s = json::array();
    for (const auto& [n, b] : *p.decay_schedule) s.push_back({{"index", n}, {"bound", format_double(b)}});
    j["decay_schedule"] = s;
  }
  return j;
}

PerturbationPlan plan_from_json(const json& j) {
  PerturbationPlan p(j.at("dimension").get<int>());
  for (const auto& e : j.at("support")) {
    Matrix Q = matrix_from_json(e.at("matrix"));
    if (Q.rows() != p.dimension || Q.cols() != p.dimension) throw err::dimension_mismatch("plan entry");
    p.support.emplace(e.at("index").get<int>(), std::move(Q));
  }
  if (j.contains("decay_schedule"))
    for (const auto& e : j.at("decay_schedule")) p.set_schedule(e.at("index").get<int>(), number_from_json(e.at("bound")));
  return p;
}

json to_json(const WindowSpec& w) {
  return {{"N", w.N_list},
          {"H", w.H},
          {"enumeration", w.enumeration == WindowSpec::Enumeration::AllPairs ? "all_pairs" : "dyadic"}};
}

WindowSpec windows_from_json(const json& j, int default_H) {
  const int H = j.contains("H") ? j.at("H").get<int>() : default_H;
  WindowSpec w = j.contains("N") ? WindowSpec::make(j.at("N").get<std::vector<int>>(), H) : WindowSpec::for_horizon(H);
  if (j.contains("enumeration")) {
    const auto e = j.at("enumeration").get<std::string>();
    if (e == "all_pairs") w.enumeration = WindowSpec::Enumeration::AllPairs;
    else if (e == "dyadic") w.enumeration = WindowSpec::Enumeration::DyadicSubsample;
    else throw err::invalid("unknown enumeration '" + e + "'");
  }
  w.validate();
  return w;
}

json to_json(const BohlEstimate& e) {
  json j;
  j["kind"] = e.kind == BohlKind::Upper ? "upper" : "lower";
  json vals = json::array();
  for (const auto& [N, v] : e.values) {
    const Window& win = e.windows.at(N);
    vals.push_back({{"N", N}, {"value", format_double(v)}, {"m", win.m}, {"n", win.n}});
  }
  j["values"] = vals;
  j["reported"] = format_double(e.reported);
  j["window"] = {e.achieving_window.m, e.achieving_window.n};
  return j;
}

BohlEstimate estimate_from_json(const json& j) {
  BohlEstimate e;
  const auto k = j.at("kind").get<std::string>();
  if (k != "upper" && k != "lower") throw err::invalid("estimate kind");
  e.kind = k == "upper" ? BohlKind::Upper : BohlKind::Lower;
  for (const auto& v : j.at("values")) {
    const int N = v.at("N").get<int>();
    e.values[N] = number_from_json(v.at("value"));
    e.windows[N] = Window{v.at("m").get<int>(), v.at("n").get<int>()};
  }
  e.reported = number_from_json(j.at("reported"));
  e.achieving_window = Window{j.at("window").at(0).get<int>(), j.at("window").at(1).get<int>()};
  return e;
}

namespace {
json vectors_to_json(const std::vector<Vector>& vs) {
  json a = json::array();
  for (const auto& v : vs) a.push_back(vector_to_json(v));
  return a;
}
std::vector<Vector> vectors_from_json(const json& j) {
  std::vector<Vector> out;
  for (const auto& v : j) out.push_back(vector_from_json(v));
  return out;
}
TriState tri_from(const std::string& s) {
  if (s == "holds") return TriState::Holds;
  if (s == "fails") return TriState::Fails;
  if (s == "inconclusive") return TriState::Inconclusive;
  throw err::invalid("unknown verdict state '" + s + "'");
}
Membership member_from(const std::string& s) {
  if (s == "in") return Membership::In;
  if (s == "out") return Membership::Out;
  if (s == "inconclusive") return Membership::Inconclusive;
  throw err::invalid("unknown membership '" + s + "'");
}
json fits_to_json(const std::vector<SampleFit>& fs) {
  json a = json::array();
  for (const auto& f : fs)
    a.push_back({{"x0", vector_to_json(f.x0)}, {"exponent", format_double(f.exponent)},
                 {"constant", format_double(f.constant)}});
  return a;
}
std::vector<SampleFit> fits_from_json(const json& j) {
  std::vector<SampleFit> out;
  for (const auto& f : j)
    out.push_back({vector_from_json(f.at("x0")), number_from_json(f.at("exponent")), number_from_json(f.at("constant"))});
  return out;
}
bool same_double(double a, double b) {
  return (std::isnan(a) && std::isnan(b)) || std::memcmp(&a, &b, sizeof a) == 0;
}
bool same_vec(const Vector& a, const Vector& b) { return bit_equal(a, b); }
bool same_vecs(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (!same_vec(a[i], b[i])) return false;
  return true;
}
bool same_fits(const std::vector<SampleFit>& a, const std::vector<SampleFit>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (!same_vec(a[i].x0, b[i].x0) || !same_double(a[i].exponent, b[i].exponent) ||
        !same_double(a[i].constant, b[i].constant))
      return false;
  return true;
}
json members_to_json(const std::vector<Membership>& m) {
  json a = json::array();
  for (auto x : m) a.push_back(to_string(x));
  return a;
}
std::vector<Membership> members_from_json(const json& j) {
  std::vector<Membership> out;
  for (const auto& x : j) out.push_back(member_from(x.get<std::string>()));
  return out;
}
}  // namespace

json to_json(const Splitting& s) { return {{"basis1", vectors_to_json(s.basis1)}, {"basis2", vectors_to_json(s.basis2)}}; }

Splitting splitting_from_json(const json& j) {
  Splitting s;
  if (j.contains("basis1")) s.basis1 = vectors_from_json(j.at("basis1"));
  if (j.contains("basis2")) s.basis2 = vectors_from_json(j.at("basis2"));
  return s;
}

json to_json(const EDVerdict& v) {
  return {{"holds", v.holds}, {"state", to_string(v.state)}, {"alpha", format_double(v.alpha)},
          {"K", format_double(v.K)}, {"margin1", format_double(v.margin1)}, {"margin2", format_double(v.margin2)}};
}

EDVerdict ed_verdict_from_json(const json& j) {
  EDVerdict v;
  v.holds = j.at("holds").get<bool>();
  v.state = tri_from(j.at("state").get<std::string>());
  v.alpha = number_from_json(j.at("alpha"));
  v.K = number_from_json(j.at("K"));
  v.margin1 = number_from_json(j.at("margin1"));
  v.margin2 = number_from_json(j.at("margin2"));
  return v;
}

json to_json(const BDVerdict& v) {
  return {{"holds", v.holds}, {"state", to_string(v.state)}, {"alpha", format_double(v.alpha)},
          {"c1_samples", fits_to_json(v.c1_samples)}, {"c2_samples", fits_to_json(v.c2_samples)}};
}

BDVerdict bd_verdict_from_json(const json& j) {
  BDVerdict v;
  v.holds = j.at("holds").get<bool>();
  v.state = tri_from(j.at("state").get<std::string>());
  v.alpha = number_from_json(j.at("alpha"));
  v.c1_samples = fits_from_json(j.at("c1_samples"));
  v.c2_samples = fits_from_json(j.at("c2_samples"));
  return v;
}

json to_json(const Witness& w) {
  return {{"x0", vector_to_json(w.x0)}, {"lower", format_double(w.lower)}, {"upper", format_double(w.upper)},
          {"index", w.index}};
}

Witness witness_from_json(const json& j) {
  return Witness{vector_from_json(j.at("x0")), number_from_json(j.at("lower")), number_from_json(j.at("upper")),
                 j.at("index").get<int>()};
}

json to_json(const SpectrumSample& s) {
  json g = json::array();
  for (double x : s.grid) g.push_back(format_double(x));
  auto iv = [](const std::vector<std::pair<double, double>>& v) {
    json a = json::array();
    for (const auto& [lo, hi] : v) a.push_back({format_double(lo), format_double(hi)});
    return a;
  };
  return {{"grid", g},
          {"ed", members_to_json(s.ed)},
          {"bd", members_to_json(s.bd)},
          {"ed_intervals", iv(s.ed_intervals)},
          {"bd_intervals", iv(s.bd_intervals)}};
}

SpectrumSample spectrum_from_json(const json& j) {
  SpectrumSample s;
  for (const auto& x : j.at("grid")) s.grid.push_back(number_from_json(x));
  s.ed = members_from_json(j.at("ed"));
  s.bd = members_from_json(j.at("bd"));
  auto iv = [](const json& a) {
    std::vector<std::pair<double, double>> out;
    for (const auto& p : a) out.emplace_back(number_from_json(p.at(0)), number_from_json(p.at(1)));
    return out;
  };
  s.ed_intervals = iv(j.at("ed_intervals"));
  s.bd_intervals = iv(j.at("bd_intervals"));
  if ((!s.ed.empty() && s.ed.size() != s.grid.size()) || (!s.bd.empty() && s.bd.size() != s.grid.size()))
    throw err::dimension_mismatch("spectrum verdicts vs grid");
  return s;
}

json to_json(const RotationCertificate& c) {
  return {{"trivial", c.trivial},
          {"index", c.index},
          {"eps", format_double(c.eps)},
          {"q_norm", format_double(c.q_norm)},
          {"q_bound", format_double(c.q_bound)},
          {"growth_ratio", format_double(c.growth_ratio)},
          {"growth_bound", format_double(c.growth_bound)},
          {"growth_slack", format_double(c.growth_slack)},
          {"norm_residual", format_double(c.norm_residual)},
          {"cond_base", format_double(c.cond_base)},
          {"cond_perturbed", format_double(c.cond_perturbed)},
          {"passed", c.passed}};
}

json to_json(const SubsequencePair& s) {
  json a = json::array();
  for (size_t i = 0; i < s.pairs.size(); ++i)
    a.push_back({{"tau", s.pairs[i].first},
                 {"s", s.pairs[i].second},
                 {"eps", format_double(s.epsilons[i])},
                 {"log_norm", format_double(s.log_norms[i])}});
  return a;
}

json to_json(const DestroyResult& r) {
  json st = json::array();
  for (const auto& s : r.stages) {
    json e = {{"j", s.j},
              {"even", s.even},
              {"start", s.start},
              {"end", s.end},
              {"eps_j", format_double(s.eps_j)},
              {"ratio", format_double(s.ratio)},
              {"bound", format_double(s.bound)},
              {"verified", s.verified}};
    if (s.even) {
      e["eps_l"] = format_double(s.eps_l);
      e["q_norm"] = format_double(s.q_norm);
      e["q_bound"] = format_double(s.q_bound);
      e["rotation"] = to_json(s.rotation);
    }
    st.push_back(e);
  }
  return {{"z0", vector_to_json(r.z0)},
          {"alpha", format_double(r.alpha)},
          {"b", format_double(r.b)},
          {"exhausted_stage", r.exhausted_stage},
          {"subsequence", to_json(r.subsequence)},
          {"stages", st},
          {"all_verified", r.all_verified()},
          {"plan", to_json(r.plan)}};
}

json to_json(const SlowResult& r) {
  json st = json::array();
  for (const auto& s : r.stages)
    st.push_back({{"q", s.q},
                  {"tau", s.tau},
                  {"s", s.s},
                  {"eps", format_double(s.eps)},
                  {"lhs", format_double(s.lhs)},
                  {"rhs", format_double(s.rhs)},
                  {"window_rate", format_double(s.window_rate)},
                  {"window_bound", format_double(s.window_bound)},
                  {"rotation", to_json(s.rotation)},
                  {"verified", s.verified}});
  return {{"v0", vector_to_json(r.v0)},
          {"lower", format_double(r.lower)},
          {"upper", format_double(r.upper)},
          {"subsequence", to_json(r.subsequence)},
          {"stages", st},
          {"all_verified", r.all_verified()},
          {"plan", to_json(r.plan)}};
}

json to_json(const PipelineResult& r) {
  json steps = json::array();
  for (const auto& s : r.steps)
    steps.push_back({{"name", s.name}, {"budget", format_double(s.budget)}, {"sup_norm", format_double(s.sup_norm)}});
  json j = {{"branch", r.branch},
            {"steps", steps},
            {"witness", to_json(r.witness)},
            {"witness_verified", r.witness_verified},
            {"plan", to_json(r.plan)}};
  if (r.destroy) j["destroy"] = to_json(*r.destroy);
  if (r.slow) j["slow"] = to_json(*r.slow);
  return j;
}

json to_json(const EquivalenceReport& r) {
  return {{"equivalence_residual", format_double(r.equivalence_residual)},
          {"invariance_residual", format_double(r.invariance_residual)},
          {"orthogonality_residual", format_double(r.orthogonality_residual)},
          {"below_diagonal", format_double(r.below_diagonal)},
          {"gs_residual", format_double(r.gs_residual)},
          {"sampled_n", r.sampled_n},
          {"passed", r.passed}};
}

json system_to_json(const MatrixSequence& s) {
  using K = MatrixSequence::Kind;
  const auto& N = s.node();
  json j;
  j["horizon"] = N.horizon;
  switch (N.kind) {
    case K::Constant:
      j["kind"] = "constant";
      j["matrix"] = matrix_to_json(N.mats[0]);
      break;
    case K::Periodic: {
      j["kind"] = "periodic";
      json p = json::array();
      for (const auto& M : N.mats) p.push_back(matrix_to_json(M));
      j["period"] = p;
      break;
    }
    case K::BlockSchedule: {
      j["kind"] = "block_schedule";
      json b = json::array();
      for (size_t i = 0; i < N.mats.size(); ++i)
        b.push_back({{"length", N.lengths[i]}, {"matrix", matrix_to_json(N.mats[i])}});
      j["blocks"] = b;
      break;
    }
    case K::Explicit: {
      j["kind"] = "explicit";
      json p = json::array();
      for (const auto& M : N.mats) p.push_back(matrix_to_json(M));
      j["prefix"] = p;
      if (N.base) j["tail"] = system_to_json(*N.base);
      break;
    }
    case K::Perturbed:
      j["kind"] = "perturbed";
      j["base"] = system_to_json(*N.base);
      j["plan"] = to_json(N.plan);
      break;
    case K::Scaled:
      j["kind"] = "scaled";
      j["base"] = system_to_json(*N.base);
      j["rate"] = format_double(N.rate);
      break;
  }
  return j;
}

namespace {
std::vector<Matrix> matrices_from_json(const json& j) {
  std::vector<Matrix> out;
  for (const auto& m : j) out.push_back(matrix_from_json(m));
  return out;
}
}  // namespace

MatrixSequence system_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  const int H = j.contains("horizon") ? j.at("horizon").get<int>() : kDefaultHorizon;
  if (H < 0) throw err::invalid("negative horizon");
  if (kind == "constant") return MatrixSequence::constant(matrix_from_json(j.at("matrix")), H);
  if (kind == "periodic") return MatrixSequence::periodic(matrices_from_json(j.at("period")), H);
  if (kind == "block_schedule") {
    std::vector<std::pair<int, Matrix>> blocks;
    for (const auto& b : j.at("blocks")) blocks.emplace_back(b.at("length").get<int>(), matrix_from_json(b.at("matrix")));
    return MatrixSequence::block_schedule(std::move(blocks), H);
  }
  if (kind == "explicit") {
    std::optional<MatrixSequence> tail;
    if (j.contains("tail")) tail = system_from_json(j.at("tail"));
    return MatrixSequence::explicit_sequence(j.contains("prefix") ? matrices_from_json(j.at("prefix")) : std::vector<Matrix>{},
                                             tail, H);
  }
  if (kind == "perturbed") return MatrixSequence::perturbed(system_from_json(j.at("base")), plan_from_json(j.at("plan")));
  if (kind == "scaled") return MatrixSequence::scaled(system_from_json(j.at("base")), number_from_json(j.at("rate")));
  if (kind == "diagonal_exp") {
    const Vector r = vector_from_json(j.at("rates"));
    return MatrixSequence::constant(Matrix(r.array().exp().matrix().asDiagonal()), H);
  }
  if (kind == "nu" || kind == "nu_pipeline") {
    NUParams p;
    p.horizon = H;
    if (j.contains("mu")) p.mu = number_from_json(j.at("mu"));
    if (j.contains("lambda")) p.lambda = number_from_json(j.at("lambda"));
    if (j.contains("growth")) p.growth = number_from_json(j.at("growth"));
    if (j.contains("coupling")) p.coupling = number_from_json(j.at("coupling"));
    if (j.contains("E0")) p.E0 = j.at("E0").get<int>();
    if (j.contains("ratio")) p.ratio = j.at("ratio").get<int>();
    if (j.contains("growth_fraction")) p.growth_fraction = number_from_json(j.at("growth_fraction"));
    return kind == "nu" ? nu_instance(p) : nu_pipeline_system(p);
  }
  if (kind == "random_lyapunov") {
    if (!j.contains("seed")) throw err::invalid("random_lyapunov needs a seed");
    return random_lyapunov(j.at("dim").get<int>(), H, j.at("seed").get<std::uint64_t>(),
                           j.contains("spread") ? number_from_json(j.at("spread")) : 1.0);
  }
  if (kind == "identity") return MatrixSequence::constant(Matrix::Identity(j.at("dim").get<int>(), j.at("dim").get<int>()), H);
  throw err::invalid("unknown system kind '" + kind + "'");
}

bool bit_equal(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (!same_double(a.data()[i], b.data()[i])) return false;
  return true;
}

bool same(const EDVerdict& a, const EDVerdict& b) {
  return a.holds == b.holds && a.state == b.state && same_double(a.alpha, b.alpha) && same_double(a.K, b.K) &&
         same_double(a.margin1, b.margin1) && same_double(a.margin2, b.margin2);
}

bool same(const BDVerdict& a, const BDVerdict& b) {
  return a.holds == b.holds && a.state == b.state && same_double(a.alpha, b.alpha) &&
         same_fits(a.c1_samples, b.c1_samples) && same_fits(a.c2_samples, b.c2_samples);
}

bool same(const Splitting& a, const Splitting& b) { return same_vecs(a.basis1, b.basis1) && same_vecs(a.basis2, b.basis2); }

bool same(const Witness& a, const Witness& b) {
  return same_vec(a.x0, b.x0) && same_double(a.lower, b.lower) && same_double(a.upper, b.upper) && a.index == b.index;
}

bool same(const SpectrumSample& a, const SpectrumSample& b) {
  if (a.grid.size() != b.grid.size() || a.ed != b.ed || a.bd != b.bd) return false;
  for (size_t i = 0; i < a.grid.size(); ++i)
    if (!same_double(a.grid[i], b.grid[i])) return false;
  auto iv = [](const auto& x, const auto& y) {
    if (x.size() != y.size()) return false;
    for (size_t i = 0; i < x.size(); ++i)
      if (!same_double(x[i].first, y[i].first) || !same_double(x[i].second, y[i].second)) return false;
    return true;
  };
  return iv(a.ed_intervals, b.ed_intervals) && iv(a.bd_intervals, b.bd_intervals);
}

bool same_coefficients(const MatrixSequence& a, const MatrixSequence& b, int H) {
  if (a.dim() != b.dim() || a.horizon() != b.horizon()) return false;
  for (int n = 0; n <= H; ++n)
    if (!bit_equal(a.at(n), b.at(n))) return false;
  return true;
}

Csv& Csv::row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) throw err::dimension_mismatch("csv row width");
  rows_.push_back(std::move(cells));
  return *this;
}

std::string Csv::str() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& r) {
    for (size_t i = 0; i < r.size(); ++i) {
      if (i) out += ',';
      out += r[i];
    }
    out += '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return out;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw err::invalid("cannot open " + tmp.string() + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.flush();
    if (!f) throw err::invalid("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw err::invalid("rename to " + path.string() + " failed: " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw err::invalid("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace bohlkit::io
