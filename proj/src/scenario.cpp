#include "bohlkit/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>

#include "bohlkit/nu_instance.hpp"
#include "bohlkit/verification.hpp"

namespace bohlkit {

namespace fs = std::filesystem;
using io::json;

int exit_code_for(ErrorClass c) {
  switch (c) {
    case ErrorClass::Validation: return 2;
    case ErrorClass::Hypothesis: return 3;
    case ErrorClass::Numeric: return 4;
  }
  return 4;
}

namespace {
bool randomized(const Scenario& s) {
  if (s.task == "dichotomy" || s.task == "spectrum") return true;
  if (s.task == "perturb") {
    const std::string mode = s.params.value("mode", "pipeline");
    return mode != "scaling" && mode != "truncate";
  }
  return false;
}
}  // namespace

Scenario parse_scenario(const json& doc) {
  if (!doc.is_object()) throw err::invalid("scenario must be an object");
  Scenario s;
  if (!doc.contains("schema")) throw err::invalid("missing schema field");
  s.schema = doc.at("schema").get<std::string>();
  if (s.schema != io::kSchema) throw err::invalid("unsupported schema '" + s.schema + "'");
  s.task = doc.at("task").get<std::string>();
  if (std::find(kTasks.begin(), kTasks.end(), s.task) == kTasks.end()) throw err::invalid("unknown task '" + s.task + "'");
  if (doc.contains("system")) {
    s.system_spec = doc.at("system");
    s.system = io::system_from_json(s.system_spec);
  } else if (s.task != "verify") {
    throw err::invalid("missing system");
  }
  if (doc.contains("params")) {
    if (!doc.at("params").is_object()) throw err::invalid("params must be an object");
    s.params = doc.at("params");
  }
  if (doc.contains("seed")) s.seed = doc.at("seed").get<std::uint64_t>();
  if (doc.contains("out")) s.out = doc.at("out").get<std::string>();
  return s;
}

json scenario_to_json(const Scenario& s) {
  json j;
  j["schema"] = s.schema;
  j["task"] = s.task;
  if (s.system) j["system"] = io::system_to_json(*s.system);
  j["params"] = s.params;
  if (s.seed) j["seed"] = *s.seed;
  if (s.out) j["out"] = *s.out;
  return j;
}

namespace {

struct Ctx {
  const Scenario& sc;
  MatrixSequence sys;
  fs::path out;
  std::uint64_t seed;
  RunResult& res;

  void write(const std::string& name, const std::string& content) {
    const fs::path p = out / name;
    io::atomic_write(p, content);
    res.artifacts.push_back(p.string());
  }
  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }
  WindowSpec windows() const {
    const int H = std::min(sys.horizon(), sc.params.value("H", sys.horizon()));
    return sc.params.contains("windows") ? io::windows_from_json(sc.params.at("windows"), H) : WindowSpec::for_horizon(H);
  }
  DichotomyOptions dich() const {
    DichotomyOptions o;
    o.seed = seed;
    if (sc.params.contains("tol_margin")) o.tol_margin = io::number_from_json(sc.params.at("tol_margin"));
    if (sc.params.contains("tol_witness")) o.tol_witness = io::number_from_json(sc.params.at("tol_witness"));
    return o;
  }
  double num(const char* key, double dflt) const {
    return sc.params.contains(key) ? io::number_from_json(sc.params.at(key)) : dflt;
  }
  Vector vec(const char* key, const Vector& dflt) const {
    return sc.params.contains(key) ? io::vector_from_json(sc.params.at(key)) : dflt;
  }
};

void estimate_rows(io::Csv& csv, const std::string& scope, const BohlEstimate& e) {
  const std::string kind = e.kind == BohlKind::Upper ? "upper" : "lower";
  for (const auto& [N, v] : e.values) {
    const Window& w = e.windows.at(N);
    csv.row({scope, kind, io::Csv::num(N), io::Csv::num(v), io::Csv::num(w.m), io::Csv::num(w.n)});
  }
}

void task_simulate(Ctx& c) {
  const int H = std::min(c.sys.horizon(), c.sc.params.value("H", c.sys.horizon()));
  const Vector x0 = c.vec("x0", Vector::Unit(c.sys.dim(), 0));
  if (x0.size() != c.sys.dim()) throw err::dimension_mismatch("x0");
  const auto L = log_norm_trajectory(c.sys, x0, H);
  io::Csv csv({"n", "log_norm", "norm"});
  for (int n = 0; n <= H; ++n) {
    const double l = L[static_cast<size_t>(n)];
    csv.row({io::Csv::num(n), io::Csv::num(l), io::Csv::num(std::exp(l))});
  }
  c.write("simulate.csv", csv.str());
}

void task_exponents(Ctx& c) {
  const WindowSpec w = c.windows();
  io::Csv csv({"scope", "kind", "N", "value", "m", "n"});
  json out;
  out["windows"] = io::to_json(w);
  if (c.sc.params.value("space", true)) {
    const BohlPair p = bohl_space(c.sys, w);
    estimate_rows(csv, "space", p.upper);
    estimate_rows(csv, "space", p.lower);
    out["space"] = {{"upper", io::to_json(p.upper)}, {"lower", io::to_json(p.lower)}};
  }
  json vecs = json::array();
  if (c.sc.params.contains("vectors")) {
    int i = 0;
    for (const auto& v : c.sc.params.at("vectors")) {
      const Vector x0 = io::vector_from_json(v);
      const BohlPair p = bohl_vector(c.sys, x0, w);
      const std::string scope = "vector" + std::to_string(i++);
      estimate_rows(csv, scope, p.upper);
      estimate_rows(csv, scope, p.lower);
      vecs.push_back({{"x0", io::vector_to_json(x0)}, {"upper", io::to_json(p.upper)}, {"lower", io::to_json(p.lower)}});
    }
  }
  out["vectors"] = vecs;
  c.write("exponents.csv", csv.str());
  c.write_json("exponents.json", out);
}

void task_dichotomy(Ctx& c) {
  const WindowSpec w = c.windows();
  const DichotomyOptions o = c.dich();
  json out;
  std::optional<Splitting> sp;
  if (c.sc.params.contains("splitting")) {
    sp = io::splitting_from_json(c.sc.params.at("splitting"));
    out["searched"] = false;
  } else {
    sp = search_splitting(c.sys, w, o);
    out["searched"] = true;
  }
  io::Csv csv({"subspace", "exponent", "constant"});
  if (sp) {
    const EDVerdict ed = check_ed(c.sys, *sp, w, o);
    const BDVerdict bd = check_bd(c.sys, *sp, default_samples(c.sys.dim(), o.seed), w, o);
    out["splitting"] = io::to_json(*sp);
    out["ed"] = io::to_json(ed);
    out["bd"] = io::to_json(bd);
    for (const auto& f : bd.c1_samples) csv.row({"L1", io::Csv::num(f.exponent), io::Csv::num(f.constant)});
    for (const auto& f : bd.c2_samples) csv.row({"L2", io::Csv::num(f.exponent), io::Csv::num(f.constant)});
  } else {
    out["splitting"] = nullptr;
  }
  const auto wit = find_no_bd_witness(c.sys, default_samples(c.sys.dim(), o.seed), w, o);
  out["witness"] = wit ? io::to_json(*wit) : json(nullptr);
  c.write("dichotomy.csv", csv.str());
  c.write_json("dichotomy.json", out);
}

void task_triangularize(Ctx& c) {
  const WindowSpec w = c.windows();
  std::vector<Vector> basis;
  if (c.sc.params.contains("basis"))
    for (const auto& v : c.sc.params.at("basis")) basis.push_back(io::vector_from_json(v));
  else
    basis.push_back(Vector::Unit(c.sys.dim(), 0));
  const TriangularForm f = triangularize(c.sys, basis, w.H);
  const int d = f.d;
  std::vector<std::string> head{"n"};
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) head.push_back("U" + std::to_string(i) + std::to_string(k));
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) head.push_back("B" + std::to_string(i) + std::to_string(k));
  io::Csv csv(head);
  for (int n = 0; n <= f.H; ++n) {
    std::vector<std::string> r{io::Csv::num(n)};
    const Matrix& U = f.U[static_cast<size_t>(n)];
    const Matrix B = f.B(n);
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k) r.push_back(io::Csv::num(U(i, k)));
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k) r.push_back(io::Csv::num(B(i, k)));
    csv.row(std::move(r));
  }
  const EquivalenceReport rep = verify_equivalence(c.sys, f, w);
  const BohlPair sub = bohl_space(subsystem(f), w);
  c.write("triangular.csv", csv.str());
  c.write_json("triangular.json", {{"k", f.k},
                                   {"equivalence", io::to_json(rep)},
                                   {"subsystem_upper", io::to_json(sub.upper)},
                                   {"subsystem_lower", io::to_json(sub.lower)}});
  if (!rep.passed) throw err::certificate_failed("equivalence report");
}

void plan_csv(Ctx& c, const PerturbationPlan& p) {
  io::Csv csv({"index", "norm", "schedule"});
  for (const auto& [n, Q] : p.support) {
    std::string sch;
    if (p.decay_schedule && p.decay_schedule->count(n)) sch = io::Csv::num(p.decay_schedule->at(n));
    csv.row({io::Csv::num(n), io::Csv::num(spectral_norm(Q)), sch});
  }
  c.write("plan.csv", csv.str());
}

void task_perturb(Ctx& c) {
  const WindowSpec w = c.windows();
  const std::string mode = c.sc.params.value("mode", "pipeline");
  PerturbationPlan plan;
  json cert;
  bool ok = true;
  if (mode == "scaling") {
    plan = scaling_plan(c.sys, c.num("delta", 0.0));
  } else if (mode == "truncate") {
    if (!c.sc.params.contains("plan")) throw err::invalid("truncate needs a plan");
    plan = truncate_plan(io::plan_from_json(c.sc.params.at("plan")), c.num("eps", 0.0));
  } else if (mode == "destroy") {
    DestroyOptions o;
    o.budget = c.num("budget", o.budget);
    o.stage_budget = c.sc.params.value("stage_budget", o.stage_budget);
    o.seed = c.seed;
    const std::string v = c.sc.params.value("variant", "strict");
    if (v != "strict" && v != "weak") throw err::invalid("variant must be strict or weak");
    DestroyResult r = destroy_bd_plan(c.sys, c.vec("z0", Vector::Unit(c.sys.dim(), 0)),
                                      v == "strict" ? DestroyVariant::Strict : DestroyVariant::Weak, w, o);
    plan = r.plan;
    ok = r.all_verified();
    cert = io::to_json(r);
  } else if (mode == "slow") {
    SlowOptions o;
    o.budget = c.num("budget", o.budget);
    o.allow_fewer = c.sc.params.value("allow_fewer", false);
    o.seed = c.seed;
    SlowResult r = slow_solution_plan(c.sys, c.num("delta", 0.0), c.sc.params.value("stages", 3), w, o);
    plan = r.plan;
    ok = r.all_verified();
    cert = io::to_json(r);
  } else if (mode == "pipeline") {
    if (!c.sc.params.contains("splitting")) throw err::invalid("pipeline needs a splitting");
    PipelineOptions o;
    o.dich = c.dich();
    PipelineResult r = no_bd_pipeline(c.sys, io::splitting_from_json(c.sc.params.at("splitting")), c.num("eps", 0.2), w, o);
    plan = r.plan;
    ok = r.witness_verified;
    cert = io::to_json(r);
  } else {
    throw err::invalid("unknown perturb mode '" + mode + "'");
  }
  c.write_json("plan.json", io::to_json(plan));
  plan_csv(c, plan);
  if (!cert.is_null()) c.write_json("certificate.json", cert);
  if (!ok) throw err::certificate_failed(mode + " certificate");
}

void task_spectrum(Ctx& c) {
  const WindowSpec w = c.windows();
  std::vector<double> grid;
  if (c.sc.params.contains("grid")) {
    const json& g = c.sc.params.at("grid");
    if (g.is_array())
      for (const auto& x : g) grid.push_back(io::number_from_json(x));
    else
      grid = make_grid(io::number_from_json(g.at("from")), io::number_from_json(g.at("to")),
                       io::number_from_json(g.at("step")));
  } else {
    grid = default_grid();
  }
  const DichotomyOptions o = c.dich();
  const SpectrumSample s = sample_spectrum(c.sys, grid, w, o);
  io::Csv csv({"gamma", "ed_state", "bd_state"});
  for (size_t i = 0; i < grid.size(); ++i) csv.row({io::Csv::num(grid[i]), to_string(s.ed[i]), to_string(s.bd[i])});
  c.write("spectrum.csv", csv.str());
  c.write_json("spectrum.json", io::to_json(s));
  if (c.sc.params.contains("demo")) {
    const json& d = c.sc.params.at("demo");
    std::vector<double> eps;
    for (const auto& e : d.at("eps")) eps.push_back(io::number_from_json(e));
    const ApproximationReport r =
        bd_approximation_demo(c.sys, grid, eps, d.value("n_perturbations", 3), c.seed, w, o);
    io::Csv a({"eps", "plans", "max_plan_norm", "union_in", "intersection_in", "extra_vs_ed", "missing_vs_ed"});
    for (const auto& lv : r.levels) {
      const long u = std::count(lv.union_in.begin(), lv.union_in.end(), true);
      const long n = std::count(lv.intersection.begin(), lv.intersection.end(), true);
      a.row({io::Csv::num(lv.eps), io::Csv::num(lv.plans), io::Csv::num(lv.max_plan_norm), io::Csv::num(u),
             io::Csv::num(n), io::Csv::num(lv.extra_vs_ed), io::Csv::num(lv.missing_vs_ed)});
    }
    c.write("approximation.csv", a.str());
  }
}

void task_verify(Ctx& c) {
  AcceptanceOptions o;
  if (c.sc.params.contains("criteria")) o.only = c.sc.params.at("criteria").get<std::vector<int>>();
  const auto results = run_acceptance(o);
  io::Csv csv({"criterion", "name", "passed", "detail"});
  bool all = true;
  for (const auto& r : results) {
    csv.row({io::Csv::num(r.id), r.name, r.passed ? "1" : "0", "\"" + r.detail + "\""});
    all = all && r.passed;
  }
  c.write("verify.csv", csv.str());
  if (!all) throw err::certificate_failed("acceptance suite");
}

}  // namespace

RunResult run_scenario(const json& doc, const RunOptions& opt) {
  RunResult res;
  try {
    Scenario sc = parse_scenario(doc);
    if (opt.task && *opt.task != sc.task)
      throw err::invalid("subcommand '" + *opt.task + "' does not match scenario task '" + sc.task + "'");
    if (opt.threads) {
      if (*opt.threads < 1) throw err::invalid("threads must be >= 1");
      set_thread_count(*opt.threads);
    }
    if (opt.horizon && sc.system) sc.system = sc.system->with_horizon(*opt.horizon);
    // dense per-step caches: past this the process runs out of memory instead of failing cleanly
    if (sc.system && sc.system->horizon() > kMaxScenarioHorizon)
      throw err::invalid("horizon " + std::to_string(sc.system->horizon()) + " exceeds " +
                         std::to_string(kMaxScenarioHorizon));
    std::optional<std::uint64_t> seed = opt.seed ? opt.seed : sc.seed;
    if (!seed && randomized(sc)) throw err::invalid("task '" + sc.task + "' needs a seed");
    fs::path out;
    if (opt.out_dir) out = *opt.out_dir;
    else if (sc.out) out = *sc.out;
    else if (const char* e = std::getenv("BOHLKIT_OUT"); e && *e) out = e;
    else out = "bohlkit_out";
    Ctx c{sc, sc.system ? *sc.system : MatrixSequence::constant(Matrix::Identity(1, 1), 1), out, seed.value_or(0), res};
    if (sc.task == "simulate") task_simulate(c);
    else if (sc.task == "exponents") task_exponents(c);
    else if (sc.task == "dichotomy") task_dichotomy(c);
    else if (sc.task == "triangularize") task_triangularize(c);
    else if (sc.task == "perturb") task_perturb(c);
    else if (sc.task == "spectrum") task_spectrum(c);
    else task_verify(c);
    res.exit_code = 0;
  } catch (const Error& e) {
    res.exit_code = exit_code_for(e.error_class());
    res.error_name = e.name();
    res.error_index = e.index();
    res.message = e.what();
  } catch (const nlohmann::json::exception& e) {
    res.exit_code = 2;
    res.error_name = "InvalidInput";
    res.message = e.what();
  } catch (const std::exception& e) {
    res.exit_code = 4;
    res.error_name = "NumericFailure";
    res.message = e.what();
  }
  return res;
}

RunResult run_scenario_text(const std::string& text, const RunOptions& opt) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    RunResult r;
    r.exit_code = 2;
    r.error_name = "InvalidInput";
    r.message = e.what();
    return r;
  }
  return run_scenario(doc, opt);
}

}  // namespace bohlkit
