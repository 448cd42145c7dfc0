#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bohlkit/bohl.hpp"
#include "bohlkit/dichotomy.hpp"
#include "bohlkit/errors.hpp"
#include "bohlkit/io.hpp"
#include "bohlkit/nu_instance.hpp"
#include "bohlkit/scenario.hpp"
#include "bohlkit/spectrum.hpp"
#include "bohlkit/system.hpp"
#include "bohlkit/verification.hpp"

namespace py = pybind11;
using namespace bohlkit;

namespace {

WindowSpec windows_for(const MatrixSequence& s, std::optional<std::vector<int>> N_list) {
  return N_list ? WindowSpec::make(*N_list, s.horizon()) : WindowSpec::for_horizon(s.horizon());
}

// JSON crosses the boundary as text; the package wrapper decodes it
std::string dump(const io::json& j) { return j.dump(); }

}  // namespace

PYBIND11_MODULE(_bohlkit, m) {
  m.doc() = "Bohl exponents and dichotomies of linear difference systems";

  static py::exception<Error> exc(m, "BohlkitError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetObject(exc.ptr(), py::make_tuple(e.what(), e.name(), e.index(), exit_code_for(e.error_class())).ptr());
    }
  });

  py::class_<MatrixSequence>(m, "System")
      .def_property_readonly("dim", &MatrixSequence::dim)
      .def_property_readonly("horizon", &MatrixSequence::horizon)
      .def("at", &MatrixSequence::at, py::arg("n"))
      .def("with_horizon", &MatrixSequence::with_horizon, py::arg("horizon"))
      .def("to_json", [](const MatrixSequence& s) { return dump(io::system_to_json(s)); });

  m.def("constant", [](const Matrix& M, int H) { return MatrixSequence::constant(M, H); }, py::arg("matrix"),
        py::arg("horizon"));
  m.def("periodic", [](std::vector<Matrix> p, int H) { return MatrixSequence::periodic(std::move(p), H); },
        py::arg("period"), py::arg("horizon"));
  m.def("random_lyapunov", &random_lyapunov, py::arg("dim"), py::arg("horizon"), py::arg("seed"),
        py::arg("spread") = 1.0);
  m.def("nu_instance", [](int H) {
    NUParams p;
    p.horizon = H;
    return nu_instance(p);
  }, py::arg("horizon") = NUParams{}.horizon);
  m.def("system_from_json", [](const std::string& text) { return io::system_from_json(io::json::parse(text)); },
        py::arg("text"));

  m.def("transition", &transition, py::arg("system"), py::arg("n"), py::arg("m"));
  m.def("log_norm_trajectory", &log_norm_trajectory, py::arg("system"), py::arg("x0"), py::arg("horizon"));

  m.def("bohl_vector", [](const MatrixSequence& s, const Vector& x0, std::optional<std::vector<int>> N) {
    const BohlPair p = bohl_vector(s, x0, windows_for(s, N));
    return std::make_pair(p.lower.reported, p.upper.reported);
  }, py::arg("system"), py::arg("x0"), py::arg("N_list") = py::none(),
        "(lower, upper) Bohl exponents of the solution through x0");
  m.def("bohl_space", [](const MatrixSequence& s, std::optional<std::vector<int>> N) {
    const BohlPair p = bohl_space(s, windows_for(s, N));
    return std::make_pair(p.lower.reported, p.upper.reported);
  }, py::arg("system"), py::arg("N_list") = py::none());

  m.def("search_splitting", [](const MatrixSequence& s, std::uint64_t seed) -> std::optional<std::string> {
    DichotomyOptions o;
    o.seed = seed;
    const auto sp = search_splitting(s, WindowSpec::for_horizon(s.horizon()), o);
    if (!sp) return std::nullopt;
    return dump(io::to_json(*sp));
  }, py::arg("system"), py::arg("seed"));
  m.def("check_ed", [](const MatrixSequence& s, const std::vector<Vector>& L1, const std::vector<Vector>& L2) {
    Splitting sp{L1, L2};
    return dump(io::to_json(check_ed(s, sp, WindowSpec::for_horizon(s.horizon()))));
  }, py::arg("system"), py::arg("L1"), py::arg("L2"));
  m.def("check_bd", [](const MatrixSequence& s, const std::vector<Vector>& L1, const std::vector<Vector>& L2,
                       std::uint64_t seed) {
    Splitting sp{L1, L2};
    return dump(io::to_json(check_bd(s, sp, default_samples(s.dim(), seed), WindowSpec::for_horizon(s.horizon()))));
  }, py::arg("system"), py::arg("L1"), py::arg("L2"), py::arg("seed"));

  m.def("sample_spectrum", [](const MatrixSequence& s, double from, double to, double step, std::uint64_t seed) {
    DichotomyOptions o;
    o.seed = seed;
    return dump(io::to_json(sample_spectrum(s, make_grid(from, to, step), WindowSpec::for_horizon(s.horizon()), o)));
  }, py::arg("system"), py::arg("start"), py::arg("stop"), py::arg("step"), py::arg("seed"));

  m.def("run_scenario", [](const std::string& text, std::optional<std::string> out_dir) {
    RunOptions o;
    o.out_dir = std::move(out_dir);
    const RunResult r = run_scenario_text(text, o);
    py::dict d;
    d["exit_code"] = r.exit_code;
    d["error"] = r.error_name;
    d["index"] = r.error_index;
    d["message"] = r.message;
    d["artifacts"] = r.artifacts;
    return d;
  }, py::arg("text"), py::arg("out_dir") = py::none());

  m.def("run_criterion", [](int id) {
    const CriterionResult r = run_criterion(id);
    py::dict d;
    d["id"] = r.id;
    d["name"] = r.name;
    d["passed"] = r.passed;
    d["detail"] = r.detail;
    return d;
  }, py::arg("id"));

  m.def("format_double", &io::format_double);
  m.def("parse_double", &io::parse_double);
  m.def("set_thread_count", &set_thread_count);
}
