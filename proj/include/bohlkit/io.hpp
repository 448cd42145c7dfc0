#pragma once
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "bohlkit/bohl.hpp"
#include "bohlkit/dichotomy.hpp"
#include "bohlkit/perturbations.hpp"
#include "bohlkit/triangular.hpp"
#include "bohlkit/plan.hpp"
#include "bohlkit/spectrum.hpp"
#include "bohlkit/system.hpp"

namespace bohlkit::io {

using json = nlohmann::ordered_json;

inline constexpr const char* kSchema = "bohlkit/1";

// Shortest decimal that parses back to the same double; "inf", "-inf", "nan" for non-finite.
std::string format_double(double x);
double parse_double(const std::string& s);
// Accepts a decimal string or a JSON number.
double number_from_json(const json& j);

json matrix_to_json(const Matrix& M);  // rows of decimal strings
Matrix matrix_from_json(const json& j);
json vector_to_json(const Vector& v);
Vector vector_from_json(const json& j);

json to_json(const PerturbationPlan& p);
PerturbationPlan plan_from_json(const json& j);

json to_json(const WindowSpec& w);
WindowSpec windows_from_json(const json& j, int default_H);

json to_json(const BohlEstimate& e);
BohlEstimate estimate_from_json(const json& j);

json to_json(const Splitting& s);
Splitting splitting_from_json(const json& j);
json to_json(const EDVerdict& v);
EDVerdict ed_verdict_from_json(const json& j);
json to_json(const BDVerdict& v);
BDVerdict bd_verdict_from_json(const json& j);
json to_json(const Witness& w);
Witness witness_from_json(const json& j);
json to_json(const SpectrumSample& s);
SpectrumSample spectrum_from_json(const json& j);

// Certificates, written for audit (no reader).
json to_json(const RotationCertificate& c);
json to_json(const SubsequencePair& s);
json to_json(const DestroyResult& r);
json to_json(const SlowResult& r);
json to_json(const PipelineResult& r);
json to_json(const EquivalenceReport& r);

// Structural serialization of a sequence; generated kinds are written in materialized form.
json system_to_json(const MatrixSequence& s);
MatrixSequence system_from_json(const json& j);

// Bit-exact comparisons for round-trip checks.
bool bit_equal(const Matrix& a, const Matrix& b);
bool same(const EDVerdict& a, const EDVerdict& b);
bool same(const BDVerdict& a, const BDVerdict& b);
bool same(const Splitting& a, const Splitting& b);
bool same(const Witness& a, const Witness& b);
bool same(const SpectrumSample& a, const SpectrumSample& b);
bool same_coefficients(const MatrixSequence& a, const MatrixSequence& b, int H);

class Csv {
public:
  explicit Csv(std::vector<std::string> header) : header_(std::move(header)) {}
  Csv& row(std::vector<std::string> cells);
  std::string str() const;
  size_t rows() const { return rows_.size(); }
  static std::string num(double x) { return format_double(x); }
  static std::string num(long x) { return std::to_string(x); }
  static std::string num(int x) { return std::to_string(x); }

private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Writes through a temporary file in the same directory, then renames.
void atomic_write(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace bohlkit::io
