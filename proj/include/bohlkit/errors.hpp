#pragma once
#include <stdexcept>
#include <string>

namespace bohlkit {

// Exit-status class carried by every error; the CLI maps it to 2/3/4.
enum class ErrorClass { Validation, Hypothesis, Numeric };

class Error : public std::runtime_error {
public:
  Error(std::string name, long index, ErrorClass cls, const std::string& detail = {})
      : std::runtime_error(format(name, index, detail)), name_(std::move(name)),
        index_(index), cls_(cls), detail_(detail) {}

  const std::string& name() const { return name_; }
  long index() const { return index_; }
  ErrorClass error_class() const { return cls_; }
  const std::string& detail() const { return detail_; }

private:
  static std::string format(const std::string& name, long index, const std::string& detail) {
    std::string s = name;
    if (index >= 0) s += "(" + std::to_string(index) + ")";
    if (!detail.empty()) s += ": " + detail;
    return s;
  }
  std::string name_;
  long index_;
  ErrorClass cls_;
  std::string detail_;
};

namespace err {
inline Error non_invertible(long n) { return {"NonInvertibleCoefficient", n, ErrorClass::Numeric}; }
inline Error non_invertible_perturbed(long n) { return {"NonInvertiblePerturbed", n, ErrorClass::Numeric}; }
inline Error horizon_exceeded(long n) { return {"HorizonExceeded", n, ErrorClass::Validation}; }
inline Error empty_window_set(long N) { return {"EmptyWindowSet", N, ErrorClass::Validation}; }
inline Error degenerate_basis(const std::string& d = {}) { return {"DegenerateBasis", -1, ErrorClass::Validation, d}; }
inline Error degenerate_splitting(const std::string& d = {}) { return {"DegenerateSplitting", -1, ErrorClass::Validation, d}; }
inline Error empty_sample_set() { return {"EmptySampleSet", -1, ErrorClass::Validation}; }
inline Error not_in_subspace(long i) { return {"NotInSubspace", i, ErrorClass::Validation}; }
inline Error support_exceeds_horizon(long n) { return {"SupportExceedsHorizon", n, ErrorClass::Validation}; }
inline Error zero_vector() { return {"ZeroVector", -1, ErrorClass::Validation}; }
inline Error not_slow() { return {"NotSlow", -1, ErrorClass::Validation}; }
inline Error antipodal_pair() { return {"AntipodalPair", -1, ErrorClass::Numeric}; }
inline Error window_degenerate(long k, long m) {
  return {"WindowDegenerate", k, ErrorClass::Validation, "m=" + std::to_string(m)};
}
inline Error dimension_mismatch(const std::string& d = {}) { return {"DimensionMismatch", -1, ErrorClass::Validation, d}; }
inline Error prefix_empty(const std::string& d = {}) { return {"PrefixEmpty", 0, ErrorClass::Hypothesis, d}; }
inline Error stage_exhausted(long j) { return {"StageExhausted", j, ErrorClass::Hypothesis}; }
inline Error surrogate_failed(const std::string& step) {
  return {"SurrogateHypothesisFailed", -1, ErrorClass::Hypothesis, step};
}
inline Error certificate_failed(const std::string& what) {
  return {"CertificateFailed", -1, ErrorClass::Numeric, what};
}
inline Error invalid(const std::string& what) { return {"InvalidInput", -1, ErrorClass::Validation, what}; }
}  // namespace err

}  // namespace bohlkit
