#pragma once
#include <map>
#include <utility>
#include <vector>

#include "bohlkit/system.hpp"

namespace bohlkit {

struct WindowSpec {
  enum class Enumeration { AllPairs, DyadicSubsample };

  std::vector<int> N_list{4, 8, 16, 32, 64};
  int H = kDefaultHorizon;
  Enumeration enumeration = Enumeration::AllPairs;

  // Default thresholds with the enumeration chosen from H (all pairs up to 4096).
  static WindowSpec for_horizon(int H);
  static WindowSpec make(std::vector<int> N_list, int H);

  void validate() const;
  int max_N() const { return N_list.back(); }
  int min_N() const { return N_list.front(); }
  std::vector<int> indices() const;  // time indices visited by the scan
};

enum class BohlKind { Upper, Lower };

struct Window {
  int m = -1;
  int n = -1;
  bool operator==(const Window&) const = default;
};

struct BohlEstimate {
  BohlKind kind = BohlKind::Upper;
  std::map<int, double> values;   // N -> extremal ratio
  std::map<int, Window> windows;  // N -> achieving window
  double reported = 0.0;
  Window achieving_window;
  bool operator==(const BohlEstimate&) const = default;
};

struct BohlPair {
  BohlEstimate upper;
  BohlEstimate lower;
};

// Window extrema of (L[n]-L[m])/(n-m) over a log-norm sequence; the exact rate is added
// after the extremum so scaled systems shift exactly.
BohlPair scan_log_sequence(const std::vector<double>& core_log, double rate, const WindowSpec& w);

// Core (unscaled) log norms ln||x(n)|| of the solution through x0.
std::vector<double> core_log_trajectory(const MatrixSequence& sys, const Vector& x0, int H);

BohlEstimate upper_bohl_vector(const MatrixSequence& sys, const Vector& x0, const WindowSpec& w);
BohlEstimate lower_bohl_vector(const MatrixSequence& sys, const Vector& x0, const WindowSpec& w);
BohlPair bohl_vector(const MatrixSequence& sys, const Vector& x0, const WindowSpec& w);

BohlEstimate upper_bohl_space(const MatrixSequence& sys, const WindowSpec& w);
BohlEstimate lower_bohl_space(const MatrixSequence& sys, const WindowSpec& w);
BohlPair bohl_space(const MatrixSequence& sys, const WindowSpec& w);

// Exponents of L via the L-subsystem of the triangular form.
BohlPair bohl_on_subspace(const MatrixSequence& sys, const std::vector<Vector>& L_basis,
                          const WindowSpec& w);

// Worker threads used by the window scans (1 = sequential). Results do not depend on it.
void set_thread_count(int n);
int thread_count();

}  // namespace bohlkit
