#pragma once
#include <cstdint>
#include <utility>
#include <vector>

#include "bohlkit/bohl.hpp"
#include "bohlkit/dichotomy.hpp"
#include "bohlkit/plan.hpp"

namespace bohlkit {

// Membership of a grid rate in a sampled spectrum.
enum class Membership { In, Out, Inconclusive };
const char* to_string(Membership m);

struct SpectrumSample {
  std::vector<double> grid;
  std::vector<Membership> ed;  // empty when not sampled
  std::vector<Membership> bd;
  std::vector<std::pair<double, double>> ed_intervals;  // merged runs of In
  std::vector<std::pair<double, double>> bd_intervals;
};

// [-3, 3] step 0.05
std::vector<double> default_grid();
std::vector<double> make_grid(double from, double to, double step);

std::vector<std::pair<double, double>> merge_intervals(const std::vector<double>& grid,
                                                       const std::vector<Membership>& m);

SpectrumSample sample_ed_spectrum(const MatrixSequence& sys, const std::vector<double>& grid, const WindowSpec& w,
                                  const DichotomyOptions& opt = {});
SpectrumSample sample_bd_spectrum(const MatrixSequence& sys, const std::vector<double>& grid, const WindowSpec& w,
                                  const DichotomyOptions& opt = {});
// Both verdicts, sharing the splitting search per rate.
SpectrumSample sample_spectrum(const MatrixSequence& sys, const std::vector<double>& grid, const WindowSpec& w,
                               const DichotomyOptions& opt = {});

struct ApproximationLevel {
  double eps = 0.0;
  int plans = 0;                    // plans sampled so far (nested, includes the zero plan)
  double max_plan_norm = 0.0;
  std::vector<bool> union_in;       // sampled union of Sigma_BD(A+Q) over ||Q|| < eps
  std::vector<bool> intersection;   // nested intersection down to this eps
  int extra_vs_ed = 0;              // intersection In, Sigma_ED Out (conclusive points only)
  int missing_vs_ed = 0;            // Sigma_ED In, intersection not In
};

struct ApproximationReport {
  std::vector<double> grid;
  std::vector<Membership> ed;       // sampled Sigma_ED(A)
  std::vector<ApproximationLevel> levels;  // ordered by decreasing eps
  bool monotone = false;            // unions and intersections shrink as eps decreases
  bool matches_ed = false;          // last intersection equals the Sigma_ED sample
};

// Sampled inner/outer approximation: random single and multi support plans per eps, reused for
// every larger eps so the unions nest.
ApproximationReport bd_approximation_demo(const MatrixSequence& sys, const std::vector<double>& grid,
                                          std::vector<double> eps_list, int n_perturbations, std::uint64_t seed,
                                          const WindowSpec& w, const DichotomyOptions& opt = {});

}  // namespace bohlkit
