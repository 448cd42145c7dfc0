#pragma once
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bohlkit/bohl.hpp"
#include "bohlkit/dichotomy.hpp"
#include "bohlkit/millionshikov.hpp"
#include "bohlkit/plan.hpp"
#include "bohlkit/system.hpp"

namespace bohlkit {

MatrixSequence apply_plan(const MatrixSequence& sys, const PerturbationPlan& plan);
PerturbationPlan compose_plans(const PerturbationPlan& p1, const PerturbationPlan& p2);
PerturbationPlan truncate_plan(const PerturbationPlan& plan, double eps);
// Dense plan Q(n) = A(n)(e^{-delta} - 1) on [0, H].
PerturbationPlan scaling_plan(const MatrixSequence& sys, double delta);

struct SubsequencePair {
  std::vector<std::pair<int, int>> pairs;  // (tau, s)
  std::vector<double> epsilons;
  std::vector<double> log_norms;           // ln ||Phi(s, tau)|| (growth) or ln ||Phi(tau, s)|| (decay)
};

// eps_l = min(1/(l+1), budget / b), the schedule shared by the stage constructions.
std::vector<double> stage_epsilons(int count, double budget, double b);

SubsequencePair growth_subsequence(const MatrixSequence& sys, const std::vector<double>& eps, const WindowSpec& w,
                                   double tol = 1e-3);
SubsequencePair decay_subsequence(const MatrixSequence& sys, double delta, const std::vector<double>& eps,
                                  const WindowSpec& w, double tol = 1e-3);

// Independent check of the two decay conditions for one pair.
struct DecayPairCheck {
  bool sine_slack = false;  // ln(2/sin eps)/(s-tau) < eps
  bool decay = false;       // -ln||Phi(tau,s)|| / (s-tau) <= -delta + eps
  double rate = 0.0;
};
DecayPairCheck check_decay_pair(const MatrixSequence& sys, int tau, int s, double delta, double eps);

enum class DestroyVariant { Strict, Weak };

struct DestroyOptions {
  double budget = 0.18;   // every stage perturbation stays below this norm
  int stage_budget = 6;   // j = 1..stage_budget
  double tol_margin = 1e-3;
  std::uint64_t seed = 7;
};

struct StageRecord {
  int j = 0;
  bool even = false;
  int start = 0;        // sigma (odd) or tau (even)
  int end = 0;          // rho (odd) or s (even)
  double eps_j = 0.0;
  double eps_l = 0.0;   // even only, the subsequence epsilon
  double ratio = 0.0;   // measured (1/(end-start)) ln(|z(end)| / |z(start)|)
  double bound = 0.0;   // odd: -alpha + eps_j (ratio <= bound); even: -(eps_j + eps_l) (ratio >= bound)
  double q_norm = 0.0;
  double q_bound = 0.0;
  RotationCertificate rotation;
  bool verified = false;
};

struct DestroyResult {
  PerturbationPlan plan;
  Vector z0;
  double alpha = 0.0;
  double b = 0.0;
  std::vector<StageRecord> stages;
  int exhausted_stage = 0;  // first stage that found no window, 0 if all stages completed
  SubsequencePair subsequence;
  bool all_verified() const;
  int even_stages() const;
};

DestroyResult destroy_bd_plan(const MatrixSequence& sys_k, const Vector& z0, DestroyVariant variant,
                              const WindowSpec& w, const DestroyOptions& opt = {});
// Re-propagates z0 through sys_k + plan and re-checks each recorded stage inequality.
bool verify_destroy(const MatrixSequence& sys_k, DestroyResult& r);

struct SlowOptions {
  double budget = 0.06;
  double tol_margin = 1e-3;
  std::uint64_t seed = 11;
  bool allow_fewer = false;  // use as many stages as the horizon admits instead of failing
};

struct SlowStage {
  int q = 0;
  int tau = 0;
  int s = 0;
  double eps = 0.0;
  double lhs = 0.0;  // ln ||z(tau)||
  double rhs = 0.0;  // ln(sin eps / 2) + ln ||Phi_B(tau, s)|| + ln ||z(s)||
  double window_rate = 0.0;   // (1/(s-tau)) ln(|z(s)| / |z(tau)|)
  double window_bound = 0.0;  // -delta + 2 eps
  RotationCertificate rotation;
  bool verified = false;
};

struct SlowResult {
  PerturbationPlan plan;
  Vector v0;
  std::vector<SlowStage> stages;
  SubsequencePair subsequence;
  std::vector<double> designated_logs;  // ln ||z(n)|| of the designated solution, n = 0..H
  double lower = 0.0;  // estimates from designated_logs
  double upper = 0.0;
  bool all_verified() const;
};

SlowResult slow_solution_plan(const MatrixSequence& sys_k, double delta, int stages, const WindowSpec& w,
                              const SlowOptions& opt = {});

struct PipelineOptions {
  DichotomyOptions dich;
  double branch1_fraction = 0.9;  // share of eps given to the single destroy step
  int stage_budget = 6;
  int slow_stages = 4;
};

struct PipelineStep {
  std::string name;
  double budget = 0.0;
  double sup_norm = 0.0;
};

struct PipelineResult {
  PerturbationPlan plan;
  Witness witness;
  int branch = 0;  // 1: upper(L1) >= -tol, 2: lower(L2) <= tol
  std::vector<PipelineStep> steps;
  std::optional<DestroyResult> destroy;
  std::optional<SlowResult> slow;
  bool witness_verified = false;  // re-check by find_no_bd_witness on the perturbed system
};

PipelineResult no_bd_pipeline(const MatrixSequence& sys, const Splitting& splitting, double eps, const WindowSpec& w,
                              const PipelineOptions& opt = {});

}  // namespace bohlkit
