#pragma once
#include <map>
#include <optional>

#include "bohlkit/linalg.hpp"

namespace bohlkit {

// Finitely supported perturbation sequence Q(n).
struct PerturbationPlan {
  int dimension = 0;
  std::map<int, Matrix> support;                       // sorted by index
  std::optional<std::map<int, double>> decay_schedule;  // allowed norm per index

  PerturbationPlan() = default;
  explicit PerturbationPlan(int d) : dimension(d) {}

  double sup_norm() const;
  bool empty() const { return support.empty(); }
  const Matrix* find(int n) const;
  int last_index() const { return support.empty() ? -1 : support.rbegin()->first; }

  void set(int n, const Matrix& Q);
  void set_schedule(int n, double bound);

  // Bit-exact comparison (round trip requirement).
  bool operator==(const PerturbationPlan& o) const;
};

}  // namespace bohlkit
