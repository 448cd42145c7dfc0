#include "bohlkit/plan.hpp"

#include <algorithm>

namespace bohlkit {

double PerturbationPlan::sup_norm() const {
  double s = 0.0;
  for (const auto& [n, Q] : support) s = std::max(s, spectral_norm(Q));
  return s;
}

const Matrix* PerturbationPlan::find(int n) const {
  auto it = support.find(n);
  return it == support.end() ? nullptr : &it->second;
}

void PerturbationPlan::set(int n, const Matrix& Q) { support[n] = Q; }

void PerturbationPlan::set_schedule(int n, double bound) {
  if (!decay_schedule) decay_schedule.emplace();
  (*decay_schedule)[n] = bound;
}

bool PerturbationPlan::operator==(const PerturbationPlan& o) const {
  if (dimension != o.dimension || support.size() != o.support.size()) return false;
  auto a = support.begin();
  auto b = o.support.begin();
  for (; a != support.end(); ++a, ++b) {
    if (a->first != b->first) return false;
    if (a->second.rows() != b->second.rows() || a->second.cols() != b->second.cols()) return false;
    if (!(a->second.array() == b->second.array()).all()) return false;
  }
  return decay_schedule == o.decay_schedule;
}

}  // namespace bohlkit
