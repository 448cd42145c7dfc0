#pragma once
#include <vector>

#include "bohlkit/linalg.hpp"
#include "bohlkit/plan.hpp"
#include "bohlkit/system.hpp"

namespace bohlkit {

struct Cone {
  Vector axis;
  double angle = 0.0;
  bool contains(const Vector& y) const;
};

enum class Speed { Slow, Fast };

struct SpeedClass {
  Speed speed = Speed::Fast;
  double threshold = 0.0;   // (sin eps / 2) ||F|| ||x||
  double image_norm = 0.0;  // ||F x||
};

SpeedClass classify_vector(const Matrix& F, const Vector& x, double eps);

// Leading right singular vector, first nonzero component positive.
Vector maximal_vector(const Matrix& F);

struct FastInCone {
  Vector v;              // unit
  double gamma = 0.0;    // angle between x and the (possibly flipped) maximal vector
  double alpha = 0.0;
  double beta = 0.0;
  bool maximal_in_cone = false;  // gamma <= eps branch
};

FastInCone fast_in_cone_detail(const Matrix& F, const Vector& x, double eps);
Vector fast_in_cone(const Matrix& F, const Vector& x, double eps);

// Rotation in span{x, y} taking x/|x| to y/|y|, identity on the orthogonal complement.
Matrix rotation_between(const Vector& x, const Vector& y);

struct RotationCertificate {
  bool trivial = false;        // vector was already fast, no perturbation
  int index = -1;              // support index of Q
  double eps = 0.0;
  double q_norm = 0.0;
  double q_bound = 0.0;        // eps * ||A(index)||
  double growth_ratio = 0.0;   // ||F z|| / (||F|| ||z||) with F normalized
  double growth_bound = 0.0;   // sin(eps) / 2
  double growth_slack = 0.0;   // ratio / bound - 1
  double norm_residual = 0.0;  // | ||z|| - ||x|| | / ||x||
  double cond_base = 0.0;
  double cond_perturbed = 0.0;
  bool passed = false;
};

struct RotationResult {
  PerturbationPlan plan;
  RotationCertificate certificate;
  Vector kernel_vector;   // unit vector handed to the algebraic kernel
  Vector pinned_initial;  // unit direction of the perturbed solution at time 0
};

// Q(k-1) = (V - I) A(k-1) steering x(k) into a fast direction for Phi(m, k).
RotationResult forward_rotation_perturbation(const MatrixSequence& sys, int k, int m, const Vector& x0, double eps);
// Q(m) = A(m)(V - I); the solution through x(m+1, x0) becomes fast for Phi(k, m).
RotationResult backward_rotation_perturbation(const MatrixSequence& sys, int k, int m, const Vector& x0, double eps);

// slice = B(m), B(m+1), ..., B(n); R perturbs B(m); v is the vector fed into B(m).
Matrix algebraic_forward(const std::vector<Matrix>& slice, const Vector& v, double eps);
// slice = B(k), ..., B(m); R perturbs B(m); v is the pinned vector at time m+1.
Matrix algebraic_backward(const std::vector<Matrix>& slice, const Vector& v, double eps);

// Certificate checks for the algebraic forms (same inequalities, given R).
RotationCertificate certify_algebraic_forward(const std::vector<Matrix>& slice, const Vector& v, double eps, const Matrix& R);
RotationCertificate certify_algebraic_backward(const std::vector<Matrix>& slice, const Vector& v, double eps, const Matrix& R);

}  // namespace bohlkit
