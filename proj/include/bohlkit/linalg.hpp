#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

namespace bohlkit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Reciprocal condition number floor for "invertible".
inline constexpr double kConditionFloor = 1e-12;

double spectral_norm(const Matrix& M);
double spectral_norm(const Vector& v);
double min_singular_value(const Matrix& M);
double reciprocal_condition(const Matrix& M);
bool is_invertible(const Matrix& M);
Matrix inverse(const Matrix& M);

// Orthonormal completion of span(columns of B): the trailing left singular vectors.
Matrix orthogonal_complement(const Matrix& B);

// Modified Gram-Schmidt with a second pass when orthogonality drifts past 1e-10.
// Returns Q with orthonormal columns and R upper triangular with positive diagonal, M = QR.
// Throws DegenerateBasis if a column collapses.
void mgs_qr(const Matrix& M, Matrix& Q, Matrix& R);

// Spectral-norm-renormalized product M_{last} ... M_{first}; scale holds ln of the true norm.
struct ScaledProduct {
  Matrix unit;        // product / exp(log_norm)
  double log_norm = 0.0;
};
ScaledProduct ordered_product(const std::vector<Matrix>& factors_in_application_order, int dim);

// Seeded helpers. std::mt19937_64 plus a hand-rolled normal draw so results do not depend on
// the standard library's distribution implementation.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform();                 // [0,1)
  double uniform(double a, double b);
  double normal();
  Vector unit_vector(int d);
  Matrix gaussian(int r, int c);
  std::uint64_t next() { return eng_(); }
private:
  std::mt19937_64 eng_;
};

double vector_angle(const Vector& x, const Vector& y);

}  // namespace bohlkit
