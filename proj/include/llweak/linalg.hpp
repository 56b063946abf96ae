#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

/// Dense kernels used by the moment formulas: Kronecker algebra,
/// column-stacking vectorization, the matrix exponential and the
/// symmetric square root of a covariance.
namespace llweak::linalg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Raised when a covariance has an eigenvalue below the clamping tolerance.
class NotPositiveSemidefinite : public std::runtime_error {
 public:
  NotPositiveSemidefinite(double min_eigenvalue, double tolerance);

  double min_eigenvalue() const noexcept { return min_eigenvalue_; }
  double tolerance() const noexcept { return tolerance_; }

 private:
  double min_eigenvalue_;
  double tolerance_;
};

/// Kronecker product. Block (i,j) of the result is a(i,j) * b.
Matrix kron(const Matrix& a, const Matrix& b);

/// Kronecker sum.
///
/// For square a (p x p) and b (q x q) this is a (x) I_q + I_p (x) b.
/// For two d x 1 columns x, y it is x (x) I_d + I_d (x) y, a d^2 x d matrix
/// with (x (+) y) v = vec(v x^T + y v^T).
Matrix kron_sum(const Matrix& a, const Matrix& b);

/// Column-stacking vectorization, so vec(A X B) = (B^T (x) A) vec(X).
Vector vec(const Matrix& a);

/// Inverse of vec for a d x d matrix.
Matrix unvec(const Vector& v, Index d);

/// Matrix exponential (Pade approximant with scaling and squaring).
Matrix expm(const Matrix& a);

/// Clamping tolerance for negative eigenvalues of a covariance s.
double psd_tolerance(const Matrix& s);

/// Symmetric PSD square root R with R R^T = s.
///
/// s is symmetrized first. Eigenvalues in [-psd_tolerance(s), 0) are clamped
/// to zero; anything more negative throws NotPositiveSemidefinite.
Matrix psd_sqrt(const Matrix& s);

/// (a + a^T) / 2
Matrix symmetrized(const Matrix& a);

bool all_finite(const Matrix& a);

}  // namespace llweak::linalg
