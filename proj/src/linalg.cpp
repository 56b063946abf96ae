#include "llweak/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace llweak::linalg {

namespace {

std::string psd_message(double min_eigenvalue, double tolerance) {
  std::ostringstream os;
  os.precision(17);
  os << "covariance is not positive semidefinite: min eigenvalue " << min_eigenvalue
     << " below -" << tolerance;
  return os.str();
}

Index checked_product(Index a, Index b) {
  if (a != 0 && b > std::numeric_limits<Index>::max() / a) {
    throw std::length_error("kron: result dimension overflows the index type");
  }
  return a * b;
}

bool is_column(const Matrix& a) { return a.cols() == 1; }
bool is_square(const Matrix& a) { return a.rows() == a.cols(); }

}  // namespace

NotPositiveSemidefinite::NotPositiveSemidefinite(double min_eigenvalue, double tolerance)
    : std::runtime_error(psd_message(min_eigenvalue, tolerance)),
      min_eigenvalue_(min_eigenvalue),
      tolerance_(tolerance) {}

Matrix kron(const Matrix& a, const Matrix& b) {
  const Index rows = checked_product(a.rows(), b.rows());
  const Index cols = checked_product(a.cols(), b.cols());
  checked_product(rows, cols);
  Matrix out(rows, cols);
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Matrix kron_sum(const Matrix& a, const Matrix& b) {
  if (is_square(a) && is_square(b)) {
    return kron(a, Matrix::Identity(b.rows(), b.rows())) +
           kron(Matrix::Identity(a.rows(), a.rows()), b);
  }
  if (is_column(a) && is_column(b) && a.rows() == b.rows()) {
    const Index d = a.rows();
    return kron(a, Matrix::Identity(d, d)) + kron(Matrix::Identity(d, d), b);
  }
  throw std::invalid_argument(
      "kron_sum: arguments must be two square matrices or two columns of equal length");
}

Vector vec(const Matrix& a) {
  return Eigen::Map<const Vector>(a.data(), a.size());
}

Matrix unvec(const Vector& v, Index d) {
  if (d < 0 || v.size() != d * d) {
    throw std::invalid_argument("unvec: vector length is not d^2");
  }
  return Eigen::Map<const Matrix>(v.data(), d, d);
}

Matrix expm(const Matrix& a) {
  if (!is_square(a)) {
    throw std::invalid_argument("expm: matrix is not square");
  }
  if (!all_finite(a)) {
    throw std::invalid_argument("expm: matrix has non-finite entries");
  }
  Matrix out = a.exp();
  if (!all_finite(out)) {
    throw std::overflow_error("expm: result overflows");
  }
  return out;
}

double psd_tolerance(const Matrix& s) { return 1e-8 * std::max(1.0, s.trace()); }

Matrix psd_sqrt(const Matrix& s) {
  if (!is_square(s)) {
    throw std::invalid_argument("psd_sqrt: matrix is not square");
  }
  if (!all_finite(s)) {
    throw std::invalid_argument("psd_sqrt: matrix has non-finite entries");
  }
  const Matrix sym = symmetrized(s);
  const double tol = psd_tolerance(sym);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("psd_sqrt: eigendecomposition did not converge");
  }
  Vector lambda = eig.eigenvalues();
  if (lambda.size() > 0 && lambda.minCoeff() < -tol) {
    throw NotPositiveSemidefinite(lambda.minCoeff(), tol);
  }
  lambda = lambda.cwiseMax(0.0).cwiseSqrt();
  const Matrix& q = eig.eigenvectors();
  return symmetrized(q * lambda.asDiagonal() * q.transpose());
}

Matrix symmetrized(const Matrix& a) { return 0.5 * (a + a.transpose()); }

bool all_finite(const Matrix& a) { return a.allFinite(); }

}  // namespace llweak::linalg
