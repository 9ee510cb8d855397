#pragma once

#include <stdexcept>

#include <Eigen/Core>

namespace ics {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Numeric failure: singular scatter, failed factorization, non-convergence.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed external input (CSV shape, unparsable fields, bad table files).
struct input_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SymEigen {
  Vector values;   // descending
  Matrix vectors;  // orthonormal columns; vectors.col(j) pairs with values[j]
};

/// Eigendecomposition of a symmetric matrix. Input must be symmetric to
/// 1e-10 * ||A||_F and finite. Column signs are normalized so the entry of
/// largest magnitude in each eigenvector is positive.
SymEigen sym_eigen(const Matrix& a);

/// Lower Cholesky factor of an SPD matrix. A pivot <= 1e-12 * max diagonal
/// rejects the matrix as non-SPD, naming the failing pivot index.
Matrix cholesky_lower(const Matrix& a);

/// Index of the first Cholesky pivot failing the SPD tolerance, or -1 when
/// the matrix factorizes.
Index spd_failure_index(const Matrix& a);

/// X with A X = B, A SPD, via Cholesky and two triangular solves.
Matrix solve_spd(const Matrix& a, const Matrix& b);

/// (x - m)' V^-1 (x - m), computed through a factorized solve.
double mahalanobis_sq(const Vector& x, const Vector& m, const Matrix& v);

/// Squared Mahalanobis distance of every row of X from m under V, sharing
/// one factorization.
Vector mahalanobis_sq_rows(const Matrix& x, const Vector& m, const Matrix& v);

}  // namespace ics
