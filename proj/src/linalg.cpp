#include "icsdetect/linalg.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

namespace ics {

namespace {

void require_square(const Matrix& a, const char* who) {
  if (a.rows() < 1 || a.rows() != a.cols())
    throw std::invalid_argument(std::string(who) + ": matrix must be square, got " +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
}

void require_symmetric(const Matrix& a, const char* who) {
  if (!a.allFinite()) throw std::invalid_argument(std::string(who) + ": non-finite entries");
  double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * a.norm())
    throw std::invalid_argument(std::string(who) + ": matrix is not symmetric (max asymmetry " +
                                std::to_string(asym) + ")");
}

}  // namespace

SymEigen sym_eigen(const Matrix& a) {
  require_square(a, "sym_eigen");
  require_symmetric(a, "sym_eigen");
  Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) throw numeric_error("sym_eigen: eigensolver did not converge");

  const Index p = a.rows();
  SymEigen out;
  out.values.resize(p);
  out.vectors.resize(p, p);
  // Eigen returns ascending order; flip to descending.
  for (Index j = 0; j < p; ++j) {
    out.values[j] = solver.eigenvalues()[p - 1 - j];
    out.vectors.col(j) = solver.eigenvectors().col(p - 1 - j);
  }
  for (Index j = 0; j < p; ++j) {
    Index imax = 0;
    out.vectors.col(j).cwiseAbs().maxCoeff(&imax);
    if (out.vectors(imax, j) < 0) out.vectors.col(j) = -out.vectors.col(j);
  }
  return out;
}

Matrix cholesky_lower(const Matrix& a) {
  require_square(a, "cholesky_lower");
  require_symmetric(a, "cholesky_lower");
  const Index p = a.rows();
  const double tol = 1e-12 * a.diagonal().maxCoeff();
  Matrix l = Matrix::Zero(p, p);
  for (Index j = 0; j < p; ++j) {
    double pivot = a(j, j) - l.row(j).head(j).squaredNorm();
    if (!(pivot > tol))
      throw numeric_error("cholesky_lower: matrix is not positive definite (pivot " +
                          std::to_string(pivot) + " at index " + std::to_string(j) + ")");
    l(j, j) = std::sqrt(pivot);
    for (Index i = j + 1; i < p; ++i)
      l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
  }
  return l;
}

Index spd_failure_index(const Matrix& a) {
  if (a.rows() < 1 || a.rows() != a.cols() || !a.allFinite()) return 0;
  const Index p = a.rows();
  const double tol = 1e-12 * a.diagonal().maxCoeff();
  Matrix l = Matrix::Zero(p, p);
  for (Index j = 0; j < p; ++j) {
    double pivot = a(j, j) - l.row(j).head(j).squaredNorm();
    if (!(pivot > tol)) return j;
    l(j, j) = std::sqrt(pivot);
    for (Index i = j + 1; i < p; ++i)
      l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
  }
  return -1;
}

Matrix solve_spd(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows())
    throw std::invalid_argument("solve_spd: dimension mismatch between A and B");
  Matrix l = cholesky_lower(a);
  Matrix x = l.triangularView<Eigen::Lower>().solve(b);
  l.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

double mahalanobis_sq(const Vector& x, const Vector& m, const Matrix& v) {
  if (x.size() != m.size() || x.size() != v.rows())
    throw std::invalid_argument("mahalanobis_sq: dimension mismatch");
  Matrix l = cholesky_lower(v);
  Vector y = l.triangularView<Eigen::Lower>().solve(x - m);
  return y.squaredNorm();
}

Vector mahalanobis_sq_rows(const Matrix& x, const Vector& m, const Matrix& v) {
  if (x.cols() != m.size() || x.cols() != v.rows())
    throw std::invalid_argument("mahalanobis_sq_rows: dimension mismatch");
  Matrix l = cholesky_lower(v);
  Matrix centered = (x.rowwise() - m.transpose()).transpose();  // p x n
  l.triangularView<Eigen::Lower>().solveInPlace(centered);
  return centered.colwise().squaredNorm().transpose();
}

}  // namespace ics
