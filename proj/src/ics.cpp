#include "icsdetect/ics.hpp"

namespace ics {

std::string pair_tag(const ScatterPair& pair) {
  return to_string(pair.v1.kind) + "-" + to_string(pair.v2.kind);
}

ScatterPair parse_pair(const std::string& tag) {
  ScatterPair pair;
  if (tag == "cov-cov4") {
    pair.v1 = ScatterSpec::cov();
    pair.v2 = ScatterSpec::cov4();
  } else if (tag == "mlt-cov") {
    pair.v1 = ScatterSpec::mlt();
    pair.v2 = ScatterSpec::cov();
  } else if (tag == "mcd-cov") {
    pair.v1 = ScatterSpec::mcd();
    pair.v2 = ScatterSpec::cov();
  } else if (tag == "mcd-mlt") {
    pair.v1 = ScatterSpec::mcd();
    pair.v2 = ScatterSpec::mlt();
  } else {
    throw input_error("unknown scatter pair '" + tag +
                      "' (expected cov-cov4, mlt-cov, mcd-cov or mcd-mlt)");
  }
  return pair;
}

std::pair<Matrix, Vector> simultaneous_diagonalization(const Matrix& v1, const Matrix& v2) {
  if (v1.rows() != v2.rows() || v1.cols() != v2.cols())
    throw std::invalid_argument("simultaneous_diagonalization: dimension mismatch");
  Matrix l = cholesky_lower(v1);
  // M = L^-1 V2 L^-T stays symmetric, unlike V1^-1 V2.
  Matrix m = l.triangularView<Eigen::Lower>().solve(v2);
  m = l.triangularView<Eigen::Lower>().solve(Matrix(m.transpose())).transpose();
  m = 0.5 * (m + m.transpose());
  SymEigen eig = sym_eigen(m);
  // Rows of B are eigenvectors of V1^-1 V2 mapped back through L^T.
  Matrix b = l.transpose().triangularView<Eigen::Upper>().solve(eig.vectors).transpose();
  return {std::move(b), std::move(eig.values)};
}

IcsResult invariant_coordinates(const Matrix& x, const ScatterSpec& v1, const ScatterSpec& v2) {
  ScatterEstimate s1 = estimate_scatter(x, v1);
  ScatterEstimate s2 = estimate_scatter(x, v2);

  IcsResult result;
  result.pair = to_string(v1.kind) + "-" + to_string(v2.kind);
  std::tie(result.unmixing, result.eigenvalues) =
      simultaneous_diagonalization(s1.scatter, s2.scatter);
  result.center = s1.location;
  result.scores = (x.rowwise() - result.center.transpose()) * result.unmixing.transpose();

  // Fix component signs: largest-magnitude score positive.
  const Index p = x.cols();
  for (Index j = 0; j < p; ++j) {
    Index imax = 0;
    result.scores.col(j).cwiseAbs().maxCoeff(&imax);
    if (result.scores(imax, j) < 0) {
      result.scores.col(j) = -result.scores.col(j);
      result.unmixing.row(j) = -result.unmixing.row(j);
    }
  }
  return result;
}

IcsResult invariant_coordinates(const Matrix& x, const ScatterPair& pair) {
  return invariant_coordinates(x, pair.v1, pair.v2);
}

Vector ics_distance_sq(const IcsResult& result, Index k) {
  const Index p = result.scores.cols();
  if (k < 1 || k > p)
    throw std::invalid_argument("ics_distance_sq: k must lie in [1, p], got " + std::to_string(k));
  return result.scores.leftCols(k).rowwise().squaredNorm();
}

}  // namespace ics
