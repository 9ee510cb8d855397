#pragma once

#include <string>
#include <utility>

#include "icsdetect/scatter.hpp"

namespace ics {

/// Scatter pair (V1, V2) with V1 the more robust estimator. The four
/// supported configurations are cov-cov4, mlt-cov, mcd-cov and mcd-mlt.
struct ScatterPair {
  ScatterSpec v1;
  ScatterSpec v2;
};

std::string pair_tag(const ScatterPair& pair);
ScatterPair parse_pair(const std::string& tag);

struct IcsResult {
  Matrix unmixing;     // B; row j holds the coefficients of component j
  Vector eigenvalues;  // descending eigenvalues of V1^-1 V2
  Matrix scores;       // Z = (X - 1 m') B', n x p
  Vector center;       // location of the V1 estimator
  std::string pair;
};

/// Simultaneous diagonalization of two SPD matrices through Cholesky
/// whitening of v1: returns (B, D) with B v1 B' = I and B v2 B' = diag(D),
/// D descending.
std::pair<Matrix, Vector> simultaneous_diagonalization(const Matrix& v1, const Matrix& v2);

/// Invariant coordinates of X for the given scatter pair. Component signs
/// follow a fixed convention: the score of largest magnitude in each
/// component is positive.
IcsResult invariant_coordinates(const Matrix& x, const ScatterSpec& v1, const ScatterSpec& v2);
IcsResult invariant_coordinates(const Matrix& x, const ScatterPair& pair);

/// Squared norm of each observation in the first k invariant coordinates.
Vector ics_distance_sq(const IcsResult& result, Index k);

}  // namespace ics
