#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "icsdetect/linalg.hpp"

namespace ics {

enum class ScatterKind { Cov, Cov4, Mlt, Mcd };

std::string to_string(ScatterKind kind);
ScatterKind scatter_kind_from_string(const std::string& tag);

/// Estimator choice plus hyperparameters; only the fields of the selected
/// kind are consulted.
struct ScatterSpec {
  ScatterKind kind = ScatterKind::Cov;

  // MCD
  double mcd_h_fraction = 0.75;  // in [0.5, 1]
  int mcd_subsets = 500;         // elemental starts
  std::uint64_t mcd_seed = 1;

  // MLT
  double mlt_tol = 1e-6;  // relative Frobenius change of the scatter
  int mlt_max_iter = 200;

  static ScatterSpec cov() { return {}; }
  static ScatterSpec cov4() { return {.kind = ScatterKind::Cov4}; }
  static ScatterSpec mlt() { return {.kind = ScatterKind::Mlt}; }
  static ScatterSpec mcd(std::uint64_t seed = 1, double h_fraction = 0.75) {
    ScatterSpec s;
    s.kind = ScatterKind::Mcd;
    s.mcd_seed = seed;
    s.mcd_h_fraction = h_fraction;
    return s;
  }

  void validate() const;
};

struct ScatterDiagnostics {
  int iterations = 0;
  bool converged = true;
  std::vector<Index> best_subset;  // MCD only, sorted
  // MCD pre-reweighting estimate (already consistency-rescaled)
  Vector raw_location;
  Matrix raw_scatter;
};

struct ScatterEstimate {
  Vector location;
  Matrix scatter;
  ScatterKind kind = ScatterKind::Cov;
  ScatterDiagnostics diagnostics;
};

/// Thrown when the M-estimator iteration stalls; carries the last iterate
/// so callers can inspect how far it got.
struct mlt_convergence_error : numeric_error {
  mlt_convergence_error(const std::string& msg, ScatterEstimate iterate)
      : numeric_error(msg), last_iterate(std::move(iterate)) {}
  ScatterEstimate last_iterate;
};

/// Column means and sample covariance (denominator n-1).
ScatterEstimate cov(const Matrix& x);

/// Fourth-moment weighted covariance: weights are classical squared
/// Mahalanobis distances, normalizer 1/((p+2) n); location is the mean.
ScatterEstimate cov4(const Matrix& x);

/// Cauchy maximum-likelihood location/scatter, weights (p+1)/(r^2+1),
/// alternated from (mean, cov) until the scatter stalls.
ScatterEstimate mlt(const Matrix& x, const ScatterSpec& spec = ScatterSpec::mlt());

/// Reweighted minimum covariance determinant: elemental-subset search with
/// C-steps for the smallest-determinant h-subset, consistency rescaling,
/// then one chi-square reweighting step. Deterministic under spec.mcd_seed.
ScatterEstimate mcd(const Matrix& x, const ScatterSpec& spec = ScatterSpec::mcd());

ScatterEstimate estimate_scatter(const Matrix& x, const ScatterSpec& spec);

}  // namespace ics
