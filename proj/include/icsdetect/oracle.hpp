#pragma once

#include <cstdint>
#include <string>

#include "icsdetect/linalg.hpp"

namespace ics::oracle {

/// Ordering of the eigenvalues of cov^-1 cov4 for the contamination models
/// with closed-form spectra: the leading block strictly dominates (a), the
/// trailing block is strictly smaller (b), or the spectrum is flat (c).
enum class EigenRegime { LeadingLarge, TrailingSmall, AllEqual };

char regime_char(EigenRegime r);

struct RhoPair {
  double rho_large = 1;
  double rho_small = 1;
  Index mult_large = 1;
  Index mult_small = 0;
  EigenRegime regime = EigenRegime::AllEqual;
};

/// Population cov and cov4, diagonal in the canonical parameterization.
struct PopulationPair {
  Matrix cov;
  Matrix cov4;
  std::string model;
};

/// Mean-shift contamination threshold (3 - sqrt(3))/6.
inline constexpr double kCase1Threshold = 0.21132486540518711775;

/// Regime of the two-component mean-shift mixture at contamination eps.
EigenRegime case1_regime(double eps);

struct CaseOracle {
  RhoPair rho;
  PopulationPair population;
};

/// Radial (chi) first-coordinate contamination with Gaussian noise on the
/// remaining coordinates; chi_df is the chi distribution's degrees of freedom.
CaseOracle case2a(double eps, double chi_df, double s11_sq, double s22_sq, Index p);

/// Eps-threshold of the equal-variance corollary of the radial model,
/// (k-3)/(3(k-1)); minimal value 1/9 at k=4.
double case2a_equal_variance_threshold(double chi_df);

/// Three-component symmetric mean-shift mixture at +-delta on the first axis.
CaseOracle case2b(double eps, double delta, double s11_sq, double s12_sq, double s21_sq,
                  double s22_sq, Index p);

/// Scale-shift mixture with variance alpha on the first q axes.
CaseOracle case5(double eps, double alpha, Index p, Index q);

/// Eigenvalues of cov^-1 cov4 through the numeric generalized-eigen route,
/// descending; the cross-check for the closed forms above.
Vector population_eigenvalues(const PopulationPair& pair);

/// Unmixing matrix of the population pair (rows are eigenvector coefficients).
Matrix population_unmixing(const PopulationPair& pair);

// Samplers for the mixture laws themselves (independent mixture draws, not
// the fixed-count simulation generators). Used by convergence checks.
Matrix sample_case1(Index n, double eps, const Vector& mu, const Matrix& sigma, std::uint64_t seed);
Matrix sample_case2a(Index n, double eps, double chi_df, double s11_sq, double s22_sq, Index p,
                     std::uint64_t seed);
Matrix sample_case2b(Index n, double eps, double delta, double s11_sq, double s12_sq,
                     double s21_sq, double s22_sq, Index p, std::uint64_t seed);
Matrix sample_case5(Index n, double eps, double alpha, Index p, Index q, std::uint64_t seed);

}  // namespace ics::oracle
