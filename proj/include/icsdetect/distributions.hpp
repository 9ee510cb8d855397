#pragma once

#include <Eigen/Core>

namespace ics {

struct SampleMoments {
  Eigen::Index n = 0;
  double mean = 0;
  double variance = 0;      // central m2, denominator n
  double skewness = 0;      // m3 / m2^(3/2)
  double kurtosis = 0;      // m4 / m2^2
  double mean_abs_dev = 0;  // mean |x - mean|
};

double normal_cdf(double z);
double normal_pdf(double z);
/// Inverse standard normal CDF, u in (0,1).
double normal_quantile(double u);

/// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double gamma_p(double a, double x);

double chisq_cdf(double x, double df);
double chisq_pdf(double x, double df);
/// Inverse chi-square CDF, u in (0,1), df > 0.
double chisq_quantile(double u, double df);

/// Central moment statistics with denominator n; requires n >= 4 and
/// non-zero variance.
SampleMoments sample_moments(const Eigen::VectorXd& x);

/// One-sample Kolmogorov-Smirnov distance of z against the standard normal;
/// z need not be sorted.
double kolmogorov_statistic(const Eigen::VectorXd& z);

/// Asymptotic Kolmogorov p-value for distance d at sample size n
/// (Stephens' small-sample adjustment of the limiting distribution).
double kolmogorov_pvalue(double d, Eigen::Index n);

}  // namespace ics
