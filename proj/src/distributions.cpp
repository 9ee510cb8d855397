#include "icsdetect/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "icsdetect/linalg.hpp"

namespace ics {

namespace {
constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

double normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0))
    throw std::invalid_argument("normal_quantile: u must lie in (0,1), got " + std::to_string(u));
  // Wichura's AS 241 rational approximations, then one Newton step.
  double q = u - 0.5;
  double x;
  if (std::abs(q) <= 0.425) {
    double r = 0.180625 - q * q;
    x = q *
        (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r + 6.7265770927008700853e4) * r +
              4.5921953931549871457e4) *
                 r +
             1.3731693765509461125e4) *
                r +
            1.9715909503065514427e3) *
               r +
           1.3314166789178437745e2) *
              r +
          3.3871328727963666080e0) /
        (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r + 3.9307895800092710610e4) * r +
              2.1213794301586595867e4) *
                 r +
             5.3941960214247511077e3) *
                r +
            6.8718700749205790830e2) *
               r +
           4.2313330701600911252e1) *
              r +
          1.0);
  } else {
    double r = q < 0 ? u : 1.0 - u;
    r = std::sqrt(-std::log(r));
    if (r <= 5.0) {
      r -= 1.6;
      x = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r + 2.41780725177450611770e-1) * r +
               1.27045825245236838258e0) *
                  r +
              3.64784832476320460504e0) *
                 r +
             5.76949722146069140550e0) *
                r +
            4.63033784615654529590e0) *
               r +
           1.42343711074968357734e0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r + 1.51986665636164571966e-2) * r +
               1.48103976427480074590e-1) *
                  r +
              6.89767334985100004550e-1) *
                 r +
             1.67638483018380384940e0) *
                r +
            2.05319162663775882187e0) *
               r +
           1.0);
    } else {
      r -= 5.0;
      x = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 1.24266094738807843860e-3) * r +
               2.65321895265761230930e-2) *
                  r +
              2.96560571828504891230e-1) *
                 r +
             1.78482653991729133580e0) *
                r +
            5.46378491116411436990e0) *
               r +
           6.65790464350110377720e0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r + 1.84631831751005468180e-5) * r +
               7.86869131145613259100e-4) *
                  r +
              1.48753612908506148525e-2) *
                 r +
             1.36929880922735805310e-1) *
                r +
            5.99832206555887937690e-1) *
               r +
           1.0);
    }
    if (q < 0) x = -x;
  }
  double pdf = normal_pdf(x);
  if (pdf > 0) x -= (normal_cdf(x) - u) / pdf;
  return x;
}

namespace {

// Series expansion of P(a,x), effective for x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz continued fraction for Q(a,x), effective for x >= a + 1.
double gamma_q_cf(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_p(double a, double x) {
  if (!(a > 0)) throw std::invalid_argument("gamma_p: shape must be positive");
  if (x < 0) throw std::invalid_argument("gamma_p: x must be nonnegative");
  if (x == 0) return 0.0;
  return x < a + 1.0 ? gamma_p_series(a, x) : 1.0 - gamma_q_cf(a, x);
}

double chisq_cdf(double x, double df) {
  if (!(df > 0)) throw std::invalid_argument("chisq_cdf: df must be positive");
  if (x < 0) throw std::invalid_argument("chisq_cdf: x must be nonnegative");
  return gamma_p(0.5 * df, 0.5 * x);
}

double chisq_pdf(double x, double df) {
  if (!(df > 0)) throw std::invalid_argument("chisq_pdf: df must be positive");
  if (x < 0) return 0.0;
  if (x == 0) return df < 2 ? std::numeric_limits<double>::infinity() : (df == 2 ? 0.5 : 0.0);
  double half = 0.5 * df;
  return std::exp((half - 1.0) * std::log(x) - 0.5 * x - half * std::numbers::ln2 - std::lgamma(half));
}

double chisq_quantile(double u, double df) {
  if (!(u > 0.0 && u < 1.0))
    throw std::invalid_argument("chisq_quantile: u must lie in (0,1), got " + std::to_string(u));
  if (!(df > 0)) throw std::invalid_argument("chisq_quantile: df must be positive");

  // Wilson-Hilferty start.
  double z = normal_quantile(u);
  double c = 2.0 / (9.0 * df);
  double x = df * std::pow(1.0 - c + z * std::sqrt(c), 3.0);
  if (!(x > 0)) x = 0.5 * df;

  // Bracket the root, then safeguarded Newton.
  double lo = 0.0, hi = x;
  while (chisq_cdf(hi, df) < u) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw numeric_error("chisq_quantile: failed to bracket quantile");
  }
  if (chisq_cdf(lo, df) > u) lo = 0.0;

  for (int iter = 0; iter < 200; ++iter) {
    double f = chisq_cdf(x, df) - u;
    if (f > 0)
      hi = x;
    else
      lo = x;
    double dfdx = chisq_pdf(x, df);
    double step = dfdx > 0 ? f / dfdx : 0.0;
    double next = x - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-14 * std::max(1.0, x)) return next;
    x = next;
  }
  return x;
}

SampleMoments sample_moments(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  if (n < 4) throw std::invalid_argument("sample_moments: need at least 4 observations");
  if (!x.allFinite()) throw std::invalid_argument("sample_moments: non-finite entries");

  SampleMoments m;
  m.n = n;
  m.mean = x.mean();
  Eigen::ArrayXd d = x.array() - m.mean;
  double m2 = d.square().mean();
  double m3 = d.cube().mean();
  double m4 = d.square().square().mean();
  if (m2 <= 0) throw numeric_error("sample_moments: zero variance");
  m.variance = m2;
  m.skewness = m3 / std::pow(m2, 1.5);
  m.kurtosis = m4 / (m2 * m2);
  m.mean_abs_dev = d.abs().mean();
  return m;
}

double kolmogorov_statistic(const Eigen::VectorXd& z) {
  const Eigen::Index n = z.size();
  if (n < 1) throw std::invalid_argument("kolmogorov_statistic: empty sample");
  std::vector<double> s(z.data(), z.data() + n);
  std::sort(s.begin(), s.end());
  double d = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double f = normal_cdf(s[static_cast<std::size_t>(i)]);
    double lo = static_cast<double>(i) / static_cast<double>(n);
    double hi = static_cast<double>(i + 1) / static_cast<double>(n);
    d = std::max({d, f - lo, hi - f});
  }
  return d;
}

double kolmogorov_pvalue(double d, Eigen::Index n) {
  if (n < 1 || d < 0) throw std::invalid_argument("kolmogorov_pvalue: bad arguments");
  double sn = std::sqrt(static_cast<double>(n));
  double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 1e-6) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    double term = 2.0 * (k % 2 == 1 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-12) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

}  // namespace ics
