#include "icsdetect/oracle.hpp"

#include <cmath>

#include "icsdetect/ics.hpp"
#include "icsdetect/random.hpp"

namespace ics::oracle {

char regime_char(EigenRegime r) {
  switch (r) {
    case EigenRegime::LeadingLarge: return 'a';
    case EigenRegime::TrailingSmall: return 'b';
    case EigenRegime::AllEqual: return 'c';
  }
  return '?';
}

namespace {

EigenRegime classify(double rho_large, double rho_small) {
  double scale = std::max({std::abs(rho_large), std::abs(rho_small), 1.0});
  double diff = rho_large - rho_small;
  if (std::abs(diff) <= 1e-12 * scale) return EigenRegime::AllEqual;
  return diff > 0 ? EigenRegime::LeadingLarge : EigenRegime::TrailingSmall;
}

// One mixture component with independent coordinates: weight plus the raw
// second and fourth moment of every coordinate.
struct ComponentMoments {
  double weight;
  Vector m2;
  Vector m4;
};

// Gaussian raw moments for mean m and variance v.
double gauss_m2(double m, double v) { return v + m * m; }
double gauss_m4(double m, double v) { return 3.0 * v * v + 6.0 * v * m * m + m * m * m * m; }

// Exact population cov and cov4 of a finite mixture whose components have
// independent coordinates. The mixture couples squared coordinates across
// the contaminated block, so the fourth-moment diagonal carries the exact
// cross moments E[X_j^2 X_l^2] = sum_c w_c m2_c(j) m2_c(l), not the product
// of the marginal variances.
CaseOracle from_components(const std::vector<ComponentMoments>& components, Index p, Index q,
                           std::string model) {
  Vector gamma = Vector::Zero(p);
  Vector quartic = Vector::Zero(p);
  for (const ComponentMoments& c : components) {
    gamma += c.weight * c.m2;
    quartic += c.weight * c.m4;
  }

  CaseOracle out;
  out.population.model = std::move(model);
  out.population.cov = gamma.asDiagonal();
  out.population.cov4 = Matrix::Zero(p, p);

  Vector rho(p);
  for (Index j = 0; j < p; ++j) {
    double acc = quartic[j] / gamma[j];
    for (Index l = 0; l < p; ++l) {
      if (l == j) continue;
      double cross = 0;
      for (const ComponentMoments& c : components) cross += c.weight * c.m2[j] * c.m2[l];
      acc += cross / gamma[l];
    }
    out.population.cov4(j, j) = acc / static_cast<double>(p + 2);
    rho[j] = out.population.cov4(j, j) / gamma[j];
  }

  out.rho.rho_large = rho[0];
  out.rho.rho_small = q < p ? rho[p - 1] : rho[0];
  out.rho.mult_large = q;
  out.rho.mult_small = p - q;
  out.rho.regime =
      q == p ? EigenRegime::AllEqual : classify(out.rho.rho_large, out.rho.rho_small);
  return out;
}

// The closed forms degrade gracefully to the pure Gaussian at eps = 0.
void require_eps(double eps) {
  if (!(eps >= 0.0 && eps < 0.5))
    throw std::invalid_argument("oracle: contamination eps must lie in [0, 0.5)");
}

}  // namespace

EigenRegime case1_regime(double eps) {
  if (!(eps > 0.0 && eps < 0.5))
    throw std::invalid_argument("case1_regime: contamination eps must lie in (0, 0.5)");
  if (std::abs(eps - kCase1Threshold) <= 1e-12) return EigenRegime::AllEqual;
  return eps < kCase1Threshold ? EigenRegime::LeadingLarge : EigenRegime::TrailingSmall;
}

CaseOracle case2a(double eps, double chi_df, double s11_sq, double s22_sq, Index p) {
  require_eps(eps);
  if (!(chi_df > 0) || !(s11_sq > 0) || !(s22_sq > 0))
    throw std::invalid_argument("case2a: parameters must be positive");
  if (p < 2) throw std::invalid_argument("case2a: need p >= 2");

  const double k = chi_df;
  ComponentMoments regular{1.0 - eps, Vector::Ones(p), Vector::Constant(p, 3.0)};
  regular.m2[0] = s11_sq;
  regular.m4[0] = 3.0 * s11_sq * s11_sq;
  // signed chi radial coordinate: E Y^2 = k, E Y^4 = k (k + 2)
  ComponentMoments outlier{eps, Vector::Constant(p, s22_sq),
                           Vector::Constant(p, 3.0 * s22_sq * s22_sq)};
  outlier.m2[0] = k;
  outlier.m4[0] = k * (k + 2.0);
  return from_components({regular, outlier}, p, 1, "case2a");
}

double case2a_equal_variance_threshold(double chi_df) {
  if (!(chi_df > 3.0))
    throw std::invalid_argument("case2a_equal_variance_threshold: needs k > 3");
  return (chi_df - 3.0) / (3.0 * (chi_df - 1.0));
}

CaseOracle case2b(double eps, double delta, double s11_sq, double s12_sq, double s21_sq,
                  double s22_sq, Index p) {
  require_eps(eps);
  if (delta == 0.0) throw std::invalid_argument("case2b: delta must be nonzero");
  if (!(s11_sq > 0) || !(s12_sq > 0) || !(s21_sq > 0) || !(s22_sq > 0))
    throw std::invalid_argument("case2b: variances must be positive");
  if (p < 2) throw std::invalid_argument("case2b: need p >= 2");

  ComponentMoments regular{1.0 - eps, Vector::Constant(p, s12_sq),
                           Vector::Constant(p, 3.0 * s12_sq * s12_sq)};
  regular.m2[0] = s11_sq;
  regular.m4[0] = 3.0 * s11_sq * s11_sq;
  // the +delta and -delta components share all raw even moments
  ComponentMoments shifted{eps, Vector::Constant(p, s22_sq),
                           Vector::Constant(p, 3.0 * s22_sq * s22_sq)};
  shifted.m2[0] = gauss_m2(delta, s21_sq);
  shifted.m4[0] = gauss_m4(delta, s21_sq);
  return from_components({regular, shifted}, p, 1, "case2b");
}

CaseOracle case5(double eps, double alpha, Index p, Index q) {
  require_eps(eps);
  if (!(alpha >= 1.0)) throw std::invalid_argument("case5: alpha must be at least 1");
  if (q < 1 || q > p) throw std::invalid_argument("case5: need 1 <= q <= p");

  ComponentMoments regular{1.0 - eps, Vector::Ones(p), Vector::Constant(p, 3.0)};
  ComponentMoments inflated{eps, Vector::Ones(p), Vector::Constant(p, 3.0)};
  inflated.m2.head(q).setConstant(alpha);
  inflated.m4.head(q).setConstant(3.0 * alpha * alpha);
  return from_components({regular, inflated}, p, q, "case5");
}

Vector population_eigenvalues(const PopulationPair& pair) {
  return simultaneous_diagonalization(pair.cov, pair.cov4).second;
}

Matrix population_unmixing(const PopulationPair& pair) {
  return simultaneous_diagonalization(pair.cov, pair.cov4).first;
}

Matrix sample_case1(Index n, double eps, const Vector& mu, const Matrix& sigma, std::uint64_t seed) {
  require_eps(eps);
  const Index p = mu.size();
  if (sigma.rows() != p || sigma.cols() != p)
    throw std::invalid_argument("sample_case1: dimension mismatch");
  Matrix chol = cholesky_lower(sigma);
  rng::Engine eng = rng::make_engine(seed);
  Matrix x(n, p);
  for (Index i = 0; i < n; ++i) {
    bool outlier = rng::uniform01(eng) < eps;
    Vector z = chol * rng::normal_vector(p, eng);
    if (outlier) z += mu;
    x.row(i) = z.transpose();
  }
  return x;
}

Matrix sample_case2a(Index n, double eps, double chi_df, double s11_sq, double s22_sq, Index p,
                     std::uint64_t seed) {
  require_eps(eps);
  auto df = static_cast<Index>(chi_df);
  if (df < 1 || static_cast<double>(df) != chi_df)
    throw std::invalid_argument("sample_case2a: chi_df must be a positive integer");
  rng::Engine eng = rng::make_engine(seed);
  Matrix x(n, p);
  const double s11 = std::sqrt(s11_sq), s22 = std::sqrt(s22_sq);
  for (Index i = 0; i < n; ++i) {
    if (rng::uniform01(eng) < eps) {
      double sign = rng::uniform01(eng) < 0.5 ? -1.0 : 1.0;
      x(i, 0) = sign * rng::normal_vector(df, eng).norm();
      for (Index j = 1; j < p; ++j) x(i, j) = s22 * rng::standard_normal(eng);
    } else {
      x(i, 0) = s11 * rng::standard_normal(eng);
      for (Index j = 1; j < p; ++j) x(i, j) = rng::standard_normal(eng);
    }
  }
  return x;
}

Matrix sample_case2b(Index n, double eps, double delta, double s11_sq, double s12_sq,
                     double s21_sq, double s22_sq, Index p, std::uint64_t seed) {
  require_eps(eps);
  rng::Engine eng = rng::make_engine(seed);
  Matrix x(n, p);
  const double s11 = std::sqrt(s11_sq), s12 = std::sqrt(s12_sq);
  const double s21 = std::sqrt(s21_sq), s22 = std::sqrt(s22_sq);
  for (Index i = 0; i < n; ++i) {
    if (rng::uniform01(eng) < eps) {
      double center = rng::uniform01(eng) < 0.5 ? delta : -delta;
      x(i, 0) = center + s21 * rng::standard_normal(eng);
      for (Index j = 1; j < p; ++j) x(i, j) = s22 * rng::standard_normal(eng);
    } else {
      x(i, 0) = s11 * rng::standard_normal(eng);
      for (Index j = 1; j < p; ++j) x(i, j) = s12 * rng::standard_normal(eng);
    }
  }
  return x;
}

Matrix sample_case5(Index n, double eps, double alpha, Index p, Index q, std::uint64_t seed) {
  require_eps(eps);
  if (q < 1 || q > p) throw std::invalid_argument("sample_case5: need 1 <= q <= p");
  rng::Engine eng = rng::make_engine(seed);
  Matrix x(n, p);
  const double scale = std::sqrt(alpha);
  for (Index i = 0; i < n; ++i) {
    bool outlier = rng::uniform01(eng) < eps;
    for (Index j = 0; j < p; ++j) {
      double z = rng::standard_normal(eng);
      x(i, j) = (outlier && j < q) ? scale * z : z;
    }
  }
  return x;
}

}  // namespace ics::oracle
