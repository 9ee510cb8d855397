#include "icsdetect/selection.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "icsdetect/distributions.hpp"
#include "icsdetect/random.hpp"

namespace ics {

std::string to_string(NormalityTest t) {
  switch (t) {
    case NormalityTest::DAgostino: return "da";
    case NormalityTest::AnscombeGlynn: return "ag";
    case NormalityTest::BonettSeier: return "bs";
    case NormalityTest::JarqueBera: return "jb";
  }
  return "?";
}

NormalityTest normality_test_from_string(const std::string& tag) {
  if (tag == "da") return NormalityTest::DAgostino;
  if (tag == "ag") return NormalityTest::AnscombeGlynn;
  if (tag == "bs") return NormalityTest::BonettSeier;
  if (tag == "jb") return NormalityTest::JarqueBera;
  throw input_error("unknown normality test '" + tag + "' (expected da, ag, bs or jb)");
}

std::string to_string(SelectionMethod m) {
  switch (m) {
    case SelectionMethod::Pa: return "pa";
    case SelectionMethod::DAgostino: return "da";
    case SelectionMethod::AnscombeGlynn: return "ag";
    case SelectionMethod::BonettSeier: return "bs";
    case SelectionMethod::JarqueBera: return "jb";
    case SelectionMethod::ScreeData: return "scree-data";
    case SelectionMethod::Fixed: return "fixed";
  }
  return "?";
}

namespace {

void require_test_sample(const Vector& x, const char* who) {
  if (x.size() < 20)
    throw std::invalid_argument(std::string(who) + ": need at least 20 observations, got " +
                                std::to_string(x.size()));
}

double two_sided_normal_p(double z) { return 2.0 * normal_cdf(-std::abs(z)); }

}  // namespace

TestResult dagostino_skewness(const Vector& x) {
  require_test_sample(x, "dagostino_skewness");
  SampleMoments m = sample_moments(x);
  const double n = static_cast<double>(m.n);
  double y = m.skewness * std::sqrt((n + 1.0) * (n + 3.0) / (6.0 * (n - 2.0)));
  double beta2 = 3.0 * (n * n + 27.0 * n - 70.0) * (n + 1.0) * (n + 3.0) /
                 ((n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0));
  double w2 = -1.0 + std::sqrt(2.0 * (beta2 - 1.0));
  double delta = 1.0 / std::sqrt(0.5 * std::log(w2));
  double a = std::sqrt(2.0 / (w2 - 1.0));
  double z = delta * std::asinh(y / a);
  return {z, two_sided_normal_p(z)};
}

TestResult anscombe_glynn_kurtosis(const Vector& x) {
  require_test_sample(x, "anscombe_glynn_kurtosis");
  SampleMoments m = sample_moments(x);
  const double n = static_cast<double>(m.n);
  double eb2 = 3.0 * (n - 1.0) / (n + 1.0);
  double vb2 = 24.0 * n * (n - 2.0) * (n - 3.0) / ((n + 1.0) * (n + 1.0) * (n + 3.0) * (n + 5.0));
  double standardized = (m.kurtosis - eb2) / std::sqrt(vb2);
  double skew_b2 = (6.0 * (n * n - 5.0 * n + 2.0) / ((n + 7.0) * (n + 9.0))) *
                   std::sqrt(6.0 * (n + 3.0) * (n + 5.0) / (n * (n - 2.0) * (n - 3.0)));
  double a = 6.0 + (8.0 / skew_b2) * (2.0 / skew_b2 + std::sqrt(1.0 + 4.0 / (skew_b2 * skew_b2)));
  double z = (1.0 - 2.0 / (9.0 * a) -
              std::cbrt((1.0 - 2.0 / a) / (1.0 + standardized * std::sqrt(2.0 / (a - 4.0))))) /
             std::sqrt(2.0 / (9.0 * a));
  return {z, two_sided_normal_p(z)};
}

TestResult bonett_seier_geary(const Vector& x) {
  require_test_sample(x, "bonett_seier_geary");
  SampleMoments m = sample_moments(x);
  const double n = static_cast<double>(m.n);
  double omega = 13.29 * (std::log(std::sqrt(m.variance)) - std::log(m.mean_abs_dev));
  double z = std::sqrt(n + 2.0) * (omega - 3.0) / 3.54;
  return {z, two_sided_normal_p(z)};
}

TestResult jarque_bera(const Vector& x) {
  require_test_sample(x, "jarque_bera");
  SampleMoments m = sample_moments(x);
  const double n = static_cast<double>(m.n);
  double jb = n * (m.skewness * m.skewness / 6.0 +
                   (m.kurtosis - 3.0) * (m.kurtosis - 3.0) / 24.0);
  return {jb, 1.0 - chisq_cdf(jb, 2.0)};
}

TestResult run_normality_test(const Vector& x, NormalityTest test) {
  switch (test) {
    case NormalityTest::DAgostino: return dagostino_skewness(x);
    case NormalityTest::AnscombeGlynn: return anscombe_glynn_kurtosis(x);
    case NormalityTest::BonettSeier: return bonett_seier_geary(x);
    case NormalityTest::JarqueBera: return jarque_bera(x);
  }
  throw std::invalid_argument("run_normality_test: unknown test");
}

double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("empirical_quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("empirical_quantile: q outside [0,1]");
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  double h = q * static_cast<double>(n - 1);
  auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= n) return values[n - 1];
  double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

PaTable pa_table(Index n, Index p, const ScatterPair& pair, double alpha, int reps,
                 std::uint64_t seed, int threads) {
  if (reps < 100) throw std::invalid_argument("pa_table: need at least 100 replicates");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("pa_table: alpha outside (0,1)");
  if (n < 2 * p) throw std::invalid_argument("pa_table: need n >= 2p");

  Matrix eigs(reps, p);
  std::vector<int> attempts(static_cast<std::size_t>(reps), 0);
  const int max_attempts = 1 + std::max(1, reps / 10);

  rng::parallel_for_index(static_cast<std::size_t>(reps), threads, [&](std::size_t r) {
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
      attempts[r] = attempt + 1;
      std::uint64_t rep_seed =
          rng::derive_seed(seed, {static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(attempt)});
      rng::Engine eng = rng::make_engine(rep_seed);
      Matrix x = rng::normal_matrix(n, p, eng);
      ScatterPair local = pair;
      local.v1.mcd_seed = rng::derive_seed(rep_seed, {1});
      local.v2.mcd_seed = rng::derive_seed(rep_seed, {2});
      try {
        IcsResult res = invariant_coordinates(x, local);
        eigs.row(static_cast<Index>(r)) = res.eigenvalues.transpose();
        return;
      } catch (const numeric_error&) {
        // redraw this replicate with a fresh substream
      }
    }
    attempts[r] = -1;  // exhausted
  });

  int redraws = 0;
  for (int a : attempts) {
    if (a < 0) throw numeric_error("pa_table: a replicate failed repeatedly; estimator unstable at this size");
    redraws += a - 1;
  }
  if (redraws > reps / 10)
    throw numeric_error("pa_table: redraw rate above 10% (" + std::to_string(redraws) + " of " +
                        std::to_string(reps) + ")");

  PaTable table;
  table.n = n;
  table.p = p;
  table.pair = pair_tag(pair);
  table.alpha = alpha;
  table.reps = reps;
  table.seed = seed;
  table.redraws = redraws;
  table.cutoffs.resize(p);
  for (Index j = 0; j < p; ++j) {
    std::vector<double> column(eigs.col(j).data(), eigs.col(j).data() + reps);
    table.cutoffs[j] = empirical_quantile(std::move(column), 1.0 - alpha / static_cast<double>(j + 1));
  }
  return table;
}

SelectionOutcome select_pa(const Vector& eigenvalues, const PaTable& table) {
  if (eigenvalues.size() != table.p)
    throw std::invalid_argument("select_pa: eigenvalue count " + std::to_string(eigenvalues.size()) +
                                " does not match table dimension " + std::to_string(table.p));
  SelectionOutcome out;
  out.method = SelectionMethod::Pa;
  for (Index j = 0; j < table.p; ++j) {
    ComponentDecision d;
    d.component = j + 1;
    d.statistic = eigenvalues[j];
    d.threshold = table.cutoffs[j];
    d.level = table.alpha / static_cast<double>(j + 1);
    d.selected = eigenvalues[j] > table.cutoffs[j];
    out.components.push_back(d);
    if (!d.selected) break;
    ++out.k;
  }
  return out;
}

SelectionOutcome select_normality(const Matrix& scores, NormalityTest test, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("select_normality: alpha outside (0,1)");
  SelectionOutcome out;
  switch (test) {
    case NormalityTest::DAgostino: out.method = SelectionMethod::DAgostino; break;
    case NormalityTest::AnscombeGlynn: out.method = SelectionMethod::AnscombeGlynn; break;
    case NormalityTest::BonettSeier: out.method = SelectionMethod::BonettSeier; break;
    case NormalityTest::JarqueBera: out.method = SelectionMethod::JarqueBera; break;
  }
  for (Index j = 0; j < scores.cols(); ++j) {
    TestResult res;
    try {
      res = run_normality_test(scores.col(j), test);
    } catch (const numeric_error& e) {
      throw numeric_error("select_normality: component " + std::to_string(j + 1) +
                          " is degenerate (" + e.what() + ")");
    }
    ComponentDecision d;
    d.component = j + 1;
    d.statistic = res.statistic;
    d.threshold = res.p_value;
    d.level = alpha / static_cast<double>(j + 1);
    d.selected = res.p_value < d.level;
    out.components.push_back(d);
    if (!d.selected) break;
    ++out.k;
  }
  return out;
}

std::vector<std::pair<Index, double>> scree_data(const Vector& eigenvalues) {
  std::vector<std::pair<Index, double>> rows;
  rows.reserve(static_cast<std::size_t>(eigenvalues.size()));
  for (Index j = 0; j < eigenvalues.size(); ++j) rows.emplace_back(j + 1, eigenvalues[j]);
  return rows;
}

}  // namespace ics
